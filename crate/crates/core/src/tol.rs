use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical tolerances shared by every routine in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Smallest admissible pivot, relative to the largest one.
    pub rank_tol: f64,
    pub feas_tol: f64,
    /// Relative part of the objective tolerance `value_tol * (1 + |value|)`.
    pub value_tol: f64,
    pub dedup_tol: f64,
    pub slack_tol: f64,
    pub boundary_tol: f64,
    pub enumeration_cap: u128,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-10,
            feas_tol: 1e-9,
            value_tol: 1e-8,
            dedup_tol: 1e-8,
            slack_tol: 1e-8,
            boundary_tol: 1e-9,
            enumeration_cap: 2_000_000,
        }
    }
}

impl Tolerances {
    pub fn value_band(&self, value: f64) -> f64 {
        self.value_tol * (1.0 + value.abs())
    }

    /// Applies a `key=value` override such as `feas_tol=1e-8`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse = |v: &str| {
            v.parse::<f64>().map_err(|_| Error::InvalidInput(format!("tolerance `{key}` expects a number, got `{v}`")))
        };
        match key {
            "rank_tol" => self.rank_tol = parse(value)?,
            "feas_tol" => self.feas_tol = parse(value)?,
            "value_tol" => self.value_tol = parse(value)?,
            "dedup_tol" => self.dedup_tol = parse(value)?,
            "slack_tol" => self.slack_tol = parse(value)?,
            "boundary_tol" => self.boundary_tol = parse(value)?,
            "enumeration_cap" => {
                self.enumeration_cap = value
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("enumeration_cap expects an integer, got `{value}`")))?
            }
            other => return Err(Error::InvalidInput(format!("unknown tolerance `{other}`"))),
        }
        Ok(())
    }
}
