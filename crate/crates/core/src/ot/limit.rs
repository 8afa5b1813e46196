//! Gaussian fluctuation models of empirical marginals and the resulting
//! limit laws of optimal couplings.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_probability, OtProblem};
use crate::cones::{LimitLawSpec, TieBreak};
use crate::error::{Error, Result};

/// `Σ(v)`: covariance of a single categorical draw with probabilities `v`.
pub fn multinomial_covariance(v: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_probability(v, "v")?;
    let n = v.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            // v_i (1 - v_i) written so that rows sum to zero in floating point.
            v[i] * (0..n).filter(|&k| k != i).map(|k| v[k]).sum::<f64>()
        } else {
            -v[i] * v[j]
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OtMode {
    /// Only `r` is estimated, from `n` draws.
    OneSample,
    /// `r` from `n` and `s` from `m` draws, `m / (n + m) -> lambda`.
    TwoSample { lambda: f64 },
}

impl OtMode {
    pub fn rate_name(&self) -> &'static str {
        match self {
            OtMode::OneSample => "sqrt(n)",
            OtMode::TwoSample { .. } => "sqrt(nm/(n+m))",
        }
    }
}

pub fn ot_limit_spec(ot: &OtProblem, mode: OtMode, tie_break: TieBreak) -> Result<LimitLawSpec> {
    let n = ot.n();
    let lp = ot.reduce_to_lp()?;
    let sigma_r = multinomial_covariance(ot.r())?;
    let r_block = sigma_r.view((0, 0), (n - 1, n - 1)).into_owned();
    let (covariance, m0) = match mode {
        OtMode::OneSample => (r_block, n - 1),
        OtMode::TwoSample { lambda } => {
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(Error::InvalidInput(format!("lambda = {lambda} must lie in (0, 1)")));
            }
            let sigma_s = multinomial_covariance(ot.s())?;
            let mut cov = DMatrix::zeros(2 * n - 1, 2 * n - 1);
            cov.view_mut((0, 0), (n - 1, n - 1)).copy_from(&(r_block * lambda));
            cov.view_mut((n - 1, n - 1), (n, n)).copy_from(&(sigma_s * (1.0 - lambda)));
            (cov, 2 * n - 1)
        }
    };
    if m0 == 0 {
        return Err(Error::InvalidInput("one-sample limit needs at least two points".into()));
    }
    LimitLawSpec::new(&lp, covariance, m0, tie_break, mode.rate_name())
}
