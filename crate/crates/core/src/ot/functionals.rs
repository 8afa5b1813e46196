//! Functionals of couplings: the optimal transport cost curve, the trace and
//! the discrete displacement interpolation.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::Coupling;
use crate::error::{Error, Result};

const MERGE_GRID: f64 = 1e-12;

/// `OTC(t) = sum_ij pi_ij 1{c_ij <= t}` at every grid point.
pub fn otc_curve(coupling: &Coupling, cost: &DMatrix<f64>, t_grid: &[f64]) -> Vec<f64> {
    let mut masses: Vec<(f64, f64)> = coupling.matrix.iter().zip(cost.iter()).map(|(&p, &c)| (c, p)).collect();
    masses.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cumulative = Vec::with_capacity(masses.len());
    let mut acc = 0.0;
    for &(c, p) in &masses {
        acc += p;
        cumulative.push((c, acc));
    }
    t_grid
        .iter()
        .map(|&t| {
            let k = cumulative.partition_point(|&(c, _)| c <= t);
            if k == 0 {
                0.0
            } else {
                cumulative[k - 1].1
            }
        })
        .collect()
}

pub fn trace_functional(coupling: &Coupling) -> f64 {
    coupling.matrix.trace()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    #[serde(serialize_with = "crate::io::ser_vectors")]
    pub locations: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weight at `x`, matched on the merge grid.
    pub fn weight_at(&self, x: &DVector<f64>) -> f64 {
        let key = grid_key(x);
        self.locations.iter().zip(&self.weights).filter(|(l, _)| grid_key(l) == key).map(|(_, w)| w).sum()
    }
}

fn grid_key(x: &DVector<f64>) -> Vec<i64> {
    x.iter().map(|v| (v / MERGE_GRID).round() as i64).collect()
}

/// Atoms `(1 - t) x_i + t y_j` with weight `pi_ij`, merged on a `1e-12` grid.
pub fn geodesic_at(coupling: &Coupling, x: &[DVector<f64>], y: &[DVector<f64>], t: f64) -> Result<DiscreteMeasure> {
    let n = coupling.n();
    if x.len() != n || y.len() != n {
        return Err(Error::MissingGroundPoints);
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} must lie in [0, 1]")));
    }
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut out = DiscreteMeasure { locations: Vec::new(), weights: Vec::new() };
    for i in 0..n {
        for j in 0..n {
            let w = coupling.matrix[(i, j)];
            if w <= 0.0 {
                continue;
            }
            let loc = &x[i] * (1.0 - t) + &y[j] * t;
            match index.get(&grid_key(&loc)) {
                Some(&k) => out.weights[k] += w,
                None => {
                    index.insert(grid_key(&loc), out.locations.len());
                    out.locations.push(loc);
                    out.weights.push(w);
                }
            }
        }
    }
    Ok(out)
}
