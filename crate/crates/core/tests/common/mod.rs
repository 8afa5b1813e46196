//! Fixtures shared by the integration tests: the three-point line instances
//! and an independent brute-force LP oracle.
#![allow(dead_code)]

use std::collections::BTreeSet;

use itertools::Itertools;
use lp_limitlaw::ot::OtProblem;
use nalgebra::{DMatrix, DVector};

pub fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_vec(x.to_vec())
}

pub fn uniform3() -> DVector<f64> {
    DVector::from_element(3, 1.0 / 3.0)
}

/// Three ordered points on the line with cost `|x - y|^p`.
pub fn line3(p: f64, r: DVector<f64>, s: DVector<f64>) -> OtProblem {
    OtProblem::on_line(&[0.0, 1.0, 2.0], p, r, s).unwrap()
}

/// Bases of the symmetric instance, as 1-based index sets, by label 1..=12.
pub const SYMMETRIC_BASES: [[usize; 5]; 12] = [
    [1, 2, 5, 8, 9],
    [1, 4, 5, 6, 9],
    [1, 4, 5, 7, 9],
    [1, 3, 5, 6, 9],
    [1, 2, 3, 5, 9],
    [1, 5, 7, 8, 9],
    [1, 4, 5, 8, 9],
    [1, 2, 5, 6, 9],
    [1, 3, 5, 8, 9],
    [1, 3, 4, 5, 9],
    [1, 5, 6, 7, 9],
    [1, 2, 5, 7, 9],
];

/// Bases of the asymmetric instance `r = (1/4, 1/4, 1/2)`, `s = (1/2, 1/4, 1/4)`.
pub const ASYMMETRIC_BASES: [[usize; 5]; 4] = [[1, 4, 7, 8, 9], [1, 4, 5, 8, 9], [1, 5, 7, 8, 9], [1, 4, 5, 7, 9]];

pub fn zero_based(set: &[usize]) -> Vec<usize> {
    set.iter().map(|i| i - 1).collect()
}

/// Label (1-based) of a 0-based basis in the symmetric table.
pub fn symmetric_label(basis: &[usize]) -> Option<usize> {
    SYMMETRIC_BASES.iter().position(|b| zero_based(b) == basis).map(|k| k + 1)
}

/// Half-space margins of the cone printed for label `k` at `v = (r1, r2, s1, s2, s3)`;
/// the cone is where every margin is nonnegative.
pub fn printed_cone_margins(k: usize, v: &DVector<f64>) -> [f64; 2] {
    let a = v[0] - v[2];
    let b = v[0] + v[1] - v[2] - v[3];
    let c = v[1] - v[3];
    match k {
        1 => [a, -b],
        2 => [-a, b],
        3 => [c, -b],
        4 => [a, c],
        5 => [-c, b],
        6 => [-a, -c],
        7 => [-a, -b],
        8 => [a, b],
        _ => panic!("no printed cone {k}"),
    }
}

/// Result of the brute-force oracle: the first basis, lexicographically,
/// that is both primal and dual feasible.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub basis: Vec<usize>,
    pub value: f64,
    pub x: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Enumerates every `m`-subset with plain nalgebra inverses.
pub fn brute_force(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    feas_tol: f64,
) -> (OracleOutcome, Option<OracleSolution>, Vec<OracleSolution>) {
    let (m, d) = a.shape();
    let mut first = None;
    let mut optimal = Vec::new();
    let mut any_feasible = false;
    for idx in (0..d).combinations(m) {
        let sub = DMatrix::from_fn(m, m, |i, j| a[(i, idx[j])]);
        let Some(inv) = sub.clone().try_inverse() else { continue };
        // Condition guard comparable with a relative pivot test.
        if sub.clone().svd(false, false).singular_values.min() < 1e-10 * sub.amax().max(1.0) {
            continue;
        }
        let xb = &inv * b;
        let c_b = DVector::from_fn(m, |i, _| c[idx[i]]);
        let lambda = inv.transpose() * &c_b;
        let reduced = c - a.transpose() * &lambda;
        let primal_ok = xb.iter().all(|&x| x >= -feas_tol);
        let dual_ok = (0..d).filter(|j| !idx.contains(j)).all(|j| reduced[j] >= -feas_tol);
        any_feasible |= primal_ok;
        if primal_ok && dual_ok {
            let mut x = DVector::zeros(d);
            for (k, &i) in idx.iter().enumerate() {
                x[i] = xb[k];
            }
            let sol = OracleSolution { basis: idx.clone(), value: c.dot(&x), x };
            if first.is_none() {
                first = Some(sol.clone());
            }
            optimal.push(sol);
        }
    }
    let outcome = if first.is_some() {
        OracleOutcome::Optimal
    } else if any_feasible {
        OracleOutcome::Unbounded
    } else {
        OracleOutcome::Infeasible
    };
    (outcome, first, optimal)
}

pub fn support_set(x: &DVector<f64>, tol: f64) -> BTreeSet<usize> {
    (0..x.len()).filter(|&i| x[i] > tol).collect()
}
