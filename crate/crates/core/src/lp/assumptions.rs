//! Checkers for the deterministic assumptions on `(A, b, c)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::ledger::{binomial, enumerate_ledger, solve_min_index};
use super::simplex::solve_bland;
use super::StandardLp;
use crate::error::{Error, Result};
use crate::tol::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// `OPT(b)` is non-empty and bounded.
    pub a1: bool,
    /// The optimal solution is unique.
    pub a2: bool,
    /// The dual basic solutions of the optimal bases are pairwise distinct.
    pub a3: bool,
    /// Ledger positions `(j, k)`, `j < k`, of two optimal bases sharing a dual.
    pub a3_witness: Option<(usize, usize)>,
    pub slater: bool,
    /// `P(b)` is bounded.
    pub bounded: bool,
    pub optimal_count: usize,
    pub vertex_count: usize,
    /// Set when the ledger itself could not be built.
    pub ledger_error: Option<String>,
}

/// Minimises `c^T x` over `{A x = b, x >= 0}` for a possibly rank-deficient
/// system: by enumeration when the basis count is under the cap, by the
/// simplex otherwise. Returns `(value, x)`.
fn solve_aux(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, tol: Tolerances) -> Result<(f64, DVector<f64>)> {
    let Some(lp) = StandardLp::from_redundant(a.clone(), b.clone(), c.clone(), tol)? else {
        return Err(Error::Infeasible);
    };
    if binomial(lp.d(), lp.m()) <= tol.enumeration_cap {
        let pair = solve_min_index(&lp)?;
        Ok((pair.objective, pair.primal))
    } else {
        let sol = solve_bland(&a, &b, &c, tol.feas_tol)?;
        Ok((sol.value, sol.x))
    }
}

/// A nonnegative solution of `A x = b`, if one exists.
pub fn find_feasible_point(a: &DMatrix<f64>, b: &DVector<f64>, tol: Tolerances) -> Result<Option<DVector<f64>>> {
    if a.amax() == 0.0 {
        return Ok((b.amax() <= tol.feas_tol).then(|| DVector::zeros(a.ncols())));
    }
    match solve_aux(a.clone(), b.clone(), DVector::zeros(a.ncols()), tol) {
        Ok((_, x)) => Ok(Some(x)),
        Err(Error::Infeasible) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Is there `h >= 0`, `h != 0` with `A h = 0` (and `c^T h <= 0` when `cost`
/// is given)?
fn has_recession_direction(lp: &StandardLp, cost: bool) -> Result<bool> {
    let (m, d) = (lp.m(), lp.d());
    let extra = if cost { 2 } else { 1 };
    let cols = if cost { d + 1 } else { d };
    let mut a = DMatrix::zeros(m + extra, cols);
    a.view_mut((0, 0), (m, d)).copy_from(lp.a());
    let mut b = DVector::zeros(m + extra);
    if cost {
        for j in 0..d {
            a[(m, j)] = lp.c()[j];
        }
        a[(m, d)] = 1.0;
    }
    for j in 0..d {
        a[(m + extra - 1, j)] = 1.0;
    }
    b[m + extra - 1] = 1.0;
    Ok(find_feasible_point(&a, &b, *lp.tol())?.is_some())
}

/// Slater: maximise `t` subject to `x = y + t 1`, `y >= 0`, `A x = b`,
/// with `t` capped at one. Holds iff the optimal `t` is positive.
fn slater_margin(lp: &StandardLp) -> Result<Option<f64>> {
    let (m, d) = (lp.m(), lp.d());
    let row_sums = lp.a().column_sum();
    let cols = d + 3;
    let mut a = DMatrix::zeros(m + 1, cols);
    a.view_mut((0, 0), (m, d)).copy_from(lp.a());
    for i in 0..m {
        a[(i, d)] = row_sums[i];
        a[(i, d + 1)] = -row_sums[i];
    }
    a[(m, d)] = 1.0;
    a[(m, d + 2)] = 1.0;
    let mut b = DVector::zeros(m + 1);
    b.rows_mut(0, m).copy_from(lp.b());
    b[m] = 1.0;
    let mut c = DVector::zeros(cols);
    c[d] = -1.0;
    c[d + 1] = 1.0;
    match solve_aux(a, b, c, *lp.tol()) {
        Ok((value, _)) => Ok(Some(-value)),
        Err(Error::Infeasible) => Ok(None),
        Err(e) => Err(e),
    }
}

fn nonnegative_without_zero_column(a: &DMatrix<f64>) -> bool {
    a.iter().all(|&v| v >= 0.0) && a.column_iter().all(|col| col.iter().any(|&v| v > 0.0))
}

pub fn check_assumptions(lp: &StandardLp) -> AssumptionReport {
    let tol = lp.tol();
    let mut report = AssumptionReport {
        a1: false,
        a2: false,
        a3: false,
        a3_witness: None,
        slater: matches!(slater_margin(lp), Ok(Some(t)) if t > tol.feas_tol),
        bounded: nonnegative_without_zero_column(lp.a()) || matches!(has_recession_direction(lp, false), Ok(false)),
        optimal_count: 0,
        vertex_count: 0,
        ledger_error: None,
    };
    let ledger = match enumerate_ledger(lp) {
        Ok(l) => l,
        Err(e) => {
            report.ledger_error = Some(e.to_string());
            return report;
        }
    };
    report.optimal_count = ledger.k();
    report.vertex_count = ledger.vertices.len();
    if ledger.k() == 0 {
        return report;
    }
    report.a1 = report.bounded || matches!(has_recession_direction(lp, true), Ok(false));
    report.a2 = report.a1 && ledger.vertices.len() == 1;
    let optimal = ledger.optimal();
    report.a3_witness = (0..optimal.len())
        .flat_map(|j| ((j + 1)..optimal.len()).map(move |k| (j, k)))
        .find(|&(j, k)| (&optimal[j].dual - &optimal[k].dual).amax() <= tol.dedup_tol);
    report.a3 = report.a3_witness.is_none();
    report
}
