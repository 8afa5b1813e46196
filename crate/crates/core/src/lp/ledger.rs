//! Exhaustive basis enumeration: the ledger of all dual feasible bases, the
//! optimality set, and the deterministic min-index solver.

use itertools::Itertools;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::{BasicSolutionPair, Basis, StandardLp};
use crate::error::{Error, Result};
use crate::linalg::Lu;

const CHUNK: usize = 4096;
const PARALLEL_THRESHOLD: u128 = 2048;

/// `n choose k` without overflow for the sizes we care about.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// One distinct optimal vertex together with the ledger positions of the
/// optimal bases inducing it (ascending, so `bases[0]` is canonical).
#[derive(Debug, Clone, Serialize)]
pub struct Vertex {
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub point: DVector<f64>,
    pub bases: Vec<usize>,
}

/// All dual feasible bases `I_1..I_N`; the first `optimal_count` are also
/// primal feasible. Each block is in lexicographic order.
#[derive(Debug, Clone, Serialize)]
pub struct BasisLedger {
    pub dual_feasible: Vec<BasicSolutionPair>,
    pub optimal_count: usize,
    pub optimal_value: Option<f64>,
    pub vertices: Vec<Vertex>,
    pub primal_feasible_exists: bool,
    pub invertible_bases: usize,
    pub candidates: u128,
}

impl BasisLedger {
    pub fn optimal(&self) -> &[BasicSolutionPair] {
        &self.dual_feasible[..self.optimal_count]
    }

    pub fn infeasible_dual(&self) -> &[BasicSolutionPair] {
        &self.dual_feasible[self.optimal_count..]
    }

    pub fn n(&self) -> usize {
        self.dual_feasible.len()
    }

    pub fn k(&self) -> usize {
        self.optimal_count
    }
}

struct Scan {
    dual_feasible: Vec<BasicSolutionPair>,
    primal_feasible_exists: bool,
    invertible: usize,
    candidates: u128,
}

fn evaluate(lp: &StandardLp, indices: Vec<usize>) -> Option<BasicSolutionPair> {
    let basis = Basis::from_sorted(indices);
    let lu = Lu::new(&lp.submatrix(&basis));
    if !lu.is_invertible(lp.tol().rank_tol) {
        return None;
    }
    Some(lp.pair_from_lu(basis, &lu))
}

/// With `stop_at_optimal`, stops after the first chunk holding a primal and
/// dual feasible basis; lexicographic order makes that one the min-index basis.
fn scan(lp: &StandardLp, stop_at_optimal: bool) -> Result<Scan> {
    let (m, d) = (lp.m(), lp.d());
    let candidates = binomial(d, m);
    let cap = lp.tol().enumeration_cap;
    if candidates > cap {
        return Err(Error::EnumerationCapExceeded { count: candidates, cap });
    }
    let parallel = candidates > PARALLEL_THRESHOLD;
    let mut out = Scan { dual_feasible: Vec::new(), primal_feasible_exists: false, invertible: 0, candidates };
    for chunk in &(0..d).combinations(m).chunks(CHUNK) {
        let chunk: Vec<Vec<usize>> = chunk.collect();
        let pairs: Vec<Option<BasicSolutionPair>> = if parallel {
            chunk.into_par_iter().map(|idx| evaluate(lp, idx)).collect()
        } else {
            chunk.into_iter().map(|idx| evaluate(lp, idx)).collect()
        };
        for pair in pairs.into_iter().flatten() {
            out.invertible += 1;
            out.primal_feasible_exists |= pair.primal_feasible;
            if pair.dual_feasible {
                out.dual_feasible.push(pair);
            }
        }
        if stop_at_optimal && out.dual_feasible.iter().any(|p| p.primal_feasible) {
            break;
        }
    }
    Ok(out)
}

fn build_ledger(lp: &StandardLp, scan: Scan) -> BasisLedger {
    let tol = lp.tol();
    // Stable partition keeps lexicographic order inside each block.
    let (mut optimal, rest): (Vec<_>, Vec<_>) = scan.dual_feasible.into_iter().partition(|p| p.primal_feasible);
    let optimal_count = optimal.len();
    let optimal_value = optimal.first().map(|p| p.objective);
    let mut vertices: Vec<Vertex> = Vec::new();
    for (k, pair) in optimal.iter().enumerate() {
        match vertices.iter_mut().find(|v| (&v.point - &pair.primal).amax() <= tol.dedup_tol) {
            Some(v) => v.bases.push(k),
            None => vertices.push(Vertex { point: pair.primal.clone(), bases: vec![k] }),
        }
    }
    optimal.extend(rest);
    BasisLedger {
        dual_feasible: optimal,
        optimal_count,
        optimal_value,
        vertices,
        primal_feasible_exists: scan.primal_feasible_exists,
        invertible_bases: scan.invertible,
        candidates: scan.candidates,
    }
}

/// Enumerates every `m`-subset of columns and keeps the dual feasible bases.
pub fn enumerate_ledger(lp: &StandardLp) -> Result<BasisLedger> {
    let scan = scan(lp, false)?;
    if scan.dual_feasible.is_empty() {
        return Err(Error::NoDualFeasibleBasis);
    }
    Ok(build_ledger(lp, scan))
}

/// Vertex description of `OPT(b)`.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalitySet {
    #[serde(serialize_with = "crate::io::ser_vectors")]
    pub vertices: Vec<DVector<f64>>,
    pub value: f64,
}

impl OptimalitySet {
    pub fn is_singleton(&self) -> bool {
        self.vertices.len() == 1
    }
}

pub fn optimality_set(ledger: &BasisLedger) -> Result<OptimalitySet> {
    match ledger.optimal_value {
        Some(value) if ledger.optimal_count > 0 => {
            Ok(OptimalitySet { vertices: ledger.vertices.iter().map(|v| v.point.clone()).collect(), value })
        }
        _ => Err(Error::Infeasible),
    }
}

/// Optimal basic pair of the lexicographically smallest basis that is both
/// primal and dual feasible.
pub fn solve_min_index(lp: &StandardLp) -> Result<BasicSolutionPair> {
    let scan = scan(lp, true)?;
    if let Some(pos) = scan.dual_feasible.iter().position(|p| p.primal_feasible) {
        return Ok(scan.dual_feasible.into_iter().nth(pos).expect("position is in range"));
    }
    if !scan.primal_feasible_exists {
        Err(Error::Infeasible)
    } else {
        // Feasible with no primal-dual basis: the objective is unbounded below.
        Err(Error::Unbounded)
    }
}

/// All primal and dual feasible bases, for the randomised tie-break policy.
pub(crate) fn optimal_pairs(lp: &StandardLp) -> Result<Vec<BasicSolutionPair>> {
    let scan = scan(lp, false)?;
    let optimal: Vec<_> = scan.dual_feasible.into_iter().filter(|p| p.primal_feasible).collect();
    if optimal.is_empty() {
        return Err(if scan.primal_feasible_exists { Error::Unbounded } else { Error::Infeasible });
    }
    Ok(optimal)
}
