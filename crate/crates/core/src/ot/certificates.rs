//! Combinatorial certificates for uniqueness and nondegeneracy of optimal
//! transport: strict Monge, primal and dual summability, and strict
//! c-cyclical monotonicity of a support.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::{Coupling, OtProblem};
use crate::error::{Error, Result};
use crate::lp::solve_min_index;

pub const PRIMAL_SUMMABILITY_MAX_N: usize = 14;
pub const DUAL_SUMMABILITY_MAX_N: usize = 7;
pub const MONOTONICITY_MAX_N: usize = 10;

fn sum_tol(cost: &DMatrix<f64>) -> f64 {
    1e-9 * (1.0 + cost.abs().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MongeCheck {
    pub holds: bool,
    /// `(i, i', j, j')` with `i < i'`, `j < j'`.
    pub witness: Option<(usize, usize, usize, usize)>,
}

pub fn check_strict_monge(cost: &DMatrix<f64>) -> MongeCheck {
    let n = cost.nrows();
    let tol = sum_tol(cost);
    for i in 0..n {
        for i2 in i + 1..n {
            for j in 0..cost.ncols() {
                for j2 in j + 1..cost.ncols() {
                    let margin = cost[(i, j2)] + cost[(i2, j)] - cost[(i, j)] - cost[(i2, j2)];
                    if margin <= tol {
                        return MongeCheck { holds: false, witness: Some((i, i2, j, j2)) };
                    }
                }
            }
        }
    }
    MongeCheck { holds: true, witness: None }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimalSummabilityCheck {
    pub holds: bool,
    /// Proper subsets `(A, B)` with equal partial sums of `r` and `s`.
    pub witness: Option<(Vec<usize>, Vec<usize>)>,
}

fn mask_to_set(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

fn subset_sums(v: &DVector<f64>) -> Vec<f64> {
    let n = v.len();
    let mut sums = vec![0.0; 1 << n];
    for mask in 1..(1usize << n) {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = sums[mask & (mask - 1)] + v[low];
    }
    sums
}

/// Checks `sum_{i in A} r_i != sum_{j in B} s_j` for all proper subsets
/// `A, B` of `{0..N-1}` that are not both empty. The witness has the smallest
/// bitmask `A`, then the smallest `B`.
pub fn check_primal_summability(r: &DVector<f64>, s: &DVector<f64>, max_n: usize) -> Result<PrimalSummabilityCheck> {
    let n = r.len();
    if s.len() != n {
        return Err(Error::DimensionMismatch("r and s differ in length".into()));
    }
    if n > max_n {
        return Err(Error::CapExceeded(format!("primal summability needs N <= {max_n}, got {n}")));
    }
    let tol = 1e-9 * (1.0 + r.abs().sum() + s.abs().sum());
    let full = (1usize << n) - 1;
    let rs = subset_sums(r);
    let ss = subset_sums(s);
    let mut sorted: Vec<(f64, usize)> = (0..full).map(|b| (ss[b], b)).collect();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    for a in 0..full {
        let target = rs[a];
        let lo = sorted.partition_point(|&(v, _)| v < target - tol);
        let best = sorted[lo..]
            .iter()
            .take_while(|&&(v, _)| v <= target + tol)
            .map(|&(_, b)| b)
            .filter(|&b| a != 0 || b != 0)
            .min();
        if let Some(b) = best {
            return Ok(PrimalSummabilityCheck { holds: false, witness: Some((mask_to_set(a, n), mask_to_set(b, n))) });
        }
    }
    Ok(PrimalSummabilityCheck { holds: true, witness: None })
}

/// Family `(i_1, j_1), ..., (i_n, j_n)` compared against the shifted family
/// `(i_k, j_{k-1})` with `j_0 = j_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cycle {
    pub pairs: Vec<(usize, usize)>,
    pub forward: f64,
    pub shifted: f64,
}

impl Cycle {
    fn new(pairs: Vec<(usize, usize)>, cost: &DMatrix<f64>) -> Self {
        let (forward, shifted) = cycle_sums(&pairs, cost);
        Self { pairs, forward, shifted }
    }

    pub fn shifted_pairs(&self) -> Vec<(usize, usize)> {
        shifted(&self.pairs)
    }
}

fn shifted(pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let n = pairs.len();
    (0..n).map(|k| (pairs[k].0, pairs[(k + n - 1) % n].1)).collect()
}

fn cycle_sums(pairs: &[(usize, usize)], cost: &DMatrix<f64>) -> (f64, f64) {
    let forward = pairs.iter().map(|&(i, j)| cost[(i, j)]).sum();
    let back = shifted(pairs).iter().map(|&(i, j)| cost[(i, j)]).sum();
    (forward, back)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleCheck {
    pub holds: bool,
    pub witness: Option<Cycle>,
}

/// Depth-first search over families of length `len` with pairwise distinct
/// rows and columns, the first row being the smallest. Pairs come from
/// `allowed`, visited in lexicographic order, so the first hit is the
/// lexicographically smallest family.
fn first_family<F>(n: usize, len: usize, allowed: &[(usize, usize)], reject: &F) -> Option<Vec<(usize, usize)>>
where
    F: Fn(&[(usize, usize)]) -> bool + Sync,
{
    fn dfs<F: Fn(&[(usize, usize)]) -> bool>(
        stack: &mut Vec<(usize, usize)>,
        used_i: &mut [bool],
        used_j: &mut [bool],
        len: usize,
        allowed: &[(usize, usize)],
        reject: &F,
    ) -> bool {
        if stack.len() == len {
            return reject(stack);
        }
        let first = stack[0].0;
        for &(i, j) in allowed {
            if i <= first || used_i[i] || used_j[j] {
                continue;
            }
            stack.push((i, j));
            used_i[i] = true;
            used_j[j] = true;
            if dfs(stack, used_i, used_j, len, allowed, reject) {
                return true;
            }
            stack.pop();
            used_i[i] = false;
            used_j[j] = false;
        }
        false
    }
    allowed.par_iter().find_map_first(|&(i0, j0)| {
        let mut stack = vec![(i0, j0)];
        let mut used_i = vec![false; n];
        let mut used_j = vec![false; n];
        used_i[i0] = true;
        used_j[j0] = true;
        dfs(&mut stack, &mut used_i, &mut used_j, len, allowed, reject).then_some(stack)
    })
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
}

/// No family with distinct rows and columns has equal forward and shifted
/// cost sums.
pub fn check_dual_summability(cost: &DMatrix<f64>, max_len: usize) -> Result<CycleCheck> {
    let n = cost.nrows();
    if n > DUAL_SUMMABILITY_MAX_N {
        return Err(Error::CapExceeded(format!("dual summability needs N <= {DUAL_SUMMABILITY_MAX_N}, got {n}")));
    }
    let tol = sum_tol(cost);
    let pairs = all_pairs(n);
    let reject = |fam: &[(usize, usize)]| {
        let (f, b) = cycle_sums(fam, cost);
        (f - b).abs() <= tol
    };
    for len in 2..=max_len.min(n) {
        if let Some(fam) = first_family(n, len, &pairs, &reject) {
            return Ok(CycleCheck { holds: false, witness: Some(Cycle::new(fam, cost)) });
        }
    }
    Ok(CycleCheck { holds: true, witness: None })
}

/// Strict c-cyclical monotonicity of `support`. Families with repeated rows
/// or columns split into shorter ones, so only simple families are scanned.
pub fn check_strict_cyclical_monotonicity(
    cost: &DMatrix<f64>,
    support: &[(usize, usize)],
    max_len: usize,
) -> Result<CycleCheck> {
    let n = cost.nrows();
    if n > MONOTONICITY_MAX_N {
        return Err(Error::CapExceeded(format!("cyclical monotonicity needs N <= {MONOTONICITY_MAX_N}, got {n}")));
    }
    let tol = sum_tol(cost);
    let mut allowed = support.to_vec();
    allowed.sort_unstable();
    allowed.dedup();
    let inside = |p: &(usize, usize)| allowed.binary_search(p).is_ok();
    let reject = |fam: &[(usize, usize)]| {
        let (f, b) = cycle_sums(fam, cost);
        if f > b + tol {
            return true;
        }
        let leaves = shifted(fam).iter().any(|p| !inside(p));
        leaves && f >= b - tol
    };
    for len in 2..=max_len.min(n) {
        if let Some(fam) = first_family(n, len, &allowed, &reject) {
            return Ok(CycleCheck { holds: false, witness: Some(Cycle::new(fam, cost)) });
        }
    }
    Ok(CycleCheck { holds: true, witness: None })
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub strict_monge: MongeCheck,
    pub primal_summability: PrimalSummabilityCheck,
    pub dual_summability: CycleCheck,
    pub strict_cyclical_monotone_support: CycleCheck,
    /// The coupling whose support was tested.
    pub coupling: Coupling,
    pub uniqueness_implied: bool,
}

/// Runs every certificate; the support tested is that of the min-index
/// optimal coupling.
pub fn certify(ot: &OtProblem, max_cycle_len: usize) -> Result<CertificateReport> {
    let n = ot.n();
    let lp = ot.reduce_to_lp()?;
    let pair = solve_min_index(&lp)?;
    let coupling = ot.coupling(&pair.primal)?;
    let strict_monge = check_strict_monge(ot.cost());
    let primal_summability = check_primal_summability(ot.r(), ot.s(), PRIMAL_SUMMABILITY_MAX_N)?;
    let dual_summability = check_dual_summability(ot.cost(), max_cycle_len.min(n))?;
    let scm = check_strict_cyclical_monotonicity(ot.cost(), &coupling.support, max_cycle_len.min(n))?;
    let uniqueness_implied = scm.holds || dual_summability.holds;
    Ok(CertificateReport {
        strict_monge,
        primal_summability,
        dual_summability,
        strict_cyclical_monotone_support: scm,
        coupling,
        uniqueness_implied,
    })
}
