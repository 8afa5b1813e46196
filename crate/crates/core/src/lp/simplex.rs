//! Two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! This is an independent route to the optimal value; it does not pick the
//! min-index optimal basis and is not used for tie-breaking.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub x: DVector<f64>,
    pub value: f64,
    /// Basic columns of the final tableau (original columns only).
    pub basis: Vec<usize>,
}

struct Tableau {
    t: DMatrix<f64>,
    basis: Vec<usize>,
    active: Vec<bool>,
    eps: f64,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.t.ncols() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[(row, col)];
        let ncols = self.t.ncols();
        for j in 0..ncols {
            self.t[(row, j)] /= p;
        }
        for i in 0..self.t.nrows() {
            if i == row {
                continue;
            }
            let f = self.t[(i, col)];
            if f != 0.0 {
                for j in 0..ncols {
                    let v = self.t[(row, j)];
                    self.t[(i, j)] -= f * v;
                }
            }
        }
        self.basis[row] = col;
    }

    fn reduced_costs(&self, cost: &[f64], allowed: usize) -> Vec<f64> {
        (0..allowed)
            .map(|j| {
                let mut r = cost[j];
                for (i, &bi) in self.basis.iter().enumerate() {
                    if self.active[i] {
                        r -= cost[bi] * self.t[(i, j)];
                    }
                }
                r
            })
            .collect()
    }

    /// Runs simplex iterations on columns `0..allowed` minimising `cost`.
    fn optimise(&mut self, cost: &[f64], allowed: usize, max_iter: usize) -> Result<()> {
        let rhs = self.rhs_col();
        for _ in 0..max_iter {
            let red = self.reduced_costs(cost, allowed);
            // Bland: smallest entering index with negative reduced cost.
            let Some(col) = (0..allowed).find(|&j| red[j] < -self.eps && !self.basis.contains(&j)) else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.basis.len() {
                if !self.active[i] {
                    continue;
                }
                let a = self.t[(i, col)];
                if a > self.eps {
                    let ratio = self.t[(i, rhs)] / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - self.eps || (ratio <= br + self.eps && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return Err(Error::Unbounded),
            }
        }
        Err(Error::NonConvergence { iterations: max_iter, gap: f64::NAN })
    }
}

/// Solves `min c^T x  s.t.  A x = b, x >= 0`. `A` need not have full row
/// rank; redundant rows are detected during phase one.
pub fn solve_bland(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>, eps: f64) -> Result<SimplexSolution> {
    let (m, d) = a.shape();
    if b.len() != m || c.len() != d {
        return Err(Error::DimensionMismatch("simplex data shapes disagree".into()));
    }
    let scale = 1.0 + a.amax().max(b.amax());
    let eps = eps * scale;
    let mut t = DMatrix::zeros(m, d + m + 1);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            t[(i, j)] = sign * a[(i, j)];
        }
        t[(i, d + i)] = 1.0;
        t[(i, d + m)] = sign * b[i];
    }
    let mut tab = Tableau { t, basis: (d..d + m).collect(), active: vec![true; m], eps };
    let max_iter = 50 * (d + m).max(10) * (m + 1);

    let mut phase1 = vec![0.0; d + m];
    phase1[d..].iter_mut().for_each(|v| *v = 1.0);
    tab.optimise(&phase1, d + m, max_iter)?;
    let rhs = tab.rhs_col();
    let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= d).map(|i| tab.t[(i, rhs)]).sum();
    if infeas > eps * (m as f64).max(1.0) * 10.0 {
        return Err(Error::Infeasible);
    }
    // Drive artificials out of the basis; rows where that is impossible are redundant.
    for i in 0..m {
        if tab.basis[i] >= d {
            match (0..d).find(|&j| tab.t[(i, j)].abs() > eps && !tab.basis.contains(&j)) {
                Some(j) => tab.pivot(i, j),
                None => tab.active[i] = false,
            }
        }
    }

    let mut cost = c.iter().copied().collect::<Vec<_>>();
    cost.extend(std::iter::repeat_n(0.0, m));
    tab.optimise(&cost, d, max_iter)?;

    let mut x = DVector::zeros(d);
    let mut basis = Vec::new();
    for i in 0..m {
        if tab.active[i] && tab.basis[i] < d {
            x[tab.basis[i]] = tab.t[(i, rhs)].max(0.0);
            basis.push(tab.basis[i]);
        }
    }
    basis.sort_unstable();
    Ok(SimplexSolution { value: c.dot(&x), x, basis })
}
