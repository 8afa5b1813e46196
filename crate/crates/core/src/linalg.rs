//! Small dense kernels: complete-pivoting LU, row-rank detection and a
//! symmetric PSD square root.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// LU factorisation `P A Q = L U` of a square matrix with complete pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DMatrix<f64>,
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
    pivot_ratio: f64,
}

impl Lu {
    pub fn new(a: &DMatrix<f64>) -> Self {
        assert!(a.is_square(), "Lu::new expects a square matrix");
        let n = a.nrows();
        let mut lu = a.clone();
        let mut row_perm: Vec<usize> = (0..n).collect();
        let mut col_perm: Vec<usize> = (0..n).collect();
        let mut max_pivot = 0.0_f64;
        let mut min_pivot = f64::INFINITY;

        for k in 0..n {
            let (mut pr, mut pc, mut best) = (k, k, -1.0);
            for j in k..n {
                for i in k..n {
                    let v = lu[(i, j)].abs();
                    if v > best {
                        best = v;
                        pr = i;
                        pc = j;
                    }
                }
            }
            if pr != k {
                lu.swap_rows(k, pr);
                row_perm.swap(k, pr);
            }
            if pc != k {
                lu.swap_columns(k, pc);
                col_perm.swap(k, pc);
            }
            let pivot = lu[(k, k)];
            max_pivot = max_pivot.max(pivot.abs());
            min_pivot = min_pivot.min(pivot.abs());
            if pivot == 0.0 {
                // Remaining block is identically zero.
                min_pivot = 0.0;
                break;
            }
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }

        let pivot_ratio = if n == 0 {
            1.0
        } else if max_pivot == 0.0 {
            0.0
        } else {
            min_pivot / max_pivot
        };
        Self { lu, row_perm, col_perm, pivot_ratio }
    }

    /// Smallest pivot magnitude divided by the largest one.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn is_invertible(&self, rank_tol: f64) -> bool {
        self.pivot_ratio > rank_tol
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut z: Vec<f64> = self.row_perm.iter().map(|&r| b[r]).collect();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * z[j];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * z[j];
            }
            z[i] = s / self.lu[(i, i)];
        }
        let mut x = DVector::zeros(n);
        for (k, &c) in self.col_perm.iter().enumerate() {
            x[c] = z[k];
        }
        x
    }

    /// Solves `A^T y = c`.
    pub fn solve_transpose(&self, c: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut t: Vec<f64> = self.col_perm.iter().map(|&k| c[k]).collect();
        // U^T t' = t
        for i in 0..n {
            let mut s = t[i];
            for j in 0..i {
                s -= self.lu[(j, i)] * t[j];
            }
            t[i] = s / self.lu[(i, i)];
        }
        // L^T s = t'
        for i in (0..n).rev() {
            let mut s = t[i];
            for j in (i + 1)..n {
                s -= self.lu[(j, i)] * t[j];
            }
            t[i] = s;
        }
        let mut y = DVector::zeros(n);
        for (k, &r) in self.row_perm.iter().enumerate() {
            y[r] = t[k];
        }
        y
    }

    /// Row `j` of the inverse, i.e. `e_j^T A^{-1}`.
    pub fn inverse_row(&self, j: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.dim());
        e[j] = 1.0;
        self.solve_transpose(&e)
    }
}

/// Indices of a maximal set of linearly independent rows, found by Gaussian
/// elimination with complete pivoting. Pivots below `rank_tol` times the
/// largest pivot count as zero.
pub fn independent_rows(a: &DMatrix<f64>, rank_tol: f64) -> Vec<usize> {
    let (m, d) = a.shape();
    let mut w = a.clone();
    let mut rows: Vec<usize> = (0..m).collect();
    let mut first_pivot = None;
    let mut rank = 0;
    for k in 0..m.min(d) {
        let (mut pr, mut pc, mut best) = (k, k, 0.0);
        for j in k..d {
            for i in k..m {
                let v = w[(i, j)].abs();
                if v > best {
                    best = v;
                    pr = i;
                    pc = j;
                }
            }
        }
        let scale = *first_pivot.get_or_insert(best);
        if best == 0.0 || best <= rank_tol * scale {
            break;
        }
        w.swap_rows(k, pr);
        rows.swap(k, pr);
        w.swap_columns(k, pc);
        let pivot = w[(k, k)];
        for i in (k + 1)..m {
            let f = w[(i, k)] / pivot;
            if f != 0.0 {
                for j in k..d {
                    w[(i, j)] -= f * w[(k, j)];
                }
            }
        }
        rank += 1;
    }
    let mut keep = rows[..rank].to_vec();
    keep.sort_unstable();
    keep
}

pub fn rank(a: &DMatrix<f64>, rank_tol: f64) -> usize {
    independent_rows(a, rank_tol).len()
}

/// Symmetric square root `S` with `S S^T = sigma` computed from an
/// eigendecomposition, so rank-deficient covariances are fine. Eigenvalues
/// below `-tol * max(1, λ_max)` are rejected; smaller negative ones are
/// clipped to zero.
pub fn psd_sqrt(sigma: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    if !sigma.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "covariance must be square, got {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let n = sigma.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let asym = (sigma - sigma.transpose()).abs().max();
    if asym > tol * (1.0 + sigma.abs().max()) {
        return Err(Error::CovarianceNotPsd { min_eigenvalue: f64::NAN });
    }
    let sym = (sigma + sigma.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let lmax = eig.eigenvalues.max().max(1.0);
    let lmin = eig.eigenvalues.min();
    if lmin < -tol * lmax {
        return Err(Error::CovarianceNotPsd { min_eigenvalue: lmin });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}
