//! Standard-form linear programs `min c^T x  s.t.  A x = b, x >= 0` and the
//! exact basis machinery built on top of them.

mod assumptions;
pub(crate) mod ledger;
pub mod simplex;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Lu};
use crate::tol::Tolerances;

pub use assumptions::{check_assumptions, find_feasible_point, AssumptionReport};
pub use ledger::{binomial, enumerate_ledger, optimality_set, solve_min_index, BasisLedger, OptimalitySet, Vertex};

/// A validated standard-form LP with full row rank constraint matrix.
#[derive(Debug, Clone)]
pub struct StandardLp {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    names: Option<Vec<String>>,
    tol: Tolerances,
}

/// Builds a [`StandardLp`] with default tolerances.
pub fn make_lp(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<StandardLp> {
    StandardLp::new(a, b, c)
}

impl StandardLp {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        Self::with_tolerances(a, b, c, Tolerances::default())
    }

    pub fn with_tolerances(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, tol: Tolerances) -> Result<Self> {
        let (m, d) = a.shape();
        if m == 0 || d == 0 {
            return Err(Error::DimensionMismatch("constraint matrix must be non-empty".into()));
        }
        if b.len() != m {
            return Err(Error::DimensionMismatch(format!("rhs has length {}, expected {m}", b.len())));
        }
        if c.len() != d {
            return Err(Error::DimensionMismatch(format!("cost has length {}, expected {d}", c.len())));
        }
        if m > d {
            return Err(Error::DimensionMismatch(format!("{m} constraints exceed {d} variables")));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in problem data".into()));
        }
        let rank = linalg::rank(&a, tol.rank_tol);
        if rank < m {
            return Err(Error::RankDeficient { rank, rows: m });
        }
        Ok(Self { a, b, c, names: None, tol })
    }

    /// Builds a full-rank LP from a possibly rank-deficient system by dropping
    /// redundant rows. Returns `Ok(None)` when the dropped rows are
    /// inconsistent with the kept ones (the feasible set is empty).
    pub fn from_redundant(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, tol: Tolerances) -> Result<Option<Self>> {
        let rows = linalg::independent_rows(&a, tol.rank_tol);
        if rows.is_empty() {
            return Err(Error::RankDeficient { rank: 0, rows: a.nrows() });
        }
        let kept = a.select_rows(rows.iter());
        let kept_b = DVector::from_iterator(rows.len(), rows.iter().map(|&i| b[i]));
        if rows.len() < a.nrows() {
            let svd = kept.transpose().svd(true, true);
            for i in (0..a.nrows()).filter(|i| !rows.contains(i)) {
                let row = a.row(i).transpose();
                let y = svd.solve(&row, 1e-12).map_err(|e| Error::InvalidInput(e.to_string()))?;
                let implied = y.dot(&kept_b);
                if (implied - b[i]).abs() > tol.feas_tol * (1.0 + b[i].abs()) {
                    return Ok(None);
                }
            }
        }
        Self::with_tolerances(kept, kept_b, c, tol).map(Some)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d() {
            return Err(Error::DimensionMismatch(format!("{} variable names for {} variables", names.len(), self.d())));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn set_tolerances(&mut self, tol: Tolerances) {
        self.tol = tol;
    }

    /// Same constraint matrix and cost with a new right-hand side. The rank
    /// check is skipped since `A` is unchanged.
    pub fn with_rhs(&self, b: DVector<f64>) -> Result<Self> {
        if b.len() != self.m() {
            return Err(Error::DimensionMismatch(format!("rhs has length {}, expected {}", b.len(), self.m())));
        }
        Ok(Self { b, ..self.clone() })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Variable labels, defaulting to `x0..x{d-1}`, matching the 0-based indices.
    pub fn variable_names(&self) -> Vec<String> {
        match &self.names {
            Some(n) => n.clone(),
            None => (0..self.d()).map(|i| format!("x{i}")).collect(),
        }
    }

    pub fn submatrix(&self, basis: &Basis) -> DMatrix<f64> {
        self.a.select_columns(basis.indices().iter())
    }

    /// Factorises `A_I`, failing with [`Error::SingularBasis`] when its
    /// relative pivot is below `rank_tol`.
    pub fn factor(&self, basis: &Basis) -> Result<Lu> {
        self.check_basis(basis)?;
        let lu = Lu::new(&self.submatrix(basis));
        if !lu.is_invertible(self.tol.rank_tol) {
            return Err(Error::SingularBasis { indices: basis.indices().to_vec(), pivot: lu.pivot_ratio() });
        }
        Ok(lu)
    }

    fn check_basis(&self, basis: &Basis) -> Result<()> {
        if basis.len() != self.m() {
            return Err(Error::DimensionMismatch(format!("basis has {} indices, expected {}", basis.len(), self.m())));
        }
        if basis.indices().last().is_some_and(|&i| i >= self.d()) {
            return Err(Error::DimensionMismatch(format!("basis index out of range 0..{}", self.d())));
        }
        Ok(())
    }

    /// Primal basic solution `x(I, v)` for an arbitrary right-hand side `v`.
    pub fn primal_for(&self, basis: &Basis, lu: &Lu, v: &DVector<f64>) -> DVector<f64> {
        let xi = lu.solve(v);
        let mut x = DVector::zeros(self.d());
        for (k, &i) in basis.indices().iter().enumerate() {
            x[i] = xi[k];
        }
        x
    }

    pub fn basic_pair(&self, basis: &Basis) -> Result<BasicSolutionPair> {
        let lu = self.factor(basis)?;
        Ok(self.pair_from_lu(basis.clone(), &lu))
    }

    pub(crate) fn pair_from_lu(&self, basis: Basis, lu: &Lu) -> BasicSolutionPair {
        let tol = &self.tol;
        let primal = self.primal_for(&basis, lu, &self.b);
        let ci = DVector::from_iterator(self.m(), basis.indices().iter().map(|&i| self.c[i]));
        let dual = lu.solve_transpose(&ci);
        let mut reduced_costs = &self.c - self.a.tr_mul(&dual);
        for &i in basis.indices() {
            // Basic reduced costs vanish by construction.
            reduced_costs[i] = 0.0;
        }
        let primal_feasible = primal.iter().all(|&v| v >= -tol.feas_tol);
        let dual_feasible = reduced_costs.iter().all(|&v| v >= -tol.feas_tol);
        let nonzero = primal.iter().filter(|v| v.abs() > tol.feas_tol).count();
        let active = reduced_costs.iter().filter(|v| v.abs() <= tol.feas_tol).count();
        let objective = self.c.dot(&primal);
        BasicSolutionPair {
            basis,
            primal,
            dual,
            reduced_costs,
            objective,
            primal_feasible,
            dual_feasible,
            primal_degenerate: nonzero < self.m(),
            dual_degenerate: active > self.m(),
        }
    }
}

/// Strictly increasing list of `m` column indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Basis(Vec<usize>);

impl Basis {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!("basis indices {indices:?} are not strictly increasing")));
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Position of column `i` inside the basis.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.0.binary_search(&i).ok()
    }

    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self(indices)
    }
}

/// Primal and dual basic solutions induced by one basis.
#[derive(Debug, Clone, Serialize)]
pub struct BasicSolutionPair {
    pub basis: Basis,
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub primal: DVector<f64>,
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub dual: DVector<f64>,
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub reduced_costs: DVector<f64>,
    pub objective: f64,
    pub primal_feasible: bool,
    pub dual_feasible: bool,
    pub primal_degenerate: bool,
    pub dual_degenerate: bool,
}

impl BasicSolutionPair {
    pub fn is_optimal(&self) -> bool {
        self.primal_feasible && self.dual_feasible
    }
}
