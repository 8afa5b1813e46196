//! Discrete optimal transport between two probability vectors on `N` points,
//! as a standard-form LP over row-major vectorised couplings.

mod certificates;
mod functionals;
mod limit;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::StandardLp;
use crate::tol::Tolerances;

pub use certificates::{
    certify, check_dual_summability, check_primal_summability, check_strict_cyclical_monotonicity, check_strict_monge,
    CertificateReport, Cycle, CycleCheck, MongeCheck, PrimalSummabilityCheck, DUAL_SUMMABILITY_MAX_N,
    MONOTONICITY_MAX_N, PRIMAL_SUMMABILITY_MAX_N,
};
pub use functionals::{geodesic_at, otc_curve, trace_functional, DiscreteMeasure};
pub use limit::{multinomial_covariance, ot_limit_spec, OtMode};

const MASS_TOL: f64 = 1e-12;

/// Cost `c(x, y) = ||x - y||_q^p`; `q = inf` is the max-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub p: f64,
    pub q: f64,
}

impl CostSpec {
    fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::InvalidInput(format!("cost exponent p = {} must be positive", self.p)));
        }
        if self.q.is_nan() || self.q < 1.0 {
            return Err(Error::InvalidInput(format!("norm exponent q = {} must be at least 1", self.q)));
        }
        Ok(())
    }

    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let diff = x - y;
        let norm = if self.q.is_infinite() {
            diff.amax()
        } else if self.q == 2.0 {
            diff.norm()
        } else {
            diff.iter().map(|v| v.abs().powf(self.q)).sum::<f64>().powf(1.0 / self.q)
        };
        norm.powf(self.p)
    }
}

pub fn cost_matrix(x: &[DVector<f64>], y: &[DVector<f64>], spec: CostSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} source points but {} target points", x.len(), y.len())));
    }
    if let Some(dim) = x.first().map(DVector::len) {
        if x.iter().chain(y).any(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch("ground points have differing dimensions".into()));
        }
    }
    Ok(DMatrix::from_fn(x.len(), y.len(), |i, j| spec.eval(&x[i], &y[j])))
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundPoints {
    #[serde(serialize_with = "crate::io::ser_vectors")]
    pub x: Vec<DVector<f64>>,
    #[serde(serialize_with = "crate::io::ser_vectors")]
    pub y: Vec<DVector<f64>>,
    pub spec: CostSpec,
}

pub fn check_probability(v: &DVector<f64>, name: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::NotAProbabilityVector(format!("`{name}` is empty")));
    }
    if let Some(i) = v.iter().position(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::NotAProbabilityVector(format!("`{name}`[{i}] = {} is negative or not finite", v[i])));
    }
    let total = v.sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::NotAProbabilityVector(format!("`{name}` sums to {total}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct OtProblem {
    #[serde(serialize_with = "crate::io::ser_matrix")]
    cost: DMatrix<f64>,
    #[serde(serialize_with = "crate::io::ser_vector")]
    r: DVector<f64>,
    #[serde(serialize_with = "crate::io::ser_vector")]
    s: DVector<f64>,
    ground: Option<GroundPoints>,
    #[serde(skip)]
    tol: Tolerances,
}

impl OtProblem {
    pub fn new(cost: DMatrix<f64>, r: DVector<f64>, s: DVector<f64>) -> Result<Self> {
        let n = r.len();
        if !cost.is_square() || cost.nrows() != n || s.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "cost is {}x{} but r has {} and s has {} entries",
                cost.nrows(),
                cost.ncols(),
                n,
                s.len()
            )));
        }
        if cost.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("cost matrix has non-finite entries".into()));
        }
        check_probability(&r, "r")?;
        check_probability(&s, "s")?;
        Ok(Self { cost, r, s, ground: None, tol: Tolerances::default() })
    }

    pub fn from_points(
        x: Vec<DVector<f64>>,
        y: Vec<DVector<f64>>,
        spec: CostSpec,
        r: DVector<f64>,
        s: DVector<f64>,
    ) -> Result<Self> {
        let cost = cost_matrix(&x, &y, spec)?;
        let mut ot = Self::new(cost, r, s)?;
        ot.ground = Some(GroundPoints { x, y, spec });
        Ok(ot)
    }

    /// Attaches ground points to an explicit cost, which must match them.
    pub fn with_ground_points(mut self, x: Vec<DVector<f64>>, y: Vec<DVector<f64>>, spec: CostSpec) -> Result<Self> {
        let generated = cost_matrix(&x, &y, spec)?;
        if generated.shape() != self.cost.shape() || (&generated - &self.cost).amax() > MASS_TOL {
            return Err(Error::InvalidInput("cost does not match the ground points".into()));
        }
        self.ground = Some(GroundPoints { x, y, spec });
        Ok(self)
    }

    /// Points `x_1, ..., x_N` on the real line with `c(x, y) = |x - y|^p`.
    pub fn on_line(points: &[f64], p: f64, r: DVector<f64>, s: DVector<f64>) -> Result<Self> {
        let pts: Vec<DVector<f64>> = points.iter().map(|&v| DVector::from_element(1, v)).collect();
        Self::from_points(pts.clone(), pts, CostSpec { p, q: 2.0 }, r, s)
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    /// Same cost and ground points with new marginals.
    pub fn with_marginals(&self, r: DVector<f64>, s: DVector<f64>) -> Result<Self> {
        let mut ot = Self::new(self.cost.clone(), r, s)?;
        ot.ground = self.ground.clone();
        ot.tol = self.tol;
        Ok(ot)
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn cost(&self) -> &DMatrix<f64> {
        &self.cost
    }

    pub fn r(&self) -> &DVector<f64> {
        &self.r
    }

    pub fn s(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn ground(&self) -> Option<&GroundPoints> {
        self.ground.as_ref()
    }

    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    pub fn cost_vector(&self) -> DVector<f64> {
        let n = self.n();
        DVector::from_fn(n * n, |k, _| self.cost[(k / n, k % n)])
    }

    pub fn reduce_to_lp(&self) -> Result<StandardLp> {
        let n = self.n();
        let lp = StandardLp::with_tolerances(
            reduced_incidence(n),
            reduced_rhs(&self.r, &self.s),
            self.cost_vector(),
            self.tol,
        )?;
        lp.with_names(variable_names(n))
    }

    pub fn coupling(&self, x: &DVector<f64>) -> Result<Coupling> {
        Coupling::from_vector(x, self.n(), self.tol.feas_tol)
    }

    pub fn geodesic(&self, coupling: &Coupling, t: f64) -> Result<DiscreteMeasure> {
        let g = self.ground.as_ref().ok_or(Error::MissingGroundPoints)?;
        geodesic_at(coupling, &g.x, &g.y, t)
    }
}

/// `A_†`: the `2N x N^2` node-arc incidence matrix with row `N` dropped.
pub fn reduced_incidence(n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(2 * n - 1, n * n);
    for i in 0..n {
        for j in 0..n {
            if i + 1 < n {
                a[(i, i * n + j)] = 1.0;
            }
            a[(n - 1 + j, i * n + j)] = 1.0;
        }
    }
    a
}

/// `(r_1, ..., r_{N-1}, s_1, ..., s_N)`.
pub fn reduced_rhs(r: &DVector<f64>, s: &DVector<f64>) -> DVector<f64> {
    let n = r.len();
    let mut b = DVector::zeros(2 * n - 1);
    b.rows_mut(0, n - 1).copy_from(&r.rows(0, n - 1));
    b.rows_mut(n - 1, n).copy_from(s);
    b
}

pub fn variable_names(n: usize) -> Vec<String> {
    (0..n * n).map(|k| format!("pi_{}_{}", k / n, k % n)).collect()
}

/// Transport plan as an `N x N` matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coupling {
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub matrix: DMatrix<f64>,
    pub support: Vec<(usize, usize)>,
}

impl Coupling {
    pub fn from_matrix(matrix: DMatrix<f64>, feas_tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch("coupling must be square".into()));
        }
        let n = matrix.nrows();
        let support =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| matrix[(i, j)] > feas_tol).collect();
        Ok(Self { matrix, support })
    }

    /// Reshapes a row-major vector of length `N^2`.
    pub fn from_vector(x: &DVector<f64>, n: usize, feas_tol: f64) -> Result<Self> {
        if x.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "coupling vector has length {}, expected {}",
                x.len(),
                n * n
            )));
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| x[i * n + j]), feas_tol)
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn row_sums(&self) -> DVector<f64> {
        self.matrix.column_sum()
    }

    pub fn col_sums(&self) -> DVector<f64> {
        self.matrix.row_sum().transpose()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.n();
        DVector::from_fn(n * n, |k, _| self.matrix[(k / n, k % n)])
    }

    pub fn total_cost(&self, cost: &DMatrix<f64>) -> f64 {
        self.matrix.component_mul(cost).sum()
    }

    pub fn in_support(&self, i: usize, j: usize) -> bool {
        self.support.binary_search(&(i, j)).is_ok()
    }
}

/// Greedy top-left fill. When a row and a column are exhausted together the
/// row index advances first.
pub fn northwest_corner(r: &DVector<f64>, s: &DVector<f64>) -> Result<Coupling> {
    check_probability(r, "r")?;
    check_probability(s, "s")?;
    let n = r.len();
    if s.len() != n {
        return Err(Error::DimensionMismatch("r and s differ in length".into()));
    }
    let mut pi = DMatrix::zeros(n, n);
    let (mut rem_r, mut rem_s) = (r[0], s[0]);
    let (mut i, mut j) = (0, 0);
    while i < n && j < n {
        if rem_r <= rem_s {
            pi[(i, j)] = rem_r;
            rem_s -= rem_r;
            i += 1;
            if i < n {
                rem_r = r[i];
            }
        } else {
            pi[(i, j)] = rem_s;
            rem_r -= rem_s;
            j += 1;
            if j < n {
                rem_s = s[j];
            }
        }
    }
    Coupling::from_matrix(pi, 0.0)
}
