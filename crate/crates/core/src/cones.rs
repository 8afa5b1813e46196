//! Stability cones of the optimal bases and the limit functional built from
//! them.
//!
//! For an optimal basis `I_k` of a degenerate problem, the cone `H_k` is the
//! set of right-hand side directions `v` for which `I_k` stays primal
//! feasible to first order: the rows of `A_{I_k}^{-1}` belonging to basic
//! positions outside the support of `x*(b)` must have nonnegative product
//! with `v`. When only the first `m0` coordinates fluctuate, `v` is padded
//! with `m - m0` trailing zeros.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, Lu};
use crate::lp::{enumerate_ledger, Basis, BasisLedger, StandardLp};
use crate::tol::Tolerances;

/// Split of the coordinates of a unique optimum into positives, true zeros
/// and degenerate zeros.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportPartition {
    pub pos: Vec<usize>,
    pub tz: Vec<usize>,
    pub dz: Vec<usize>,
}

pub fn support_partition(ledger: &BasisLedger, x_star: &DVector<f64>, tol: &Tolerances) -> Result<SupportPartition> {
    if ledger.vertices.len() != 1 {
        return Err(Error::NotUnique { vertices: ledger.vertices.len() });
    }
    let d = x_star.len();
    let pos: Vec<usize> = (0..d).filter(|&i| x_star[i] > tol.feas_tol).collect();
    let mut in_union = vec![false; d];
    for pair in ledger.optimal() {
        if (&pair.primal - x_star).amax() <= tol.dedup_tol {
            for &i in pair.basis.indices() {
                in_union[i] = true;
            }
        }
    }
    let tz = (0..d).filter(|&i| !in_union[i]).collect();
    let dz = (0..d).filter(|&i| in_union[i] && !pos.contains(&i)).collect();
    Ok(SupportPartition { pos, tz, dz })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Inside,
    Boundary,
    Outside,
}

impl Verdict {
    pub fn is_member(self) -> bool {
        !matches!(self, Verdict::Outside)
    }
}

/// Cone `H_k^{m0} = { v : [A_{I_k}^{-1} (v, 0)]_j >= 0 for j in J_k }`.
#[derive(Debug, Clone, Serialize)]
pub struct ConeH {
    /// Position of the basis in the ledger's optimal prefix.
    pub basis_index: usize,
    pub basis: Basis,
    /// Positions `j` within the basis whose column lies outside `Pos`.
    pub j_set: Vec<usize>,
    /// Rows of `A_{I_k}^{-1}` for `j` in `J_k`, truncated to `m0` entries.
    #[serde(serialize_with = "crate::io::ser_vectors")]
    pub halfspace_normals: Vec<DVector<f64>>,
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub generator_matrix: DMatrix<f64>,
    pub m0: usize,
    #[serde(skip)]
    lu: Lu,
}

impl ConeH {
    pub fn m(&self) -> usize {
        self.generator_matrix.nrows()
    }

    pub fn embed(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        out.rows_mut(0, self.m0).copy_from(&v.rows(0, self.m0));
        out
    }

    /// Tri-state membership through the half-space description.
    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> Verdict {
        let min = self.halfspace_normals.iter().map(|n| n.dot(&v.rows(0, self.m0))).fold(f64::INFINITY, f64::min);
        classify(min, tol)
    }

    /// Tri-state membership through the generator description
    /// `v = A_{I_k} u` with `u_J >= 0`, solving for `u` directly.
    pub fn contains_by_generator(&self, v: &DVector<f64>, tol: f64) -> Verdict {
        let u = self.lu.solve(&self.embed(v));
        let min = self.j_set.iter().map(|&j| u[j]).fold(f64::INFINITY, f64::min);
        classify(min, tol)
    }

    /// `x(I_k, v)` for a full-length direction `v`.
    pub fn primal(&self, v_full: &DVector<f64>, d: usize) -> DVector<f64> {
        let xi = self.lu.solve(v_full);
        let mut x = DVector::zeros(d);
        for (k, &i) in self.basis.indices().iter().enumerate() {
            x[i] = xi[k];
        }
        x
    }
}

fn classify(min: f64, tol: f64) -> Verdict {
    if min > tol {
        Verdict::Inside
    } else if min >= -tol {
        Verdict::Boundary
    } else {
        Verdict::Outside
    }
}

/// Membership verdict of a cone, for callers that prefer a free function.
pub fn cone_contains(cone: &ConeH, v: &DVector<f64>, tol: f64) -> Verdict {
    cone.contains(v, tol)
}

pub fn build_cones(
    lp: &StandardLp,
    ledger: &BasisLedger,
    partition: &SupportPartition,
    m0: usize,
) -> Result<Vec<ConeH>> {
    let m = lp.m();
    if m0 == 0 || m0 > m {
        return Err(Error::InvalidInput(format!("m0 = {m0} must lie in 1..={m}")));
    }
    if ledger.k() == 0 {
        return Err(Error::Infeasible);
    }
    ledger
        .optimal()
        .iter()
        .enumerate()
        .map(|(k, pair)| {
            let lu = lp.factor(&pair.basis)?;
            let j_set: Vec<usize> = pair
                .basis
                .indices()
                .iter()
                .enumerate()
                .filter(|(_, i)| !partition.pos.contains(i))
                .map(|(j, _)| j)
                .collect();
            let halfspace_normals = j_set.iter().map(|&j| lu.inverse_row(j).rows(0, m0).into_owned()).collect();
            Ok(ConeH {
                basis_index: k,
                basis: pair.basis.clone(),
                j_set,
                halfspace_normals,
                generator_matrix: lp.submatrix(&pair.basis),
                m0,
                lu,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Lowest ledger position among the cones containing the direction.
    #[default]
    MinIndex,
    /// Uniform weights on the simplex over all containing cones.
    UniformRandomOverFeasible,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fluctuation {
    #[serde(serialize_with = "crate::io::ser_matrix")]
    pub covariance: DMatrix<f64>,
    pub m0: usize,
}

/// Everything needed to evaluate and sample the limit functional.
#[derive(Debug, Clone, Serialize)]
pub struct LimitLawSpec {
    pub ledger: BasisLedger,
    pub partition: SupportPartition,
    pub cones: Vec<ConeH>,
    pub tie_break: TieBreak,
    pub fluctuation: Fluctuation,
    pub rate_name: String,
    pub boundary_tol: f64,
    pub d: usize,
}

impl LimitLawSpec {
    pub fn new(
        lp: &StandardLp,
        covariance: DMatrix<f64>,
        m0: usize,
        tie_break: TieBreak,
        rate_name: impl Into<String>,
    ) -> Result<Self> {
        if covariance.shape() != (m0, m0) {
            return Err(Error::DimensionMismatch(format!(
                "covariance is {}x{}, expected {m0}x{m0}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let ledger = enumerate_ledger(lp)?;
        if ledger.vertices.len() != 1 {
            return Err(Error::NotUnique { vertices: ledger.vertices.len() });
        }
        let x_star = ledger.vertices[0].point.clone();
        let partition = support_partition(&ledger, &x_star, lp.tol())?;
        let cones = build_cones(lp, &ledger, &partition, m0)?;
        // Validates symmetry and PSD up front.
        psd_sqrt(&covariance, 1e-10)?;
        Ok(Self {
            ledger,
            partition,
            cones,
            tie_break,
            fluctuation: Fluctuation { covariance, m0 },
            rate_name: rate_name.into(),
            boundary_tol: lp.tol().boundary_tol,
            d: lp.d(),
        })
    }

    pub fn m(&self) -> usize {
        self.cones.first().map_or(0, ConeH::m)
    }

    pub fn m0(&self) -> usize {
        self.fluctuation.m0
    }

    pub fn embed(&self, g: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        out.rows_mut(0, self.m0()).copy_from(&g.rows(0, self.m0()));
        out
    }
}

/// One evaluation of the limit functional.
#[derive(Debug, Clone)]
pub struct LimitDraw {
    pub x: DVector<f64>,
    /// Ledger positions of all cones containing the direction.
    pub members: Vec<usize>,
    /// Cones whose verdict was [`Verdict::Boundary`].
    pub boundary: Vec<usize>,
}

pub fn limit_functional<R: Rng + ?Sized>(spec: &LimitLawSpec, g: &DVector<f64>, rng: &mut R) -> Result<LimitDraw> {
    if g.len() != spec.m0() {
        return Err(Error::DimensionMismatch(format!("direction has length {}, expected {}", g.len(), spec.m0())));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("direction is not finite".into()));
    }
    let mut members = Vec::new();
    let mut boundary = Vec::new();
    for cone in &spec.cones {
        match cone.contains(g, spec.boundary_tol) {
            Verdict::Inside => members.push(cone.basis_index),
            Verdict::Boundary => {
                members.push(cone.basis_index);
                boundary.push(cone.basis_index);
            }
            Verdict::Outside => {}
        }
    }
    if members.is_empty() {
        return Err(Error::NoFeasibleCone);
    }
    if !boundary.is_empty() {
        log::debug!("direction on the boundary of cones {boundary:?}");
    }
    let full = spec.embed(g);
    let x = match spec.tie_break {
        TieBreak::MinIndex => spec.cones[members[0]].primal(&full, spec.d),
        TieBreak::UniformRandomOverFeasible => {
            let weights = uniform_simplex(members.len(), rng);
            members
                .iter()
                .zip(weights)
                .fold(DVector::zeros(spec.d), |acc, (&k, w)| acc + spec.cones[k].primal(&full, spec.d) * w)
        }
    };
    Ok(LimitDraw { x, members, boundary })
}

/// Uniform point on the `n`-simplex from normalised exponential spacings.
pub fn uniform_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// `max_k g^T λ(I_k)` over the optimal bases; `g` has full length `m`.
pub fn optimal_value_limit(ledger: &BasisLedger, g: &DVector<f64>) -> f64 {
    ledger.optimal().iter().map(|p| p.dual.dot(g)).fold(f64::NEG_INFINITY, f64::max)
}

/// Substream-per-index generator so output is independent of thread count.
pub(crate) fn indexed_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitSamples {
    #[serde(skip)]
    pub samples: Vec<DVector<f64>>,
    #[serde(skip)]
    pub values: Vec<f64>,
    pub seed: u64,
    pub requested: usize,
    /// Draws falling in each cone (boundary included).
    pub membership_counts: Vec<usize>,
    /// Draws for which each cone supplied the output.
    pub selection_counts: Vec<usize>,
    /// Draws whose lowest-index feasible cone is each cone. These partition
    /// the covered draws under either policy.
    pub leading_counts: Vec<usize>,
    pub boundary_hits: Vec<usize>,
    /// Draws on some cone boundary.
    pub boundary_draws: usize,
    /// Draws outside every cone; these are dropped from `samples`.
    pub uncovered: usize,
}

impl LimitSamples {
    pub fn occupancy(&self) -> Vec<f64> {
        let n = self.requested.max(1) as f64;
        self.membership_counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn selection_frequencies(&self) -> Vec<f64> {
        let n = self.requested.max(1) as f64;
        self.selection_counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn leading_frequencies(&self) -> Vec<f64> {
        let n = self.requested.max(1) as f64;
        self.leading_counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn matrix(&self, d: usize) -> DMatrix<f64> {
        crate::io::rows_to_matrix(&self.samples, d)
    }
}

/// Monte-Carlo draws of the limit law with `G^{m0} ~ N(0, covariance)`.
pub fn sample_limit(spec: &LimitLawSpec, n_samples: usize, seed: u64) -> Result<LimitSamples> {
    let root = psd_sqrt(&spec.fluctuation.covariance, 1e-10)?;
    let m0 = spec.m0();
    let draws: Vec<(Option<LimitDraw>, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = indexed_rng(seed, i as u64);
            let z = DVector::from_fn(m0, |_, _| rng.sample::<f64, _>(StandardNormal));
            let g = &root * z;
            let value = optimal_value_limit(&spec.ledger, &spec.embed(&g));
            (limit_functional(spec, &g, &mut rng).ok(), value)
        })
        .collect();

    let k = spec.cones.len();
    let mut out = LimitSamples {
        samples: Vec::with_capacity(n_samples),
        values: Vec::with_capacity(n_samples),
        seed,
        requested: n_samples,
        membership_counts: vec![0; k],
        selection_counts: vec![0; k],
        leading_counts: vec![0; k],
        boundary_hits: vec![0; k],
        boundary_draws: 0,
        uncovered: 0,
    };
    for (draw, value) in draws {
        out.values.push(value);
        let Some(draw) = draw else {
            out.uncovered += 1;
            continue;
        };
        for &c in &draw.members {
            out.membership_counts[c] += 1;
        }
        for &c in &draw.boundary {
            out.boundary_hits[c] += 1;
        }
        out.leading_counts[draw.members[0]] += 1;
        if !draw.boundary.is_empty() {
            out.boundary_draws += 1;
        }
        if spec.tie_break == TieBreak::MinIndex {
            out.selection_counts[draw.members[0]] += 1;
        } else {
            for &c in &draw.members {
                out.selection_counts[c] += 1;
            }
        }
        out.samples.push(draw.x);
    }
    Ok(out)
}
