//! Monte-Carlo side of the limit theorems: resample right-hand sides, record
//! scaled fluctuations of empirical solutions and optimal values, track
//! Hausdorff distances between optimality sets, and compare against draws
//! from the limit law.

mod geometry;
mod stats;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones::{indexed_rng, sample_limit, uniform_simplex, LimitLawSpec, TieBreak};
use crate::error::{Error, Result};
use crate::lp::{enumerate_ledger, ledger::optimal_pairs, solve_min_index, StandardLp};
use crate::ot::{check_probability, multinomial_covariance, reduced_rhs};

pub use geometry::{hausdorff_distance, point_to_polytope, point_to_polytope_with, DEFAULT_GAP_TOL, DEFAULT_MAX_ITERS};
pub use stats::{
    compare_distributions, energy_distance, ks_statistic, mean_vector, quantile, relative_frobenius, sample_covariance,
    support_frequencies, ComparisonReport, EnergyDistance, HausdorffSummary, SupportFrequencies,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sample_sizes: Vec<usize>,
    /// Second-sample sizes for two-sample models, paired with `sample_sizes`.
    pub second_sample_sizes: Option<Vec<usize>>,
    pub replicates: usize,
    pub seed: u64,
    pub policy: TieBreak,
    pub comparison_samples: usize,
    /// Record Hausdorff distances between empirical and population optimality sets.
    pub hausdorff: bool,
    /// Warn when a marginal has a zero coordinate.
    pub require_interior: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sample_sizes: vec![1000],
            second_sample_sizes: None,
            replicates: 200,
            seed: 0,
            policy: TieBreak::MinIndex,
            comparison_samples: 2000,
            hausdorff: true,
            require_interior: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidInput("replicates must be at least 1".into()));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(Error::InvalidInput("sample_sizes must be nonempty and positive".into()));
        }
        if let Some(m) = &self.second_sample_sizes {
            if m.len() != self.sample_sizes.len() || m.contains(&0) {
                return Err(Error::InvalidInput("second_sample_sizes must pair with sample_sizes".into()));
            }
        }
        Ok(())
    }

    fn second(&self, idx: usize) -> Option<usize> {
        self.second_sample_sizes.as_ref().map(|m| m[idx])
    }
}

/// How the random right-hand side `b_n` is generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RhsModel {
    /// Optimal transport, `r` estimated from `n` draws, `s` known.
    OneSample { r: Vec<f64>, s: Vec<f64> },
    /// Optimal transport, `r` from `n` and `s` from `m` draws.
    TwoSample { r: Vec<f64>, s: Vec<f64> },
    /// General LP whose first `m0` rhs entries are the leading frequencies
    /// of a categorical law `p`; the remaining entries stay fixed.
    Multinomial { p: Vec<f64>, m0: usize },
    /// Externally supplied right-hand sides, drawn uniformly per replicate.
    UserSamples { draws: Vec<Vec<f64>> },
}

/// Empirical frequencies of `n` categorical draws, by sequential conditional
/// binomials.
pub fn empirical_frequencies<R: Rng + ?Sized>(p: &DVector<f64>, n: usize, rng: &mut R) -> Result<DVector<f64>> {
    check_probability(p, "p")?;
    let mut counts = DVector::zeros(p.len());
    let mut left = n as u64;
    let mut mass = 1.0;
    for i in 0..p.len() {
        if left == 0 {
            break;
        }
        let c = if i + 1 == p.len() || mass <= 0.0 {
            left
        } else {
            let q = (p[i] / mass).clamp(0.0, 1.0);
            Binomial::new(left, q).expect("valid binomial").sample(rng)
        };
        counts[i] = c as f64;
        left -= c;
        mass -= p[i];
    }
    Ok(counts / n as f64)
}

impl RhsModel {
    pub fn validate(&self, m: usize) -> Result<()> {
        let check = |v: &[f64], name: &str| check_probability(&DVector::from_column_slice(v), name);
        match self {
            RhsModel::OneSample { r, s } | RhsModel::TwoSample { r, s } => {
                check(r, "r")?;
                check(s, "s")?;
                if r.len() != s.len() || 2 * r.len() - 1 != m {
                    return Err(Error::DimensionMismatch(format!(
                        "marginals of length {} and {} do not fit {m} constraints",
                        r.len(),
                        s.len()
                    )));
                }
            }
            RhsModel::Multinomial { p, m0 } => {
                check(p, "p")?;
                if *m0 == 0 || *m0 > m || *m0 > p.len() {
                    return Err(Error::InvalidInput(format!("m0 = {m0} is out of range")));
                }
            }
            RhsModel::UserSamples { draws } => {
                if draws.is_empty() {
                    return Err(Error::InvalidInput("no user samples supplied".into()));
                }
                if let Some(i) = draws.iter().position(|d| d.len() != m) {
                    return Err(Error::DimensionMismatch(format!("user sample {i} does not have length {m}")));
                }
            }
        }
        Ok(())
    }

    pub fn is_two_sample(&self) -> bool {
        matches!(self, RhsModel::TwoSample { .. })
    }

    /// Scaling `r_n`: `sqrt(n)`, or `sqrt(nm/(n+m))` for two samples.
    pub fn rate(&self, n: usize, m: Option<usize>) -> f64 {
        match (self, m) {
            (RhsModel::TwoSample { .. }, Some(m)) => ((n * m) as f64 / (n + m) as f64).sqrt(),
            _ => (n as f64).sqrt(),
        }
    }

    pub fn rate_name(&self) -> &'static str {
        if self.is_two_sample() {
            "sqrt(nm/(n+m))"
        } else {
            "sqrt(n)"
        }
    }

    /// Covariance of the Gaussian limit of `r_n (b_n - b)` restricted to the
    /// fluctuating coordinates, with `m0`. `None` for user samples.
    pub fn limit_covariance(&self, n: usize, m: Option<usize>) -> Result<Option<(DMatrix<f64>, usize)>> {
        let trunc = |v: &[f64], k: usize| -> Result<DMatrix<f64>> {
            let s = multinomial_covariance(&DVector::from_column_slice(v))?;
            Ok(s.view((0, 0), (k, k)).into_owned())
        };
        Ok(match self {
            RhsModel::OneSample { r, .. } => Some((trunc(r, r.len() - 1)?, r.len() - 1)),
            RhsModel::TwoSample { r, s } => {
                let m = m.ok_or_else(|| Error::InvalidInput("two-sample model needs second_sample_sizes".into()))?;
                let lambda = m as f64 / (n + m) as f64;
                let k = r.len();
                let mut cov = DMatrix::zeros(2 * k - 1, 2 * k - 1);
                cov.view_mut((0, 0), (k - 1, k - 1)).copy_from(&(trunc(r, k - 1)? * lambda));
                cov.view_mut((k - 1, k - 1), (k, k)).copy_from(&(trunc(s, k)? * (1.0 - lambda)));
                Some((cov, 2 * k - 1))
            }
            RhsModel::Multinomial { p, m0 } => Some((trunc(p, *m0)?, *m0)),
            RhsModel::UserSamples { .. } => None,
        })
    }

    /// Marginals that should lie in the relative interior of the simplex.
    pub fn marginals(&self) -> Vec<(&'static str, &[f64])> {
        match self {
            RhsModel::OneSample { r, s } | RhsModel::TwoSample { r, s } => vec![("r", r), ("s", s)],
            RhsModel::Multinomial { p, .. } => vec![("p", p)],
            RhsModel::UserSamples { .. } => vec![],
        }
    }
}

/// One draw of `b_n` under `model`; `m` is the second sample size.
pub fn resample_rhs<R: Rng + ?Sized>(
    model: &RhsModel,
    b: &DVector<f64>,
    n: usize,
    m: Option<usize>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be positive".into()));
    }
    match model {
        RhsModel::OneSample { r, s } => {
            let r_hat = empirical_frequencies(&DVector::from_column_slice(r), n, rng)?;
            check_probability(&DVector::from_column_slice(s), "s")?;
            Ok(reduced_rhs(&r_hat, &DVector::from_column_slice(s)))
        }
        RhsModel::TwoSample { r, s } => {
            let m = m.ok_or_else(|| Error::InvalidInput("two-sample model needs a second sample size".into()))?;
            let r_hat = empirical_frequencies(&DVector::from_column_slice(r), n, rng)?;
            let s_hat = empirical_frequencies(&DVector::from_column_slice(s), m, rng)?;
            Ok(reduced_rhs(&r_hat, &s_hat))
        }
        RhsModel::Multinomial { p, m0 } => {
            let freq = empirical_frequencies(&DVector::from_column_slice(p), n, rng)?;
            let mut out = b.clone();
            out.rows_mut(0, *m0).copy_from(&freq.rows(0, *m0));
            Ok(out)
        }
        RhsModel::UserSamples { draws } => {
            let k = rng.random_range(0..draws.len());
            Ok(DVector::from_column_slice(&draws[k]))
        }
    }
}

/// Optimal solution of the problem with right-hand side `b` under `policy`.
pub fn solve_with_policy<R: Rng + ?Sized>(
    lp: &StandardLp,
    policy: TieBreak,
    rng: &mut R,
) -> Result<(DVector<f64>, f64)> {
    match policy {
        TieBreak::MinIndex => {
            let pair = solve_min_index(lp)?;
            Ok((pair.primal, pair.objective))
        }
        TieBreak::UniformRandomOverFeasible => {
            let pairs = optimal_pairs(lp)?;
            let w = uniform_simplex(pairs.len(), rng);
            let x = pairs.iter().zip(&w).fold(DVector::zeros(lp.d()), |acc, (p, &a)| acc + &p.primal * a);
            Ok((x, pairs[0].objective))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FluctuationBlock {
    pub n: usize,
    pub m: Option<usize>,
    pub rate: f64,
    /// Replicate index of each recorded row.
    pub replicate: Vec<usize>,
    /// `r_n (x*(b_n) - x*(b))`.
    #[serde(skip)]
    pub fluctuations: Vec<DVector<f64>>,
    /// `x*(b_n)` itself.
    #[serde(skip)]
    pub solutions: Vec<DVector<f64>>,
    /// `r_n (c(b_n) - c(b))`.
    pub value_fluctuations: Vec<f64>,
    pub infeasible: usize,
    pub replicates: usize,
}

impl FluctuationBlock {
    pub fn infeasible_rate(&self) -> f64 {
        self.infeasible as f64 / self.replicates.max(1) as f64
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FluctuationRun {
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub x_star: DVector<f64>,
    pub value: f64,
    pub blocks: Vec<FluctuationBlock>,
}

fn stream_id(size_index: usize, replicate: usize) -> u64 {
    ((size_index as u64) << 40) | replicate as u64
}

enum Replicate {
    Solved { x: DVector<f64>, value: f64 },
    Infeasible,
}

/// Scaled fluctuations of `x*(b_n)` and of the optimal value for every
/// sample size in the config. Each replicate uses its own substream keyed by
/// `(seed, size index, replicate)`.
pub fn fluctuation_run(lp: &StandardLp, config: &ExperimentConfig, model: &RhsModel) -> Result<FluctuationRun> {
    config.validate()?;
    model.validate(lp.m())?;
    let base = solve_min_index(lp)?;
    let (x_star, value) = (base.primal, base.objective);
    let mut blocks = Vec::with_capacity(config.sample_sizes.len());
    for (idx, &n) in config.sample_sizes.iter().enumerate() {
        let m = config.second(idx);
        if model.is_two_sample() && m.is_none() {
            return Err(Error::InvalidInput("two-sample model needs second_sample_sizes".into()));
        }
        let rate = model.rate(n, m);
        let outcomes: Vec<Result<Replicate>> = (0..config.replicates)
            .into_par_iter()
            .map(|rep| {
                let mut rng = indexed_rng(config.seed, stream_id(idx, rep));
                let bn = resample_rhs(model, lp.b(), n, m, &mut rng)?;
                let lpn = lp.with_rhs(bn)?;
                match solve_with_policy(&lpn, config.policy, &mut rng) {
                    Ok((x, value)) => Ok(Replicate::Solved { x, value }),
                    Err(Error::Infeasible | Error::Unbounded) => Ok(Replicate::Infeasible),
                    Err(e) => Err(e),
                }
            })
            .collect();
        let mut block = FluctuationBlock {
            n,
            m,
            rate,
            replicate: Vec::new(),
            fluctuations: Vec::new(),
            solutions: Vec::new(),
            value_fluctuations: Vec::new(),
            infeasible: 0,
            replicates: config.replicates,
        };
        for (rep, outcome) in outcomes.into_iter().enumerate() {
            match outcome? {
                Replicate::Solved { x, value: v } => {
                    block.replicate.push(rep);
                    block.fluctuations.push((&x - &x_star) * rate);
                    block.solutions.push(x);
                    block.value_fluctuations.push((v - value) * rate);
                }
                Replicate::Infeasible => block.infeasible += 1,
            }
        }
        if 2 * block.infeasible > config.replicates {
            return Err(Error::TooManyInfeasible { infeasible: block.infeasible, total: config.replicates });
        }
        blocks.push(block);
    }
    Ok(FluctuationRun { x_star, value, blocks })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HausdorffRecord {
    pub n: usize,
    pub replicate: usize,
    pub distance: f64,
    pub vertices: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HausdorffRun {
    pub records: Vec<HausdorffRecord>,
    pub summaries: Vec<HausdorffSummary>,
}

/// `d_H(OPT(b), OPT(b_n))` per replicate from exact vertex enumeration of
/// both problems. Replicates that are infeasible or exceed the enumeration
/// budget are skipped and counted.
pub fn hausdorff_run(lp: &StandardLp, config: &ExperimentConfig, model: &RhsModel) -> Result<HausdorffRun> {
    config.validate()?;
    model.validate(lp.m())?;
    let base: Vec<DVector<f64>> = enumerate_ledger(lp)?.vertices.into_iter().map(|v| v.point).collect();
    if base.is_empty() {
        return Err(Error::Infeasible);
    }
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for (idx, &n) in config.sample_sizes.iter().enumerate() {
        let m = config.second(idx);
        let outcomes: Vec<Result<Option<(f64, usize)>>> = (0..config.replicates)
            .into_par_iter()
            .map(|rep| {
                // Offset keeps these streams apart from the fluctuation run.
                let mut rng = indexed_rng(config.seed ^ 0x9e37_79b9_7f4a_7c15, stream_id(idx, rep));
                let bn = resample_rhs(model, lp.b(), n, m, &mut rng)?;
                let ledger = match enumerate_ledger(&lp.with_rhs(bn)?) {
                    Ok(l) if l.k() > 0 => l,
                    Ok(_) | Err(Error::NoDualFeasibleBasis | Error::EnumerationCapExceeded { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let verts: Vec<DVector<f64>> = ledger.vertices.into_iter().map(|v| v.point).collect();
                Ok(Some((hausdorff_distance(&base, &verts, DEFAULT_GAP_TOL)?, verts.len())))
            })
            .collect();
        let mut dists = Vec::new();
        let mut non_unique = 0;
        let mut skipped = 0;
        for (rep, outcome) in outcomes.into_iter().enumerate() {
            match outcome? {
                Some((distance, vertices)) => {
                    non_unique += usize::from(vertices > 1);
                    dists.push(distance);
                    records.push(HausdorffRecord { n, replicate: rep, distance, vertices });
                }
                None => skipped += 1,
            }
        }
        summaries.push(HausdorffSummary {
            n,
            replicates: dists.len(),
            median: quantile(&dists, 0.5),
            lower_quartile: quantile(&dists, 0.25),
            upper_quartile: quantile(&dists, 0.75),
            non_unique_rate: non_unique as f64 / dists.len().max(1) as f64,
            skipped,
        });
    }
    Ok(HausdorffRun { records, summaries })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub rate: String,
    pub policy: TieBreak,
    #[serde(serialize_with = "crate::io::ser_vector")]
    pub x_star: DVector<f64>,
    pub value: f64,
    pub comparisons: Vec<ComparisonReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hausdorff_by_n: Option<Vec<HausdorffSummary>>,
    /// Notes about skipped steps, such as a missing limit law.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub fluctuations: FluctuationRun,
    pub hausdorff: Option<HausdorffRun>,
    pub report: ExperimentReport,
}

/// Runs fluctuations, optional Hausdorff tracking and, when the base
/// problem has a unique optimum and the model a Gaussian limit, comparison
/// against `comparison_samples` draws of the limit law.
pub fn run_experiment(lp: &StandardLp, config: &ExperimentConfig, model: &RhsModel) -> Result<ExperimentOutput> {
    let fluctuations = fluctuation_run(lp, config, model)?;
    let hausdorff = if config.hausdorff { Some(hausdorff_run(lp, config, model)?) } else { None };
    let mut notes = Vec::new();
    let mut comparisons = Vec::new();
    for (idx, block) in fluctuations.blocks.iter().enumerate() {
        let limit = match model.limit_covariance(block.n, block.m)? {
            Some((cov, m0)) => match LimitLawSpec::new(lp, cov, m0, config.policy, model.rate_name()) {
                Ok(spec) => Some(spec),
                Err(Error::NotUnique { vertices }) => {
                    if idx == 0 {
                        notes.push(format!("no limit comparison: {vertices} optimal vertices"));
                    }
                    None
                }
                Err(e) => return Err(e),
            },
            None => {
                if idx == 0 {
                    notes.push("no limit comparison for user-supplied samples".into());
                }
                None
            }
        };
        let Some(spec) = limit else { continue };
        let draws = sample_limit(&spec, config.comparison_samples, config.seed.wrapping_add(idx as u64))?;
        let mut report = compare_distributions(&block.fluctuations, &draws.samples);
        report.n = block.n;
        report.m = block.m;
        report.infeasible_rate = block.infeasible_rate();
        report.support_frequencies = Some(support_frequencies(&block.solutions, &spec.partition, lp.tol().feas_tol));
        report.value_ks = Some(ks_statistic(&block.value_fluctuations, &draws.values));
        if draws.uncovered > 0 {
            notes.push(format!("n = {}: {} limit draws fell outside every cone", block.n, draws.uncovered));
        }
        comparisons.push(report);
    }
    let report = ExperimentReport {
        rate: model.rate_name().to_string(),
        policy: config.policy,
        x_star: fluctuations.x_star.clone(),
        value: fluctuations.value,
        comparisons,
        hausdorff_by_n: hausdorff.as_ref().map(|h| h.summaries.clone()),
        notes,
    };
    Ok(ExperimentOutput { fluctuations, hausdorff, report })
}
