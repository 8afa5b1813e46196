//! Two-sample statistics used to compare empirical fluctuations with draws
//! from a limit law.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::cones::SupportPartition;

/// Two-sample Kolmogorov-Smirnov statistic `sup_t |F_x(t) - F_y(t)|`.
pub fn ks_statistic(x: &[f64], y: &[f64]) -> f64 {
    if x.is_empty() || y.is_empty() {
        return if x.is_empty() && y.is_empty() { 0.0 } else { 1.0 };
    }
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        // Step past every tie at t in both samples before comparing.
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn column(rows: &[DVector<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

pub fn mean_vector(rows: &[DVector<f64>], d: usize) -> DVector<f64> {
    let mut mean = DVector::zeros(d);
    for r in rows {
        mean += r;
    }
    if !rows.is_empty() {
        mean /= rows.len() as f64;
    }
    mean
}

/// Unbiased sample covariance.
pub fn sample_covariance(rows: &[DVector<f64>], d: usize) -> DMatrix<f64> {
    let mean = mean_vector(rows, d);
    let mut cov = DMatrix::zeros(d, d);
    for r in rows {
        let c = r - &mean;
        cov.ger(1.0, &c, &c, 1.0);
    }
    if rows.len() > 1 {
        cov /= (rows.len() - 1) as f64;
    }
    cov
}

/// `||A - B||_F / ||B||_F`, or the absolute error when `B = 0`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = b.norm();
    let num = (a - b).norm();
    if denom > 0.0 {
        num / denom
    } else {
        num
    }
}

fn mean_distance(x: &[DVector<f64>], y: &[DVector<f64>]) -> f64 {
    if x.is_empty() || y.is_empty() {
        return 0.0;
    }
    // Row sums are collected in order so the total does not depend on scheduling.
    let rows: Vec<f64> = x.par_iter().map(|a| y.iter().map(|b| (a - b).norm()).sum::<f64>()).collect();
    rows.iter().sum::<f64>() / (x.len() as f64 * y.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyDistance {
    /// `2 E||X - Y|| - E||X - X'|| - E||Y - Y'||` over all pairs.
    pub energy: f64,
    /// `E||X - Y||`, the natural scale of `energy`.
    pub mean_pairwise_norm: f64,
}

pub fn energy_distance(x: &[DVector<f64>], y: &[DVector<f64>]) -> EnergyDistance {
    let xy = mean_distance(x, y);
    let xx = mean_distance(x, x);
    let yy = mean_distance(y, y);
    EnergyDistance { energy: (2.0 * xy - xx - yy).max(0.0), mean_pairwise_norm: xy }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportFrequencies {
    /// Share of samples positive on every coordinate of `Pos`.
    pub pos_positive_rate: f64,
    /// Share of samples zero on every coordinate of `TZ`.
    pub tz_zero_rate: f64,
    /// Per coordinate of `DZ`, the share of samples where it is positive.
    pub dz_positive_rates: Vec<f64>,
}

pub fn support_frequencies(samples: &[DVector<f64>], partition: &SupportPartition, tol: f64) -> SupportFrequencies {
    let n = samples.len().max(1) as f64;
    let rate = |pred: &dyn Fn(&DVector<f64>) -> bool| samples.iter().filter(|x| pred(x)).count() as f64 / n;
    SupportFrequencies {
        pos_positive_rate: rate(&|x| partition.pos.iter().all(|&i| x[i] > tol)),
        tz_zero_rate: rate(&|x| partition.tz.iter().all(|&i| x[i].abs() <= tol)),
        dz_positive_rates: partition.dz.iter().map(|&i| rate(&|x: &DVector<f64>| x[i] > tol)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HausdorffSummary {
    pub n: usize,
    pub replicates: usize,
    pub median: f64,
    pub lower_quartile: f64,
    pub upper_quartile: f64,
    /// Share of replicates whose empirical problem has several optimal vertices.
    pub non_unique_rate: f64,
    pub skipped: usize,
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(data: &[f64], q: f64) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// Sample size of the empirical side.
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub empirical_samples: usize,
    pub limit_samples: usize,
    pub ks: Vec<f64>,
    pub energy_distance: f64,
    pub mean_pairwise_norm: f64,
    pub covariance_frobenius_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_frequencies: Option<SupportFrequencies>,
    pub infeasible_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_ks: Option<f64>,
}

pub fn compare_distributions(empirical: &[DVector<f64>], limit: &[DVector<f64>]) -> ComparisonReport {
    let d = empirical.first().or(limit.first()).map_or(0, DVector::len);
    let ks = (0..d).map(|k| ks_statistic(&column(empirical, k), &column(limit, k))).collect();
    let energy = energy_distance(empirical, limit);
    let cov_e = sample_covariance(empirical, d);
    let cov_l = sample_covariance(limit, d);
    ComparisonReport {
        n: 0,
        m: None,
        empirical_samples: empirical.len(),
        limit_samples: limit.len(),
        ks,
        energy_distance: energy.energy,
        mean_pairwise_norm: energy.mean_pairwise_norm,
        covariance_frobenius_error: relative_frobenius(&cov_e, &cov_l),
        support_frequencies: None,
        infeasible_rate: 0.0,
        value_ks: None,
    }
}
