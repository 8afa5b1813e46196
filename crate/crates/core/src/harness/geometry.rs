//! Distances between points and polytopes given by vertex lists.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_GAP_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Solves `min_{α in Δ} ||v - V α||` by Frank-Wolfe with away steps and exact
/// line search. Every few iterations the active face is solved exactly by
/// an equality-constrained least-squares step, which is accepted when it
/// stays in the simplex and lowers the objective. Terminates once the
/// Frank-Wolfe gap of `½||v - V α||²` drops below
/// `max(tol · ½||v - V α||², 16 k ε scale)`, where `scale` is the largest
/// squared vertex distance and the second term is the round-off floor of the
/// Gram matrix.
pub fn point_to_polytope(v: &DVector<f64>, vertices: &[DVector<f64>], tol: f64) -> Result<f64> {
    point_to_polytope_with(v, vertices, tol, DEFAULT_MAX_ITERS)
}

pub fn point_to_polytope_with(v: &DVector<f64>, vertices: &[DVector<f64>], tol: f64, max_iters: usize) -> Result<f64> {
    if vertices.is_empty() {
        return Err(Error::EmptySet);
    }
    if vertices.iter().any(|w| w.len() != v.len()) {
        return Err(Error::DimensionMismatch("vertices and point differ in dimension".into()));
    }
    let k = vertices.len();
    // Work in coordinates centred at v: minimise ½||W α||² with W = V - v.
    let w: Vec<DVector<f64>> = vertices.iter().map(|x| x - v).collect();
    let gram = DMatrix::from_fn(k, k, |i, j| w[i].dot(&w[j]));
    let scale = gram.diagonal().max().max(f64::MIN_POSITIVE);
    let floor = 16.0 * k as f64 * f64::EPSILON * scale;

    let start = (0..k).min_by(|&a, &b| gram[(a, a)].total_cmp(&gram[(b, b)])).expect("nonempty");
    let mut alpha = DVector::zeros(k);
    alpha[start] = 1.0;
    // grad = G α, f = ½ αᵀ G α.
    let mut grad = gram.column(start).into_owned();
    let objective = |alpha: &DVector<f64>, grad: &DVector<f64>| 0.5 * alpha.dot(grad);

    let mut gap = f64::INFINITY;
    for iter in 0..max_iters {
        let f = objective(&alpha, &grad);
        let (s, gs) = argmin(&grad);
        let ga = alpha.dot(&grad);
        gap = ga - gs;
        if gap <= (tol * f).max(floor) || f <= 0.0 {
            return Ok((2.0 * f.max(0.0)).sqrt());
        }
        if iter % 16 == 15 {
            if let Some((a2, g2)) = polish(&gram, &alpha) {
                if objective(&a2, &g2) <= f {
                    alpha = a2;
                    grad = g2;
                    continue;
                }
            }
        }
        // Away vertex: active coordinate with the largest gradient.
        let away =
            (0..k).filter(|&i| alpha[i] > 0.0).max_by(|&a, &b| grad[a].total_cmp(&grad[b])).expect("alpha has support");
        let away_gap = grad[away] - ga;
        let (dir, max_step) = if gap >= away_gap || alpha[away] >= 1.0 {
            let mut d = -alpha.clone();
            d[s] += 1.0;
            (d, 1.0)
        } else {
            let mut d = alpha.clone();
            d[away] -= 1.0;
            let cap = alpha[away] / (1.0 - alpha[away]);
            (d, cap)
        };
        let gd = &gram * &dir;
        let curvature = dir.dot(&gd);
        let slope = grad.dot(&dir);
        if slope >= 0.0 {
            break;
        }
        let step = if curvature > 0.0 { (-slope / curvature).min(max_step) } else { max_step };
        alpha += &dir * step;
        grad += gd * step;
        for a in alpha.iter_mut() {
            if *a < 1e-15 {
                *a = 0.0;
            }
        }
        let total = alpha.sum();
        alpha /= total;
        grad = &gram * &alpha;
    }
    // Final exact attempt before giving up.
    if let Some((a2, g2)) = polish(&gram, &alpha) {
        let f2 = objective(&a2, &g2);
        let (_, gs) = argmin(&g2);
        if 2.0 * f2 - gs <= (tol * f2).max(floor) {
            return Ok((2.0 * f2.max(0.0)).sqrt());
        }
    }
    Err(Error::NonConvergence { iterations: max_iters, gap })
}

fn argmin(v: &DVector<f64>) -> (usize, f64) {
    let i = (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).expect("nonempty");
    (i, v[i])
}

/// Minimiser of ½ αᵀ G α over the affine hull of the active vertices.
fn polish(gram: &DMatrix<f64>, alpha: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
    let active: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > 0.0).collect();
    let a = active.len();
    let mut kkt = DMatrix::zeros(a + 1, a + 1);
    for (p, &i) in active.iter().enumerate() {
        for (q, &j) in active.iter().enumerate() {
            kkt[(p, q)] = gram[(i, j)];
        }
        kkt[(p, a)] = 1.0;
        kkt[(a, p)] = 1.0;
    }
    let mut rhs = DVector::zeros(a + 1);
    rhs[a] = 1.0;
    let sol = kkt.svd(true, true).solve(&rhs, 1e-14).ok()?;
    if sol.rows(0, a).iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return None;
    }
    let mut out = DVector::zeros(alpha.len());
    for (p, &i) in active.iter().enumerate() {
        out[i] = sol[p];
    }
    let total = out.sum();
    if total <= 0.0 {
        return None;
    }
    out /= total;
    let grad = gram * &out;
    Some((out, grad))
}

/// Symmetric Hausdorff distance between the convex hulls of two vertex
/// lists: the larger of the two directed vertex-to-hull maxima.
pub fn hausdorff_distance(v1: &[DVector<f64>], v2: &[DVector<f64>], tol: f64) -> Result<f64> {
    if v1.is_empty() || v2.is_empty() {
        return Err(Error::EmptySet);
    }
    let directed = |a: &[DVector<f64>], b: &[DVector<f64>]| -> Result<f64> {
        a.iter().try_fold(0.0_f64, |acc, x| Ok(acc.max(point_to_polytope(x, b, tol)?)))
    };
    let d12 = directed(v1, v2)?;
    let d21 = directed(v2, v1)?;
    Ok(d12.max(d21))
}
