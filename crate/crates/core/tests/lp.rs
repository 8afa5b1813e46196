mod common;

use common::*;
use lp_limitlaw::lp::simplex::solve_bland;
use lp_limitlaw::ot::{reduced_incidence, OtProblem};
use lp_limitlaw::{
    check_assumptions, enumerate_ledger, make_lp, optimality_set, solve_min_index, Basis, Error, StandardLp,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    let e: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = e.iter().sum();
    let mut v = DVector::from_vec(e.into_iter().map(|x| x / total).collect());
    let rest: f64 = v.rows(0, n - 1).sum();
    v[n - 1] = 1.0 - rest;
    v
}

/// Feasible random LP with bounded feasible region: the last row is
/// `sum x = total`, and `b` is generated from a nonnegative point.
fn bounded_random_lp(rng: &mut ChaCha8Rng, m: usize, d: usize) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
    loop {
        let mut a = DMatrix::from_fn(m, d, |_, _| f64::from(rng.random_range(-3i32..=3)));
        for j in 0..d {
            a[(m - 1, j)] = 1.0;
        }
        let x0 =
            DVector::from_fn(d, |_, _| if rng.random::<f64>() < 0.5 { f64::from(rng.random_range(0..4)) } else { 0.0 });
        if x0.sum() == 0.0 {
            continue;
        }
        let b = &a * x0;
        let c = DVector::from_fn(d, |_, _| f64::from(rng.random_range(-5i32..=5)));
        if a.rank(1e-9) == m {
            return (a, b, c);
        }
    }
}

#[test]
fn make_lp_examples() {
    let lp = make_lp(DMatrix::identity(1, 1), v(&[1.0]), v(&[1.0])).unwrap();
    assert_eq!((lp.m(), lp.d()), (1, 1));

    let lp = make_lp(reduced_incidence(3), v(&[0.3, 0.3, 0.2, 0.4, 0.4]), DVector::zeros(9)).unwrap();
    assert_eq!((lp.m(), lp.d()), (5, 9));

    let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
    assert!(matches!(make_lp(a, v(&[1.0, 2.0]), v(&[1.0, 1.0, 1.0])), Err(Error::RankDeficient { rank: 1, rows: 2 })));

    let a = DMatrix::identity(2, 2);
    assert!(matches!(make_lp(a, v(&[1.0]), v(&[1.0, 1.0])), Err(Error::DimensionMismatch(_))));
}

#[test]
fn transport_basis_has_closed_form_coupling() {
    // Basis {pi_11, pi_12, pi_13, pi_22, pi_33}: the first row ships the
    // deficits of the other two columns.
    let mut rng = rng(1);
    let basis = Basis::new(vec![0, 1, 2, 4, 8]).unwrap();
    let mut feasible_seen = [false; 2];
    for _ in 0..200 {
        let r = random_simplex(&mut rng, 3);
        let s = random_simplex(&mut rng, 3);
        let ot = OtProblem::new(DMatrix::from_element(3, 3, 1.0), r.clone(), s.clone()).unwrap();
        let lp = ot.reduce_to_lp().unwrap();
        let pair = lp.basic_pair(&basis).unwrap();
        let expected = [s[0], s[1] - r[1], s[2] - r[2], 0.0, r[1], 0.0, 0.0, 0.0, r[2]];
        for (k, &e) in expected.iter().enumerate() {
            assert!((pair.primal[k] - e).abs() < 1e-12, "entry {k}: {} vs {e}", pair.primal[k]);
        }
        let margin = (s[1] - r[1]).min(s[2] - r[2]);
        if margin.abs() > 1e-6 {
            assert_eq!(pair.primal_feasible, margin > 0.0);
            feasible_seen[usize::from(pair.primal_feasible)] = true;
        }
    }
    assert_eq!(feasible_seen, [true, true]);
}

#[test]
fn identity_basis_returns_rhs_and_cost() {
    let lp = make_lp(DMatrix::identity(3, 3), v(&[1.0, 2.0, 3.0]), v(&[4.0, -5.0, 6.0])).unwrap();
    let pair = lp.basic_pair(&Basis::new(vec![0, 1, 2]).unwrap()).unwrap();
    assert_eq!(pair.primal, v(&[1.0, 2.0, 3.0]));
    assert_eq!(pair.dual, v(&[4.0, -5.0, 6.0]));
    assert!(pair.reduced_costs.iter().all(|&r| r == 0.0));
}

#[test]
fn basic_pair_residuals_on_random_lps() {
    let mut rng = rng(2);
    let mut checked = 0;
    for _ in 0..20 {
        let a = DMatrix::from_fn(3, 5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let c = DVector::from_fn(5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let lp = make_lp(a.clone(), b.clone(), c.clone()).unwrap();
        for idx in itertools::Itertools::combinations(0..5, 3) {
            let basis = Basis::new(idx.clone()).unwrap();
            let Ok(pair) = lp.basic_pair(&basis) else { continue };
            let a_i = DMatrix::from_fn(3, 3, |i, j| a[(i, idx[j])]);
            let x_i = DVector::from_fn(3, |i, _| pair.primal[idx[i]]);
            assert!((&a_i * &x_i - &b).amax() < 1e-10);
            let c_i = DVector::from_fn(3, |i, _| c[idx[i]]);
            assert!((a_i.transpose() * &pair.dual - c_i).amax() < 1e-10);
            for j in (0..5).filter(|j| !idx.contains(j)) {
                assert_eq!(pair.primal[j], 0.0);
            }
            assert!((&c - a.transpose() * &pair.dual - &pair.reduced_costs).amax() < 1e-10);
            checked += 1;
        }
    }
    assert!(checked > 150);
}

#[test]
fn singular_basis_is_rejected() {
    let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 2.0, 4.0, 1.0]);
    let lp = make_lp(a, v(&[1.0, 1.0]), v(&[1.0, 1.0, 1.0])).unwrap();
    assert!(matches!(lp.basic_pair(&Basis::new(vec![0, 1]).unwrap()), Err(Error::SingularBasis { .. })));
}

#[test]
fn symmetric_line_ledger_counts() {
    for p in [0.3, 0.5, 0.8, 1.0, 1.5, 2.0, 3.0] {
        let lp = line3(p, uniform3(), uniform3()).reduce_to_lp().unwrap();
        let ledger = enumerate_ledger(&lp).unwrap();
        assert_eq!(ledger.candidates, 126);
        // 81 of the 126 index sets give an invertible A_I.
        assert_eq!(ledger.invertible_bases, 81);
        for pair in &ledger.dual_feasible {
            let label = symmetric_label(pair.basis.indices());
            assert!(!matches!(label, Some(9..=12)), "p = {p}: label {label:?} is dual feasible");
        }
        let expected: Vec<usize> = match p {
            x if x < 1.0 => vec![1, 2, 3, 4, 5, 6],
            1.0 => vec![1, 2, 3, 4, 5, 6, 7, 8],
            _ => vec![1, 2, 7, 8],
        };
        let mut labels: Vec<usize> =
            ledger.optimal().iter().map(|p| symmetric_label(p.basis.indices()).unwrap()).collect();
        labels.sort_unstable();
        assert_eq!(labels, expected, "p = {p}");
        assert_eq!(optimality_set(&ledger).unwrap().vertices.len(), 1);
    }
}

#[test]
fn ledger_ordering_is_lexicographic_within_blocks() {
    let lp = line3(1.0, v(&[0.2, 0.3, 0.5]), v(&[0.4, 0.4, 0.2])).reduce_to_lp().unwrap();
    let ledger = enumerate_ledger(&lp).unwrap();
    let k = ledger.k();
    for block in [&ledger.dual_feasible[..k], &ledger.dual_feasible[k..]] {
        for w in block.windows(2) {
            assert!(w[0].basis.indices() < w[1].basis.indices());
        }
    }
    for pair in ledger.infeasible_dual() {
        assert!(pair.primal.min() < -lp.tol().feas_tol);
    }
}

#[test]
fn square_system_ledger() {
    let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 1.0, 1.0, 3.0, 0.0, 0.0, 1.0, 4.0]);
    let lp = make_lp(a, v(&[3.0, 4.0, 5.0]), v(&[1.0, 1.0, 1.0])).unwrap();
    let ledger = enumerate_ledger(&lp).unwrap();
    assert_eq!((ledger.n(), ledger.k()), (1, 1));
    assert_eq!(ledger.optimal()[0].basis.indices(), &[0, 1, 2]);
    assert_eq!(solve_min_index(&lp).unwrap().basis.indices(), &[0, 1, 2]);
    let report = check_assumptions(&lp);
    assert!(report.a1 && report.a2 && report.a3);
}

#[test]
fn asymmetric_instance_has_the_two_printed_vertices() {
    let lp = line3(1.0, v(&[0.25, 0.25, 0.5]), v(&[0.5, 0.25, 0.25])).reduce_to_lp().unwrap();
    let ledger = enumerate_ledger(&lp).unwrap();
    let set = optimality_set(&ledger).unwrap();
    let printed =
        [v(&[0.25, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.25, 0.25]), v(&[0.25, 0.0, 0.0, 0.0, 0.25, 0.0, 0.25, 0.0, 0.25])];
    assert_eq!(set.vertices.len(), 2);
    for p in &printed {
        assert!(set.vertices.iter().any(|x| (x - p).amax() < 1e-12), "missing {p}");
    }
    assert!((set.value - 0.5).abs() < 1e-12);
    let mut bases: Vec<Vec<usize>> = ledger.optimal().iter().map(|p| p.basis.indices().to_vec()).collect();
    bases.sort();
    let mut expected: Vec<Vec<usize>> = ASYMMETRIC_BASES.iter().map(|b| zero_based(b)).collect();
    expected.sort();
    assert_eq!(bases, expected);
}

#[test]
fn min_index_picks_the_smallest_optimal_basis() {
    let lp = line3(2.0, uniform3(), uniform3()).reduce_to_lp().unwrap();
    let ledger = enumerate_ledger(&lp).unwrap();
    let mut sorted: Vec<Vec<usize>> = ledger.optimal().iter().map(|p| p.basis.indices().to_vec()).collect();
    sorted.sort();
    let pick = solve_min_index(&lp).unwrap();
    assert_eq!(pick.basis.indices(), sorted[0].as_slice());
    // {1,2,5,6,9} in 1-based labels precedes {1,2,5,8,9}.
    assert_eq!(symmetric_label(pick.basis.indices()), Some(8));
}

#[test]
fn min_index_value_matches_ledger_on_random_lps() {
    let mut rng = rng(3);
    let mut solved = 0;
    for t in 0..60 {
        let (a, b, c) = bounded_random_lp(&mut rng, 2 + t % 3, 5 + t % 4);
        let lp = make_lp(a, b, c).unwrap();
        let pick = solve_min_index(&lp).unwrap();
        let ledger = enumerate_ledger(&lp).unwrap();
        assert!((pick.objective - ledger.optimal_value.unwrap()).abs() < 1e-10);
        assert_eq!(pick.basis, ledger.optimal()[0].basis);
        solved += 1;
    }
    assert_eq!(solved, 60);
}

#[test]
fn simplex_agrees_with_enumeration() {
    let mut rng = rng(4);
    for t in 0..60 {
        let (a, b, c) = bounded_random_lp(&mut rng, 2 + t % 3, 5 + t % 5);
        let lp = make_lp(a.clone(), b.clone(), c.clone()).unwrap();
        let reference = solve_min_index(&lp).unwrap().objective;
        let fast = solve_bland(&a, &b, &c, 1e-10).unwrap().value;
        assert!((reference - fast).abs() <= 1e-8 * (1.0 + reference.abs()), "{reference} vs {fast}");
    }
}

#[test]
fn assumption_reports_on_the_line() {
    let report = check_assumptions(&line3(1.0, uniform3(), uniform3()).reduce_to_lp().unwrap());
    assert!(report.a1 && report.a2 && !report.a3);
    let lp = line3(1.0, uniform3(), uniform3()).reduce_to_lp().unwrap();
    let ledger = enumerate_ledger(&lp).unwrap();
    let (j, k) = report.a3_witness.unwrap();
    let lj = symmetric_label(ledger.optimal()[j].basis.indices()).unwrap();
    let lk = symmetric_label(ledger.optimal()[k].basis.indices()).unwrap();
    let pair = (lj.min(lk), lj.max(lk));
    assert!([(3, 7), (6, 7), (4, 8), (5, 8)].contains(&pair), "{pair:?}");

    let report = check_assumptions(&line3(2.0, uniform3(), uniform3()).reduce_to_lp().unwrap());
    assert!(report.a1 && report.a2 && report.a3 && report.slater && report.bounded);
}

#[test]
fn transport_problems_satisfy_slater() {
    let mut rng = rng(5);
    for _ in 0..20 {
        let n = 2 + rng.random_range(0..3);
        let cost = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
        let ot = OtProblem::new(cost, random_simplex(&mut rng, n), random_simplex(&mut rng, n)).unwrap();
        let report = check_assumptions(&ot.reduce_to_lp().unwrap());
        assert!(report.slater && report.bounded && report.a1);
    }
}

fn optimal_pairs_checks(lp: &StandardLp) {
    let tol = *lp.tol();
    let ledger = enumerate_ledger(lp).unwrap();
    for pair in ledger.optimal() {
        let primal_value = lp.c().dot(&pair.primal);
        let dual_value = lp.b().dot(&pair.dual);
        assert!((primal_value - dual_value).abs() <= tol.value_band(primal_value));
        for i in 0..lp.d() {
            assert!(pair.primal[i] * pair.reduced_costs[i] <= tol.slack_tol);
        }
    }
    let optimal = ledger.optimal();
    // A nondegenerate optimal basis pins down the dual.
    if optimal.iter().any(|p| !p.primal_degenerate) {
        for p in optimal {
            assert!((&p.dual - &optimal[0].dual).amax() <= tol.dedup_tol);
        }
    }
    // A unique degenerate optimum has several dual solutions. When the dual
    // optimal face is bounded these show up as distinct dual basic solutions.
    if ledger.vertices.len() == 1 && optimal[0].primal_degenerate {
        let value = ledger.optimal_value.unwrap();
        let ranges: Vec<Option<f64>> = (0..lp.m()).map(|i| dual_face_range(lp, value, i)).collect();
        assert!(ranges.iter().any(|r| r.is_none_or(|w| w > 1e-7)), "unique dual for a degenerate optimum");
        if ranges.iter().all(Option::is_some) {
            let mut distinct: Vec<&DVector<f64>> = Vec::new();
            for p in optimal {
                if !distinct.iter().any(|d| (*d - &p.dual).amax() <= tol.dedup_tol) {
                    distinct.push(&p.dual);
                }
            }
            assert!(distinct.len() >= 2);
        }
    }
}

/// Width of coordinate `i` over `{lambda : A^T lambda <= c, b^T lambda = value}`,
/// `None` when unbounded. Solved with the simplex on `(lambda+, lambda-, slack)`.
fn dual_face_range(lp: &StandardLp, value: f64, i: usize) -> Option<f64> {
    let (m, d) = (lp.m(), lp.d());
    let cols = 2 * m + d;
    let mut a = DMatrix::zeros(d + 1, cols);
    for j in 0..d {
        for k in 0..m {
            a[(j, k)] = lp.a()[(k, j)];
            a[(j, m + k)] = -lp.a()[(k, j)];
        }
        a[(j, 2 * m + j)] = 1.0;
    }
    for k in 0..m {
        a[(d, k)] = lp.b()[k];
        a[(d, m + k)] = -lp.b()[k];
    }
    let mut rhs = DVector::zeros(d + 1);
    rhs.rows_mut(0, d).copy_from(lp.c());
    rhs[d] = value;
    let mut obj = DVector::zeros(cols);
    obj[i] = 1.0;
    obj[m + i] = -1.0;
    let lo = solve_bland(&a, &rhs, &obj, 1e-10).ok()?.value;
    let hi = -solve_bland(&a, &rhs, &(-obj), 1e-10).ok()?.value;
    Some(hi - lo)
}

#[test]
fn duality_and_degeneracy_properties() {
    for p in [0.5, 1.0, 2.0] {
        optimal_pairs_checks(&line3(p, uniform3(), uniform3()).reduce_to_lp().unwrap());
        optimal_pairs_checks(&line3(p, v(&[0.25, 0.25, 0.5]), v(&[0.5, 0.25, 0.25])).reduce_to_lp().unwrap());
    }
    let mut rng = rng(6);
    for t in 0..80 {
        let (a, b, c) = bounded_random_lp(&mut rng, 2 + t % 3, 5 + t % 4);
        optimal_pairs_checks(&make_lp(a, b, c).unwrap());
    }
}

#[test]
fn continuous_costs_give_unique_optima() {
    let mut rng = rng(7);
    let (a, b, _) = bounded_random_lp(&mut rng, 3, 7);
    let mut solvable = 0;
    for _ in 0..150 {
        let c = DVector::from_fn(7, |_, _| rng.sample::<f64, _>(StandardNormal));
        let lp = make_lp(a.clone(), b.clone(), c).unwrap();
        let Ok(ledger) = enumerate_ledger(&lp) else { continue };
        if ledger.k() == 0 {
            continue;
        }
        solvable += 1;
        assert!(optimality_set(&ledger).unwrap().is_singleton());
    }
    assert!(solvable >= 100);
}

#[test]
fn brute_force_equivalence() {
    let mut rng = rng(8);
    for t in 0..120 {
        let m = 2 + t % 4;
        let d = (m + 2 + t % 7).min(12);
        let (a, b, c) = if t % 2 == 0 {
            bounded_random_lp(&mut rng, m, d)
        } else {
            // Unconstrained sign pattern: may be infeasible or unbounded.
            let a = DMatrix::from_fn(m, d, |_, _| f64::from(rng.random_range(-3i32..=3)));
            let b = DVector::from_fn(m, |_, _| f64::from(rng.random_range(-3i32..=3)));
            let c = DVector::from_fn(d, |_, _| f64::from(rng.random_range(-3i32..=3)));
            (a, b, c)
        };
        let Ok(lp) = make_lp(a.clone(), b.clone(), c.clone()) else { continue };
        let (outcome, first, _) = brute_force(&a, &b, &c, lp.tol().feas_tol);
        match (solve_min_index(&lp), outcome) {
            (Ok(pick), OracleOutcome::Optimal) => {
                let oracle = first.unwrap();
                assert_eq!(pick.basis.indices(), oracle.basis.as_slice());
                assert!((pick.objective - oracle.value).abs() < 1e-9 * (1.0 + oracle.value.abs()));
            }
            (Err(Error::Infeasible), OracleOutcome::Infeasible) | (Err(Error::Unbounded), OracleOutcome::Unbounded) => {
            }
            (got, want) => panic!("instance {t}: solver {got:?}, oracle {want:?}"),
        }
    }
}
