use super::*;
use crate::refsolver::{solve_dense_exact, DenseProblem};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn diag(v: &[f64]) -> SparseSymMatrix {
    SparseSymMatrix::from_diagonal(v).unwrap()
}

fn problem(a: SparseSymMatrix, b: Vec<f64>) -> TrustRegionProblem {
    TrustRegionProblem::new(a, b, None).unwrap()
}

fn dense_of(op: &dyn SymOperator) -> DMatrix<f64> {
    let n = op.dim();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = op.apply(&e);
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    out
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize, with_metric: bool) -> TrustRegionProblem {
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i..n {
            entries.push((i, j, rng.random_range(-1.0..1.0)));
        }
    }
    let a = SparseSymMatrix::from_triplets(n, entries).unwrap();
    let b = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let m = with_metric.then(|| {
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5));
        let m = &g * g.transpose() + DMatrix::identity(n, n) * 0.3;
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..n {
                t.push((i, j, 0.5 * (m[(i, j)] + m[(j, i)])));
            }
        }
        SparseSymMatrix::from_triplets(n, t).unwrap()
    });
    TrustRegionProblem::new(a, b, m).unwrap()
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
}

#[test]
fn conditioning_of_zero_problem() {
    let p = problem(SparseSymMatrix::zeros(3), vec![0.0; 3]);
    let est = estimate_conditioning(&p, 0.1, &mut RngState::from_seed(0)).unwrap();
    assert_eq!(est.lambda_hat, 1.0);
    assert_eq!(est.mu_hat, 1.0);
    assert!(est.kappa_hat <= 8.0);
}

#[test]
fn conditioning_with_known_norms() {
    let p = problem(diag(&[3.0, -3.0]), vec![4.0, 0.0]);
    for seed in 0..20 {
        let est = estimate_conditioning(&p, 0.1, &mut RngState::from_seed(seed)).unwrap();
        assert!(est.lambda_hat >= 14.0 && est.lambda_hat <= 56.0, "{est:?}");
        assert!(est.mu_hat >= 0.5 && est.mu_hat <= 1.0);
    }
}

#[test]
fn conditioning_brackets_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut failures = 0;
    for seed in 0..100 {
        let p = random_problem(&mut rng, 8, true);
        let dp = DenseProblem::from_problem(&p).unwrap();
        let na = spectral_norm(dp.a());
        let m_eig = dp.m().clone().symmetric_eigen().eigenvalues;
        let lambda = (2.0 * (na + norm(p.b()))).max(m_eig.max()).max(1.0);
        let mu = m_eig.min().min(1.0);
        let est = estimate_conditioning(&p, 0.1, &mut RngState::from_seed(seed)).unwrap();
        let ok = est.lambda_hat >= lambda * (1.0 - 1e-12)
            && est.lambda_hat <= 4.0 * lambda
            && est.mu_hat <= mu * (1.0 + 1e-12)
            && est.mu_hat >= mu / 4.0
            && est.kappa_hat >= lambda / mu * (1.0 - 1e-12);
        failures += usize::from(!ok);
    }
    assert!(failures <= 10, "{failures} bracket failures");
}

#[test]
fn indefinite_metric_is_rejected() {
    let p = TrustRegionProblem::new(diag(&[1.0, 1.0]), vec![0.0, 0.0], Some(diag(&[1.0, -2.0]))).unwrap();
    let err = estimate_conditioning(&p, 0.1, &mut RngState::from_seed(0)).unwrap_err();
    assert_eq!(err.kind(), "not_positive_definite");
}

#[test]
fn lifted_pair_of_zero_problem() {
    let p = problem(SparseSymMatrix::zeros(3), vec![0.0; 3]);
    let (a1, a2) = build_lifted_pair(&p, 0.0, 1.0).unwrap();
    assert!(dense_of(&a1).iter().all(|v| *v == 0.0));
    let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, -0.5, -0.5, -0.5]));
    assert_eq!(dense_of(&a2), expected);
}

#[test]
fn lifted_quadratic_form_expands() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = random_problem(&mut rng, 6, false);
    let (c, kappa) = (0.7, 9.0);
    let (a1, a2) = build_lifted_pair(&p, c, kappa).unwrap();
    let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut y = vec![1.0];
    y.extend(&x);
    let expect = (p.objective(&x) - c) / (2.0 * kappa);
    assert!((a1.quad_form(&y) - expect).abs() < 1e-14);
    let expect2 = (1.0 - dot(&x, &x)) / (2.0 * kappa);
    assert!((a2.quad_form(&y) - expect2).abs() < 1e-14);
}

#[test]
fn lifted_views_match_explicit_assembly_and_have_unit_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..30 {
        let n = 2 + trial % 10;
        let p = random_problem(&mut rng, n, trial % 2 == 0);
        let est = estimate_conditioning(&p, 0.05, &mut RngState::from_seed(trial as u64)).unwrap();
        let dp = DenseProblem::from_problem(&p).unwrap();
        for c in [0.0, 0.5 * est.lambda_hat, est.lambda_hat, est.kappa_hat] {
            let (a1, a2) = build_lifted_pair(&p, c, est.kappa_hat).unwrap();
            let s = 0.5 / est.kappa_hat;
            let mut e1 = DMatrix::zeros(n + 1, n + 1);
            let mut e2 = DMatrix::zeros(n + 1, n + 1);
            e1[(0, 0)] = -c * s;
            e2[(0, 0)] = s;
            for i in 0..n {
                e1[(0, i + 1)] = s * p.b()[i];
                e1[(i + 1, 0)] = s * p.b()[i];
                for j in 0..n {
                    e1[(i + 1, j + 1)] = s * dp.a()[(i, j)];
                    e2[(i + 1, j + 1)] = -s * dp.m()[(i, j)];
                }
            }
            assert!((dense_of(&a1) - &e1).amax() < 1e-15);
            assert!((dense_of(&a2) - &e2).amax() < 1e-15);
            assert!(spectral_norm(&e1) <= 1.0 + 1e-10);
            assert!(spectral_norm(&e2) <= 1.0 + 1e-10);
        }
    }
}

#[test]
fn lifted_pair_rejects_levels_out_of_range() {
    let p = problem(diag(&[1.0]), vec![0.0]);
    assert!(build_lifted_pair(&p, -0.1, 2.0).is_err());
    assert!(build_lifted_pair(&p, 2.5, 2.0).is_err());
}

fn feasibility_bound(report: &FeasibilityReport) -> usize {
    (16.0 * report.kappa_hat / report.eps).log2().ceil() as usize + 2
}

#[test]
fn feasible_boundary_level() {
    let p = problem(diag(&[-1.0, -1.0]), vec![1.0, 0.0]);
    let solver = Solver::new(&p);
    let rep = solver.feasibility(0.5, 0.05, 0.1, &mut RngState::from_seed(1)).unwrap();
    let FeasibilityOutcome::FoundVector(x) = &rep.outcome else {
        panic!("expected a vector, got {:?}", rep.outcome);
    };
    assert!(p.objective(x) >= 0.5 - 1e-9);
    assert!(p.m_norm_sq(x) <= 1.0 + 1e-9);
    assert!(rep.oracle_calls <= feasibility_bound(&rep));
}

#[test]
fn level_above_optimum_is_infeasible() {
    let p = problem(diag(&[-1.0, -1.0]), vec![1.0, 0.0]);
    let rep = solve_feasibility(&p, 1.5, 0.05, 0.1, &mut RngState::from_seed(2)).unwrap();
    assert_eq!(rep.outcome, FeasibilityOutcome::InfeasibleAtLevel(1.5));
}

#[test]
fn hard_case_level_below_optimum() {
    // Optimum 1.01; at eps = 1e-3 the slack keeps level 1 reachable.
    let p = problem(diag(&[1.0, 0.0]), vec![0.0, 0.1]);
    let rep = solve_feasibility(&p, 1.0, 1e-3, 0.1, &mut RngState::from_seed(3)).unwrap();
    let FeasibilityOutcome::FoundVector(x) = &rep.outcome else {
        panic!("expected a vector, got {:?}", rep.outcome);
    };
    assert!(p.objective(x) >= 1.0 - 1e-9);
    assert!(p.m_norm_sq(x) <= 1.0 + 1e-9);
}

#[test]
fn hard_case_with_coarse_slack_is_sound_either_way() {
    // At eps = 0.01 the shrunk ball reaches at most about 0.99 < 1, so an
    // infeasible answer is correct; a vector, if returned, must still be valid.
    let p = problem(diag(&[1.0, 0.0]), vec![0.0, 0.1]);
    for seed in 0..5 {
        let rep = solve_feasibility(&p, 1.0, 0.01, 0.1, &mut RngState::from_seed(seed)).unwrap();
        if let FeasibilityOutcome::FoundVector(x) = &rep.outcome {
            assert!(p.objective(x) >= 1.0 - 1e-9);
            assert!(p.m_norm_sq(x) <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn feasibility_rejects_bad_arguments() {
    let p = problem(diag(&[1.0]), vec![0.0]);
    let mut rng = RngState::from_seed(0);
    assert!(solve_feasibility(&p, 0.5, 0.0, 0.1, &mut rng).is_err());
    assert!(solve_feasibility(&p, 0.5, 100.0, 0.1, &mut rng).is_err());
    assert!(solve_feasibility(&p, -1.0, 0.1, 0.1, &mut rng).is_err());
    assert!(solve_feasibility(&p, 0.5, 0.1, 1.5, &mut rng).is_err());
}

#[test]
fn zero_problem_short_circuits() {
    let p = problem(SparseSymMatrix::zeros(4), vec![0.0; 4]);
    let r = maximize(&p, 1e-3, 0.1, &mut RngState::from_seed(0)).unwrap();
    assert_eq!(r.value, 0.0);
    assert_eq!(r.x, vec![0.0; 4]);
    assert_eq!(r.telemetry.oracle_calls, 0);
    assert_eq!(r.telemetry.matvecs, 0);
}

#[test]
fn pure_eigenvalue_case() {
    let p = problem(diag(&[2.0, 1.0]), vec![0.0, 0.0]);
    let eps = 1e-3;
    let r = maximize(&p, eps, 0.1, &mut RngState::from_seed(4)).unwrap();
    assert!(r.value >= 2.0 - 4.0 * eps, "{}", r.value);
    assert!(r.x[0].abs() > 0.99);
    assert!(p.m_norm_sq(&r.x) <= 1.0 + 1e-9);
    assert_eq!(r.value, p.objective(&r.x));
    assert!(r.upper_bound >= 2.0);
}

#[test]
fn maximize_matches_dense_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let eps = 1e-3;
    let mut misses = 0;
    for seed in 0..50 {
        let n = 2 + (seed % 5) as usize * 7;
        let p = random_problem(&mut rng, n, seed % 3 == 0);
        let exact = solve_dense_exact(&DenseProblem::from_problem(&p).unwrap(), 1e-12)
            .unwrap()
            .value;
        let r = maximize(&p, eps, 0.1, &mut RngState::from_seed(seed)).unwrap();
        assert!(p.m_norm_sq(&r.x) <= 1.0 + 1e-9);
        assert!(r.value <= exact + 1e-9);
        misses += usize::from(r.value < exact - 4.0 * eps);
        let est = r.estimates.unwrap();
        for level in &r.levels {
            assert!(level.oracle_calls <= (16.0 * est.kappa_hat / level.eps).log2().ceil() as usize + 2);
        }
    }
    assert!(misses <= 5, "{misses} misses");
}

#[test]
fn hard_case_family_small() {
    for beta in [1e-1, 1e-3, 1e-6] {
        let n = 10;
        let mut d = vec![0.0; n];
        d[0] = 1.0;
        let mut b = vec![0.0; n];
        b[1] = beta;
        let p = problem(diag(&d), b);
        let eps = 1e-3;
        let r = maximize(&p, eps, 0.1, &mut RngState::from_seed(8)).unwrap();
        assert!(r.value >= 1.0 + beta * beta - 4.0 * eps, "beta {beta}: {}", r.value);
        assert!(p.m_norm_sq(&r.x) <= 1.0 + 1e-9);
    }
}

#[test]
fn maximize_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = random_problem(&mut rng, 7, true);
    let r1 = maximize(&p, 1e-2, 0.1, &mut RngState::from_seed(11)).unwrap();
    let r2 = maximize(&p, 1e-2, 0.1, &mut RngState::from_seed(11)).unwrap();
    assert_eq!(r1.x, r2.x);
    assert_eq!(r1.telemetry, r2.telemetry);
}

#[test]
fn problem_validation() {
    assert_eq!(
        TrustRegionProblem::new(diag(&[1.0, 2.0]), vec![0.0], None)
            .unwrap_err()
            .kind(),
        "dimension_mismatch"
    );
    assert_eq!(
        TrustRegionProblem::new(diag(&[1.0]), vec![f64::NAN], None)
            .unwrap_err()
            .kind(),
        "non_finite"
    );
    let p = TrustRegionProblem::new(diag(&[1.0, 2.0]), vec![0.0, 1.0], Some(SparseSymMatrix::identity(2))).unwrap();
    assert!(matches!(p.metric(), Metric::Identity(_)));
    assert_eq!(p.big_n(), 2);
}
