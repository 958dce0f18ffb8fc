use std::f64::consts::PI;
use std::sync::Arc;

use heatbayes::fem::{EigenBasis, HeatSolver, ScalarField};
use heatbayes::inference::{
    build_forward_matrix, compute_posterior, credible_interval, functional_value, l2_error, posterior_mean_field,
    sample_posterior, Observation, PosteriorRecord, PropagatedBasis,
};
use heatbayes::mesh::{design_grid, generate_mesh, DomainSpec, Mesh};
use heatbayes::prior::PriorCovariance;
use nalgebra::DMatrix;
use proptest::prelude::*;

mod common;
use common::{conjugacy_case, dummy_design, operator, prior_from_variances};

#[test]
fn conjugate_posterior_matches_grid_quadrature() {
    for case in 0..20 {
        let worst = conjugacy_case(case, 20);
        assert!(worst < 1e-2, "case {case}: deviation {worst}");
    }
}

#[test]
fn uninformative_data_returns_the_prior() {
    let v = [2.0, 1.0, 0.5];
    let prior = prior_from_variances(&v);
    let y = vec![0.3, -1.0];
    for (g, sigma) in [(DMatrix::zeros(2, 3), 0.1), (DMatrix::from_element(2, 3, 1.0), 1e8)] {
        let post = compute_posterior(
            &operator(g),
            &Observation::new(y.clone(), sigma, dummy_design(2)).unwrap(),
            &prior,
        )
        .unwrap();
        for a in 0..3 {
            assert!(post.mean()[a].abs() < 1e-12);
            for b in 0..3 {
                let want = if a == b { v[a] } else { 0.0 };
                assert!((post.covariance()[(a, b)] - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn factor_reproduces_covariance_and_record_exports_it() {
    let g = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.2, 1.0, 0.3, 0.3]);
    let post = compute_posterior(
        &operator(g),
        &Observation::new(vec![1.0, 0.0, 2.0], 0.5, dummy_design(3)).unwrap(),
        &prior_from_variances(&[1.0, 0.5]),
    )
    .unwrap();
    let l = post.cholesky_factor();
    assert!((l * l.transpose() - post.covariance()).abs().max() < 1e-14);
    assert_eq!(l[(0, 1)], 0.0);

    let rec = PosteriorRecord::new(&post, 0.5, 0.05, 0.01, 3);
    let json = serde_json::to_value(&rec).unwrap();
    assert_eq!(json["J"], 2);
    assert_eq!(json["T"], 0.01);
    assert_eq!(json["covariance"][0][1].as_f64().unwrap(), post.covariance()[(0, 1)]);
    let back: PosteriorRecord = serde_json::from_value(json).unwrap();
    assert_eq!(back, rec);
}

#[test]
fn draws_follow_the_posterior_law() {
    let g = DMatrix::from_row_slice(4, 3, &[1.0, 0.2, 0.0, 0.1, 1.0, 0.4, -0.5, 0.3, 1.0, 0.2, 0.2, 0.2]);
    let post = compute_posterior(
        &operator(g),
        &Observation::new(vec![0.5, -0.2, 1.0, 0.3], 0.4, dummy_design(4)).unwrap(),
        &prior_from_variances(&[1.0, 0.6, 0.3]),
    )
    .unwrap();
    let m = 100_000;
    let draws = sample_posterior(&post, m, 7);
    assert_eq!(draws, sample_posterior(&post, m, 7));
    let mut mean = [0.0; 3];
    for d in &draws {
        for a in 0..3 {
            mean[a] += d[a] / m as f64;
        }
    }
    for a in 0..3 {
        let se = (post.covariance()[(a, a)] / m as f64).sqrt();
        assert!((mean[a] - post.mean()[a]).abs() < 3.0 * se, "component {a}");
    }
    let mut cov = DMatrix::zeros(3, 3);
    for d in &draws {
        for a in 0..3 {
            for b in 0..3 {
                cov[(a, b)] += (d[a] - mean[a]) * (d[b] - mean[b]) / (m - 1) as f64;
            }
        }
    }
    let rel = (&cov - post.covariance()).norm() / post.covariance().norm();
    assert!(rel < 0.05, "relative Frobenius error {rel}");
}

#[test]
fn vanishing_covariance_draw_is_the_mean() {
    let g = DMatrix::identity(3, 3);
    let post = compute_posterior(
        &operator(g),
        &Observation::new(vec![0.3, -0.7, 1.1], 1e-9, dummy_design(3)).unwrap(),
        &prior_from_variances(&[1.0, 1.0, 1.0]),
    )
    .unwrap();
    let draw = &sample_posterior(&post, 1, 3)[0];
    for (d, m) in draw.iter().zip(post.mean()) {
        assert!((d - m).abs() < 1e-7);
    }
}

fn ellipse(h: f64) -> Arc<Mesh> {
    Arc::new(generate_mesh(&DomainSpec::study_ellipse(), h).unwrap())
}

struct Setup {
    basis: EigenBasis,
    solver: HeatSolver,
}

fn setup(h: f64, j: usize) -> Setup {
    let mesh = ellipse(h);
    let basis = EigenBasis::dirichlet_laplacian(&mesh, j).unwrap();
    let c = ScalarField::from_fn(&mesh, |p| 1.5 + 0.5 * p[0]);
    let solver = HeatSolver::new(&mesh, &c, 0.01, 100).unwrap();
    Setup { basis, solver }
}

#[test]
fn noise_free_data_recover_an_in_span_truth() {
    let s = setup(0.06, 10);
    let design = design_grid(&DomainSpec::study_ellipse(), 60).unwrap();
    let op = PropagatedBasis::new(&s.basis, &s.solver)
        .unwrap()
        .forward_operator(&design, 10)
        .unwrap();
    let truth: Vec<f64> = (0..10)
        .map(|k| (1.0 + k as f64).recip() * if k % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let clean = op.apply(&truth).unwrap();
    let obs = Observation::with_noise(&clean, 1e-8, design.clone(), 5).unwrap();
    let prior = PriorCovariance::from_eigenvalues(0.5, s.basis.eigenvalues()).unwrap();
    let post = compute_posterior(&op, &obs, &prior).unwrap();
    for (got, want) in post.mean().iter().zip(&truth) {
        assert!((got - want).abs() < 1e-4, "{got} vs {want}");
    }
    // data produced by the PDE solve rather than the expansion agree as well
    let field = s.basis.reconstruct(&truth).unwrap();
    let pde = s.solver.solve(&field).unwrap().evaluate(design.points()).unwrap();
    let worst = pde.iter().zip(&clean).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-10, "solver and forward matrix differ by {worst}");
}

#[test]
fn forward_matrix_on_square_is_diagonal_decay() {
    let mesh = Arc::new(generate_mesh(&DomainSpec::UnitSquare, 0.04).unwrap());
    let basis = EigenBasis::dirichlet_laplacian(&mesh, 4).unwrap();
    let one = ScalarField::constant(&mesh, 1.0);
    let design = design_grid(&DomainSpec::UnitSquare, 50).unwrap();
    let t = 0.01;
    let op = build_forward_matrix(&basis, &one, t, &design, 400).unwrap();
    for j in 0..4 {
        let decay = (-basis.eigenvalues()[j] * t).exp();
        let at_design = basis.eigenfunction(j).evaluate(design.points()).unwrap();
        for (i, e) in at_design.iter().enumerate() {
            assert!((op.matrix()[(i, j)] - decay * e).abs() < 1e-4, "row {i} column {j}");
        }
    }
    // first column against the continuum mode 2 sin(πx) sin(πy)
    let lambda = 2.0 * PI * PI;
    for (i, p) in design.points().iter().enumerate() {
        let exact = (-lambda * t).exp() * 2.0 * (PI * p[0]).sin() * (PI * p[1]).sin();
        assert!((op.matrix()[(i, 0)] - exact).abs() < 2e-2);
    }
    // a vanishing horizon is point evaluation
    let op0 = build_forward_matrix(&basis, &one, 1e-8, &design, 100).unwrap();
    for j in 0..4 {
        let at_design = basis.eigenfunction(j).evaluate(design.points()).unwrap();
        for (i, e) in at_design.iter().enumerate() {
            assert!((op0.matrix()[(i, j)] - e).abs() < 1e-5);
        }
    }
}

#[test]
fn credible_interval_radius_and_degenerate_functional() {
    let s = setup(0.06, 12);
    let design = design_grid(&DomainSpec::study_ellipse(), 80).unwrap();
    let op = PropagatedBasis::new(&s.basis, &s.solver)
        .unwrap()
        .forward_operator(&design, 12)
        .unwrap();
    let truth = ScalarField::from_fn(s.basis.mesh(), |p| 1.0 - p[0] * p[0] - p[1] * p[1]);
    let clean = s.solver.solve(&truth).unwrap().evaluate(design.points()).unwrap();
    let obs = Observation::with_noise(&clean, 0.05, design, 11).unwrap();
    let prior = PriorCovariance::from_eigenvalues(0.5, s.basis.eigenvalues()).unwrap();
    let post = compute_posterior(&op, &obs, &prior).unwrap();

    let psi = ScalarField::from_fn(s.basis.mesh(), |p| (-4.0 * (p[0] * p[0] + p[1] * p[1])).exp());
    let ci = credible_interval(&post, &psi, &s.basis, 0.1, 10_000, 1).unwrap();
    assert!((ci.radius / ci.exact_radius - 1.0).abs() < 0.05);
    let plug_in = functional_value(post.mean(), &psi, &s.basis).unwrap();
    assert_eq!(ci.center, plug_in);
    assert!(ci.contains(ci.center + 0.99 * ci.radius) && !ci.contains(ci.center - 1.01 * ci.radius));

    // one-sigma interval on the first coefficient, z_0.84 ≈ 0.994
    let e1 = s.basis.eigenfunction(0).clone();
    let ci1 = credible_interval(&post, &e1, &s.basis, 0.32, 10_000, 2).unwrap();
    let sd = post.covariance()[(0, 0)].sqrt();
    assert!((ci1.radius / (0.994 * sd) - 1.0).abs() < 0.05);
    assert!((ci1.exact_radius / (0.994 * sd) - 1.0).abs() < 1e-3);

    let zero = ScalarField::zeros(s.basis.mesh());
    let ci0 = credible_interval(&post, &zero, &s.basis, 0.1, 200, 3).unwrap();
    assert_eq!((ci0.center, ci0.radius, ci0.exact_radius), (0.0, 0.0, 0.0));

    assert!(credible_interval(&post, &psi, &s.basis, 0.1, 99, 1).is_err());
    assert!(credible_interval(&post, &psi, &s.basis, 1.0, 500, 1).is_err());

    let err = l2_error(&posterior_mean_field(&post, &s.basis).unwrap(), &truth).unwrap();
    assert!(err.relative < 0.5);
    let doubled = l2_error(
        &posterior_mean_field(&post, &s.basis).unwrap().scaled(2.0),
        &truth.scaled(2.0),
    )
    .unwrap();
    assert!((doubled.absolute - 2.0 * err.absolute).abs() < 1e-12);
    assert!((doubled.relative - err.relative).abs() < 1e-12);
    assert_eq!(l2_error(&truth, &truth).unwrap().absolute, 0.0);
}

#[test]
fn functional_value_is_bilinear_and_reads_coefficients() {
    let s = setup(0.08, 6);
    let e2 = s.basis.eigenfunction(1).clone();
    let c = [0.3, -1.2, 0.5, 0.0, 2.0, 1.0];
    assert!((functional_value(&c, &e2, &s.basis).unwrap() + 1.2).abs() < 1e-10);
    let psi = ScalarField::from_fn(s.basis.mesh(), |p| p[0] + p[1] * p[1]);
    let d = [1.0, 0.0, -0.5, 0.25, 0.0, 0.1];
    let sum: Vec<f64> = c.iter().zip(&d).map(|(a, b)| 2.0 * a + b).collect();
    let lhs = functional_value(&sum, &psi, &s.basis).unwrap();
    let rhs = 2.0 * functional_value(&c, &psi, &s.basis).unwrap() + functional_value(&d, &psi, &s.basis).unwrap();
    assert!((lhs - rhs).abs() < 1e-12);
    assert!(functional_value(&[0.0; 7], &psi, &s.basis).is_err());
}

#[test]
fn dimension_errors() {
    let op = operator(DMatrix::identity(2, 2));
    let prior = prior_from_variances(&[1.0, 1.0]);
    let short = Observation::new(vec![1.0], 1.0, dummy_design(1)).unwrap();
    assert!(compute_posterior(&op, &short, &prior).is_err());
    let obs = Observation::new(vec![1.0, 2.0], 1.0, dummy_design(2)).unwrap();
    assert!(compute_posterior(&op, &obs, &prior_from_variances(&[1.0, 1.0, 1.0])).is_err());
    assert!(Observation::new(vec![1.0, 2.0], 0.0, dummy_design(2)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn more_rows_never_widen_the_posterior(
        entries in proptest::collection::vec(-2.0f64..2.0, 24),
        psi in proptest::collection::vec(-1.0f64..1.0, 3),
        extra in 1usize..4,
        sigma in 0.05f64..2.0,
    ) {
        let n = 8 - extra;
        let full = DMatrix::from_row_slice(8, 3, &entries);
        let prior = prior_from_variances(&[1.5, 1.0, 0.25]);
        let var = |rows: usize| {
            let g = full.rows(0, rows).into_owned();
            let obs = Observation::new(vec![0.0; rows], sigma, dummy_design(rows)).unwrap();
            compute_posterior(&operator(g), &obs, &prior).unwrap().quadratic_form(&psi)
        };
        let (small, large) = (var(n), var(8));
        prop_assert!(large <= small * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn posterior_mean_is_linear_in_data(
        y1 in proptest::collection::vec(-3.0f64..3.0, 4),
        y2 in proptest::collection::vec(-3.0f64..3.0, 4),
        a in -2.0f64..2.0,
    ) {
        let g = DMatrix::from_row_slice(4, 2, &[1.0, 0.3, 0.2, -1.0, 0.5, 0.5, 0.0, 1.0]);
        let prior = prior_from_variances(&[1.0, 0.4]);
        let mean = |y: Vec<f64>| {
            let obs = Observation::new(y, 0.7, dummy_design(4)).unwrap();
            compute_posterior(&operator(g.clone()), &obs, &prior).unwrap().mean().to_vec()
        };
        let combo: Vec<f64> = y1.iter().zip(&y2).map(|(p, q)| a * p + q).collect();
        let (m1, m2, mc) = (mean(y1), mean(y2), mean(combo));
        for k in 0..2 {
            prop_assert!((mc[k] - (a * m1[k] + m2[k])).abs() < 1e-10);
        }
    }
}
