use horocm::assumptions::{check_assumption, make_admissible_f};
use horocm::horo_geometry::{hconvexity_margin, tensor_a, SupportFunction};
use horocm::solver::{
    constant_solution, continuation_solve, f_t, jacobian, linearization_coefficients,
    newton_solve, residual, HomotopyConfig, NewtonError, ProblemSpec, SolveError,
};
use horocm::symfunc::{sigma_k_matrix, sigma_k_matrix_eigen, SymMat};
use horocm::{ScalarField, SphereGrid};

fn p2(g: &SphereGrid, e: &[f64]) -> ScalarField {
    g.sample(|x| {
        let s: f64 = x.iter().zip(e).map(|(a, b)| a * b).sum();
        0.5 * (3.0 * s * s - 1.0)
    })
}

#[test]
fn exact_constant_start_needs_no_iterations() {
    let g = SphereGrid::build(2, 16).unwrap();
    let spec = ProblemSpec::new(&g, 1, 0.0, ScalarField::constant(g.len(), 2.0)).unwrap();
    let phi = SupportFunction::constant(&g, 3f64.sqrt()).unwrap();
    let out = newton_solve(&phi, &spec, 1.0, &HomotopyConfig::default()).unwrap();
    assert!(out.iterations <= 1);
}

#[test]
fn newton_converges_quadratically_near_a_constant() {
    let g = SphereGrid::build(2, 16).unwrap();
    let spec = ProblemSpec::new(&g, 1, 0.5, ScalarField::constant(g.len(), 1.2)).unwrap();
    let c = constant_solution(1.2, 0.5, 1, 2).unwrap();
    let y2 = p2(&g, &[0.0, 0.6, 0.8]);
    let start = SupportFunction::new(&g, y2.map(|v| c + 1e-3 * v), 0.0).unwrap();
    let out = newton_solve(&start, &spec, 1.0, &HomotopyConfig::default()).unwrap();
    let h = &out.residual_history;
    assert!(h.len() >= 3, "{h:?}");
    // r_{j+1} ≲ C r_j² while above roundoff
    for w in h.windows(2) {
        if w[1] > 1e-13 {
            assert!(w[1] <= 10.0 * w[0] * w[0] / h[0].min(1.0) + 1e-13, "{h:?}");
        }
    }
    assert!((out.phi.phi().map(|v| v - c)).sup_norm() < 1e-10);
}

#[test]
fn newton_failures_are_reported_distinctly() {
    let g = SphereGrid::build(2, 16).unwrap();
    let spec = ProblemSpec::new(&g, 1, 0.0, ScalarField::constant(g.len(), 2.0)).unwrap();
    let cfg = HomotopyConfig::default();
    let bent = SupportFunction::new(&g, g.sample(|x| 1.2 + 2.0 * x[2] * x[2]), 0.0).unwrap();
    assert!(matches!(newton_solve(&bent, &spec, 1.0, &cfg), Err(NewtonError::BarrierAtStart(_))));

    let far = SupportFunction::constant(&g, 40.0).unwrap();
    let one = HomotopyConfig {
        max_newton_iters: 1,
        ..HomotopyConfig::default()
    };
    match newton_solve(&far, &spec, 1.0, &one) {
        Err(NewtonError::MaxIterations { residual, .. }) | Err(NewtonError::LineSearch { residual, .. }) => {
            assert!(residual > 1e-3)
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn first_harmonics_are_eigenfunctions_at_constants() {
    let g = SphereGrid::build(2, 32).unwrap();
    for &(p, gamma) in &[(0.0, 2.0), (0.7, 1.1)] {
        let c = constant_solution(gamma, p, 1, 2).unwrap();
        let spec = ProblemSpec::new(&g, 1, p, ScalarField::constant(g.len(), gamma)).unwrap();
        let phi = SupportFunction::constant(&g, c).unwrap();
        let jac = jacobian(&phi, &spec, 1.0).unwrap();
        let (a, b) = linearization_coefficients(c, p, 1, 2);
        let y1 = g.sample(|x| 0.3 * x[0] - 0.5 * x[1] + 0.8 * x[2]);
        let got = jac.apply(&y1);
        let discrete = g.laplacian(&y1).zip_map(&y1, |l, v| a * (l + b * v));
        assert!(got.zip_map(&discrete, |u, v| u - v).sup_norm() < 1e-12);
        // Δ Y₁ = −n Y₁ up to the stencil error
        let want = y1.map(|v| a * (b - 2.0) * v);
        assert!(got.zip_map(&want, |u, v| u - v).sup_norm() < 1e-3, "p = {p}");
        if p == 0.0 {
            assert!(got.sup_norm() < 1e-3);
        }
    }
}

#[test]
fn admissible_family_end_to_end() {
    let g = SphereGrid::build(2, 24).unwrap();
    let h = p2(&g, &[0.0, 0.6, 0.8]).map(|y| 2.0 + 0.3 * y * y);
    let f = make_admissible_f(&h, 1, 2.0).unwrap();
    assert!(check_assumption(&g, &f, 0.0, 1).unwrap().pass);
    let spec = ProblemSpec::new(&g, 1, 0.0, f.clone()).unwrap();
    let rep = continuation_solve(&spec, &HomotopyConfig::default()).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.assumption_pass, Some(true));
    assert!(rep.certificate.pass);
    assert_eq!(*rep.t_schedule.last().unwrap(), 1.0);
    let phi = rep.phi.as_ref().unwrap();
    assert_eq!(g.antipodal_gap(phi.phi()), 0.0);
    assert!(hconvexity_margin(&g, phi) > 0.0);
    for s in rep.steps.iter().filter(|s| s.accepted) {
        assert!(s.margin > 0.0 && s.min_phi > 1.0);
    }

    // residual recomputed through an independent σ_k path
    let a = tensor_a(&g, phi).a;
    let mut worst = 0.0f64;
    for i in 0..g.len() {
        let m = SymMat::new(a.matrix(i)).unwrap();
        let minors = sigma_k_matrix(&m, 1);
        let eig = sigma_k_matrix_eigen(&m, 1);
        let rhs = phi.phi()[i].powf(-1.0) * f[i];
        worst = worst.max((minors - rhs).abs()).max((eig - minors).abs());
    }
    let r = residual(phi, &spec, 1.0).unwrap().sup_norm();
    assert!((worst - r).abs() < 1e-10 && worst < 1e-8, "{worst:e} {r:e}");
}

#[test]
fn s3_manufactured_solve_converges() {
    let g = SphereGrid::build(3, 8).unwrap();
    let (phis, f) = horocm::solver::manufactured_zonal(&g, 1.6, 0.05, &[0.1, 0.3, -0.2, 0.9], 2, 0.0).unwrap();
    let spec = ProblemSpec::new(&g, 2, 0.0, f).unwrap();
    let rep = continuation_solve(&spec, &HomotopyConfig::default()).unwrap();
    assert!(rep.converged);
    let err = rep.phi.unwrap().phi().zip_map(&phis, |a, b| a - b).sup_norm();
    assert!(err < 1e-2, "{err:e}");
}

#[test]
fn step_underflow_keeps_last_good_state() {
    let g = SphereGrid::build(2, 16).unwrap();
    let f = p2(&g, &[1.0, 0.0, 0.0]).map(|y| 1.0 + 0.4 * y);
    let spec = ProblemSpec::new(&g, 1, 0.0, f).unwrap();
    let cfg = HomotopyConfig {
        initial_step: 1.0,
        min_step: 0.5,
        max_newton_iters: 1,
        newton_tol: 1e-14,
        ..HomotopyConfig::default()
    };
    match continuation_solve(&spec, &cfg) {
        Err(err @ SolveError::StepUnderflow { .. }) => {
            let (t, phi) = err.last_good().unwrap();
            assert_eq!(t, 0.0);
            assert_eq!(phi.len(), g.len());
            if let SolveError::StepUnderflow { steps, .. } = &err {
                assert!(steps.iter().any(|s| !s.accepted && s.note.is_some()));
            }
        }
        other => panic!("expected step underflow, got {other:?}"),
    }
}

#[test]
fn homotopy_endpoints_are_exact() {
    let f = ScalarField::new(vec![0.5, 1.5, 1.5, 0.5]);
    for &(p, k, n) in &[(0.0, 1, 2), (1.0, 1, 2), (1.5, 2, 3), (5.0, 2, 3)] {
        assert_eq!(f_t(&f, 1.0, p, k, n).unwrap(), f);
        let f0 = f_t(&f, 0.0, p, k, n).unwrap();
        assert!(f0.iter().all(|&v| v == f0[0]));
    }
}

#[test]
fn config_json_defaults_and_validation() {
    let cfg: HomotopyConfig = serde_json::from_str(r#"{"initial_step": 0.1}"#).unwrap();
    assert_eq!(cfg.initial_step, 0.1);
    assert_eq!(cfg.max_newton_iters, HomotopyConfig::default().max_newton_iters);
    assert!(serde_json::from_str::<HomotopyConfig>(r#"{"bogus": 1}"#).is_err());
    let bad = HomotopyConfig {
        min_step: 2.0,
        ..HomotopyConfig::default()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn spec_rejects_unsupported_k() {
    let g = SphereGrid::build(2, 8).unwrap();
    let f = ScalarField::constant(g.len(), 1.0);
    assert!(ProblemSpec::new(&g, 2, 0.0, f.clone()).is_err());
    assert!(ProblemSpec::new(&g, 0, 0.0, f).is_err());
}
