//! Oracle checks for the Newton-GMRES machinery: finite-difference Jacobian
//! verification, dense-LU comparison for GMRES, symmetry of the Jacobian,
//! quadratic convergence, and initial-guess independence of the solution.

mod common;

use nhns_core::dense::DenseMatrix;
use nhns_core::grid::Field;
use nhns_core::hybrid::{initial_guess, InitStrategy};
use nhns_core::newton::{gmres_solve, jacobian_vector_product, newton_solve, NewtonConfig};
use nhns_core::schemes::midpoint_map;
use nhns_core::training::generate_initial_data;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn jvp_matches_central_differences() {
    let p = common::scheme_1d(64, 1.0, 0.01);
    let spec = common::data_spec_1d(64, 17);
    let mut worst: f64 = 0.0;
    for s in 0..5 {
        let u = generate_initial_data(&spec, s).unwrap();
        let y = generate_initial_data(&spec, s + 100).unwrap();
        let z = generate_initial_data(&spec, s + 200).unwrap();
        let jvp = jacobian_vector_product(&p, &u, &y, &z).unwrap();

        // G(y) = y - Psi(u, y); central difference along z.
        let delta = 1e-6;
        let g = |yv: &Field| -> Field {
            let psi = midpoint_map(&p, &u, yv).unwrap();
            yv.add_scaled(-1.0, &psi).unwrap()
        };
        let up = g(&y.add_scaled(delta, &z).unwrap());
        let dn = g(&y.add_scaled(-delta, &z).unwrap());
        let fd = up.add_scaled(-1.0, &dn).unwrap().scale(1.0 / (2.0 * delta));
        let rel = fd.l2_distance(&jvp).unwrap() / jvp.l2().max(1e-300);
        worst = worst.max(rel);
    }
    assert!(worst <= 1e-6, "worst relative JVP error {worst:.3e}");
}

#[test]
fn jacobian_is_symmetric_when_assembled() {
    let p = common::scheme_1d(24, 1.3, 0.05);
    let spec = common::data_spec_1d(24, 23);
    let u = generate_initial_data(&spec, 0).unwrap();
    let y = generate_initial_data(&spec, 1).unwrap();
    let n = 24;
    let mut a = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = jacobian_vector_product(&p, &u, &y, &Field::from_values(*p.grid(), e).unwrap())
            .unwrap();
        for i in 0..n {
            a.set(i, j, col.values()[i]);
        }
    }
    for i in 0..n {
        for j in 0..n {
            assert!((a.get(i, j) - a.get(j, i)).abs() < 1e-13);
        }
    }
}

#[test]
fn gmres_matches_dense_lu_on_random_spd() {
    // Random-plus-diagonal SPD 16 x 16 system solved both ways.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 16;
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = rng.random_range(-0.5..0.5);
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    for i in 0..n {
        m.set(i, i, m.get(i, i) + 8.0);
    }
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

    let direct = m.lu_solve(&b).unwrap();

    let grid = common::grid_of(nhns_core::grid::Dim::One, n);
    let bf = Field::from_values(grid, b).unwrap();
    let cfg = NewtonConfig {
        gmres_tol: 1e-12,
        ..Default::default()
    };
    let (x, _) = gmres_solve(
        |z| Field::from_values(grid, m.matvec(z.values())),
        &bf,
        &cfg,
    )
    .unwrap();
    let diff: f64 = x
        .values()
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    assert!(diff <= 1e-9, "difference to dense solve {diff:.3e}");
}

#[test]
fn gmres_on_newton_system_stays_within_dimension_bound() {
    let p = common::scheme_1d(32, 1.0, 0.01);
    let spec = common::data_spec_1d(32, 41);
    let u = generate_initial_data(&spec, 0).unwrap();
    let y = generate_initial_data(&spec, 1).unwrap();
    let rhs = {
        let psi = midpoint_map(&p, &u, &y).unwrap();
        y.add_scaled(-1.0, &psi).unwrap()
    };
    let cfg = NewtonConfig::default();
    let (x, inner) = gmres_solve(|z| jacobian_vector_product(&p, &u, &y, z), &rhs, &cfg).unwrap();
    assert!(inner <= 32, "inner iterations {inner} exceed the dimension");
    let ax = jacobian_vector_product(&p, &u, &y, &x).unwrap();
    let res = ax.add_scaled(-1.0, &rhs).unwrap().l2();
    assert!(res <= cfg.gmres_tol * rhs.l2() * 1.001);
}

#[test]
fn gmres_nonconvergence_carries_best_iterate() {
    let p = common::scheme_1d(64, 1.0, 0.01);
    let b = Field::from_fn_1d(*p.grid(), |x| x.sin()).unwrap();
    let cfg = NewtonConfig {
        gmres_max_iter: 2,
        gmres_restart: 2,
        gmres_tol: 1e-14,
        ..Default::default()
    };
    // A moderately conditioned non-trivial operator that needs > 2 iterations.
    let u = Field::from_fn_1d(*p.grid(), |x| 0.8 * (3.0 * x).sin()).unwrap();
    let y = Field::from_fn_1d(*p.grid(), |x| 0.5 * x.cos()).unwrap();
    let err = gmres_solve(|z| jacobian_vector_product(&p, &u, &y, z), &b, &cfg).unwrap_err();
    match err {
        nhns_core::Error::LinearSolve {
            achieved,
            iters,
            best,
            ..
        } => {
            assert!(achieved > 0.0);
            assert_eq!(iters, 2);
            assert_eq!(best.grid(), b.grid());
        }
        other => panic!("expected LinearSolve error, got {other}"),
    }
}

#[test]
fn quadratic_convergence_of_update_norms() {
    // Tail ratios l_{k+1} / l_k^2 stay bounded by a run constant.
    let p = common::scheme_1d(512, 1.0, 0.01);
    let spec = common::data_spec_1d(512, 53);
    for s in 0..3 {
        let u = generate_initial_data(&spec, s).unwrap();
        let (_, rep) = newton_solve(&p, &u, &u, &NewtonConfig::default()).unwrap();
        assert!(rep.converged);
        let probe = nhns_core::analysis::quadratic_constant_probe(&rep).unwrap();
        assert!(probe.is_finite() && probe > 0.0);
        // Sanity bound: at these parameters the constant is far below 1e3.
        assert!(probe < 1e3, "probe {probe:.3e}");
    }
}

#[test]
fn probe_constant_grows_with_tau() {
    let spec = common::data_spec_1d(256, 61);
    let u = generate_initial_data(&spec, 0).unwrap();
    let mut last = 0.0;
    for tau in [0.5, 1.0, 2.0] {
        let p = common::scheme_1d(256, tau, 0.01);
        let (_, rep) = newton_solve(&p, &u, &u, &NewtonConfig::default()).unwrap();
        let probe = nhns_core::analysis::quadratic_constant_probe(&rep).unwrap();
        assert!(probe > last, "probe not increasing at tau = {tau}");
        last = probe;
    }
}

#[test]
fn solution_is_initial_guess_independent() {
    let p = common::scheme_1d(128, 1.0, 0.01);
    let spec = common::data_spec_1d(128, 71);
    let u = generate_initial_data(&spec, 0).unwrap();
    let cfg = NewtonConfig::default();

    let (direct, _) = newton_solve(&p, &u, &u, &cfg).unwrap();

    let etd_guess = initial_guess(
        &InitStrategy::EtdPredictor {
            tau_etd: 1.0,
            krylov_dim: 10,
        },
        &p,
        &u,
    )
    .unwrap();
    let (via_etd, _) = newton_solve(&p, &u, &etd_guess, &cfg).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let jitter: Vec<f64> = (0..128).map(|_| rng.random_range(-0.05..0.05)).collect();
    let perturbed = u
        .add_scaled(1.0, &Field::from_values(*p.grid(), jitter).unwrap())
        .unwrap();
    let (via_perturbed, _) = newton_solve(&p, &u, &perturbed, &cfg).unwrap();

    let tol = 100.0 * cfg.eps_tol;
    assert!(direct.l2_distance(&via_etd).unwrap() <= tol);
    assert!(direct.l2_distance(&via_perturbed).unwrap() <= tol);
}
