//! Stability of the iteration-count fit and covering-number cross-checks.

mod common;

use nhns_core::analysis::{
    covering_number, iteration_asymptote_experiment, CoveringNumber, CoveringQuery, FIT_RANGE_START,
};
use nhns_core::newton::NewtonConfig;
use nhns_core::training::generate_initial_data;

#[test]
fn fit_constant_is_stable_across_half_ranges() {
    let spec = common::data_spec_1d(512, 7);
    let u0 = generate_initial_data(&spec, 0).unwrap();
    let p = common::scheme_1d(512, 1.0, 0.01);
    let exp = iteration_asymptote_experiment(&p, &NewtonConfig::default(), &u0, 17).unwrap();

    // Refit on disjoint halves of the fitted window.
    let fit_over = |lo: usize, hi: usize| -> f64 {
        let mut acc = 0.0;
        let mut cnt = 0;
        for (n, m) in exp.counts.iter().enumerate() {
            if n >= lo && n <= hi {
                if let Some(v) = m {
                    acc += *v as f64 + (n as f64).log2();
                    cnt += 1;
                }
            }
        }
        acc / cnt as f64
    };
    let mid = (FIT_RANGE_START + 17) / 2;
    let first = fit_over(FIT_RANGE_START, mid);
    let second = fit_over(mid + 1, 17);
    assert!(
        (first - second).abs() < 0.5,
        "half-range fits differ: {first:.3} vs {second:.3}"
    );

    // n = 0 is exactly the direct guess, so M(0) reproduces the tau = 1
    // single-step iteration count.
    let (_, direct) =
        nhns_core::newton::newton_solve(&p, &u0, &u0, &NewtonConfig::default()).unwrap();
    assert_eq!(exp.counts[0], Some(direct.iterations()));
}

#[test]
fn covering_matches_log_domain_evaluation() {
    // Cross-route: recompute through logarithms and compare.
    for (d, alpha, beta, eps) in [
        (1u32, 4.0, 0.0, 2.0),
        (1, 3.0, 0.0, 1.0),
        (2, 4.0, 0.0, 1.5),
        (1, 5.0, 0.5, 0.75),
    ] {
        let q = CoveringQuery {
            d,
            alpha,
            beta,
            epsilon: eps,
        };
        let expo = 2.0 * d as f64 * (eps / 2.0f64).powf(1.0 / (beta + 2.0 - alpha)) + d as f64;
        let log_value = expo * (4.0 / eps).ln();
        match covering_number(&q).unwrap() {
            CoveringNumber::Exact(n) => {
                let direct = log_value.exp();
                assert!(
                    (n as f64) >= direct - 1.0 && (n as f64) <= direct + 1.0,
                    "N = {n} vs direct {direct}"
                );
            }
            CoveringNumber::TooLarge { log10 } => {
                assert!((log10 - log_value / std::f64::consts::LN_10).abs() < 1e-9);
            }
        }
    }
}
