//! Executable forms of the solver theory: how the Newton iteration count
//! responds to geometrically improved initial guesses, an empirical probe of
//! the quadratic-convergence constant, and the covering-number bound on the
//! training-set size needed for a target accuracy.

use std::io::Write;

use crate::grid::Field;
use crate::newton::{newton_solve, NewtonConfig, NewtonReport};
use crate::schemes::SchemeParams;
use crate::{Error, Result};

/// Results of the iteration-count-vs-initialisation experiment: the guess
/// error is shrunk by 2^-n along the direct-guess direction and the Newton
/// iteration count M(n) is recorded, then fitted to `C - log2(n)`.
#[derive(Debug, Clone)]
pub struct AsymptoteExperiment {
    /// Base error of the direct guess in discrete L2.
    pub base_error: f64,
    /// `M(n)` for `n = 0..=n_max`; `None` where Newton failed.
    pub counts: Vec<Option<usize>>,
    /// Least-squares constant of the `M(n) ~ C - log2(n)` fit over `n >= 4`.
    pub c_tilde: f64,
    /// Fit residuals `M(n) - (C - log2 n)` over the fitted range.
    pub residuals: Vec<(usize, f64)>,
}

impl AsymptoteExperiment {
    /// Fitted value `C - log2(n)`; only meaningful for `n >= 1`.
    pub fn fitted(&self, n: usize) -> f64 {
        self.c_tilde - (n as f64).log2()
    }

    /// CSV columns `(n, M, fitted_value, residual)`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "n,M,fitted_value,residual")?;
        for (n, m) in self.counts.iter().enumerate() {
            let m_str = m.map_or(String::from(""), |v| v.to_string());
            if n >= 1 {
                let fit = self.fitted(n);
                let resid = m.map_or(String::from(""), |v| format!("{:.6}", v as f64 - fit));
                writeln!(w, "{n},{m_str},{fit:.6},{resid}")?;
            } else {
                writeln!(w, "{n},{m_str},,")?;
            }
        }
        Ok(())
    }
}

/// First n of the `M(n) ~ C - log2 n` fit window; below it the O(1/n) term
/// still dominates.
pub const FIT_RANGE_START: usize = 4;

/// Shrink the initial error of one midpoint solve by factors 2^-n and record
/// the Newton iteration counts.
///
/// The exact step solution is first computed to tolerance 1e-12; guesses are
/// then `xi + 2^-n (u_prev - xi)`, so `n = 0` is exactly the direct guess.
pub fn iteration_asymptote_experiment(
    params: &SchemeParams,
    cfg: &NewtonConfig,
    u_prev: &Field,
    n_max: usize,
) -> Result<AsymptoteExperiment> {
    let tight = cfg.with_eps_tol(1e-12);
    let (xi, _) = newton_solve(params, u_prev, u_prev, &tight)?;
    let direction = u_prev.add_scaled(-1.0, &xi)?;
    let base_error = direction.l2();
    if base_error == 0.0 {
        return Err(Error::Domain(
            "direct guess already solves the step; nothing to shrink".into(),
        ));
    }

    let mut counts = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let y0 = xi.add_scaled(0.5f64.powi(n as i32), &direction)?;
        match newton_solve(params, u_prev, &y0, cfg) {
            Ok((_, report)) => counts.push(Some(report.iterations())),
            Err(Error::NewtonNonConvergence { .. }) | Err(Error::NewtonDiverged { .. }) => {
                counts.push(None)
            }
            Err(e) => return Err(e),
        }
    }

    // One-parameter least squares: C = mean(M(n) + log2 n) over the window.
    let mut acc = 0.0;
    let mut cnt = 0usize;
    for (n, m) in counts.iter().enumerate().skip(FIT_RANGE_START) {
        if let Some(v) = m {
            acc += *v as f64 + (n as f64).log2();
            cnt += 1;
        }
    }
    if cnt == 0 {
        return Err(Error::Domain("no converged runs in the fit range".into()));
    }
    let c_tilde = acc / cnt as f64;
    let residuals = counts
        .iter()
        .enumerate()
        .skip(FIT_RANGE_START)
        .filter_map(|(n, m)| m.map(|v| (n, v as f64 - (c_tilde - (n as f64).log2()))))
        .collect();

    Ok(AsymptoteExperiment {
        base_error,
        counts,
        c_tilde,
        residuals,
    })
}

/// Empirical stand-in for the quadratic-convergence constant: the largest
/// `l_{k+1} / l_k^2` over the decreasing tail of a converged update trace.
pub fn quadratic_constant_probe(trace: &NewtonReport) -> Result<f64> {
    let l = &trace.update_norms;
    if l.len() < 3 {
        return Err(Error::Invalid(format!(
            "probe needs at least 3 iterations, got {}",
            l.len()
        )));
    }
    // Start of the strictly decreasing tail.
    let mut start = l.len() - 1;
    while start > 0 && l[start - 1] > l[start] {
        start -= 1;
    }
    if l.len() - start < 2 {
        return Err(Error::Invalid("update norms never decrease".into()));
    }
    let mut worst = 0.0f64;
    for k in start..l.len() - 1 {
        if l[k] > 0.0 {
            worst = worst.max(l[k + 1] / (l[k] * l[k]));
        }
    }
    Ok(worst)
}

/// Inputs of the covering-number bound: Sobolev orders with
/// `alpha > beta + 2 > d/2` and an accuracy `epsilon` in (0, 4).
#[derive(Debug, Clone, Copy)]
pub struct CoveringQuery {
    pub d: u32,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
}

impl CoveringQuery {
    fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if !(self.alpha > self.beta + 2.0) {
            return Err(Error::Domain(format!(
                "need alpha > beta + 2, got alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        if !(self.beta + 2.0 > self.d as f64 / 2.0) {
            return Err(Error::Domain(format!(
                "need beta + 2 > d/2, got beta = {}, d = {}",
                self.beta, self.d
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 4.0) {
            return Err(Error::Domain(format!(
                "epsilon must lie in (0, 4), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Covering number: exact when the value fits an integer, otherwise its
/// base-10 logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoveringNumber {
    Exact(u128),
    TooLarge { log10: f64 },
}

/// Size of an epsilon-net covering the admissible-input ball:
/// `ceil((4/eps)^(2 d (eps/2)^(1/(beta+2-alpha)) + d))` evaluated with
/// log-domain overflow handling.
pub fn covering_number(q: &CoveringQuery) -> Result<CoveringNumber> {
    q.validate()?;
    let d = q.d as f64;
    let exponent = 2.0 * d * (q.epsilon / 2.0).powf(1.0 / (q.beta + 2.0 - q.alpha)) + d;
    let base = 4.0 / q.epsilon;
    let log10 = exponent * base.log10();
    if log10 > 37.0 {
        // Past u128 range; report the magnitude instead.
        return Ok(CoveringNumber::TooLarge { log10 });
    }
    let value = base.powf(exponent);
    // Round-off guard: snap to the nearest integer when essentially on it,
    // so ceil does not jump a whole unit on 8.000000000000002.
    let nearest = value.round();
    let snapped = if (value - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        value.ceil()
    };
    Ok(CoveringNumber::Exact(snapped as u128))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, LaplacianOp};

    fn params_1d(n: usize, tau: f64, eps: f64) -> SchemeParams {
        let grid = GridSpec::new_1d(n).unwrap();
        SchemeParams::new(tau, eps, LaplacianOp::new(grid)).unwrap()
    }

    #[test]
    fn covering_hand_evaluated_case() {
        let q = CoveringQuery {
            d: 1,
            alpha: 4.0,
            beta: 0.0,
            epsilon: 2.0,
        };
        assert_eq!(covering_number(&q).unwrap(), CoveringNumber::Exact(8));
    }

    #[test]
    fn covering_near_epsilon_four() {
        let q = CoveringQuery {
            d: 1,
            alpha: 4.0,
            beta: 0.0,
            epsilon: 4.0 - 1e-9,
        };
        match covering_number(&q).unwrap() {
            CoveringNumber::Exact(n) => assert!(n <= 2, "N = {n}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn covering_monotone_in_epsilon() {
        let mut last = u128::MAX;
        for i in 1..40 {
            let eps = 0.5 + i as f64 * 0.08;
            let q = CoveringQuery {
                d: 1,
                alpha: 5.0,
                beta: 0.5,
                epsilon: eps,
            };
            if let CoveringNumber::Exact(n) = covering_number(&q).unwrap() {
                assert!(n <= last, "not monotone at eps = {eps}");
                last = n;
            }
        }
    }

    #[test]
    fn covering_domain_errors() {
        let bad_order = CoveringQuery {
            d: 1,
            alpha: 2.0,
            beta: 0.5,
            epsilon: 1.0,
        };
        assert!(covering_number(&bad_order).is_err());
        let bad_lower = CoveringQuery {
            d: 3,
            alpha: 9.0,
            beta: -1.0,
            epsilon: 1.0,
        };
        assert!(covering_number(&bad_lower).is_err());
        let bad_eps = CoveringQuery {
            d: 1,
            alpha: 4.0,
            beta: 0.0,
            epsilon: 5.0,
        };
        assert!(covering_number(&bad_eps).is_err());
    }

    #[test]
    fn covering_overflow_marker() {
        let q = CoveringQuery {
            d: 2,
            alpha: 4.0,
            beta: 0.0,
            epsilon: 0.01,
        };
        match covering_number(&q).unwrap() {
            CoveringNumber::TooLarge { log10 } => assert!(log10 > 37.0),
            other => panic!("expected overflow marker, got {other:?}"),
        }
    }

    #[test]
    fn probe_requires_enough_iterations() {
        let report = NewtonReport {
            update_norms: vec![1.0, 0.5],
            gmres_iters: vec![1, 1],
            converged: true,
            wall_time: 0.0,
        };
        assert!(quadratic_constant_probe(&report).is_err());
    }

    #[test]
    fn probe_on_synthetic_quadratic_trace() {
        // l_{k+1} = 2 l_k^2 exactly: the probe returns 2.
        let mut l = vec![0.1f64];
        for _ in 0..4 {
            let last = *l.last().unwrap();
            l.push(2.0 * last * last);
        }
        let report = NewtonReport {
            gmres_iters: vec![1; l.len()],
            update_norms: l,
            converged: true,
            wall_time: 0.0,
        };
        let c = quadratic_constant_probe(&report).unwrap();
        assert!((c - 2.0).abs() < 1e-12);
    }

    #[test]
    fn affine_problem_second_update_is_roundoff() {
        let p = params_1d(32, 1e-12, 0.01);
        let u = Field::from_fn_1d(*p.grid(), |x| x.cos() * 0.7).unwrap();
        let y0 = Field::zeros(*p.grid());
        let (_, report) = newton_solve(&p, &u, &y0, &NewtonConfig::default()).unwrap();
        if report.iterations() >= 2 {
            assert!(report.update_norms[1] <= 1e-12);
        }
    }

    #[test]
    fn asymptote_on_small_problem() {
        let p = params_1d(64, 1.0, 0.01);
        let u = Field::from_fn_1d(*p.grid(), |x| 0.9 * (2.0 * x).sin() + 0.05 * x.cos()).unwrap();
        let exp = iteration_asymptote_experiment(&p, &NewtonConfig::default(), &u, 8).unwrap();
        assert_eq!(exp.counts.len(), 9);
        // Counts non-increasing within +-1 jitter.
        for w in exp.counts.windows(2) {
            if let (Some(a), Some(b)) = (w[0], w[1]) {
                assert!(b <= a + 1, "iteration counts increased: {a} -> {b}");
            }
        }
        assert!(exp.c_tilde.is_finite());
        let mut csv = Vec::new();
        exp.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv)
            .unwrap()
            .starts_with("n,M,fitted_value,residual"));
    }
}
