//! Matrix-free Newton iteration for the implicit midpoint step.
//!
//! Each step solves `G(y) = y - Psi_tau(u_prev, y) = 0`. The Newton linear
//! systems `D_y G(y) dy = -G(y)` are solved by restarted GMRES applied to the
//! analytic Jacobian-vector product, so no matrix is ever formed.

use std::io::Write;
use std::time::Instant;

use crate::grid::Field;
use crate::schemes::{midpoint_map, SchemeParams};
use crate::{Error, Result};

/// Tolerances and iteration caps for one nonlinear solve.
#[derive(Debug, Clone)]
pub struct NewtonConfig {
    /// Stop once the discrete-L2 norm of the Newton update falls below this.
    pub eps_tol: f64,
    /// Outer iteration cap.
    pub max_outer: usize,
    /// Relative residual tolerance of the inner GMRES solves.
    pub gmres_tol: f64,
    /// GMRES restart length.
    pub gmres_restart: usize,
    /// Total inner iteration cap per linear solve.
    pub gmres_max_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            eps_tol: 1e-8,
            max_outer: 1000,
            gmres_tol: 1e-10,
            gmres_restart: 50,
            gmres_max_iter: 2000,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_tol > 0.0) || !(self.gmres_tol > 0.0) {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        if self.max_outer == 0 || self.gmres_restart == 0 || self.gmres_max_iter == 0 {
            return Err(Error::Invalid("iteration caps must be at least 1".into()));
        }
        Ok(())
    }

    /// Variant with a tighter update tolerance, used for reference solves.
    pub fn with_eps_tol(&self, eps_tol: f64) -> Self {
        NewtonConfig {
            eps_tol,
            gmres_tol: self.gmres_tol.min(eps_tol * 0.1),
            ..self.clone()
        }
    }
}

/// Per-solve iteration trace.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    /// Discrete-L2 norm of each Newton update.
    pub update_norms: Vec<f64>,
    /// Inner GMRES iterations spent on each outer iteration.
    pub gmres_iters: Vec<usize>,
    pub converged: bool,
    /// Wall-clock seconds spent in the solve.
    pub wall_time: f64,
}

impl NewtonReport {
    pub fn iterations(&self) -> usize {
        self.update_norms.len()
    }

    /// CSV rows `(k, l_update, gmres_iters, cumulative_time)`; the time
    /// column apportions the wall time evenly since per-iteration stamps are
    /// not kept.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "k,l_update,gmres_iters,cumulative_time")?;
        let n = self.update_norms.len().max(1);
        for (k, (lu, gi)) in self.update_norms.iter().zip(&self.gmres_iters).enumerate() {
            let t = self.wall_time * (k + 1) as f64 / n as f64;
            writeln!(w, "{},{:.16e},{},{:.6e}", k + 1, lu, gi, t)?;
        }
        Ok(())
    }
}

/// Analytic Jacobian-vector product of `G(y) = y - Psi_tau(u_prev, y)`:
/// `D_y G(y) z = z - (tau/2) [eps^2 Lap z + (1 - 3 m^2) z]` with
/// `m = (u_prev + y) / 2`.
pub fn jacobian_vector_product(
    params: &SchemeParams,
    u_prev: &Field,
    y: &Field,
    z: &Field,
) -> Result<Field> {
    if u_prev.grid() != params.grid() || y.grid() != params.grid() || z.grid() != params.grid() {
        return Err(Error::grid_mismatch("jacobian_vector_product operands"));
    }
    let diag = jacobian_diagonal(u_prev, y);
    let mut out = vec![0.0; params.grid().len()];
    apply_jacobian(params, &diag, z.values(), &mut out);
    Ok(Field::from_values_unchecked(*params.grid(), out))
}

/// Pointwise reaction linearisation `1 - 3 m^2` at the midpoint state.
fn jacobian_diagonal(u_prev: &Field, y: &Field) -> Vec<f64> {
    u_prev
        .values()
        .iter()
        .zip(y.values())
        .map(|(&a, &b)| {
            let m = 0.5 * (a + b);
            1.0 - 3.0 * m * m
        })
        .collect()
}

fn apply_jacobian(params: &SchemeParams, diag: &[f64], z: &[f64], out: &mut [f64]) {
    params.laplacian().apply_slice(z, out);
    let e2 = params.eps_interface() * params.eps_interface();
    let half_tau = 0.5 * params.tau();
    for ((o, &d), &zi) in out.iter_mut().zip(diag).zip(z) {
        *o = zi - half_tau * (e2 * *o + d * zi);
    }
}

/// Solve `apply(x) = b` with restarted GMRES (modified Gram-Schmidt, Givens
/// rotations). Returns the solution and the total inner iteration count.
///
/// Convergence is relative: `|apply(x) - b| <= gmres_tol |b|`; the discrete
/// L2 and Euclidean norms agree on that ratio, so plain dot products are
/// used internally.
pub fn gmres_solve(
    apply: impl Fn(&Field) -> Result<Field>,
    b: &Field,
    cfg: &NewtonConfig,
) -> Result<(Field, usize)> {
    let wrapped = |x: &[f64], out: &mut [f64]| -> Result<()> {
        let xf = Field::from_values_unchecked(*b.grid(), x.to_vec());
        let y = apply(&xf)?;
        out.copy_from_slice(y.values());
        Ok(())
    };
    let (x, iters) = gmres_raw(&wrapped, b.values(), b.grid(), cfg)?;
    Ok((Field::from_values_unchecked(*b.grid(), x), iters))
}

fn gmres_raw(
    apply: &impl Fn(&[f64], &mut [f64]) -> Result<()>,
    b: &[f64],
    grid: &crate::grid::GridSpec,
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let b_norm = euclid(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let restart = cfg.gmres_restart.min(n);
    let mut x = vec![0.0; n];
    let mut total_iters = 0usize;
    let mut ax = vec![0.0; n];

    loop {
        apply(&x, &mut ax)?;
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let r_norm = euclid(&r);
        if r_norm <= cfg.gmres_tol * b_norm {
            return Ok((x, total_iters));
        }
        if total_iters >= cfg.gmres_max_iter {
            return Err(Error::LinearSolve {
                achieved: r_norm / b_norm,
                required: cfg.gmres_tol,
                iters: total_iters,
                best: Box::new(Field::from_values_unchecked(*grid, x)),
            });
        }

        for v in r.iter_mut() {
            *v /= r_norm;
        }
        let mut basis = vec![r];
        let mut h = vec![vec![0.0f64; restart + 1]; restart]; // h[col][row]
        let mut cs = vec![0.0f64; restart];
        let mut sn = vec![0.0f64; restart];
        let mut g = vec![0.0f64; restart + 1];
        g[0] = r_norm;

        let mut k = 0;
        while k < restart && total_iters < cfg.gmres_max_iter {
            total_iters += 1;
            let mut w = vec![0.0; n];
            apply(&basis[k], &mut w)?;
            for (j, v) in basis.iter().enumerate() {
                let hjk: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
                h[k][j] = hjk;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= hjk * vi;
                }
            }
            let w_norm = euclid(&w);
            h[k][k + 1] = w_norm;
            let happy = w_norm < 1e-14 * b_norm.max(1.0);
            if !happy {
                basis.push(w.iter().map(|v| v / w_norm).collect());
            }

            for j in 0..k {
                let t = cs[j] * h[k][j] + sn[j] * h[k][j + 1];
                h[k][j + 1] = -sn[j] * h[k][j] + cs[j] * h[k][j + 1];
                h[k][j] = t;
            }
            let (c, s) = givens(h[k][k], h[k][k + 1]);
            cs[k] = c;
            sn[k] = s;
            h[k][k] = c * h[k][k] + s * h[k][k + 1];
            h[k][k + 1] = 0.0;
            let tg = c * g[k] + s * g[k + 1];
            g[k + 1] = -s * g[k] + c * g[k + 1];
            g[k] = tg;

            k += 1;
            if happy || g[k].abs() <= cfg.gmres_tol * b_norm {
                break;
            }
        }

        // y from the triangularised least-squares system, then x += V y.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
    }
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = (a * a + b * b).sqrt();
        (a / r, b / r)
    }
}

/// Newton iteration for one implicit midpoint step, starting from `y0`.
///
/// Each outer iteration solves `D_y G(y) dy = -G(y)` (so the correction is
/// added) and stops once the update norm drops below `eps_tol`. The iteration
/// count equals the number of linear solves performed.
pub fn newton_solve(
    params: &SchemeParams,
    u_prev: &Field,
    y0: &Field,
    cfg: &NewtonConfig,
) -> Result<(Field, NewtonReport)> {
    cfg.validate()?;
    if u_prev.grid() != params.grid() || y0.grid() != params.grid() {
        return Err(Error::grid_mismatch("newton_solve operands"));
    }
    if !y0.is_finite() {
        return Err(Error::Invalid("initial guess must be finite".into()));
    }
    let start = Instant::now();
    let len = params.grid().len();
    let vol_sqrt = params.grid().cell_volume().sqrt();
    let mut y = y0.clone();
    let mut update_norms = Vec::new();
    let mut gmres_iters = Vec::new();

    for k in 0..cfg.max_outer {
        // -G(y) = Psi(u_prev, y) - y, exactly the scheme residual.
        let psi = midpoint_map(params, u_prev, &y)?;
        let rhs = psi.add_scaled(-1.0, &y)?;
        if !rhs.is_finite() {
            return Err(Error::NewtonDiverged {
                iteration: k,
                report: Box::new(NewtonReport {
                    update_norms,
                    gmres_iters,
                    converged: false,
                    wall_time: start.elapsed().as_secs_f64(),
                }),
            });
        }

        let diag = jacobian_diagonal(u_prev, &y);
        let apply = |z: &[f64], out: &mut [f64]| -> Result<()> {
            apply_jacobian(params, &diag, z, out);
            Ok(())
        };
        let (dy, inner) = gmres_raw(&apply, rhs.values(), params.grid(), cfg)?;

        let mut moved = y.into_values();
        for (yi, di) in moved.iter_mut().zip(&dy) {
            *yi += di;
        }
        y = Field::from_values_unchecked(*params.grid(), moved);

        let l_update = vol_sqrt * euclid(&dy);
        update_norms.push(l_update);
        gmres_iters.push(inner);
        debug_assert_eq!(dy.len(), len);

        if !l_update.is_finite() || !y.is_finite() {
            return Err(Error::NewtonDiverged {
                iteration: k + 1,
                report: Box::new(NewtonReport {
                    update_norms,
                    gmres_iters,
                    converged: false,
                    wall_time: start.elapsed().as_secs_f64(),
                }),
            });
        }
        if l_update < cfg.eps_tol {
            let report = NewtonReport {
                update_norms,
                gmres_iters,
                converged: true,
                wall_time: start.elapsed().as_secs_f64(),
            };
            return Ok((y, report));
        }
    }

    let last_update = update_norms.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::NewtonNonConvergence {
        max_outer: cfg.max_outer,
        last_update,
        report: Box::new(NewtonReport {
            update_norms,
            gmres_iters,
            converged: false,
            wall_time: start.elapsed().as_secs_f64(),
        }),
        best: Box::new(y),
    })
}
