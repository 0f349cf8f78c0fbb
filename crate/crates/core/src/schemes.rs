//! Time-stepping schemes for the Allen-Cahn right-hand side
//! `u_t = eps^2 Lap u + u - u^3`: the implicit midpoint map and its residual,
//! the Ginzburg-Landau energy, and the explicit ETD reference scheme with
//! Arnoldi-based evaluation of the matrix exponential and phi_1 function.

use crate::dense::DenseMatrix;
use crate::grid::{Field, GridSpec, LaplacianOp};
use crate::{Error, Result};

/// Parameters of one implicit midpoint step.
#[derive(Debug, Clone)]
pub struct SchemeParams {
    tau: f64,
    eps_interface: f64,
    laplacian: LaplacianOp,
}

impl SchemeParams {
    pub fn new(tau: f64, eps_interface: f64, laplacian: LaplacianOp) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Invalid(format!(
                "time step must be positive, got {tau}"
            )));
        }
        if !(eps_interface > 0.0) {
            return Err(Error::Invalid(format!(
                "interfacial width must be positive, got {eps_interface}"
            )));
        }
        Ok(SchemeParams {
            tau,
            eps_interface,
            laplacian,
        })
    }

    /// Same parameters with a different time step.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        SchemeParams::new(tau, self.eps_interface, self.laplacian)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn eps_interface(&self) -> f64 {
        self.eps_interface
    }

    pub fn laplacian(&self) -> &LaplacianOp {
        &self.laplacian
    }

    pub fn grid(&self) -> &GridSpec {
        self.laplacian.grid()
    }

    /// `L(w) = eps^2 Lap w - w^3 + w` applied to a slice.
    pub(crate) fn rhs_slice(&self, w: &[f64], out: &mut [f64]) {
        self.laplacian.apply_slice(w, out);
        let e2 = self.eps_interface * self.eps_interface;
        for (o, &wi) in out.iter_mut().zip(w) {
            *o = e2 * *o + wi - wi * wi * wi;
        }
    }
}

/// Parameters of one ETD step: the scheme context plus the Arnoldi basis size.
#[derive(Debug, Clone)]
pub struct EtdParams {
    scheme: SchemeParams,
    krylov_dim: usize,
}

impl EtdParams {
    pub fn new(scheme: SchemeParams, krylov_dim: usize) -> Result<Self> {
        let len = scheme.grid().len();
        if krylov_dim == 0 || krylov_dim > len {
            return Err(Error::Invalid(format!(
                "krylov dimension must lie in 1..={len}, got {krylov_dim}"
            )));
        }
        Ok(EtdParams { scheme, krylov_dim })
    }

    pub fn scheme(&self) -> &SchemeParams {
        &self.scheme
    }

    pub fn krylov_dim(&self) -> usize {
        self.krylov_dim
    }
}

/// Reaction term `g(u) = u - u^3`, the non-stiff part of the right-hand side.
pub fn reaction(u: &Field) -> Field {
    u.map(|v| v - v * v * v)
}

/// Implicit midpoint map `Psi_tau(u_prev, v) = u_prev + tau L((u_prev + v)/2)`
/// with `L(w) = eps^2 Lap w - w^3 + w`.
pub fn midpoint_map(params: &SchemeParams, u_prev: &Field, v: &Field) -> Result<Field> {
    if u_prev.grid() != params.grid() || v.grid() != params.grid() {
        return Err(Error::grid_mismatch("midpoint_map operands"));
    }
    let n = params.grid().len();
    let mut mid = vec![0.0; n];
    for ((m, &a), &b) in mid.iter_mut().zip(u_prev.values()).zip(v.values()) {
        *m = 0.5 * (a + b);
    }
    let mut rhs = vec![0.0; n];
    params.rhs_slice(&mid, &mut rhs);
    let mut out = rhs;
    for (o, &a) in out.iter_mut().zip(u_prev.values()) {
        *o = a + params.tau() * *o;
    }
    Ok(Field::from_values_unchecked(*params.grid(), out))
}

/// Scheme residual `R(v) = Psi_tau(u_prev, v) - v`; zero exactly at the
/// solution of the implicit step.
pub fn residual(params: &SchemeParams, u_prev: &Field, v: &Field) -> Result<Field> {
    let psi = midpoint_map(params, u_prev, v)?;
    psi.add_scaled(-1.0, v)
}

/// Discrete Ginzburg-Landau energy
/// `E(u) = h^dim sum F(u_i) + (eps^2 / 2) h^dim sum_faces ((u_b - u_a)/h)^2`
/// with `F(u) = (u^2 - 1)^2 / 4` and face-centred forward differences.
pub fn energy(params: &SchemeParams, u: &Field) -> f64 {
    let grid = params.grid();
    let vol = grid.cell_volume();
    let vals = u.values();
    let well: f64 = vals
        .iter()
        .map(|&v| {
            let q = v * v - 1.0;
            0.25 * q * q
        })
        .sum();
    let inv_h = 1.0 / grid.h();
    let mut grad_sq = 0.0;
    let n = grid.n();
    match grid.dim() {
        crate::grid::Dim::One => {
            for i in 0..n - 1 {
                let d = (vals[i + 1] - vals[i]) * inv_h;
                grad_sq += d * d;
            }
        }
        crate::grid::Dim::Two => {
            for i in 0..n {
                for j in 0..n - 1 {
                    let d = (vals[i * n + j + 1] - vals[i * n + j]) * inv_h;
                    grad_sq += d * d;
                }
            }
            for i in 0..n - 1 {
                for j in 0..n {
                    let d = (vals[(i + 1) * n + j] - vals[i * n + j]) * inv_h;
                    grad_sq += d * d;
                }
            }
        }
    }
    let e2 = params.eps_interface() * params.eps_interface();
    vol * (well + 0.5 * e2 * grad_sq)
}

/// `phi_1(z) = (e^z - 1) / z` with the removable singularity filled by a
/// short Taylor series near zero.
pub fn phi1_scalar(z: f64) -> f64 {
    if z.abs() > 1e-5 {
        (z.exp() - 1.0) / z
    } else {
        // 1 + z/2 + z^2/6 + ... up to degree 6
        let mut acc = 1.0;
        let mut term = 1.0;
        for k in 2..=7u32 {
            term *= z / k as f64;
            acc += term;
        }
        acc
    }
}

/// One ETD step `u_next = e^{tau A} u + tau phi_1(tau A) g(u)` with
/// `A = eps^2 Lap`, both matrix functions evaluated matrix-free through an
/// Arnoldi basis of size `krylov_dim`.
pub fn etd_step(params: &EtdParams, u: &Field) -> Result<Field> {
    let scheme = params.scheme();
    if u.grid() != scheme.grid() {
        return Err(Error::grid_mismatch("etd_step operand"));
    }
    let tau = scheme.tau();
    let e2 = scheme.eps_interface() * scheme.eps_interface();
    let lap = scheme.laplacian();
    let n = scheme.grid().len();
    let apply = |x: &[f64], out: &mut [f64]| {
        lap.apply_slice(x, out);
        for o in out.iter_mut() {
            *o *= e2;
        }
    };

    // e^{tau A} u
    let exp_term = krylov_matfunc(&apply, u.values(), tau, params.krylov_dim(), MatFunc::Exp)?;
    // tau phi_1(tau A) g(u)
    let g = reaction(u);
    let phi_term = krylov_matfunc(&apply, g.values(), tau, params.krylov_dim(), MatFunc::Phi1)?;

    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = exp_term[i] + tau * phi_term[i];
    }
    Ok(Field::from_values_unchecked(*scheme.grid(), out))
}

enum MatFunc {
    Exp,
    Phi1,
}

/// Arnoldi approximation of `f(tau A) b` for `f` in {exp, phi_1}: build an
/// orthonormal basis V and Hessenberg H for K_m(A, b), then evaluate the
/// small dense function and lift, `f(tau A) b ~ |b| V f(tau H) e_1`.
fn krylov_matfunc(
    apply: &impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    tau: f64,
    krylov_dim: usize,
    func: MatFunc,
) -> Result<Vec<f64>> {
    let n = b.len();
    let beta = (b.iter().map(|v| v * v).sum::<f64>()).sqrt();
    if beta == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let (basis, hess, m) = arnoldi(apply, b, beta, krylov_dim);

    // tau H on the retained basis.
    let mut th = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            th.set(i, j, tau * hess.get(i, j));
        }
    }
    let small = match func {
        MatFunc::Exp => {
            let e = th.expm()?;
            (0..m).map(|i| e.get(i, 0)).collect::<Vec<f64>>()
        }
        MatFunc::Phi1 => phi1_times_e1(&th)?,
    };

    let mut out = vec![0.0; n];
    for (j, col) in basis.iter().take(m).enumerate() {
        let c = beta * small[j];
        for i in 0..n {
            out[i] += c * col[i];
        }
    }
    Ok(out)
}

/// `phi_1(M) e_1` via the augmented-matrix exponential:
/// `exp([[M, e_1], [0, 0]])` carries `phi_1(M) e_1` in its last column.
fn phi1_times_e1(m: &DenseMatrix) -> Result<Vec<f64>> {
    let k = m.rows();
    let mut aug = DenseMatrix::zeros(k + 1, k + 1);
    for i in 0..k {
        for j in 0..k {
            aug.set(i, j, m.get(i, j));
        }
    }
    aug.set(0, k, 1.0);
    let e = aug.expm()?;
    Ok((0..k).map(|i| e.get(i, k)).collect())
}

/// Modified Gram-Schmidt Arnoldi with one reorthogonalisation pass.
/// Returns the orthonormal basis, the square Hessenberg block, and the
/// retained dimension (smaller than requested on breakdown).
fn arnoldi(
    apply: &impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    beta: f64,
    krylov_dim: usize,
) -> (Vec<Vec<f64>>, DenseMatrix, usize) {
    let n = b.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(krylov_dim);
    basis.push(b.iter().map(|v| v / beta).collect());
    let mut hess = DenseMatrix::zeros(krylov_dim, krylov_dim);
    let mut m = krylov_dim;
    let mut w = vec![0.0; n];
    for j in 0..krylov_dim {
        apply(&basis[j], &mut w);
        // MGS with one reorthogonalisation pass; both passes accumulate
        // their projections into the Hessenberg column.
        for _pass in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let hij: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
                if hij != 0.0 {
                    for (wk, vk) in w.iter_mut().zip(v) {
                        *wk -= hij * vk;
                    }
                    hess.set(i, j, hess.get(i, j) + hij);
                }
            }
        }
        let next_norm = (w.iter().map(|v| v * v).sum::<f64>()).sqrt();
        if next_norm < 1e-14 {
            m = j + 1;
            break;
        }
        if j + 1 < krylov_dim {
            basis.push(w.iter().map(|v| v / next_norm).collect());
            hess.set(j + 1, j, next_norm);
        }
    }
    // Shrink the Hessenberg block if we broke down early.
    if m < krylov_dim {
        let mut small = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                small.set(i, j, hess.get(i, j));
            }
        }
        return (basis, small, m);
    }
    (basis, hess, m)
}
