//! Shared helpers for the integration suites: paper-style problem builders,
//! a Jacobi eigensolver and a naive DFT used as independent oracles.

#![allow(dead_code)]

use nhns_core::dense::DenseMatrix;
use nhns_core::grid::{Dim, Field, GridSpec, LaplacianOp};
use nhns_core::schemes::SchemeParams;
use nhns_core::training::DatasetSpec;

pub fn scheme_1d(n: usize, tau: f64, eps: f64) -> SchemeParams {
    let grid = GridSpec::new_1d(n).unwrap();
    SchemeParams::new(tau, eps, LaplacianOp::new(grid)).unwrap()
}

pub fn scheme_2d(n: usize, tau: f64, eps: f64) -> SchemeParams {
    let grid = GridSpec::new_2d(n).unwrap();
    SchemeParams::new(tau, eps, LaplacianOp::new(grid)).unwrap()
}

/// Paper-style 1D corpus on an arbitrary mesh size.
pub fn data_spec_1d(n: usize, seed: u64) -> DatasetSpec {
    DatasetSpec {
        n,
        ..DatasetSpec::paper_1d(seed)
    }
}

pub fn data_spec_2d(n: usize, seed: u64) -> DatasetSpec {
    DatasetSpec {
        n,
        ..DatasetSpec::paper_2d(seed)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix: `A = Q D Q^T`.
/// Returns (eigenvalues, Q with eigenvectors in columns).
pub fn jacobi_eigen(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j)).collect())
        .collect();
    let mut q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(m[i][j].abs());
            }
        }
        if off < 1e-14 {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apq = m[p][r];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (m[r][r] - m[p][p]) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkr = m[k][r];
                    m[k][p] = c * mkp - s * mkr;
                    m[k][r] = s * mkp + c * mkr;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mrk = m[r][k];
                    m[p][k] = c * mpk - s * mrk;
                    m[r][k] = s * mpk + c * mrk;
                }
                for k in 0..n {
                    let qkp = q[k][p];
                    let qkr = q[k][r];
                    q[k][p] = c * qkp - s * qkr;
                    q[k][r] = s * qkp + c * qkr;
                }
            }
        }
    }

    let eigvals: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    let mut qm = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            qm.set(i, j, q[i][j]);
        }
    }
    (eigvals, qm)
}

/// `f(tau A) b` through the eigendecomposition of a symmetric A.
pub fn eigen_matfunc(
    eigvals: &[f64],
    q: &DenseMatrix,
    tau: f64,
    b: &[f64],
    f: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let n = eigvals.len();
    // coeffs = Q^T b
    let mut coeffs = vec![0.0; n];
    for j in 0..n {
        coeffs[j] = (0..n).map(|i| q.get(i, j) * b[i]).sum();
    }
    for (c, &lam) in coeffs.iter_mut().zip(eigvals) {
        *c *= f(tau * lam);
    }
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = (0..n).map(|j| q.get(i, j) * coeffs[j]).sum();
    }
    out
}

/// Naive complex DFT magnitudes |c_m| with c_m = (1/N) sum_j x_j w^{mj}.
pub fn dft_magnitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let w = -2.0 * std::f64::consts::PI * m as f64 / n as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, &v) in x.iter().enumerate() {
            let (s, c) = (w * j as f64).sin_cos();
            re += v * c;
            im += v * s;
        }
        out.push((re * re + im * im).sqrt() / n as f64);
    }
    out
}

/// Least-squares slope of log(err) against log(step), the observed order.
pub fn fitted_order(steps: &[f64], errors: &[f64]) -> f64 {
    let n = steps.len() as f64;
    let xs: Vec<f64> = steps.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Max |a - b| over two fields (plain, unweighted).
pub fn max_abs_diff(a: &Field, b: &Field) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn grid_of(dim: Dim, n: usize) -> GridSpec {
    GridSpec::new(dim, n).unwrap()
}
