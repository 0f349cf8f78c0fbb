//! Minimal dense matrix support for the small systems that appear inside the
//! solvers: Hessenberg matrices from Arnoldi, the dense Laplacian assembly
//! used as a testing oracle, and the scaling-and-squaring matrix exponential.

use crate::{Error, Result};

/// Row-major dense matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        DenseMatrix {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale_assign(&mut self, alpha: f64) {
        for a in self.data.iter_mut() {
            *a *= alpha;
        }
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
        for ia in 0..a.rows {
            for ja in 0..a.cols {
                let s = a.get(ia, ja);
                if s == 0.0 {
                    continue;
                }
                for ib in 0..b.rows {
                    for jb in 0..b.cols {
                        out.set(ia * b.rows + ib, ja * b.cols + jb, s * b.get(ib, jb));
                    }
                }
            }
        }
        out
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.cols {
            let s: f64 = (0..self.rows).map(|i| self.get(i, j).abs()).sum();
            best = best.max(s);
        }
        best
    }

    /// Solve `self * x = b` by LU with partial pivoting.
    pub fn lu_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(b.len(), self.rows);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[piv[k] * n + k].abs();
            for i in k + 1..n {
                let v = a[piv[i] * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Invalid("singular matrix in LU solve".into()));
            }
            piv.swap(k, p);
            let pk = piv[k];
            for i in k + 1..n {
                let pi = piv[i];
                let factor = a[pi * n + k] / a[pk * n + k];
                a[pi * n + k] = factor;
                for j in k + 1..n {
                    a[pi * n + j] -= factor * a[pk * n + j];
                }
            }
        }
        // Forward substitution on the permuted rows.
        let mut y = vec![0.0; n];
        for i in 0..n {
            let pi = piv[i];
            let mut s = x[pi];
            for j in 0..i {
                s -= a[pi * n + j] * y[j];
            }
            y[i] = s;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let pi = piv[i];
            let mut s = y[i];
            for j in i + 1..n {
                s -= a[pi * n + j] * x[j];
            }
            x[i] = s / a[pi * n + i];
        }
        Ok(x)
    }

    /// Solve `self * X = B` column by column.
    pub fn lu_solve_matrix(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        assert_eq!(self.rows, b.rows);
        let mut out = DenseMatrix::zeros(b.rows, b.cols);
        let mut col = vec![0.0; b.rows];
        for j in 0..b.cols {
            for i in 0..b.rows {
                col[i] = b.get(i, j);
            }
            let x = self.lu_solve(&col)?;
            for i in 0..b.rows {
                out.set(i, j, x[i]);
            }
        }
        Ok(out)
    }

    /// Matrix exponential by scaling and squaring with a [6/6] Pade
    /// approximant, accurate to near machine precision after scaling the
    /// one-norm below 1/2.
    pub fn expm(&self) -> Result<DenseMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let norm = self.one_norm();
        let squarings = if norm > 0.5 {
            (norm / 0.5).log2().ceil().max(0.0) as u32
        } else {
            0
        };
        let mut a = self.clone();
        a.scale_assign(0.5f64.powi(squarings as i32));

        // Pade [6/6] coefficients for e^x.
        let c = pade6_coeffs();
        let mut num = DenseMatrix::zeros(n, n);
        let mut den = DenseMatrix::zeros(n, n);
        let mut power = DenseMatrix::identity(n);
        for (j, &cj) in c.iter().enumerate() {
            let mut term = power.clone();
            term.scale_assign(cj);
            num.add_assign(&term);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            term = power.clone();
            term.scale_assign(sign * cj);
            den.add_assign(&term);
            if j + 1 < c.len() {
                power = power.matmul(&a);
            }
        }
        let mut e = den.lu_solve_matrix(&num)?;
        for _ in 0..squarings {
            e = e.matmul(&e);
        }
        Ok(e)
    }
}

fn pade6_coeffs() -> [f64; 7] {
    // c_j = c_{j-1} * (q - j + 1) / (j (2q - j + 1)) with q = 6.
    let mut c = [0.0; 7];
    c[0] = 1.0;
    for j in 1..=6 {
        c[j] = c[j - 1] * (6 - j + 1) as f64 / ((j * (12 - j + 1)) as f64);
    }
    c
}
