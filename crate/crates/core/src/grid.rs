//! Uniform cell-centred meshes on [-pi, pi]^d (d = 1, 2) with homogeneous
//! Neumann boundary semantics: grid description, scalar fields, the discrete
//! Laplacian (matrix-free plus a dense assembly used as a testing oracle),
//! and the discrete norms used throughout the crate.

use std::f64::consts::PI;
use std::io::{Read, Write};

use crate::dense::DenseMatrix;
use crate::{Error, Result};

/// Spatial dimension of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn as_u32(self) -> u32 {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }

    pub fn from_u32(d: u32) -> Result<Self> {
        match d {
            1 => Ok(Dim::One),
            2 => Ok(Dim::Two),
            other => Err(Error::Invalid(format!(
                "dimension must be 1 or 2, got {other}"
            ))),
        }
    }
}

/// Uniform mesh of `n` cells per axis on [-pi, pi]^dim.
///
/// Points are cell-centred: `x_i = -pi + (i + 1/2) h` with `h = 2 pi / n`,
/// so the Neumann stencil has the plain `(-1, 1)` corner rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: Dim,
    n: usize,
    h: f64,
    half_width: f64,
}

impl GridSpec {
    pub fn new(dim: Dim, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Invalid(format!(
                "grid needs n >= 3 points per axis, got {n}"
            )));
        }
        let half_width = PI;
        let h = 2.0 * half_width / n as f64;
        Ok(GridSpec {
            dim,
            n,
            h,
            half_width,
        })
    }

    pub fn new_1d(n: usize) -> Result<Self> {
        Self::new(Dim::One, n)
    }

    pub fn new_2d(n: usize) -> Result<Self> {
        Self::new(Dim::Two, n)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Spatial increment.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Total number of mesh points, `n^dim`.
    pub fn len(&self) -> usize {
        match self.dim {
            Dim::One => self.n,
            Dim::Two => self.n * self.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell-centre coordinate along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.h
    }

    /// Quadrature weight of one cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        match self.dim {
            Dim::One => self.h,
            Dim::Two => self.h * self.h,
        }
    }
}

/// Grid-sampled scalar function, row-major for 2D (`idx = i * n + j`).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: GridSpec) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Field {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Build from raw values; checks length and finiteness.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Invalid(format!(
                "field needs {} values for this grid, got {}",
                grid.len(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Invalid("field values must be finite".into()));
        }
        Ok(Field { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    /// Sample a function of x on a 1D grid.
    pub fn from_fn_1d(grid: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        if grid.dim() != Dim::One {
            return Err(Error::Invalid("from_fn_1d needs a 1D grid".into()));
        }
        let values = (0..grid.n()).map(|i| f(grid.coord(i))).collect();
        Field::from_values(grid, values)
    }

    /// Sample a function of (x1, x2) on a 2D grid, row-major.
    pub fn from_fn_2d(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if grid.dim() != Dim::Two {
            return Err(Error::Invalid("from_fn_2d needs a 2D grid".into()));
        }
        let n = grid.n();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            let x1 = grid.coord(i);
            for j in 0..n {
                values.push(f(x1, grid.coord(j)));
            }
        }
        Field::from_values(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Pointwise map into a new field.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + alpha * other`, checking grids.
    pub fn add_scaled(&self, alpha: f64, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::grid_mismatch("add_scaled operands"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a + alpha * b)
            .collect();
        Ok(Field {
            grid: self.grid,
            values,
        })
    }

    pub fn scale(&self, alpha: f64) -> Field {
        self.map(|v| alpha * v)
    }

    /// Discrete L2 norm, `sqrt(h^dim * sum u_i^2)`.
    pub fn l2(&self) -> f64 {
        let sq: f64 = self.values.iter().map(|v| v * v).sum();
        (self.grid.cell_volume() * sq).sqrt()
    }

    /// Max norm.
    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L2 distance to another field on the same grid.
    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::grid_mismatch("l2_distance operands"));
        }
        let sq: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        Ok((self.grid.cell_volume() * sq).sqrt())
    }
}

/// Norm selector for [`norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2Discrete,
    Linf,
    /// Sobolev diagnostic of order `s` computed from the cosine (even)
    /// extension's discrete Fourier coefficients. Requires even `n`.
    Hs(f64),
}

/// Evaluate a norm of a field.
pub fn norm(u: &Field, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::L2Discrete => Ok(u.l2()),
        NormKind::Linf => Ok(u.linf()),
        NormKind::Hs(s) => hs_norm(u, s),
    }
}

/// Sobolev norm of order `s` of the even extension.
///
/// The field is mirrored across each boundary (doubling the domain to width
/// 4 pi per axis), the extension's discrete Fourier coefficients `c_m` are
/// taken at physical frequencies `k = m / 2`, and the norm is
/// `sqrt((2 pi)^dim * sum (1 + |k|^2)^s |c_m|^2)`; at `s = 0` this reproduces
/// the discrete L2 norm by Parseval.
pub fn hs_norm(u: &Field, s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::Invalid(format!("Hs norm needs s >= 0, got {s}")));
    }
    let n = u.grid.n();
    if n % 2 != 0 {
        return Err(Error::Unsupported(format!(
            "Hs norm needs an even number of mesh points, got n = {n}"
        )));
    }
    match u.grid.dim() {
        Dim::One => {
            let ext = even_extension_1d(u.values());
            let coeffs = dft_magnitude_sq(&ext);
            let big_n = ext.len();
            let mut acc = 0.0;
            for (m, &c2) in coeffs.iter().enumerate() {
                let signed = signed_mode(m, big_n);
                let k = signed / 2.0;
                acc += (1.0 + k * k).powf(s) * c2;
            }
            Ok((2.0 * PI * acc).sqrt())
        }
        Dim::Two => {
            // Row-column transform of the doubly mirrored plane.
            let big_n = 2 * n;
            let ext = even_extension_2d(u.values(), n);
            let mut rows: Vec<Vec<(f64, f64)>> = Vec::with_capacity(big_n);
            for r in 0..big_n {
                rows.push(dft_complex(&ext[r * big_n..(r + 1) * big_n]));
            }
            let mut acc = 0.0;
            let mut col_re = vec![0.0; big_n];
            let mut col_im = vec![0.0; big_n];
            for m2 in 0..big_n {
                for r in 0..big_n {
                    col_re[r] = rows[r][m2].0;
                    col_im[r] = rows[r][m2].1;
                }
                let col = dft_complex_pair(&col_re, &col_im);
                let k2 = signed_mode(m2, big_n) / 2.0;
                for (m1, &(re, im)) in col.iter().enumerate() {
                    let k1 = signed_mode(m1, big_n) / 2.0;
                    let ksq = k1 * k1 + k2 * k2;
                    acc += (1.0 + ksq).powf(s) * (re * re + im * im);
                }
            }
            Ok(((2.0 * PI) * (2.0 * PI) * acc).sqrt())
        }
    }
}

fn signed_mode(m: usize, big_n: usize) -> f64 {
    if m <= big_n / 2 {
        m as f64
    } else {
        m as f64 - big_n as f64
    }
}

fn even_extension_1d(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut ext = vec![0.0; 2 * n];
    for (i, &v) in u.iter().enumerate() {
        ext[i] = v;
        ext[2 * n - 1 - i] = v;
    }
    ext
}

fn even_extension_2d(u: &[f64], n: usize) -> Vec<f64> {
    let big_n = 2 * n;
    let mut ext = vec![0.0; big_n * big_n];
    for i in 0..big_n {
        let si = if i < n { i } else { big_n - 1 - i };
        for j in 0..big_n {
            let sj = if j < n { j } else { big_n - 1 - j };
            ext[i * big_n + j] = u[si * n + sj];
        }
    }
    ext
}

/// Normalised DFT coefficients `c_m = (1/N) sum_j x_j e^{-2 pi i m j / N}`
/// of a real signal, returned as |c_m|^2.
fn dft_magnitude_sq(x: &[f64]) -> Vec<f64> {
    dft_complex(x)
        .iter()
        .map(|&(re, im)| re * re + im * im)
        .collect()
}

fn dft_complex(x: &[f64]) -> Vec<(f64, f64)> {
    let zeros = vec![0.0; x.len()];
    dft_complex_pair(x, &zeros)
}

fn dft_complex_pair(re_in: &[f64], im_in: &[f64]) -> Vec<(f64, f64)> {
    let n = re_in.len();
    let scale = 1.0 / n as f64;
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let w = -2.0 * PI * m as f64 / n as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for j in 0..n {
            let (sin, cos) = (w * j as f64).sin_cos();
            re += re_in[j] * cos - im_in[j] * sin;
            im += re_in[j] * sin + im_in[j] * cos;
        }
        out.push((re * scale, im * scale));
    }
    out
}

/// Matrix-free discrete Laplacian with homogeneous Neumann boundary rows,
/// the Kronecker sum of the per-axis stencil in 2D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianOp {
    grid: GridSpec,
}

/// Largest system size for which [`LaplacianOp::assemble_dense`] will build
/// the explicit matrix (testing oracle only).
pub const DENSE_ASSEMBLY_CAP: usize = 4096;

impl LaplacianOp {
    pub fn new(grid: GridSpec) -> Self {
        LaplacianOp { grid }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Apply the operator to a field.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        if *u.grid() != self.grid {
            return Err(Error::grid_mismatch("laplacian operand"));
        }
        let mut out = vec![0.0; self.grid.len()];
        self.apply_slice(u.values(), &mut out);
        Ok(Field::from_values_unchecked(self.grid, out))
    }

    /// Slice-level application used by inner solver loops.
    pub(crate) fn apply_slice(&self, u: &[f64], out: &mut [f64]) {
        let n = self.grid.n();
        let inv_h2 = 1.0 / (self.grid.h() * self.grid.h());
        match self.grid.dim() {
            Dim::One => {
                stencil_1d(u, out, n, inv_h2);
            }
            Dim::Two => {
                // Rows first (fast axis), then columns, accumulating.
                for i in 0..n {
                    stencil_1d(
                        &u[i * n..(i + 1) * n],
                        &mut out[i * n..(i + 1) * n],
                        n,
                        inv_h2,
                    );
                }
                for j in 0..n {
                    // Column j, strided n.
                    for i in 0..n {
                        let c = u[i * n + j];
                        let lo = if i > 0 { u[(i - 1) * n + j] } else { c };
                        let hi = if i + 1 < n { u[(i + 1) * n + j] } else { c };
                        out[i * n + j] += (lo - 2.0 * c + hi) * inv_h2;
                    }
                }
            }
        }
    }

    /// Explicit dense matrix, available only for small systems.
    pub fn assemble_dense(&self) -> Result<DenseMatrix> {
        let len = self.grid.len();
        if len > DENSE_ASSEMBLY_CAP {
            return Err(Error::Unsupported(format!(
                "dense assembly refused for system size {len} > {DENSE_ASSEMBLY_CAP}"
            )));
        }
        let n = self.grid.n();
        let lambda = dense_neumann_1d(n, self.grid.h());
        match self.grid.dim() {
            Dim::One => Ok(lambda),
            Dim::Two => {
                let eye = DenseMatrix::identity(n);
                let mut out = DenseMatrix::kron(&eye, &lambda);
                out.add_assign(&DenseMatrix::kron(&lambda, &eye));
                Ok(out)
            }
        }
    }
}

fn stencil_1d(u: &[f64], out: &mut [f64], n: usize, inv_h2: f64) {
    out[0] = (-u[0] + u[1]) * inv_h2;
    for i in 1..n - 1 {
        out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_h2;
    }
    out[n - 1] = (u[n - 2] - u[n - 1]) * inv_h2;
}

fn dense_neumann_1d(n: usize, h: f64) -> DenseMatrix {
    let inv_h2 = 1.0 / (h * h);
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let diag = if i == 0 || i == n - 1 { -1.0 } else { -2.0 };
        m.set(i, i, diag * inv_h2);
        if i > 0 {
            m.set(i, i - 1, inv_h2);
        }
        if i + 1 < n {
            m.set(i, i + 1, inv_h2);
        }
    }
    m
}

const FIELD_MAGIC: &[u8; 8] = b"NHNSFLD1";
const FIELD_VERSION: u32 = 1;

impl Field {
    /// Binary container: 16-byte magic+version header, then dim and n as
    /// little-endian u32, then `n^dim` little-endian f64 values.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(FIELD_MAGIC)?;
        w.write_all(&FIELD_VERSION.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        w.write_all(&self.grid.dim().as_u32().to_le_bytes())?;
        w.write_all(&(self.grid.n() as u32).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(r: &mut R) -> Result<Field> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != FIELD_MAGIC {
            return Err(Error::Format("bad field magic".into()));
        }
        let version = read_u32(r)?;
        if version != FIELD_VERSION {
            return Err(Error::Format(format!(
                "unsupported field version {version}"
            )));
        }
        let _reserved = read_u32(r)?;
        let dim = Dim::from_u32(read_u32(r)?)?;
        let n = read_u32(r)? as usize;
        let grid = GridSpec::new(dim, n)?;
        let mut values = vec![0.0; grid.len()];
        for v in values.iter_mut() {
            *v = read_f64(r)?;
        }
        Field::from_values(grid, values)
    }

    /// CSV export: one value per line, row-major.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}
