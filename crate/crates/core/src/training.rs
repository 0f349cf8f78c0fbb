//! Random-Fourier initial data, the scheme-informed loss and its analytic
//! adjoint with respect to the network output, and the training loop.
//!
//! Training is unsupervised: the network output is pushed toward the implicit
//! midpoint solution by minimising the squared discrete-L2 norm of the scheme
//! residual, so no solved trajectories are ever needed.

use std::io::{Read, Write};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grid::{read_u32, Dim, Field, GridSpec};
use crate::net::{adam_step, scheduled_lr, AdamState, ConvNet, ParamGrads};
use crate::schemes::{residual, SchemeParams};
use crate::{Error, Result};

/// How the initial-data corpus is sampled.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub dim: Dim,
    /// Mesh points per axis.
    pub n: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Fourier modes per axis in 1D.
    pub modes: usize,
    /// Fourier modes per axis in 2D.
    pub modes_2d: (usize, usize),
    /// Apply the e^{-i/4} amplitude damping (always on for 1D data).
    pub decay_1d: bool,
    /// Optional damping for the 2D construction (off by default).
    pub decay_2d: bool,
    pub seed: u64,
}

impl DatasetSpec {
    /// 1D corpus: 512 points, 128 damped modes, 3200 + 320 samples.
    pub fn paper_1d(seed: u64) -> Self {
        DatasetSpec {
            dim: Dim::One,
            n: 512,
            n_train: 3200,
            n_test: 320,
            modes: 128,
            modes_2d: (16, 16),
            decay_1d: true,
            decay_2d: false,
            seed,
        }
    }

    /// 2D corpus: 128 x 128 mesh, 16 x 16 modes, 3200 + 320 samples.
    pub fn paper_2d(seed: u64) -> Self {
        DatasetSpec {
            dim: Dim::Two,
            n: 128,
            ..Self::paper_1d(seed)
        }
    }

    pub fn total(&self) -> usize {
        self.n_train + self.n_test
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.dim, self.n)
    }
}

/// `u0 = sum_i decay_i (a_i sin(i x) + b_i cos(i x))`, normalised to unit max
/// norm. Errors if the raw sum is identically zero.
pub fn fourier_field_1d(grid: GridSpec, a: &[f64], b: &[f64], decay: bool) -> Result<Field> {
    if grid.dim() != Dim::One {
        return Err(Error::Invalid("fourier_field_1d needs a 1D grid".into()));
    }
    if a.len() != b.len() {
        return Err(Error::Invalid(
            "coefficient arrays must have equal length".into(),
        ));
    }
    let damp: Vec<f64> = (1..=a.len())
        .map(|i| {
            if decay {
                (-(i as f64) / 4.0).exp()
            } else {
                1.0
            }
        })
        .collect();
    let n = grid.n();
    let mut values = vec![0.0; n];
    for (j, v) in values.iter_mut().enumerate() {
        let x = grid.coord(j);
        let (s1, c1) = x.sin_cos();
        // sin(ix), cos(ix) by angle-addition recurrence.
        let (mut si, mut ci) = (s1, c1);
        let mut acc = 0.0;
        for i in 0..a.len() {
            acc += damp[i] * (a[i] * si + b[i] * ci);
            let next_s = si * c1 + ci * s1;
            let next_c = ci * c1 - si * s1;
            si = next_s;
            ci = next_c;
        }
        *v = acc;
    }
    normalize_max(grid, values)
}

/// Four-term sin/cos tensor products with coefficient blocks `a, b, c, d`
/// laid out row-major over `(i, j)` modes, normalised to unit max norm.
pub fn fourier_field_2d(
    grid: GridSpec,
    m1: usize,
    m2: usize,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    d: &[f64],
    decay: bool,
) -> Result<Field> {
    if grid.dim() != Dim::Two {
        return Err(Error::Invalid("fourier_field_2d needs a 2D grid".into()));
    }
    for block in [a, b, c, d] {
        if block.len() != m1 * m2 {
            return Err(Error::Invalid("coefficient blocks must be m1 * m2".into()));
        }
    }
    let n = grid.n();
    // Trig tables per axis: trig[i][x-index], modes 1..=m.
    let sin_tbl_1 = trig_table(grid, m1, true);
    let cos_tbl_1 = trig_table(grid, m1, false);
    let sin_tbl_2 = trig_table(grid, m2, true);
    let cos_tbl_2 = trig_table(grid, m2, false);

    let mut values = vec![0.0; n * n];
    let mut row_s = vec![0.0; n];
    let mut row_c = vec![0.0; n];
    for i in 0..m1 {
        let damp_i = if decay {
            (-((i + 1) as f64) / 4.0).exp()
        } else {
            1.0
        };
        // row_s(x2) multiplies sin((i+1) x1); row_c multiplies cos((i+1) x1).
        row_s.iter_mut().for_each(|v| *v = 0.0);
        row_c.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..m2 {
            let damp = damp_i
                * if decay {
                    (-((j + 1) as f64) / 4.0).exp()
                } else {
                    1.0
                };
            let (aij, bij) = (a[i * m2 + j] * damp, b[i * m2 + j] * damp);
            let (cij, dij) = (c[i * m2 + j] * damp, d[i * m2 + j] * damp);
            for x2 in 0..n {
                row_s[x2] += aij * sin_tbl_2[j][x2] + bij * cos_tbl_2[j][x2];
                row_c[x2] += cij * sin_tbl_2[j][x2] + dij * cos_tbl_2[j][x2];
            }
        }
        for x1 in 0..n {
            let (s1, c1) = (sin_tbl_1[i][x1], cos_tbl_1[i][x1]);
            let out = &mut values[x1 * n..(x1 + 1) * n];
            for (x2, o) in out.iter_mut().enumerate() {
                *o += s1 * row_s[x2] + c1 * row_c[x2];
            }
        }
    }
    normalize_max(grid, values)
}

fn trig_table(grid: GridSpec, modes: usize, sine: bool) -> Vec<Vec<f64>> {
    let n = grid.n();
    (1..=modes)
        .map(|m| {
            (0..n)
                .map(|j| {
                    let arg = m as f64 * grid.coord(j);
                    if sine {
                        arg.sin()
                    } else {
                        arg.cos()
                    }
                })
                .collect()
        })
        .collect()
}

fn normalize_max(grid: GridSpec, mut values: Vec<f64>) -> Result<Field> {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Err(Error::Domain("degenerate all-zero field".into()));
    }
    for v in values.iter_mut() {
        *v /= max;
    }
    Ok(Field::from_values_unchecked(grid, values))
}

/// Deterministic sample `index` of the corpus: seeded substreams, with the
/// (measure-zero) all-zero draw resampled from the next substream.
pub fn generate_initial_data(spec: &DatasetSpec, index: u64) -> Result<Field> {
    let grid = spec.grid()?;
    for attempt in 0..64u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(index * 64 + attempt);
        let sampled = match spec.dim {
            Dim::One => {
                let m = spec.modes;
                let mut a = vec![0.0; m];
                let mut b = vec![0.0; m];
                for i in 0..m {
                    a[i] = rng.sample(StandardNormal);
                    b[i] = rng.sample(StandardNormal);
                }
                fourier_field_1d(grid, &a, &b, spec.decay_1d)
            }
            Dim::Two => {
                let (m1, m2) = spec.modes_2d;
                let len = m1 * m2;
                let mut blocks = vec![vec![0.0; len]; 4];
                for t in 0..len {
                    for block in blocks.iter_mut() {
                        block[t] = rng.sample(StandardNormal);
                    }
                }
                fourier_field_2d(
                    grid,
                    m1,
                    m2,
                    &blocks[0],
                    &blocks[1],
                    &blocks[2],
                    &blocks[3],
                    spec.decay_2d,
                )
            }
        };
        match sampled {
            Ok(f) => return Ok(f),
            Err(Error::Domain(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Domain("could not draw a nonzero field".into()))
}

/// Generate the whole corpus: indices `0..total`, train first, test after.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Vec<Field>> {
    (0..spec.total() as u64)
        .map(|i| generate_initial_data(spec, i))
        .collect()
}

const DATA_MAGIC: &[u8; 8] = b"NHNSDAT1";

/// Dataset container: magic, dim, n, count, then the raw field values.
pub fn write_dataset<W: Write>(w: &mut W, fields: &[Field]) -> Result<()> {
    if fields.is_empty() {
        return Err(Error::Invalid("refusing to write an empty dataset".into()));
    }
    let grid = *fields[0].grid();
    if fields.iter().any(|f| *f.grid() != grid) {
        return Err(Error::grid_mismatch("dataset fields"));
    }
    w.write_all(DATA_MAGIC)?;
    w.write_all(&grid.dim().as_u32().to_le_bytes())?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    w.write_all(&(fields.len() as u32).to_le_bytes())?;
    for f in fields {
        for v in f.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_dataset<R: Read>(r: &mut R) -> Result<Vec<Field>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DATA_MAGIC {
        return Err(Error::Format("bad dataset magic".into()));
    }
    let dim = Dim::from_u32(read_u32(r)?)?;
    let n = read_u32(r)? as usize;
    let count = read_u32(r)? as usize;
    let grid = GridSpec::new(dim, n)?;
    let mut fields = Vec::with_capacity(count);
    let mut buf = vec![0u8; 8];
    for _ in 0..count {
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes([
                buf[0], buf[1], buf[2], buf[3], buf[4], buf[5], buf[6], buf[7],
            ]));
        }
        fields.push(Field::from_values(grid, values)?);
    }
    Ok(fields)
}

/// Scheme-informed loss: mean over the batch of the squared discrete-L2 norm
/// of `Psi_tau(u, N(u)) - N(u)`.
pub fn loss(params: &SchemeParams, net: &ConvNet, batch: &[Field]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Invalid("loss needs a non-empty batch".into()));
    }
    let mut acc = 0.0;
    for u in batch {
        let pred = net.forward(u)?;
        let r = residual(params, u, &pred)?;
        let l2 = r.l2();
        acc += l2 * l2;
    }
    Ok(acc / batch.len() as f64)
}

/// Gradient of the squared (unweighted) residual norm with respect to the
/// network output: `2 J r` with `J = (tau/2)(eps^2 Lap + diag(1 - 3 m^2)) - I`
/// and `m = (u_prev + v)/2`. J is symmetric, so the transpose is free; the
/// discrete-L2 cell weight is applied by the caller.
pub fn loss_gradient_wrt_output(params: &SchemeParams, u_prev: &Field, v: &Field) -> Result<Field> {
    let r = residual(params, u_prev, v)?;
    let e2 = params.eps_interface() * params.eps_interface();
    let half_tau = 0.5 * params.tau();
    let mut jr = vec![0.0; params.grid().len()];
    params.laplacian().apply_slice(r.values(), &mut jr);
    for (((o, &rv), &up), &vv) in jr
        .iter_mut()
        .zip(r.values())
        .zip(u_prev.values())
        .zip(v.values())
    {
        let m = 0.5 * (up + vv);
        *o = half_tau * (e2 * *o + (1.0 - 3.0 * m * m) * rv) - rv;
    }
    for o in jr.iter_mut() {
        *o *= 2.0;
    }
    Ok(Field::from_values_unchecked(*params.grid(), jr))
}

/// Hyper-parameters of one training run. The scheme step the loss is built
/// on comes in separately as [`SchemeParams`].
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr0: f64,
    pub lr_halving_period: usize,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            lr0: 4e-4,
            lr_halving_period: 50,
            weight_decay: 1e-7,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// One epoch row of the training history.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub rows: Vec<EpochRecord>,
}

impl TrainHistory {
    /// CSV columns `(epoch, lr, train_loss, test_loss, wall_time)`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "epoch,lr,train_loss,test_loss,wall_time")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.8e},{:.16e},{:.16e},{:.3}",
                r.epoch, r.lr, r.train_loss, r.test_loss, r.wall_time
            )?;
        }
        Ok(())
    }
}

/// Result of [`train`]: the best-test-loss network and the loss history.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub net: ConvNet,
    pub history: TrainHistory,
    pub best_epoch: usize,
    pub best_test_loss: f64,
}

/// Stochastic-gradient training of the scheme-informed loss with Adam,
/// seeded shuffling and fixed-order reduction, so runs are bit-reproducible.
/// Returns the checkpoint with the lowest test loss.
pub fn train(
    net: ConvNet,
    params: &SchemeParams,
    train_set: &[Field],
    test_set: &[Field],
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::Invalid(
            "train and test sets must be non-empty".into(),
        ));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.lr0 > 0.0) {
        return Err(Error::Invalid("bad training configuration".into()));
    }
    let vol = params.grid().cell_volume();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut state = AdamState::new(net.spec());
    let mut net = net;
    let mut history = TrainHistory::default();
    let mut best: Option<(ConvNet, f64, usize)> = None;

    for epoch in 0..cfg.epochs {
        let lr = scheduled_lr(cfg.lr0, cfg.lr_halving_period, epoch);
        order.shuffle(&mut rng);
        let mut epoch_loss_sum = 0.0;

        for chunk in order.chunks(cfg.batch_size) {
            let mut grads = ParamGrads::zeros_like(net.spec());
            for &idx in chunk {
                let u = &train_set[idx];
                let (pred, cache) = net.forward_cached(u)?;
                let r = residual(params, u, &pred)?;
                let l2 = r.l2();
                epoch_loss_sum += l2 * l2;
                // d(vol * sum r^2)/d(output) = vol * 2 J r
                let gout = loss_gradient_wrt_output(params, u, &pred)?.scale(vol);
                grads.add_assign(&net.backward(&cache, &gout)?);
            }
            grads.scale(1.0 / chunk.len() as f64);
            if !grads.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, history });
            }
            adam_step(&mut net, &grads, &mut state, lr, cfg.weight_decay);
        }

        let train_loss = epoch_loss_sum / train_set.len() as f64;
        let test_loss = loss(params, &net, test_set)?;
        if !train_loss.is_finite() || !test_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, history });
        }
        history.rows.push(EpochRecord {
            epoch,
            lr,
            train_loss,
            test_loss,
            wall_time: start.elapsed().as_secs_f64(),
        });
        if best.as_ref().map_or(true, |(_, b, _)| test_loss < *b) {
            best = Some((net.clone(), test_loss, epoch));
        }
    }

    let (best_net, best_test_loss, best_epoch) = best.expect("at least one epoch ran");
    Ok(TrainResult {
        net: best_net,
        history,
        best_epoch,
        best_test_loss,
    })
}
