//! Small convolutional network used as the learned time stepper: reflect
//! padding, valid cross-correlation, tanh hidden layers with an affine output
//! layer, hand-written reverse-mode gradients, the Adam update, and the
//! checkpoint container.

use std::io::{Read, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::grid::{read_f64, read_u32, Dim, Field, GridSpec};
use crate::{Error, Result};

/// Architecture of the network: kernel width, channel sequence, dimension.
///
/// Layer `q` maps `channels[q]` planes to `channels[q+1]` planes with a
/// `kernel^dim` stencil, reflect padding of `(kernel-1)/2` so spatial extents
/// are preserved, and tanh activation everywhere except the last layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvSpec {
    dim: Dim,
    kernel: usize,
    channels: Vec<usize>,
}

impl ConvSpec {
    pub fn new(dim: Dim, kernel: usize, channels: Vec<usize>) -> Result<Self> {
        if kernel == 0 || kernel % 2 == 0 {
            return Err(Error::Invalid(format!("kernel must be odd, got {kernel}")));
        }
        if channels.len() < 2 {
            return Err(Error::Invalid("need at least one layer".into()));
        }
        let layers = channels.len() - 1;
        if channels[0] != 1 || channels[layers] != 1 {
            return Err(Error::Invalid(
                "channel sequence must start and end at 1".into(),
            ));
        }
        if channels.iter().any(|&c| c == 0) {
            return Err(Error::Invalid("channel counts must be positive".into()));
        }
        // Wide in the middle, narrow at the ends.
        let half = layers / 2;
        for q in 0..half {
            if channels[q + 1] < channels[q] {
                return Err(Error::Invalid(
                    "channels must be non-decreasing over the first half".into(),
                ));
            }
        }
        for q in layers - half..layers {
            if channels[q + 1] > channels[q] {
                return Err(Error::Invalid(
                    "channels must be non-increasing over the last half".into(),
                ));
            }
        }
        Ok(ConvSpec {
            dim,
            kernel,
            channels,
        })
    }

    /// The 1D configuration used for the n = 512 experiments: 8 layers,
    /// kernel 21, 113409 parameters.
    pub fn paper_1d() -> Self {
        ConvSpec::new(Dim::One, 21, vec![1, 8, 16, 32, 64, 32, 16, 8, 1]).unwrap()
    }

    /// The 2D configuration used for the 128 x 128 experiments: 6 layers,
    /// kernel 9 x 9, 417473 parameters.
    pub fn paper_2d() -> Self {
        ConvSpec::new(Dim::Two, 9, vec![1, 16, 32, 64, 32, 16, 1]).unwrap()
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn channels(&self) -> &[usize] {
        &self.channels
    }

    pub fn layers(&self) -> usize {
        self.channels.len() - 1
    }

    pub fn padding(&self) -> usize {
        (self.kernel - 1) / 2
    }

    /// Kernel taps per weight tensor slice, `kernel^dim`.
    pub fn kernel_size(&self) -> usize {
        match self.dim {
            Dim::One => self.kernel,
            Dim::Two => self.kernel * self.kernel,
        }
    }

    pub fn param_count(&self) -> usize {
        let ks = self.kernel_size();
        (0..self.layers())
            .map(|q| self.channels[q] * self.channels[q + 1] * ks + self.channels[q + 1])
            .sum()
    }
}

/// Mirror padding without edge repetition: `(1,2,3)` padded by one becomes
/// `(2,1,2,3,2)`.
pub fn reflect_pad_1d(x: &[f64], p: usize) -> Result<Vec<f64>> {
    let m = x.len();
    if p >= m {
        return Err(Error::Unsupported(format!(
            "reflect padding {p} needs extent > {p}, got {m}"
        )));
    }
    let mut out = Vec::with_capacity(m + 2 * p);
    for i in 0..m + 2 * p {
        out.push(x[reflect_source(i, m, p)]);
    }
    Ok(out)
}

/// Per-axis mirror padding of a row-major plane; corners reflect twice.
pub fn reflect_pad_2d(x: &[f64], rows: usize, cols: usize, p: usize) -> Result<Vec<f64>> {
    if p >= rows || p >= cols {
        return Err(Error::Unsupported(format!(
            "reflect padding {p} needs extents > {p}, got {rows} x {cols}"
        )));
    }
    let (pr, pc) = (rows + 2 * p, cols + 2 * p);
    let mut out = vec![0.0; pr * pc];
    for i in 0..pr {
        let si = reflect_source(i, rows, p);
        for j in 0..pc {
            out[i * pc + j] = x[si * cols + reflect_source(j, cols, p)];
        }
    }
    Ok(out)
}

#[inline]
fn reflect_source(i: usize, m: usize, p: usize) -> usize {
    if i < p {
        p - i
    } else if i < m + p {
        i - p
    } else {
        2 * m - 2 + p - i
    }
}

/// Valid cross-correlation, stride 1: `out[i] = sum_r w[r] x[i + r]`.
pub fn correlate_1d(w: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let k = w.len();
    let m = x.len();
    if k > m {
        return Err(Error::Invalid(format!("kernel {k} larger than plane {m}")));
    }
    let out_len = m - k + 1;
    let mut out = vec![0.0; out_len];
    for (r, &wr) in w.iter().enumerate() {
        if wr == 0.0 {
            continue;
        }
        let xs = &x[r..r + out_len];
        for (o, &xv) in out.iter_mut().zip(xs) {
            *o += wr * xv;
        }
    }
    Ok(out)
}

/// Valid 2D cross-correlation of a `k x k` kernel over a row-major plane.
pub fn correlate_2d(
    w: &[f64],
    k_rows: usize,
    k_cols: usize,
    x: &[f64],
    rows: usize,
    cols: usize,
) -> Result<Vec<f64>> {
    if k_rows > rows || k_cols > cols {
        return Err(Error::Invalid("kernel larger than plane".into()));
    }
    let (or, oc) = (rows - k_rows + 1, cols - k_cols + 1);
    let mut out = vec![0.0; or * oc];
    for r in 0..k_rows {
        for s in 0..k_cols {
            let wrs = w[r * k_cols + s];
            if wrs == 0.0 {
                continue;
            }
            for i in 0..or {
                let xrow = &x[(i + r) * cols + s..(i + r) * cols + s + oc];
                let orow = &mut out[i * oc..(i + 1) * oc];
                for (o, &xv) in orow.iter_mut().zip(xrow) {
                    *o += wrs * xv;
                }
            }
        }
    }
    Ok(out)
}

/// Weights and biases of the network. Layer `q` stores its weight tensor
/// flat as `[c_in][c_out][kernel^dim]` row-major and one bias per output
/// channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvNet {
    spec: ConvSpec,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Parameter-shaped buffers: gradients and Adam moments.
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl ParamGrads {
    pub fn zeros_like(spec: &ConvSpec) -> Self {
        let ks = spec.kernel_size();
        let weights = (0..spec.layers())
            .map(|q| vec![0.0; spec.channels()[q] * spec.channels()[q + 1] * ks])
            .collect();
        let biases = (0..spec.layers())
            .map(|q| vec![0.0; spec.channels()[q + 1]])
            .collect();
        ParamGrads { weights, biases }
    }

    pub fn add_assign(&mut self, other: &ParamGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            for x in a.iter_mut() {
                *x *= alpha;
            }
        }
    }

    fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.max_abs().is_finite()
    }
}

/// Forward-pass activations kept for the backward pass: `planes[0]` is the
/// input, `planes[q + 1]` the post-activation output of layer `q`.
pub struct ActivationCache {
    planes: Vec<Vec<Vec<f64>>>,
    extent: (usize, usize),
}

impl ConvNet {
    pub fn zeros(spec: ConvSpec) -> Self {
        let grads = ParamGrads::zeros_like(&spec);
        ConvNet {
            spec,
            weights: grads.weights,
            biases: grads.biases,
        }
    }

    /// [`Self::random`] with a self-contained seeded generator.
    pub fn seeded(spec: ConvSpec, seed: u64) -> Self {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random(spec, &mut rng)
    }

    /// Uniform init in +-1/sqrt(fan_in * kernel^dim) per layer, biases zero.
    pub fn random(spec: ConvSpec, rng: &mut ChaCha8Rng) -> Self {
        let mut net = ConvNet::zeros(spec);
        let ks = net.spec.kernel_size();
        for q in 0..net.spec.layers() {
            let bound = 1.0 / ((net.spec.channels()[q] * ks) as f64).sqrt();
            for w in net.weights[q].iter_mut() {
                *w = rng.random_range(-bound..bound);
            }
        }
        net
    }

    pub fn spec(&self) -> &ConvSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.spec.param_count()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    /// Raw parameter access; shapes must be preserved by the caller.
    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    #[inline]
    fn weight_slice(&self, q: usize, j_in: usize, z_out: usize) -> &[f64] {
        let ks = self.spec.kernel_size();
        let c_out = self.spec.channels()[q + 1];
        let base = (j_in * c_out + z_out) * ks;
        &self.weights[q][base..base + ks]
    }

    /// Run the network on a field; spatial size is preserved.
    pub fn forward(&self, u: &Field) -> Result<Field> {
        let (out, _) = self.forward_inner(u, false)?;
        Ok(out)
    }

    /// Run the network keeping the per-layer activations for [`Self::backward`].
    pub fn forward_cached(&self, u: &Field) -> Result<(Field, ActivationCache)> {
        let (out, cache) = self.forward_inner(u, true)?;
        Ok((out, cache.expect("cache requested")))
    }

    fn forward_inner(&self, u: &Field, keep: bool) -> Result<(Field, Option<ActivationCache>)> {
        if u.grid().dim() != self.spec.dim() {
            return Err(Error::grid_mismatch("network input dimension"));
        }
        let n = u.grid().n();
        let extent = match self.spec.dim() {
            Dim::One => (n, 1),
            Dim::Two => (n, n),
        };
        let p = self.spec.padding();
        let mut planes: Vec<Vec<f64>> = vec![u.values().to_vec()];
        let mut kept: Vec<Vec<Vec<f64>>> = if keep {
            vec![planes.clone()]
        } else {
            Vec::new()
        };

        for q in 0..self.spec.layers() {
            let c_in = self.spec.channels()[q];
            let c_out = self.spec.channels()[q + 1];
            let last = q + 1 == self.spec.layers();
            let padded: Vec<Vec<f64>> = planes
                .iter()
                .map(|pl| self.pad_plane(pl, extent, p))
                .collect::<Result<_>>()?;
            let mut next: Vec<Vec<f64>> = Vec::with_capacity(c_out);
            for z in 0..c_out {
                let mut acc = vec![self.biases[q][z]; u.grid().len()];
                for (j, pj) in padded.iter().enumerate().take(c_in) {
                    let w = self.weight_slice(q, j, z);
                    let corr = self.correlate_plane(w, pj, extent, p)?;
                    for (a, c) in acc.iter_mut().zip(&corr) {
                        *a += c;
                    }
                }
                if !last {
                    for a in acc.iter_mut() {
                        *a = a.tanh();
                    }
                }
                next.push(acc);
            }
            planes = next;
            if keep {
                kept.push(planes.clone());
            }
        }

        let out = Field::from_values_unchecked(*u.grid(), planes.pop().expect("one channel"));
        let cache = if keep {
            Some(ActivationCache {
                planes: kept,
                extent,
            })
        } else {
            None
        };
        Ok((out, cache))
    }

    fn pad_plane(&self, plane: &[f64], extent: (usize, usize), p: usize) -> Result<Vec<f64>> {
        match self.spec.dim() {
            Dim::One => reflect_pad_1d(plane, p),
            Dim::Two => reflect_pad_2d(plane, extent.0, extent.1, p),
        }
    }

    fn correlate_plane(
        &self,
        w: &[f64],
        padded: &[f64],
        extent: (usize, usize),
        p: usize,
    ) -> Result<Vec<f64>> {
        let k = self.spec.kernel();
        match self.spec.dim() {
            Dim::One => correlate_1d(w, padded),
            Dim::Two => correlate_2d(w, k, k, padded, extent.0 + 2 * p, extent.1 + 2 * p),
        }
    }

    /// Exact gradients of `<grad_out, forward(u)>` with respect to every
    /// weight and bias, from the cached activations.
    pub fn backward(&self, cache: &ActivationCache, grad_out: &Field) -> Result<ParamGrads> {
        let layers = self.spec.layers();
        if cache.planes.len() != layers + 1 {
            return Err(Error::Invalid(
                "activation cache does not match network".into(),
            ));
        }
        let extent = cache.extent;
        let p = self.spec.padding();
        let mut grads = ParamGrads::zeros_like(&self.spec);
        let mut g: Vec<Vec<f64>> = vec![grad_out.values().to_vec()];

        for q in (0..layers).rev() {
            let c_in = self.spec.channels()[q];
            let c_out = self.spec.channels()[q + 1];
            let last = q + 1 == layers;
            let outputs = &cache.planes[q + 1];
            let inputs = &cache.planes[q];

            // d/d(pre-activation): tanh' = 1 - a^2 on hidden layers.
            let gpre: Vec<Vec<f64>> = (0..c_out)
                .map(|z| {
                    if last {
                        g[z].clone()
                    } else {
                        g[z].iter()
                            .zip(&outputs[z])
                            .map(|(&gi, &a)| gi * (1.0 - a * a))
                            .collect()
                    }
                })
                .collect();

            let padded: Vec<Vec<f64>> = inputs
                .iter()
                .map(|pl| self.pad_plane(pl, extent, p))
                .collect::<Result<_>>()?;

            let ks = self.spec.kernel_size();
            for z in 0..c_out {
                grads.biases[q][z] += gpre[z].iter().sum::<f64>();
                for (j, pj) in padded.iter().enumerate().take(c_in) {
                    let wg = self.weight_grad_plane(&gpre[z], pj, extent, p)?;
                    let base = (j * c_out + z) * ks;
                    for (t, v) in wg.iter().enumerate() {
                        grads.weights[q][base + t] += v;
                    }
                }
            }

            if q > 0 {
                let mut gin: Vec<Vec<f64>> = Vec::with_capacity(c_in);
                for j in 0..c_in {
                    let mut gpad = self.zero_padded(extent, p);
                    for (z, gz) in gpre.iter().enumerate().take(c_out) {
                        let w = self.weight_slice(q, j, z);
                        self.scatter_full_conv(w, gz, &mut gpad, extent, p);
                    }
                    gin.push(self.unpad_scatter(&gpad, extent, p));
                }
                g = gin;
            }
        }
        Ok(grads)
    }

    /// Correlating the padded input with the pre-activation gradient as the
    /// kernel yields exactly the weight-tensor gradient.
    fn weight_grad_plane(
        &self,
        gpre: &[f64],
        padded: &[f64],
        extent: (usize, usize),
        p: usize,
    ) -> Result<Vec<f64>> {
        match self.spec.dim() {
            Dim::One => correlate_1d(gpre, padded),
            Dim::Two => correlate_2d(
                gpre,
                extent.0,
                extent.1,
                padded,
                extent.0 + 2 * p,
                extent.1 + 2 * p,
            ),
        }
    }

    fn zero_padded(&self, extent: (usize, usize), p: usize) -> Vec<f64> {
        match self.spec.dim() {
            Dim::One => vec![0.0; extent.0 + 2 * p],
            Dim::Two => vec![0.0; (extent.0 + 2 * p) * (extent.1 + 2 * p)],
        }
    }

    /// Accumulate `d<.,.>/d(padded input) += full_conv(w, gpre)`.
    fn scatter_full_conv(
        &self,
        w: &[f64],
        gpre: &[f64],
        gpad: &mut [f64],
        extent: (usize, usize),
        p: usize,
    ) {
        let k = self.spec.kernel();
        match self.spec.dim() {
            Dim::One => {
                let m = extent.0;
                for (i, &gi) in gpre.iter().enumerate().take(m) {
                    if gi == 0.0 {
                        continue;
                    }
                    for (r, &wr) in w.iter().enumerate() {
                        gpad[i + r] += gi * wr;
                    }
                }
            }
            Dim::Two => {
                let (m1, m2) = extent;
                let pc = m2 + 2 * p;
                for i in 0..m1 {
                    for j in 0..m2 {
                        let gi = gpre[i * m2 + j];
                        if gi == 0.0 {
                            continue;
                        }
                        for r in 0..k {
                            let row = (i + r) * pc + j;
                            let wrow = &w[r * k..(r + 1) * k];
                            let grow = &mut gpad[row..row + k];
                            for (gp, &wv) in grow.iter_mut().zip(wrow) {
                                *gp += gi * wv;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Fold padded-position gradients back onto their mirrored sources.
    fn unpad_scatter(&self, gpad: &[f64], extent: (usize, usize), p: usize) -> Vec<f64> {
        match self.spec.dim() {
            Dim::One => {
                let m = extent.0;
                let mut gx = vec![0.0; m];
                for (t, &v) in gpad.iter().enumerate() {
                    gx[reflect_source(t, m, p)] += v;
                }
                gx
            }
            Dim::Two => {
                let (m1, m2) = extent;
                let pc = m2 + 2 * p;
                let mut gx = vec![0.0; m1 * m2];
                for t1 in 0..m1 + 2 * p {
                    let s1 = reflect_source(t1, m1, p);
                    for t2 in 0..pc {
                        let s2 = reflect_source(t2, m2, p);
                        gx[s1 * m2 + s2] += gpad[t1 * pc + t2];
                    }
                }
                gx
            }
        }
    }
}

/// Adam moment state; one buffer pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    first: ParamGrads,
    second: ParamGrads,
    step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
}

impl AdamState {
    pub fn new(spec: &ConvSpec) -> Self {
        AdamState {
            first: ParamGrads::zeros_like(spec),
            second: ParamGrads::zeros_like(spec),
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// Step-decay schedule: `lr0 * 2^{-floor(epoch / period)}`.
pub fn scheduled_lr(lr0: f64, halving_period: usize, epoch: usize) -> f64 {
    lr0 * 0.5f64.powi((epoch / halving_period.max(1)) as i32)
}

/// One Adam update with bias correction; L2 weight decay enters as `wd * w`
/// added to the raw gradient.
pub fn adam_step(
    net: &mut ConvNet,
    grads: &ParamGrads,
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) {
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps_adam);

    let update = |theta: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
        for i in 0..theta.len() {
            let grad = g[i] + weight_decay * theta[i];
            m[i] = b1 * m[i] + (1.0 - b1) * grad;
            v[i] = b2 * v[i] + (1.0 - b2) * grad * grad;
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            theta[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
    };

    for q in 0..net.spec.layers() {
        update(
            &mut net.weights[q],
            &grads.weights[q],
            &mut state.first.weights[q],
            &mut state.second.weights[q],
        );
        update(
            &mut net.biases[q],
            &grads.biases[q],
            &mut state.first.biases[q],
            &mut state.second.biases[q],
        );
    }
}

const NET_MAGIC: &[u8; 8] = b"NHNSNET1";

/// Checkpoint: the network plus the scheme step it was trained against.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub net: ConvNet,
    pub tau: f64,
    pub eps_interface: f64,
}

impl Checkpoint {
    /// Container layout: magic, dim, layer count, kernel, channel list,
    /// tau and interfacial width, then per-layer weight tensors and biases
    /// as little-endian f64, weights before biases, row-major.
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        let spec = self.net.spec();
        w.write_all(NET_MAGIC)?;
        w.write_all(&spec.dim().as_u32().to_le_bytes())?;
        w.write_all(&(spec.layers() as u32).to_le_bytes())?;
        w.write_all(&(spec.kernel() as u32).to_le_bytes())?;
        w.write_all(&(spec.channels().len() as u32).to_le_bytes())?;
        for &c in spec.channels() {
            w.write_all(&(c as u32).to_le_bytes())?;
        }
        w.write_all(&self.tau.to_le_bytes())?;
        w.write_all(&self.eps_interface.to_le_bytes())?;
        for q in 0..spec.layers() {
            for v in &self.net.weights[q] {
                w.write_all(&v.to_le_bytes())?;
            }
            for v in &self.net.biases[q] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Checkpoint> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != NET_MAGIC {
            return Err(Error::Format("bad checkpoint magic".into()));
        }
        let dim = Dim::from_u32(read_u32(r)?)?;
        let layers = read_u32(r)? as usize;
        let kernel = read_u32(r)? as usize;
        let ch_len = read_u32(r)? as usize;
        if ch_len != layers + 1 {
            return Err(Error::Format(format!(
                "channel list length {ch_len} does not match {layers} layers"
            )));
        }
        let mut channels = Vec::with_capacity(ch_len);
        for _ in 0..ch_len {
            channels.push(read_u32(r)? as usize);
        }
        let tau = read_f64(r)?;
        let eps_interface = read_f64(r)?;
        let spec = ConvSpec::new(dim, kernel, channels)?;
        let mut net = ConvNet::zeros(spec);
        for q in 0..net.spec.layers() {
            for v in net.weights[q].iter_mut() {
                *v = read_f64(r)?;
            }
            for v in net.biases[q].iter_mut() {
                *v = read_f64(r)?;
            }
        }
        Ok(Checkpoint {
            net,
            tau,
            eps_interface,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("in-memory write");
        buf
    }
}

/// Convenience for building a field-shaped grid matching a net's dimension.
pub fn grid_for(spec: &ConvSpec, n: usize) -> Result<GridSpec> {
    GridSpec::new(spec.dim(), n)
}
