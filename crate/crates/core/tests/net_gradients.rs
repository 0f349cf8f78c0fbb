//! Network-level oracles: reflect padding against an independent reference,
//! the channel-sequence pin behind the published parameter counts, gradient
//! checks in 2D, and checkpoint round-trip properties.

mod common;

use nhns_core::grid::{Dim, Field, GridSpec};
use nhns_core::net::{reflect_pad_1d, reflect_pad_2d, Checkpoint, ConvNet, ConvSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Reference reflect padding built on explicit signal extension: walk the
/// infinite mirrored index sequence instead of closed-form index maps.
fn reflect_reference(x: &[f64], p: usize) -> Vec<f64> {
    let m = x.len() as isize;
    let fold = |mut t: isize| -> usize {
        // Reflect t into [0, m) around 0 and m-1 without repeating edges.
        loop {
            if t < 0 {
                t = -t;
            } else if t >= m {
                t = 2 * (m - 1) - t;
            } else {
                return t as usize;
            }
        }
    };
    (0..x.len() + 2 * p)
        .map(|i| x[fold(i as isize - p as isize)])
        .collect()
}

#[test]
fn reflect_matches_reference_implementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    use rand::Rng;
    for m in 3..12usize {
        for p in 0..m {
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert_eq!(reflect_pad_1d(&x, p).unwrap(), reflect_reference(&x, p));
        }
    }
}

#[test]
fn reflect_2d_separable() {
    // Padding the plane equals padding rows then columns.
    let (rows, cols, p) = (4usize, 5usize, 2usize);
    let x: Vec<f64> = (0..rows * cols).map(|i| i as f64).collect();
    let full = reflect_pad_2d(&x, rows, cols, p).unwrap();

    let mut row_padded = Vec::new();
    for r in 0..rows {
        row_padded.push(reflect_pad_1d(&x[r * cols..(r + 1) * cols], p).unwrap());
    }
    let pc = cols + 2 * p;
    for c in 0..pc {
        let col: Vec<f64> = (0..rows).map(|r| row_padded[r][c]).collect();
        let padded_col = reflect_pad_1d(&col, p).unwrap();
        for (r, v) in padded_col.iter().enumerate() {
            assert_eq!(full[r * pc + c], *v);
        }
    }
}

#[test]
fn channel_sequences_are_pinned_by_parameter_counts() {
    // Enumerate monotone power-of-two "wide middle" channel sequences and
    // confirm the published counts single out exactly one sequence each.
    fn count(channels: &[usize], ks: usize) -> usize {
        (0..channels.len() - 1)
            .map(|q| channels[q] * channels[q + 1] * ks + channels[q + 1])
            .sum()
    }
    fn enumerate(layers: usize, ks: usize, target: usize) -> Vec<Vec<usize>> {
        let pows: Vec<usize> = (0..10).map(|e| 1usize << e).collect();
        let mut hits = Vec::new();
        let mut stack = vec![vec![1usize]];
        while let Some(prefix) = stack.pop() {
            if prefix.len() == layers {
                let mut full = prefix.clone();
                full.push(1);
                let half = layers / 2;
                let rising = (0..half).all(|q| full[q + 1] >= full[q]);
                let falling = (layers - half..layers).all(|q| full[q + 1] <= full[q]);
                if rising && falling && count(&full, ks) == target {
                    hits.push(full);
                }
                continue;
            }
            for &c in &pows {
                let mut next = prefix.clone();
                next.push(c);
                stack.push(next);
            }
        }
        hits
    }

    let hits_1d = enumerate(8, 21, 113409);
    assert_eq!(hits_1d, vec![vec![1, 8, 16, 32, 64, 32, 16, 8, 1]]);
    assert_eq!(ConvSpec::paper_1d().channels(), &hits_1d[0][..]);

    let hits_2d = enumerate(6, 81, 417473);
    assert_eq!(hits_2d, vec![vec![1, 16, 32, 64, 32, 16, 1]]);
    assert_eq!(ConvSpec::paper_2d().channels(), &hits_2d[0][..]);
}

#[test]
fn backward_matches_finite_differences_2d() {
    let spec = ConvSpec::new(Dim::Two, 3, vec![1, 3, 3, 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut net = ConvNet::random(spec, &mut rng);
    let grid = GridSpec::new_2d(8).unwrap();
    let u = Field::from_fn_2d(grid, |x, y| 0.5 * (x.sin() + (2.0 * y).cos())).unwrap();
    let gout = Field::from_fn_2d(grid, |x, y| (x * y * 0.2).cos()).unwrap();

    let (_, cache) = net.forward_cached(&u).unwrap();
    let grads = net.backward(&cache, &gout).unwrap();

    let objective = |net: &ConvNet| -> f64 {
        let out = net.forward(&u).unwrap();
        out.values()
            .iter()
            .zip(gout.values())
            .map(|(a, b)| a * b)
            .sum()
    };
    let delta = 1e-6;
    let mut worst: f64 = 0.0;
    for q in 0..net.spec().layers() {
        for idx in 0..net.weights()[q].len() {
            let orig = net.weights()[q][idx];
            net.weights_mut()[q][idx] = orig + delta;
            let up = objective(&net);
            net.weights_mut()[q][idx] = orig - delta;
            let dn = objective(&net);
            net.weights_mut()[q][idx] = orig;
            let fd = (up - dn) / (2.0 * delta);
            let an = grads.weights[q][idx];
            worst = worst.max((fd - an).abs() / an.abs().max(1e-8));
        }
        for idx in 0..net.biases()[q].len() {
            let orig = net.biases()[q][idx];
            net.biases_mut()[q][idx] = orig + delta;
            let up = objective(&net);
            net.biases_mut()[q][idx] = orig - delta;
            let dn = objective(&net);
            net.biases_mut()[q][idx] = orig;
            let fd = (up - dn) / (2.0 * delta);
            let an = grads.biases[q][idx];
            worst = worst.max((fd - an).abs() / an.abs().max(1e-8));
        }
    }
    assert!(worst <= 1e-6, "worst relative error {worst:.3e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn checkpoint_roundtrip_is_bit_exact(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = ConvSpec::new(Dim::One, 5, vec![1, 4, 4, 1]).unwrap();
        let net = ConvNet::random(spec, &mut rng);
        let ck = Checkpoint { net, tau: 1.0 + seed as f64, eps_interface: 0.01 };
        let bytes = ck.to_bytes();
        let back = Checkpoint::read(&mut bytes.as_slice()).unwrap();
        prop_assert!(back.net == ck.net);
        prop_assert!(back.tau == ck.tau);
        prop_assert!(back.eps_interface == ck.eps_interface);
    }

    #[test]
    fn forward_preserves_spatial_size(n in 8usize..40) {
        let spec = ConvSpec::new(Dim::One, 7, vec![1, 2, 2, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let net = ConvNet::random(spec, &mut rng);
        let grid = GridSpec::new_1d(n).unwrap();
        let u = Field::from_fn_1d(grid, |x| x.sin()).unwrap();
        let out = net.forward(&u).unwrap();
        prop_assert_eq!(out.values().len(), n);
    }
}
