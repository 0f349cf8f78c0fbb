//! End-to-end training checks: spectral content of the generated corpus,
//! finite-difference verification of the loss adjoint and of the whole
//! parameter-gradient chain, and a reduced training run.

mod common;

use nhns_core::grid::{Dim, Field};
use nhns_core::net::{ConvNet, ConvSpec};
use nhns_core::training::{
    generate_dataset, generate_initial_data, loss, loss_gradient_wrt_output, train, DatasetSpec,
    TrainConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn generated_data_has_no_content_beyond_mode_128() {
    let spec = common::data_spec_1d(512, 19);
    let u = generate_initial_data(&spec, 0).unwrap();
    let mags = common::dft_magnitudes(u.values());
    // Modes 129..=256 (and mirrors) must vanish to round-off.
    for m in 129..=256usize {
        assert!(mags[m] <= 1e-12, "mode {m} has magnitude {:.3e}", mags[m]);
        assert!(mags[512 - m] <= 1e-12);
    }
    // And the construction is not trivially zero below the cut-off.
    let low: f64 = (1..129).map(|m| mags[m]).sum();
    assert!(low > 1e-3);
}

#[test]
fn loss_gradient_matches_entrywise_finite_differences() {
    let p = common::scheme_1d(32, 1.0, 0.05);
    let spec = common::data_spec_1d(32, 29);
    let u = generate_initial_data(&spec, 0).unwrap();
    let v = generate_initial_data(&spec, 1).unwrap();

    let grad = loss_gradient_wrt_output(&p, &u, &v).unwrap();
    let h = p.grid().h();

    // loss of a single-sample batch as a function of v, h-weighted; its
    // entrywise derivative is h * grad.
    let scalar_loss = |vf: &Field| -> f64 {
        let r = nhns_core::schemes::residual(&p, &u, vf).unwrap();
        r.l2() * r.l2()
    };
    let delta = 1e-6;
    let mut worst: f64 = 0.0;
    for entry in [0usize, 7, 15, 31] {
        let mut vals = v.values().to_vec();
        vals[entry] += delta;
        let up = scalar_loss(&Field::from_values(*p.grid(), vals.clone()).unwrap());
        vals[entry] -= 2.0 * delta;
        let dn = scalar_loss(&Field::from_values(*p.grid(), vals).unwrap());
        let fd = (up - dn) / (2.0 * delta);
        let an = h * grad.values()[entry];
        worst = worst.max((fd - an).abs() / an.abs().max(1e-10));
    }
    assert!(worst <= 1e-6, "worst relative error {worst:.3e}");
}

#[test]
fn whole_pipeline_gradient_matches_finite_differences() {
    // Chain-rule integrity: adjoint through residual + network backward
    // agrees with finite differences of the full loss.
    let p = common::scheme_1d(32, 1.0, 0.01);
    let spec = common::data_spec_1d(32, 37);
    let u = generate_initial_data(&spec, 0).unwrap();
    let batch = [u];
    let vol = p.grid().cell_volume();

    let net_spec = ConvSpec::new(Dim::One, 5, vec![1, 4, 4, 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut net = ConvNet::random(net_spec, &mut rng);

    let (pred, cache) = net.forward_cached(&batch[0]).unwrap();
    let gout = loss_gradient_wrt_output(&p, &batch[0], &pred)
        .unwrap()
        .scale(vol);
    let grads = net.backward(&cache, &gout).unwrap();

    let delta = 1e-6;
    let mut worst: f64 = 0.0;
    for q in 0..net.spec().layers() {
        for idx in (0..net.weights()[q].len()).step_by(7) {
            let orig = net.weights()[q][idx];
            net.weights_mut()[q][idx] = orig + delta;
            let up = loss(&p, &net, &batch).unwrap();
            net.weights_mut()[q][idx] = orig - delta;
            let dn = loss(&p, &net, &batch).unwrap();
            net.weights_mut()[q][idx] = orig;
            let fd = (up - dn) / (2.0 * delta);
            let an = grads.weights[q][idx];
            worst = worst.max((fd - an).abs() / an.abs().max(1e-8));
        }
    }
    assert!(worst <= 1e-5, "worst relative error {worst:.3e}");
}

#[test]
fn desk_scale_tau1_loss_drops_two_orders() {
    // Reduced corpus on the full 1D mesh: 256 samples, 50 epochs, tau = 1.
    let p = common::scheme_1d(512, 1.0, 0.01);
    let spec = DatasetSpec {
        n_train: 256,
        n_test: 32,
        ..DatasetSpec::paper_1d(21)
    };
    let fields = generate_dataset(&spec).unwrap();
    let (train_set, test_set) = fields.split_at(spec.n_train);

    let net_spec = ConvSpec::new(Dim::One, 11, vec![1, 8, 16, 16, 8, 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let net0 = ConvNet::random(net_spec, &mut rng);
    let cfg = TrainConfig {
        epochs: 50,
        lr0: 2e-3,
        batch_size: 8,
        seed: 5,
        ..Default::default()
    };
    let result = train(net0, &p, train_set, test_set, &cfg).unwrap();
    let first = result.history.rows.first().unwrap().train_loss;
    let last = result.history.rows.last().unwrap().train_loss;
    assert!(last <= 1e-2 * first, "loss went {first:.3e} -> {last:.3e}");
}

#[test]
fn reduced_training_run_learns() {
    // Tiny corpus and network: the epoch-mean loss must drop clearly and the
    // history must be monotone in wall time.
    let p = common::scheme_1d(64, 1.0, 0.01);
    let spec = DatasetSpec {
        n: 64,
        n_train: 24,
        n_test: 8,
        ..DatasetSpec::paper_1d(3)
    };
    let fields = generate_dataset(&spec).unwrap();
    let (train_set, test_set) = fields.split_at(spec.n_train);

    let net_spec = ConvSpec::new(Dim::One, 7, vec![1, 6, 6, 1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let net0 = ConvNet::random(net_spec, &mut rng);
    let cfg = TrainConfig {
        epochs: 30,
        lr0: 2e-3,
        batch_size: 8,
        seed: 9,
        ..Default::default()
    };
    let result = train(net0, &p, train_set, test_set, &cfg).unwrap();
    let first = result.history.rows.first().unwrap().train_loss;
    let last = result.history.rows.last().unwrap().train_loss;
    assert!(last < 0.2 * first, "loss went {first:.3e} -> {last:.3e}");
    assert!(result.best_test_loss <= result.history.rows[0].test_loss);

    let mut csv = Vec::new();
    result.history.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("epoch,lr,train_loss,test_loss,wall_time"));
    assert_eq!(text.lines().count(), 31);
}
