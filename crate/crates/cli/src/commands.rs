//! Implementations of the CLI subcommands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nhns_core::analysis::{
    covering_number, iteration_asymptote_experiment, CoveringNumber, CoveringQuery,
};
use nhns_core::grid::{Dim, Field, GridSpec, LaplacianOp};
use nhns_core::hybrid::{
    bench, run_etd_pure, run_final_state, BenchConfig, BenchRow, InitStrategy, RunConfig,
};
use nhns_core::net::{Checkpoint, ConvNet, ConvSpec};
use nhns_core::newton::{newton_solve, NewtonConfig};
use nhns_core::schemes::{EtdParams, SchemeParams};
use nhns_core::training::{
    generate_initial_data, read_dataset, train, write_dataset, DatasetSpec, TrainConfig,
};

use crate::{CliError, CliResult};

pub fn log_resolved(command: &str, pairs: &[(&str, String)]) {
    eprintln!("[{command}] resolved configuration:");
    for (k, v) in pairs {
        eprintln!("[{command}]   {k} = {v}");
    }
}

fn scheme(dim: Dim, n: usize, tau: f64, eps: f64) -> CliResult<SchemeParams> {
    let grid = GridSpec::new(dim, n)?;
    Ok(SchemeParams::new(tau, eps, LaplacianOp::new(grid))?)
}

fn open_out(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(nhns_core::Error::Io)?,
    ))
}

pub struct GenDataArgs {
    pub dim: Dim,
    pub n: usize,
    pub count: usize,
    pub seed: u64,
    pub modes: usize,
    pub m1: usize,
    pub m2: usize,
    pub decay_2d: bool,
    pub out: PathBuf,
}

pub fn cmd_gen_data(args: &GenDataArgs) -> CliResult<()> {
    if args.count == 0 {
        return Err(CliError::Usage("count must be positive".into()));
    }
    let spec = DatasetSpec {
        dim: args.dim,
        n: args.n,
        n_train: args.count,
        n_test: 0,
        modes: args.modes,
        modes_2d: (args.m1, args.m2),
        decay_1d: true,
        decay_2d: args.decay_2d,
        seed: args.seed,
    };
    let mut fields = Vec::with_capacity(args.count);
    let mut max_norm_dev = 0.0f64;
    for i in 0..args.count as u64 {
        let f = generate_initial_data(&spec, i)?;
        max_norm_dev = max_norm_dev.max((f.linf() - 1.0).abs());
        fields.push(f);
    }
    let mut w = open_out(&args.out)?;
    write_dataset(&mut w, &fields)?;
    w.flush().map_err(nhns_core::Error::Io)?;
    println!(
        "wrote {} fields (dim {}, n {}) to {}; worst max-norm deviation {:.3e}",
        args.count,
        args.dim.as_u32(),
        args.n,
        args.out.display(),
        max_norm_dev
    );
    Ok(())
}

pub struct TrainArgs {
    pub data: Option<PathBuf>,
    pub dim: Dim,
    pub n: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub tau: f64,
    pub eps_interface: f64,
    pub kernel: usize,
    pub channels: Vec<usize>,
    pub train_cfg: TrainConfig,
    pub out: PathBuf,
    pub history: PathBuf,
}

pub fn cmd_train(args: &TrainArgs) -> CliResult<()> {
    let fields = match &args.data {
        Some(path) => {
            let mut r = BufReader::new(File::open(path).map_err(nhns_core::Error::Io)?);
            read_dataset(&mut r)?
        }
        None => {
            let spec = DatasetSpec {
                dim: args.dim,
                n: args.n,
                n_train: args.n_train,
                n_test: args.n_test,
                seed: args.seed,
                ..DatasetSpec::paper_1d(args.seed)
            };
            eprintln!("[train] generating {} samples", spec.total());
            nhns_core::training::generate_dataset(&spec)?
        }
    };
    let needed = args.n_train + args.n_test;
    if fields.len() < needed {
        return Err(CliError::Usage(format!(
            "dataset holds {} fields, need n_train + n_test = {needed}",
            fields.len()
        )));
    }
    let grid = *fields[0].grid();
    if grid.dim() != args.dim {
        return Err(CliError::Usage(
            "dataset dimension does not match --dim".into(),
        ));
    }
    let (train_set, rest) = fields.split_at(args.n_train);
    let test_set = &rest[..args.n_test];

    let params = SchemeParams::new(args.tau, args.eps_interface, LaplacianOp::new(grid))?;
    let spec = ConvSpec::new(args.dim, args.kernel, args.channels.clone())?;
    eprintln!("[train] network has {} parameters", spec.param_count());
    let net0 = ConvNet::seeded(spec, args.seed);

    let result = match train(net0, &params, train_set, test_set, &args.train_cfg) {
        Ok(r) => r,
        Err(nhns_core::Error::NonFiniteLoss { epoch, history }) => {
            // Leave the partial history behind for diagnosis.
            let mut w = open_out(&args.history)?;
            history.write_csv(&mut w)?;
            return Err(CliError::Numerical(format!(
                "training aborted with non-finite loss at epoch {epoch}; partial history in {}",
                args.history.display()
            )));
        }
        Err(e) => return Err(e.into()),
    };

    let ck = Checkpoint {
        net: result.net,
        tau: args.tau,
        eps_interface: args.eps_interface,
    };
    let mut w = open_out(&args.out)?;
    ck.write(&mut w)?;
    w.flush().map_err(nhns_core::Error::Io)?;
    let mut h = open_out(&args.history)?;
    result.history.write_csv(&mut h)?;

    let first = result.history.rows.first().unwrap();
    let last = result.history.rows.last().unwrap();
    println!(
        "trained {} epochs: train loss {:.4e} -> {:.4e}, best test loss {:.4e} at epoch {}; checkpoint {}",
        result.history.rows.len(),
        first.train_loss,
        last.train_loss,
        result.best_test_loss,
        result.best_epoch,
        args.out.display()
    );
    Ok(())
}

pub struct PredictArgs {
    pub checkpoint: PathBuf,
    pub input: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub index: usize,
    pub seed: u64,
    pub sample: u64,
    pub n: usize,
    pub out: PathBuf,
    pub compare_newton: bool,
}

pub fn cmd_predict(args: &PredictArgs) -> CliResult<()> {
    let ck = read_checkpoint(&args.checkpoint)?;
    let u = load_input_field(
        &args.input,
        &args.data,
        args.index,
        ck.net.spec().dim(),
        args.n,
        args.seed,
        args.sample,
    )?;
    let pred = ck.net.forward(&u)?;
    let mut w = open_out(&args.out)?;
    pred.write_binary(&mut w)?;
    println!("prediction written to {}", args.out.display());

    if args.compare_newton {
        let params = SchemeParams::new(ck.tau, ck.eps_interface, LaplacianOp::new(*u.grid()))?;
        let (solution, report) = newton_solve(&params, &u, &u, &NewtonConfig::default())?;
        let err = pred.l2_distance(&solution)?;
        println!(
            "L2 distance to Newton-converged midpoint step (tau = {}): {:.6e} ({} iterations)",
            ck.tau,
            err,
            report.iterations()
        );
    }
    Ok(())
}

fn read_checkpoint(path: &Path) -> CliResult<Checkpoint> {
    let mut r = BufReader::new(File::open(path).map_err(nhns_core::Error::Io)?);
    Ok(Checkpoint::read(&mut r)?)
}

fn load_input_field(
    input: &Option<PathBuf>,
    data: &Option<PathBuf>,
    index: usize,
    dim: Dim,
    n: usize,
    seed: u64,
    sample: u64,
) -> CliResult<Field> {
    if let Some(path) = input {
        let mut r = BufReader::new(File::open(path).map_err(nhns_core::Error::Io)?);
        return Ok(Field::read_binary(&mut r)?);
    }
    if let Some(path) = data {
        let mut r = BufReader::new(File::open(path).map_err(nhns_core::Error::Io)?);
        let fields = read_dataset(&mut r)?;
        return fields
            .into_iter()
            .nth(index)
            .ok_or_else(|| CliError::Usage(format!("dataset has no index {index}")));
    }
    let spec = match dim {
        Dim::One => DatasetSpec {
            n,
            ..DatasetSpec::paper_1d(seed)
        },
        Dim::Two => DatasetSpec {
            n,
            ..DatasetSpec::paper_2d(seed)
        },
    };
    Ok(generate_initial_data(&spec, sample)?)
}

pub struct RunArgs {
    pub dim: Dim,
    pub n: usize,
    pub tau: f64,
    pub eps_interface: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub strategy: String,
    pub checkpoint: Option<PathBuf>,
    pub tau_etd: Option<f64>,
    pub krylov_dim: usize,
    pub newton: NewtonConfig,
    pub seed: u64,
    pub sample: u64,
    pub initial: Option<PathBuf>,
    pub out_dir: PathBuf,
}

pub fn cmd_run(args: &RunArgs) -> CliResult<()> {
    let u0 = load_input_field(
        &args.initial,
        &None,
        0,
        args.dim,
        args.n,
        args.seed,
        args.sample,
    )?;
    let grid = *u0.grid();
    let params = SchemeParams::new(args.tau, args.eps_interface, LaplacianOp::new(grid))?;

    if args.strategy == "etd-pure" {
        let etd = EtdParams::new(params, args.krylov_dim)?;
        let (final_state, report) = run_etd_pure(&etd, args.t_end, args.record_every, &u0)?;
        report.write_csv_bundle(&args.out_dir)?;
        let max_seen = report
            .max_abs
            .iter()
            .map(|(_, m)| *m)
            .fold(0.0f64, f64::max);
        println!(
            "etd-pure: {} steps, final energy {:.6e}, max |u| over run {:.12}, final max |u| {:.12}",
            report.max_abs.last().map(|(s, _)| *s).unwrap_or(0),
            report.energy.last().unwrap().1,
            max_seen,
            final_state.linf()
        );
        println!("diagnostics in {}", args.out_dir.display());
        return Ok(());
    }

    let strategy = match args.strategy.as_str() {
        "direct" => InitStrategy::Direct,
        "neural" => {
            let path = args
                .checkpoint
                .as_ref()
                .ok_or_else(|| CliError::Usage("--strategy neural requires --checkpoint".into()))?;
            let ck = read_checkpoint(path)?;
            if (ck.tau - args.tau).abs() > 1e-12 * args.tau.max(1.0) {
                eprintln!(
                    "warning: checkpoint was trained for tau = {}, run uses tau = {}",
                    ck.tau, args.tau
                );
            }
            InitStrategy::Neural(Box::new(ck.net))
        }
        "etd" => InitStrategy::EtdPredictor {
            tau_etd: args.tau_etd.unwrap_or(args.tau),
            krylov_dim: args.krylov_dim,
        },
        other => {
            return Err(CliError::Usage(format!(
                "unknown strategy `{other}` (direct | neural | etd | etd-pure)"
            )))
        }
    };

    let cfg = RunConfig {
        scheme: params,
        newton: args.newton.clone(),
        strategy,
        t_end: args.t_end,
        record_every: args.record_every,
    };
    let (final_state, report) = match run_final_state(&cfg, &u0) {
        Ok(ok) => ok,
        Err(nhns_core::Error::RunAborted {
            step,
            report,
            source,
        }) => {
            // Leave the diagnostics gathered so far behind.
            report.write_csv_bundle(&args.out_dir)?;
            return Err(CliError::Numerical(format!(
                "step {step} failed ({source}); partial diagnostics in {}",
                args.out_dir.display()
            )));
        }
        Err(e) => return Err(e.into()),
    };
    report.write_csv_bundle(&args.out_dir)?;
    println!(
        "{} steps, mean newton iterations {:.2}, final energy {:.6e}, final max |u| {:.12}",
        report.newton.len(),
        report.mean_iterations(),
        report.energy.last().unwrap().1,
        final_state.linf()
    );
    println!(
        "time: guess {:.3}s + newton {:.3}s (total {:.3}s); diagnostics in {}",
        report.guess_seconds,
        report.newton_seconds,
        report.total_seconds,
        args.out_dir.display()
    );
    Ok(())
}

pub struct BenchArgs {
    pub dim: Dim,
    pub n: usize,
    pub eps_interface: f64,
    pub taus: Vec<f64>,
    pub strategies: Vec<String>,
    pub seeds: usize,
    pub steps: usize,
    pub tau_etd: Option<f64>,
    pub krylov_dim: usize,
    pub checkpoint: Option<PathBuf>,
    pub newton: NewtonConfig,
    pub seed: u64,
    pub reference_refine: usize,
    pub out: PathBuf,
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    if args.taus.is_empty() || args.strategies.is_empty() || args.seeds == 0 {
        return Err(CliError::Usage(
            "bench needs taus, strategies and seeds".into(),
        ));
    }
    let neural_net = if args.strategies.iter().any(|s| s == "neural") {
        let path = args
            .checkpoint
            .as_ref()
            .ok_or_else(|| CliError::Usage("strategy `neural` requires --checkpoint".into()))?;
        Some(read_checkpoint(path)?.net)
    } else {
        None
    };

    let dataset = match args.dim {
        Dim::One => DatasetSpec {
            n: args.n,
            ..DatasetSpec::paper_1d(args.seed)
        },
        Dim::Two => DatasetSpec {
            n: args.n,
            ..DatasetSpec::paper_2d(args.seed)
        },
    };

    let mut rows: Vec<(BenchRow, Option<f64>)> = Vec::new();
    for &tau in &args.taus {
        let params = scheme(args.dim, args.n, tau, args.eps_interface)?;
        let cfg = BenchConfig {
            scheme: params,
            newton: args.newton.clone(),
            dataset: dataset.clone(),
            seeds: (0..args.seeds as u64).collect(),
            steps: args.steps,
            reference_refine: args.reference_refine,
        };
        let mut direct_time = None;
        for name in &args.strategies {
            let strategy = match name.as_str() {
                "direct" => InitStrategy::Direct,
                "etd" => InitStrategy::EtdPredictor {
                    tau_etd: args.tau_etd.unwrap_or(tau),
                    krylov_dim: args.krylov_dim,
                },
                "neural" => {
                    InitStrategy::Neural(Box::new(neural_net.clone().expect("checked above")))
                }
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown bench strategy `{other}` (direct | etd | neural)"
                    )))
                }
            };
            let row = bench(&cfg, &strategy)?;
            let total = row.mean_guess_time + row.mean_newton_time;
            let accel = match name.as_str() {
                "direct" => {
                    direct_time = Some(total);
                    None
                }
                _ => direct_time.map(|d| (d - total) / d),
            };
            println!(
                "tau {tau} {name}: mean iters {:.2}, guess {:.3e}s, newton {:.3e}s{}",
                row.mean_iters,
                row.mean_guess_time,
                row.mean_newton_time,
                accel.map_or(String::new(), |a| format!(
                    ", acceleration {:.2}%",
                    a * 100.0
                ))
            );
            rows.push((row, accel));
        }
    }

    let mut w = open_out(&args.out)?;
    writeln!(
        w,
        "dim,tau,strategy,mean_iters,mean_guess_time,mean_newton_time,mean_total_time,l2_error_vs_reference,acceleration_rate"
    )
    .map_err(nhns_core::Error::Io)?;
    for (r, accel) in &rows {
        writeln!(
            w,
            "{},{},{},{:.4},{:.6e},{:.6e},{:.6e},{:.6e},{}",
            r.dim,
            r.tau,
            r.strategy,
            r.mean_iters,
            r.mean_guess_time,
            r.mean_newton_time,
            r.mean_total_time,
            r.l2_error_vs_reference,
            accel.map_or(String::new(), |a| format!("{a:.4}"))
        )
        .map_err(nhns_core::Error::Io)?;
    }
    println!("bench table written to {}", args.out.display());
    Ok(())
}

pub struct TheoryAsymptoteArgs {
    pub dim: Dim,
    pub n: usize,
    pub tau: f64,
    pub eps_interface: f64,
    pub nmax: usize,
    pub seed: u64,
    pub sample: u64,
    pub newton: NewtonConfig,
    pub out: PathBuf,
}

pub fn cmd_theory_asymptote(args: &TheoryAsymptoteArgs) -> CliResult<()> {
    let params = scheme(args.dim, args.n, args.tau, args.eps_interface)?;
    let spec = match args.dim {
        Dim::One => DatasetSpec {
            n: args.n,
            ..DatasetSpec::paper_1d(args.seed)
        },
        Dim::Two => DatasetSpec {
            n: args.n,
            ..DatasetSpec::paper_2d(args.seed)
        },
    };
    let u0 = generate_initial_data(&spec, args.sample)?;
    let exp = iteration_asymptote_experiment(&params, &args.newton, &u0, args.nmax)?;
    let mut w = open_out(&args.out)?;
    exp.write_csv(&mut w)?;
    println!(
        "base L2 error {:.6e}, fitted constant {:.4}; table written to {}",
        exp.base_error,
        exp.c_tilde,
        args.out.display()
    );
    Ok(())
}

pub struct TheoryCoveringArgs {
    pub d: u32,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
}

pub fn cmd_theory_covering(args: &TheoryCoveringArgs) -> CliResult<()> {
    let q = CoveringQuery {
        d: args.d,
        alpha: args.alpha,
        beta: args.beta,
        epsilon: args.epsilon,
    };
    match covering_number(&q)? {
        CoveringNumber::Exact(n) => println!("{n}"),
        CoveringNumber::TooLarge { log10 } => {
            println!("exceeds representable range: log10(N) = {log10:.4}")
        }
    }
    Ok(())
}
