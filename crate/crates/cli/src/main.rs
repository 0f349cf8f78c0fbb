//! `nhns` — data generation, training, trajectory runs, benchmarks and the
//! theory experiments for the implicit-midpoint Allen-Cahn solver with a
//! neural-network Newton initialisation.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 I/O error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nhns_core::grid::Dim;
use nhns_core::newton::NewtonConfig;
use nhns_core::training::TrainConfig;

use config::{env_seed, pick, ConfigFile};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<nhns_core::Error> for CliError {
    fn from(e: nhns_core::Error) -> Self {
        use nhns_core::Error::*;
        match e {
            Io(_) | Format(_) => CliError::Io(e.to_string()),
            Invalid(_) | Unsupported(_) | GridMismatch(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "nhns",
    version,
    about = "Implicit-midpoint Allen-Cahn solver with Newton-GMRES and neural initial guesses"
)]
struct Cli {
    /// Flat `key = value` configuration file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a corpus of random-Fourier initial data.
    GenData(GenDataCli),
    /// Train the scheme-informed network and write checkpoint + history.
    Train(TrainCli),
    /// Run a trained network on one field and optionally compare to Newton.
    Predict(PredictCli),
    /// March a trajectory and emit the diagnostics CSV bundle.
    Run(RunCli),
    /// Sweep strategies and time steps; write the benchmark table.
    Bench(BenchCli),
    /// Theory experiments.
    #[command(subcommand)]
    Theory(TheoryCli),
}

#[derive(Args)]
struct GenDataCli {
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    /// Apply the per-mode amplitude damping to 2D data as well.
    #[arg(long)]
    decay_2d: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainCli {
    /// Existing dataset container; generated on the fly when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// desk1d | paper1d | paper2d
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    eps_interface: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr0: Option<f64>,
    #[arg(long)]
    lr_halving_period: Option<usize>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    kernel: Option<usize>,
    /// Comma-separated channel sequence, e.g. 1,8,16,8,1.
    #[arg(long)]
    channels: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct PredictCli {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    sample: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also solve the step with Newton and report the L2 distance.
    #[arg(long)]
    compare_newton: bool,
}

#[derive(Args)]
struct RunCli {
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    eps_interface: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    record_every: Option<usize>,
    /// direct | neural | etd | etd-pure
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    tau_etd: Option<f64>,
    #[arg(long)]
    krylov_dim: Option<usize>,
    #[arg(long)]
    eps_tol: Option<f64>,
    #[arg(long)]
    gmres_tol: Option<f64>,
    #[arg(long)]
    gmres_restart: Option<usize>,
    #[arg(long)]
    gmres_max_iter: Option<usize>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    sample: u64,
    /// Start from this field container instead of generated data.
    #[arg(long)]
    initial: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BenchCli {
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    eps_interface: Option<f64>,
    /// Comma-separated list, e.g. 0.5,1,2.
    #[arg(long)]
    taus: Option<String>,
    /// Comma-separated subset of direct,etd,neural.
    #[arg(long)]
    strategies: Option<String>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    tau_etd: Option<f64>,
    #[arg(long)]
    krylov_dim: Option<usize>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    eps_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reference_refine: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TheoryCli {
    /// Iteration count against geometrically improved initial guesses.
    Asymptote(TheoryAsymptoteCli),
    /// Covering-number bound for a target accuracy.
    Covering(TheoryCoveringCli),
}

#[derive(Args)]
struct TheoryAsymptoteCli {
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    eps_interface: Option<f64>,
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    sample: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TheoryCoveringCli {
    #[arg(long)]
    d: u32,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    eps: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(4)
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path).map_err(CliError::Usage)?,
        None => ConfigFile::default(),
    };
    let env = env_seed().map_err(CliError::Usage)?;

    match cli.command {
        Command::GenData(args) => gen_data(args, &file, env),
        Command::Train(args) => train_cmd(args, &file, env),
        Command::Predict(args) => predict_cmd(args, &file, env),
        Command::Run(args) => run_cmd(args, &file, env),
        Command::Bench(args) => bench_cmd(args, &file, env),
        Command::Theory(TheoryCli::Asymptote(args)) => theory_asymptote(args, &file, env),
        Command::Theory(TheoryCli::Covering(args)) => theory_covering(args),
    }
}

fn parse_dim(v: u32) -> CliResult<Dim> {
    Dim::from_u32(v).map_err(|e| CliError::Usage(e.to_string()))
}

fn file_get<T: std::str::FromStr>(file: &ConfigFile, key: &str) -> CliResult<Option<T>> {
    file.get_parsed::<T>(key).map_err(CliError::Usage)
}

fn resolve_seed(
    flag: Option<u64>,
    env: Option<u64>,
    file: &ConfigFile,
    default: u64,
) -> CliResult<u64> {
    Ok(flag.or(env).or(file_get(file, "seed")?).unwrap_or(default))
}

/// Mesh and interfacial-width defaults depend on the dimension.
fn dim_defaults(dim: Dim) -> (usize, f64, usize) {
    match dim {
        Dim::One => (512, 0.01, 10),
        Dim::Two => (128, 0.02, 16),
    }
}

fn newton_from(
    eps_tol: Option<f64>,
    gmres_tol: Option<f64>,
    gmres_restart: Option<usize>,
    gmres_max_iter: Option<usize>,
    max_outer: Option<usize>,
    file: &ConfigFile,
) -> CliResult<NewtonConfig> {
    let d = NewtonConfig::default();
    Ok(NewtonConfig {
        eps_tol: pick(eps_tol, None, file_get(file, "eps_tol")?, d.eps_tol),
        max_outer: pick(max_outer, None, file_get(file, "max_outer")?, d.max_outer),
        gmres_tol: pick(gmres_tol, None, file_get(file, "gmres_tol")?, d.gmres_tol),
        gmres_restart: pick(
            gmres_restart,
            None,
            file_get(file, "gmres_restart")?,
            d.gmres_restart,
        ),
        gmres_max_iter: pick(
            gmres_max_iter,
            None,
            file_get(file, "gmres_max_iter")?,
            d.gmres_max_iter,
        ),
    })
}

fn gen_data(args: GenDataCli, file: &ConfigFile, env: Option<u64>) -> CliResult<()> {
    let dim = parse_dim(pick(args.dim, None, file_get(file, "dim")?, 1))?;
    let (n_default, _, _) = dim_defaults(dim);
    let resolved = commands::GenDataArgs {
        dim,
        n: pick(args.n, None, file_get(file, "n")?, n_default),
        count: pick(args.count, None, file_get(file, "count")?, 3520),
        seed: resolve_seed(args.seed, env, file, 7)?,
        modes: pick(args.modes, None, file_get(file, "modes")?, 128),
        m1: pick(args.m1, None, file_get(file, "m1")?, 16),
        m2: pick(args.m2, None, file_get(file, "m2")?, 16),
        decay_2d: args.decay_2d || file_get(file, "decay_2d")?.unwrap_or(false),
        out: args.out.unwrap_or_else(|| PathBuf::from("dataset.bin")),
    };
    commands::log_resolved(
        "gen-data",
        &[
            ("dim", resolved.dim.as_u32().to_string()),
            ("n", resolved.n.to_string()),
            ("count", resolved.count.to_string()),
            ("seed", resolved.seed.to_string()),
            ("modes", resolved.modes.to_string()),
            ("m1", resolved.m1.to_string()),
            ("m2", resolved.m2.to_string()),
            ("decay_2d", resolved.decay_2d.to_string()),
            ("out", resolved.out.display().to_string()),
        ],
    );
    commands::cmd_gen_data(&resolved)
}

/// Bundle of preset values used by `train`.
struct TrainPreset {
    dim: Dim,
    n: usize,
    n_train: usize,
    n_test: usize,
    tau: f64,
    eps_interface: f64,
    epochs: usize,
    lr0: f64,
    batch_size: usize,
    kernel: usize,
    channels: Vec<usize>,
}

fn train_preset(name: &str) -> CliResult<TrainPreset> {
    match name {
        "desk1d" => Ok(TrainPreset {
            dim: Dim::One,
            n: 512,
            n_train: 256,
            n_test: 32,
            tau: 2.0,
            eps_interface: 0.01,
            epochs: 50,
            lr0: 2e-3,
            batch_size: 8,
            kernel: 11,
            channels: vec![1, 8, 16, 16, 8, 1],
        }),
        "paper1d" => Ok(TrainPreset {
            dim: Dim::One,
            n: 512,
            n_train: 3200,
            n_test: 320,
            tau: 1.0,
            eps_interface: 0.01,
            epochs: 500,
            lr0: 4e-4,
            batch_size: 32,
            kernel: 21,
            channels: vec![1, 8, 16, 32, 64, 32, 16, 8, 1],
        }),
        "paper2d" => Ok(TrainPreset {
            dim: Dim::Two,
            n: 128,
            n_train: 3200,
            n_test: 320,
            tau: 0.5,
            eps_interface: 0.02,
            epochs: 500,
            lr0: 4e-4,
            batch_size: 32,
            kernel: 9,
            channels: vec![1, 16, 32, 64, 32, 16, 1],
        }),
        other => Err(CliError::Usage(format!(
            "unknown preset `{other}` (desk1d | paper1d | paper2d)"
        ))),
    }
}

fn parse_channels(raw: &str) -> CliResult<Vec<usize>> {
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad channel entry `{t}`")))
        })
        .collect()
}

fn train_cmd(args: TrainCli, file: &ConfigFile, env: Option<u64>) -> CliResult<()> {
    let preset = args.preset.as_deref().map(train_preset).transpose()?;
    let p = preset.as_ref();

    let dim = match args.dim {
        Some(v) => parse_dim(v)?,
        None => p
            .map(|p| p.dim)
            .unwrap_or(parse_dim(file_get::<u32>(file, "dim")?.unwrap_or(1))?),
    };
    let (n_default, eps_default, _) = dim_defaults(dim);
    let channels = match (&args.channels, p) {
        (Some(raw), _) => parse_channels(raw)?,
        (None, Some(p)) => p.channels.clone(),
        (None, None) => match file.get("channels") {
            Some(raw) => parse_channels(raw)?,
            None => vec![1, 8, 16, 16, 8, 1],
        },
    };
    let cfg_default = TrainConfig::default();
    let seed = resolve_seed(args.seed, env, file, 0)?;
    let resolved = commands::TrainArgs {
        data: args.data,
        dim,
        n: pick(args.n, p.map(|p| p.n), file_get(file, "n")?, n_default),
        n_train: pick(
            args.n_train,
            p.map(|p| p.n_train),
            file_get(file, "n_train")?,
            3200,
        ),
        n_test: pick(
            args.n_test,
            p.map(|p| p.n_test),
            file_get(file, "n_test")?,
            320,
        ),
        seed,
        tau: pick(args.tau, p.map(|p| p.tau), file_get(file, "tau")?, 1.0),
        eps_interface: pick(
            args.eps_interface,
            p.map(|p| p.eps_interface),
            file_get(file, "eps_interface")?,
            eps_default,
        ),
        kernel: pick(
            args.kernel,
            p.map(|p| p.kernel),
            file_get(file, "kernel")?,
            11,
        ),
        channels,
        train_cfg: TrainConfig {
            epochs: pick(
                args.epochs,
                p.map(|p| p.epochs),
                file_get(file, "epochs")?,
                cfg_default.epochs,
            ),
            lr0: pick(
                args.lr0,
                p.map(|p| p.lr0),
                file_get(file, "lr0")?,
                cfg_default.lr0,
            ),
            lr_halving_period: pick(
                args.lr_halving_period,
                None,
                file_get(file, "lr_halving_period")?,
                cfg_default.lr_halving_period,
            ),
            weight_decay: pick(
                args.weight_decay,
                None,
                file_get(file, "weight_decay")?,
                cfg_default.weight_decay,
            ),
            batch_size: pick(
                args.batch_size,
                p.map(|p| p.batch_size),
                file_get(file, "batch_size")?,
                cfg_default.batch_size,
            ),
            seed,
        },
        out: args.out.unwrap_or_else(|| PathBuf::from("checkpoint.bin")),
        history: args.history.unwrap_or_else(|| PathBuf::from("history.csv")),
    };
    commands::log_resolved(
        "train",
        &[
            ("dim", resolved.dim.as_u32().to_string()),
            ("n", resolved.n.to_string()),
            ("n_train", resolved.n_train.to_string()),
            ("n_test", resolved.n_test.to_string()),
            ("tau", resolved.tau.to_string()),
            ("eps_interface", resolved.eps_interface.to_string()),
            ("epochs", resolved.train_cfg.epochs.to_string()),
            ("lr0", resolved.train_cfg.lr0.to_string()),
            (
                "lr_halving_period",
                resolved.train_cfg.lr_halving_period.to_string(),
            ),
            ("weight_decay", resolved.train_cfg.weight_decay.to_string()),
            ("batch_size", resolved.train_cfg.batch_size.to_string()),
            ("kernel", resolved.kernel.to_string()),
            (
                "channels",
                resolved
                    .channels
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("seed", resolved.seed.to_string()),
            ("out", resolved.out.display().to_string()),
            ("history", resolved.history.display().to_string()),
        ],
    );
    commands::cmd_train(&resolved)
}

fn predict_cmd(args: PredictCli, file: &ConfigFile, env: Option<u64>) -> CliResult<()> {
    let resolved = commands::PredictArgs {
        checkpoint: args.checkpoint,
        input: args.input,
        data: args.data,
        index: args.index,
        seed: resolve_seed(args.seed, env, file, 7)?,
        sample: args.sample,
        n: pick(args.n, None, file_get(file, "n")?, 512),
        out: args.out.unwrap_or_else(|| PathBuf::from("prediction.bin")),
        compare_newton: args.compare_newton,
    };
    commands::log_resolved(
        "predict",
        &[
            ("checkpoint", resolved.checkpoint.display().to_string()),
            ("sample", resolved.sample.to_string()),
            ("seed", resolved.seed.to_string()),
            ("out", resolved.out.display().to_string()),
        ],
    );
    commands::cmd_predict(&resolved)
}

fn run_cmd(args: RunCli, file: &ConfigFile, env: Option<u64>) -> CliResult<()> {
    let dim = parse_dim(pick(args.dim, None, file_get(file, "dim")?, 1))?;
    let (n_default, eps_default, krylov_default) = dim_defaults(dim);
    let resolved = commands::RunArgs {
        dim,
        n: pick(args.n, None, file_get(file, "n")?, n_default),
        tau: pick(args.tau, None, file_get(file, "tau")?, 1.0),
        eps_interface: pick(
            args.eps_interface,
            None,
            file_get(file, "eps_interface")?,
            eps_default,
        ),
        t_end: pick(args.t_end, None, file_get(file, "t_end")?, 4.0),
        record_every: pick(args.record_every, None, file_get(file, "record_every")?, 1),
        strategy: pick(
            args.strategy,
            None,
            file.get("strategy").map(str::to_string),
            "direct".into(),
        ),
        checkpoint: args
            .checkpoint
            .or_else(|| file.get("checkpoint").map(PathBuf::from)),
        tau_etd: pick(
            args.tau_etd.map(Some),
            None,
            file_get(file, "tau_etd")?.map(Some),
            None,
        ),
        krylov_dim: pick(
            args.krylov_dim,
            None,
            file_get(file, "krylov_dim")?,
            krylov_default,
        ),
        newton: newton_from(
            args.eps_tol,
            args.gmres_tol,
            args.gmres_restart,
            args.gmres_max_iter,
            args.max_outer,
            file,
        )?,
        seed: resolve_seed(args.seed, env, file, 7)?,
        sample: args.sample,
        initial: args.initial,
        out_dir: args.out_dir.unwrap_or_else(|| PathBuf::from("runout")),
    };
    commands::log_resolved(
        "run",
        &[
            ("dim", resolved.dim.as_u32().to_string()),
            ("n", resolved.n.to_string()),
            ("tau", resolved.tau.to_string()),
            ("eps_interface", resolved.eps_interface.to_string()),
            ("t_end", resolved.t_end.to_string()),
            ("record_every", resolved.record_every.to_string()),
            ("strategy", resolved.strategy.clone()),
            ("krylov_dim", resolved.krylov_dim.to_string()),
            ("eps_tol", format!("{:e}", resolved.newton.eps_tol)),
            ("seed", resolved.seed.to_string()),
            ("sample", resolved.sample.to_string()),
            ("out_dir", resolved.out_dir.display().to_string()),
        ],
    );
    commands::cmd_run(&resolved)
}

fn parse_taus(raw: &str) -> CliResult<Vec<f64>> {
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad tau entry `{t}`")))
        })
        .collect()
}

fn bench_cmd(args: BenchCli, file: &ConfigFile, env: Option<u64>) -> CliResult<()> {
    let dim = parse_dim(pick(args.dim, None, file_get(file, "dim")?, 1))?;
    let (n_default, eps_default, krylov_default) = dim_defaults(dim);
    let taus = match args.taus.as_deref().or_else(|| file.get("taus")) {
        Some(raw) => parse_taus(raw)?,
        None => vec![0.5, 1.0, 2.0],
    };
    let strategies: Vec<String> = args
        .strategies
        .as_deref()
        .or_else(|| file.get("strategies"))
        .unwrap_or("direct")
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let resolved = commands::BenchArgs {
        dim,
        n: pick(args.n, None, file_get(file, "n")?, n_default),
        eps_interface: pick(
            args.eps_interface,
            None,
            file_get(file, "eps_interface")?,
            eps_default,
        ),
        taus,
        strategies,
        seeds: pick(args.seeds, None, file_get(file, "seeds")?, 100),
        steps: pick(args.steps, None, file_get(file, "steps")?, 1),
        tau_etd: args.tau_etd.or(file_get(file, "tau_etd")?),
        krylov_dim: pick(
            args.krylov_dim,
            None,
            file_get(file, "krylov_dim")?,
            krylov_default,
        ),
        checkpoint: args
            .checkpoint
            .or_else(|| file.get("checkpoint").map(PathBuf::from)),
        newton: newton_from(args.eps_tol, None, None, None, None, file)?,
        seed: resolve_seed(args.seed, env, file, 7)?,
        reference_refine: pick(
            args.reference_refine,
            None,
            file_get(file, "reference_refine")?,
            32,
        ),
        out: args.out.unwrap_or_else(|| PathBuf::from("bench.csv")),
    };
    commands::log_resolved(
        "bench",
        &[
            ("dim", resolved.dim.as_u32().to_string()),
            ("n", resolved.n.to_string()),
            ("taus", format!("{:?}", resolved.taus)),
            ("strategies", resolved.strategies.join(",")),
            ("seeds", resolved.seeds.to_string()),
            ("steps", resolved.steps.to_string()),
            ("krylov_dim", resolved.krylov_dim.to_string()),
            ("seed", resolved.seed.to_string()),
            ("reference_refine", resolved.reference_refine.to_string()),
            ("out", resolved.out.display().to_string()),
        ],
    );
    commands::cmd_bench(&resolved)
}

fn theory_asymptote(
    args: TheoryAsymptoteCli,
    file: &ConfigFile,
    env: Option<u64>,
) -> CliResult<()> {
    let dim = parse_dim(pick(args.dim, None, file_get(file, "dim")?, 1))?;
    let (n_default, eps_default, _) = dim_defaults(dim);
    let nmax_default = match dim {
        Dim::One => 17,
        Dim::Two => 12,
    };
    let resolved = commands::TheoryAsymptoteArgs {
        dim,
        n: pick(args.n, None, file_get(file, "n")?, n_default),
        tau: pick(args.tau, None, file_get(file, "tau")?, 1.0),
        eps_interface: pick(
            args.eps_interface,
            None,
            file_get(file, "eps_interface")?,
            eps_default,
        ),
        nmax: pick(args.nmax, None, file_get(file, "nmax")?, nmax_default),
        seed: resolve_seed(args.seed, env, file, 7)?,
        sample: args.sample,
        newton: newton_from(None, None, None, None, None, file)?,
        out: args.out.unwrap_or_else(|| PathBuf::from("asymptote.csv")),
    };
    commands::log_resolved(
        "theory asymptote",
        &[
            ("dim", resolved.dim.as_u32().to_string()),
            ("n", resolved.n.to_string()),
            ("tau", resolved.tau.to_string()),
            ("nmax", resolved.nmax.to_string()),
            ("seed", resolved.seed.to_string()),
            ("out", resolved.out.display().to_string()),
        ],
    );
    commands::cmd_theory_asymptote(&resolved)
}

fn theory_covering(args: TheoryCoveringCli) -> CliResult<()> {
    let resolved = commands::TheoryCoveringArgs {
        d: args.d,
        alpha: args.alpha,
        beta: args.beta,
        epsilon: args.eps,
    };
    commands::log_resolved(
        "theory covering",
        &[
            ("d", resolved.d.to_string()),
            ("alpha", resolved.alpha.to_string()),
            ("beta", resolved.beta.to_string()),
            ("epsilon", resolved.epsilon.to_string()),
        ],
    );
    commands::cmd_theory_covering(&resolved)
}
