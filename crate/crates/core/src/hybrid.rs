//! Time-marching orchestration: march an initial field with the implicit
//! midpoint method, pick the Newton initial guess per strategy (direct
//! carry-over, network prediction, or composed ETD substeps), collect
//! structure-preservation diagnostics, and run benchmark sweeps.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::grid::Field;
use crate::net::ConvNet;
use crate::newton::{newton_solve, NewtonConfig, NewtonReport};
use crate::schemes::{energy, etd_step, EtdParams, SchemeParams};
use crate::training::{generate_initial_data, DatasetSpec};
use crate::{Error, Result};

/// Where the Newton iteration starts each step.
#[derive(Debug, Clone)]
pub enum InitStrategy {
    /// Previous state.
    Direct,
    /// Network prediction from the previous state.
    Neural(Box<ConvNet>),
    /// ETD substeps of size `tau_etd` composed up to the midpoint step.
    EtdPredictor { tau_etd: f64, krylov_dim: usize },
}

impl InitStrategy {
    pub fn label(&self) -> &'static str {
        match self {
            InitStrategy::Direct => "direct",
            InitStrategy::Neural(_) => "neural",
            InitStrategy::EtdPredictor { .. } => "etd",
        }
    }
}

/// Configuration of one trajectory run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scheme: SchemeParams,
    pub newton: NewtonConfig,
    pub strategy: InitStrategy,
    pub t_end: f64,
    /// Steps between recorded diagnostics.
    pub record_every: usize,
}

impl RunConfig {
    /// Number of steps; `t_end / tau` must be integral.
    pub fn steps(&self) -> Result<usize> {
        let ratio = self.t_end / self.scheme.tau();
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > 1e-12 * ratio.abs().max(1.0) {
            return Err(Error::Invalid(format!(
                "t_end / tau must be a positive integer, got {ratio}"
            )));
        }
        Ok(rounded as usize)
    }
}

/// Trajectory diagnostics: per-step Newton traces, recorded energy and
/// max-norm series, and wall-time split into guess and solve phases.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub newton: Vec<NewtonReport>,
    /// `(step, E(u_step))` at recorded steps, step 0 included.
    pub energy: Vec<(usize, f64)>,
    /// `(step, max |u_step|)` at recorded steps, step 0 included.
    pub max_abs: Vec<(usize, f64)>,
    pub guess_seconds: f64,
    pub newton_seconds: f64,
    pub total_seconds: f64,
}

impl RunReport {
    pub fn total_iterations(&self) -> usize {
        self.newton.iter().map(|r| r.iterations()).sum()
    }

    pub fn mean_iterations(&self) -> f64 {
        if self.newton.is_empty() {
            return 0.0;
        }
        self.total_iterations() as f64 / self.newton.len() as f64
    }

    /// Write the `energy.csv`, `maxabs.csv`, `iters.csv`, `timing.csv`
    /// bundle into a directory.
    pub fn write_csv_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut f = std::fs::File::create(dir.join("energy.csv"))?;
        writeln!(f, "step,energy")?;
        for (s, e) in &self.energy {
            writeln!(f, "{s},{e:.16e}")?;
        }
        let mut f = std::fs::File::create(dir.join("maxabs.csv"))?;
        writeln!(f, "step,max_abs")?;
        for (s, m) in &self.max_abs {
            writeln!(f, "{s},{m:.16e}")?;
        }
        let mut f = std::fs::File::create(dir.join("iters.csv"))?;
        writeln!(f, "step,newton_iters,gmres_iters")?;
        for (s, r) in self.newton.iter().enumerate() {
            let gmres: usize = r.gmres_iters.iter().sum();
            writeln!(f, "{},{},{}", s + 1, r.iterations(), gmres)?;
        }
        let mut f = std::fs::File::create(dir.join("timing.csv"))?;
        writeln!(f, "guess_seconds,newton_seconds,total_seconds")?;
        writeln!(
            f,
            "{:.6},{:.6},{:.6}",
            self.guess_seconds, self.newton_seconds, self.total_seconds
        )?;
        Ok(())
    }
}

/// Produce the Newton starting point for one step.
pub fn initial_guess(
    strategy: &InitStrategy,
    scheme: &SchemeParams,
    u_prev: &Field,
) -> Result<Field> {
    match strategy {
        InitStrategy::Direct => Ok(u_prev.clone()),
        InitStrategy::Neural(net) => {
            if net.spec().dim() != u_prev.grid().dim() {
                return Err(Error::grid_mismatch("checkpoint dimension vs run grid"));
            }
            net.forward(u_prev)
        }
        InitStrategy::EtdPredictor {
            tau_etd,
            krylov_dim,
        } => {
            if !(*tau_etd > 0.0) {
                return Err(Error::Invalid("tau_etd must be positive".into()));
            }
            // Compose substeps of size tau_etd up to the midpoint step,
            // shortening the final one to land exactly on tau.
            let mut remaining = scheme.tau();
            let mut state = u_prev.clone();
            while remaining > 1e-14 * scheme.tau() {
                let dt = tau_etd.min(remaining);
                let sub = EtdParams::new(scheme.with_tau(dt)?, *krylov_dim)?;
                state = etd_step(&sub, &state)?;
                remaining -= dt;
            }
            Ok(state)
        }
    }
}

/// Outcome of one hybrid step.
pub struct StepOutcome {
    pub state: Field,
    pub report: NewtonReport,
    pub guess_seconds: f64,
}

/// One implicit midpoint step: initial guess, then Newton.
pub fn step(cfg: &RunConfig, u_prev: &Field) -> Result<StepOutcome> {
    let t0 = Instant::now();
    let y0 = initial_guess(&cfg.strategy, &cfg.scheme, u_prev)?;
    let guess_seconds = t0.elapsed().as_secs_f64();
    let (state, report) = newton_solve(&cfg.scheme, u_prev, &y0, &cfg.newton)?;
    Ok(StepOutcome {
        state,
        report,
        guess_seconds,
    })
}

/// March `u0` to `t_end`, recording diagnostics every `record_every` steps
/// (step 0 is always recorded). The first non-convergent step aborts.
pub fn run(cfg: &RunConfig, u0: &Field) -> Result<RunReport> {
    run_final_state(cfg, u0).map(|(_, report)| report)
}

/// Same as [`run`] but also hands back the final state, which benches and
/// equivalence tests need. A non-convergent step aborts with the partial
/// diagnostics wrapped into the error.
pub fn run_final_state(cfg: &RunConfig, u0: &Field) -> Result<(Field, RunReport)> {
    let steps = cfg.steps()?;
    let every = cfg.record_every.max(1);
    let t_start = Instant::now();
    let mut report = RunReport::default();
    let mut u = u0.clone();
    report.energy.push((0, energy(&cfg.scheme, &u)));
    report.max_abs.push((0, u.linf()));
    for s in 1..=steps {
        let out = match step(cfg, &u) {
            Ok(out) => out,
            Err(e) => {
                report.total_seconds = t_start.elapsed().as_secs_f64();
                return Err(Error::RunAborted {
                    step: s,
                    report: Box::new(report),
                    source: Box::new(e),
                });
            }
        };
        u = out.state;
        report.guess_seconds += out.guess_seconds;
        report.newton_seconds += out.report.wall_time;
        report.newton.push(out.report);
        if s % every == 0 || s == steps {
            report.energy.push((s, energy(&cfg.scheme, &u)));
            report.max_abs.push((s, u.linf()));
        }
    }
    report.total_seconds = t_start.elapsed().as_secs_f64();
    Ok((u, report))
}

/// Pure ETD integration with the same diagnostics (no Newton involved);
/// the standalone explicit baseline.
pub fn run_etd_pure(
    etd: &EtdParams,
    t_end: f64,
    record_every: usize,
    u0: &Field,
) -> Result<(Field, RunReport)> {
    let scheme = etd.scheme();
    let ratio = t_end / scheme.tau();
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-12 * ratio.abs().max(1.0) {
        return Err(Error::Invalid(format!(
            "t_end / tau must be a positive integer, got {ratio}"
        )));
    }
    let steps = rounded as usize;
    let every = record_every.max(1);
    let t_start = Instant::now();
    let mut report = RunReport::default();
    let mut u = u0.clone();
    report.energy.push((0, energy(scheme, &u)));
    report.max_abs.push((0, u.linf()));
    for s in 1..=steps {
        u = etd_step(etd, &u)?;
        if !u.is_finite() {
            return Err(Error::Domain(format!(
                "ETD state became non-finite at step {s}"
            )));
        }
        if s % every == 0 || s == steps {
            report.energy.push((s, energy(scheme, &u)));
            report.max_abs.push((s, u.linf()));
        }
    }
    report.total_seconds = t_start.elapsed().as_secs_f64();
    Ok((u, report))
}

/// One benchmark configuration: a strategy evaluated on seeded initial data.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub scheme: SchemeParams,
    pub newton: NewtonConfig,
    pub dataset: DatasetSpec,
    /// Sample indices used as initial data.
    pub seeds: Vec<u64>,
    /// Steps per sample (1 reproduces the single-step iteration tables).
    pub steps: usize,
    /// Reference refinement for the error column: midpoint at tau / refine.
    pub reference_refine: usize,
}

/// One row of the benchmark table.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub dim: u32,
    pub tau: f64,
    pub strategy: String,
    pub mean_iters: f64,
    pub mean_guess_time: f64,
    pub mean_newton_time: f64,
    pub mean_total_time: f64,
    pub l2_error_vs_reference: f64,
}

pub fn write_bench_csv<W: Write>(w: &mut W, rows: &[BenchRow]) -> Result<()> {
    writeln!(
        w,
        "dim,tau,strategy,mean_iters,mean_guess_time,mean_newton_time,mean_total_time,l2_error_vs_reference"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.4},{:.6e},{:.6e},{:.6e},{:.6e}",
            r.dim,
            r.tau,
            r.strategy,
            r.mean_iters,
            r.mean_guess_time,
            r.mean_newton_time,
            r.mean_total_time,
            r.l2_error_vs_reference
        )?;
    }
    Ok(())
}

/// Evaluate one strategy over the seed set; iteration counts average over
/// every Newton solve performed, the error column compares final states
/// against a refined midpoint reference from the same data.
pub fn bench(cfg: &BenchConfig, strategy: &InitStrategy) -> Result<BenchRow> {
    if cfg.seeds.is_empty() || cfg.steps == 0 {
        return Err(Error::Invalid(
            "bench needs seeds and at least one step".into(),
        ));
    }
    let tau = cfg.scheme.tau();
    let t_end = tau * cfg.steps as f64;
    let mut iters = 0usize;
    let mut solves = 0usize;
    let mut guess_t = 0.0;
    let mut newton_t = 0.0;
    let mut total_t = 0.0;
    let mut err_acc = 0.0;

    for &sample in &cfg.seeds {
        let u0 = generate_initial_data(&cfg.dataset, sample)?;
        let run_cfg = RunConfig {
            scheme: cfg.scheme.clone(),
            newton: cfg.newton.clone(),
            strategy: strategy.clone(),
            t_end,
            record_every: cfg.steps,
        };
        let (final_state, report) = run_final_state(&run_cfg, &u0)?;
        iters += report.total_iterations();
        solves += report.newton.len();
        guess_t += report.guess_seconds;
        newton_t += report.newton_seconds;
        total_t += report.total_seconds;

        if cfg.reference_refine > 1 {
            let ref_cfg = RunConfig {
                scheme: cfg.scheme.with_tau(tau / cfg.reference_refine as f64)?,
                newton: cfg.newton.clone(),
                strategy: InitStrategy::Direct,
                t_end,
                record_every: cfg.steps * cfg.reference_refine,
            };
            let (reference, _) = run_final_state(&ref_cfg, &u0)?;
            err_acc += final_state.l2_distance(&reference)?;
        }
    }

    let n = cfg.seeds.len() as f64;
    Ok(BenchRow {
        dim: cfg.scheme.grid().dim().as_u32(),
        tau,
        strategy: strategy.label().to_string(),
        mean_iters: iters as f64 / solves.max(1) as f64,
        mean_guess_time: guess_t / n,
        mean_newton_time: newton_t / n,
        mean_total_time: total_t / n,
        l2_error_vs_reference: err_acc / n,
    })
}
