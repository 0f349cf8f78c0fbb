//! Implicit-midpoint time stepping for the Allen-Cahn equation on uniform
//! Neumann grids, with matrix-free Newton-GMRES nonlinear solves, an
//! exponential-time-differencing reference integrator built on Arnoldi
//! phi-functions, and a small convolutional network trained against the
//! scheme residual to supply Newton initial guesses.

pub mod analysis;
pub mod dense;
pub mod grid;
pub mod hybrid;
pub mod net;
pub mod newton;
pub mod schemes;
pub mod training;

pub use grid::{Dim, Field, GridSpec, LaplacianOp, NormKind};
pub use newton::{NewtonConfig, NewtonReport};
pub use schemes::{EtdParams, SchemeParams};

use newton::NewtonReport as Report;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("linear solve stalled: residual {achieved:.3e} after {iters} iterations (required {required:.3e})")]
    LinearSolve {
        achieved: f64,
        required: f64,
        iters: usize,
        best: Box<Field>,
    },
    #[error(
        "newton did not converge within {max_outer} iterations (last update {last_update:.3e})"
    )]
    NewtonNonConvergence {
        max_outer: usize,
        last_update: f64,
        report: Box<Report>,
        best: Box<Field>,
    },
    #[error("newton iterate became non-finite at iteration {iteration}")]
    NewtonDiverged {
        iteration: usize,
        report: Box<Report>,
    },
    #[error("training aborted: non-finite loss at epoch {epoch}")]
    NonFiniteLoss {
        epoch: usize,
        history: training::TrainHistory,
    },
    #[error("run aborted at step {step}: {source}")]
    RunAborted {
        step: usize,
        report: Box<hybrid::RunReport>,
        source: Box<Error>,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn grid_mismatch(what: &str) -> Self {
        Error::GridMismatch(what.to_string())
    }
}
