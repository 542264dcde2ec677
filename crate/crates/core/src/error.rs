use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("signal queried at t = {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("degenerate attack kernel: |D_a(1)| = {0:e}")]
    DegenerateKernel(f64),

    #[error("incompatible target: g(0) = {target} but phi1(1) = {initial}")]
    IncompatibleTarget { target: f64, initial: f64 },

    #[error("initial condition violates the Neumann condition: {0}")]
    NotNeumannCompatible(String),

    #[error("near-singular diagonal {value:e} at step {index}; reduce the time step")]
    SingularDiagonal { index: usize, value: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("numerical divergence at t = {t}: field magnitude {magnitude:e}")]
    Divergence { t: f64, magnitude: f64 },

    #[error("infeasible at requested (beta1 = {beta1}, beta2 = {beta2}); best margin {best_margin:e} over {candidates} candidates")]
    Infeasible {
        beta1: f64,
        beta2: f64,
        best_margin: f64,
        candidates: usize,
    },

    #[error("trace is missing channel `{0}`")]
    MissingChannel(&'static str),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
