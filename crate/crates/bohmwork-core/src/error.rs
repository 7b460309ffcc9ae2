//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, BohmError>;

#[derive(Debug, Error)]
pub enum BohmError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("wave function is not normalized: |psi|^2 integrates to {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    #[error("degenerate wave function (zero norm)")]
    DegenerateState,

    #[error("zero density: cannot sample initial positions")]
    ZeroDensity,

    #[error("time step {dt} exceeds the plan bound {max_dt}")]
    StepTooLarge { dt: f64, max_dt: f64 },

    #[error("invalid propagation plan: {0}")]
    InvalidPlan(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trajectory left the grid interior at x = {x}, t = {t} (sample {sample})")]
    DomainExit { sample: usize, x: f64, t: f64 },

    #[error("trajectory hit a density node at x = {x}, t = {t} (sample {sample})")]
    NodeCollision { sample: usize, x: f64, t: f64 },

    #[error("ensemble aborted: {failures} trajectory failures exceed budget {budget}; first: {first}")]
    FailureBudgetExceeded {
        failures: usize,
        budget: usize,
        first: Box<BohmError>,
    },

    #[error("Fock-space truncation insufficient: {0}")]
    TruncationInsufficient(String),

    #[error("thermal truncation too small: tail weight {tail} exceeds bound {bound} at n_max = {n_max}")]
    TruncationBound { tail: f64, bound: f64, n_max: usize },

    #[error("sample budget {budget} too small for {strata} strata (minimum {min_per_stratum} each)")]
    AllocationTooSmall {
        budget: usize,
        strata: usize,
        min_per_stratum: usize,
    },

    #[error("degenerate weights: effective sample size {n_effective} below 2")]
    DegenerateWeights { n_effective: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl BohmError {
    /// Attach a sample index to trajectory-level failures.
    pub fn with_sample(self, sample: usize) -> BohmError {
        match self {
            BohmError::DomainExit { x, t, .. } => BohmError::DomainExit { sample, x, t },
            BohmError::NodeCollision { x, t, .. } => BohmError::NodeCollision { sample, x, t },
            other => other,
        }
    }
}
