use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parameter sets lie on different gauge orbits (max invariant deviation {deviation:.3e})")]
    NotEquivalent { deviation: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("array length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("|psi| = {amplitude:.3e} below floor at grid index {index}")]
    NodeEncountered { index: usize, amplitude: f64 },

    #[error("theta field has no time derivatives")]
    MissingTimeDerivative,

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("selected mode {mode} of the auxiliary linear problem has nodes")]
    NodefulMode { mode: usize },

    #[error("negative radicand {value:.3e} at x = {x}")]
    NegativeRadicand { x: f64, value: f64 },

    #[error("width sigma = {0} is not positive")]
    NonpositiveWidth(f64),

    #[error("q = {0} is not positive")]
    NonpositiveQ(f64),

    #[error("step size too large at t = {t}: sigma changed by {relative_change:.1}% in one step")]
    StepSizeTooLarge { t: f64, relative_change: f64 },

    #[error("dt = {dt:.3e} exceeds the explicit stability bound {limit:.3e}")]
    StabilityGuard { dt: f64, limit: f64 },

    #[error("width collapsed below the collapse threshold at t = {t}")]
    Collapsed { t: f64 },

    #[error("non-finite values encountered at t = {t}")]
    Diverged { t: f64 },

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Validation errors reject the request before any numerics run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::NotEquivalent { .. }
                | Error::InvalidGrid(_)
                | Error::LengthMismatch { .. }
                | Error::MissingTimeDerivative
                | Error::InvalidRegime(_)
                | Error::NodefulMode { .. }
                | Error::NegativeRadicand { .. }
                | Error::StabilityGuard { .. }
                | Error::Parse(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}
