use thiserror::Error;

/// Coarse classification used by the experiment runner to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad parameters, malformed state or misuse of an operation.
    Input,
    /// A theorem's hypothesis does not hold for the supplied data.
    Hypothesis,
    /// Integrator or shooting failure.
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: lambda = {lambda}, beta = {beta} (need lambda > 1, beta > 0, both finite)")]
    InvalidParams { lambda: f64, beta: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("need at least {needed} modes, got {got}")]
    InsufficientModes { needed: usize, got: usize },

    #[error("mode {mode} out of range 1..={n_modes}")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("unsupported system kind: {0}")]
    UnsupportedKind(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("trajectories are not comparable: {0}")]
    Mismatch(String),

    #[error("step size underflow at t = {t:e} (h = {step:e}); stiffest mode is {mode}")]
    StiffnessFailure { t: f64, step: f64, mode: usize },

    #[error("state norm exceeded {threshold:e} after t = {t_last}; finite-time blow-up suspected")]
    BlowUp { t_last: f64, threshold: f64 },

    #[error("step limit of {steps} reached at t = {t}")]
    StepLimit { t: f64, steps: usize },

    #[error("shooting bracket not found: {0}")]
    ShootingBracket(String),

    #[error("precision exhausted at target length {requested}; largest achievable length is {achievable}")]
    PrecisionExhausted { requested: usize, achievable: usize },

    #[error("auxiliary sequence is not a terminated shot: {0}")]
    InvalidAux(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::HypothesisViolated(_) => ErrorClass::Hypothesis,
            Error::StiffnessFailure { .. }
            | Error::BlowUp { .. }
            | Error::StepLimit { .. }
            | Error::ShootingBracket(_)
            | Error::PrecisionExhausted { .. } => ErrorClass::Numerical,
            Error::Io(_) | Error::Json(_) => ErrorClass::Io,
            _ => ErrorClass::Input,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
