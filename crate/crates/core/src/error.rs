use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The regularized factor `(|D|^2 + delta^2)^((q-2)/2)` (or its derivative)
    /// is undefined at the evaluation point.
    #[error("singular evaluation: {0}")]
    SingularEvaluation(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("solver did not converge after {iter} iterations (residual {residual:e})")]
    NonConvergence { iter: usize, residual: f64 },

    #[error("CFL violation: dt = {dt:e} exceeds limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("density minimum {min:e} is below the vacuum floor {floor:e}")]
    VacuumFloor { min: f64, floor: f64 },

    #[error("fixed point diverged at iteration {iter} (update norm {delta:e}); reduce dt")]
    FixedPointDiverged { iter: usize, delta: f64 },

    #[error("blowup at t = {t}: psi = {psi:e}")]
    Blowup { t: f64, psi: f64 },

    #[error("clipped mass {clipped:e} exceeds tolerance ({total:e} total)")]
    ClippedMass { clipped: f64, total: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Short machine-readable class name, used for exit reporting.
    pub fn class(&self) -> &'static str {
        match self {
            Error::SingularEvaluation(_) => "SingularEvaluation",
            Error::InvalidParams(_) => "InvalidParams",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::CflViolation { .. } => "CFLViolation",
            Error::VacuumFloor { .. } => "VacuumFloor",
            Error::FixedPointDiverged { .. } => "FixedPointDiverged",
            Error::Blowup { .. } => "Blowup",
            Error::ClippedMass { .. } => "ClippedMass",
            Error::GridMismatch(_) => "GridMismatch",
            Error::InvalidField(_) => "InvalidField",
            Error::Io(_) => "Io",
            Error::Config { .. } => "ConfigError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
