use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FcsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular linear system at row {row}")]
    SingularSystem { row: usize },

    #[error("eigenvalue branch tracking failed near chi = {chi}: {reason}")]
    BranchTracking { chi: f64, reason: String },

    #[error("integrator step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("trace of propagated state is not positive/nonzero at t = {t} (tolerance too loose)")]
    NonPositiveTrace { t: f64 },

    #[error("counting distribution aliased: tail mass {tail_mass:e} at index boundary exceeds {tolerance:e}")]
    Aliasing { tail_mass: f64, tolerance: f64 },

    #[error("closure root selection ambiguous: {0}")]
    RootSelection(String),

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("config error: {0}")]
    Config(String),
}

impl FcsError {
    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            FcsError::InvalidParameter(_) => "invalid_parameter",
            FcsError::DimensionMismatch { .. } => "dimension_mismatch",
            FcsError::SingularSystem { .. } => "singular_system",
            FcsError::BranchTracking { .. } => "branch_tracking",
            FcsError::StepSizeUnderflow { .. } => "step_size_underflow",
            FcsError::NonPositiveTrace { .. } => "nonpositive_trace",
            FcsError::Aliasing { .. } => "aliasing",
            FcsError::RootSelection(_) => "root_selection",
            FcsError::RegimeMismatch(_) => "regime_mismatch",
            FcsError::Io(_) => "io",
            FcsError::Config(_) => "config",
        }
    }
}

impl From<std::io::Error> for FcsError {
    fn from(e: std::io::Error) -> Self {
        FcsError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FcsError>;
