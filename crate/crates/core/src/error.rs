use thiserror::Error;

pub type Result<T> = std::result::Result<T, GsaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GsaError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient sample: need at least {needed}, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("degenerate output: numerator {numerator}, denominator {denominator}")]
    DegenerateOutput { numerator: f64, denominator: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("simulator failure at input {input:?}: {message}")]
    Simulator { input: Vec<f64>, message: String },

    #[error("calibration infeasible: required n = {required} exceeds ceiling {ceiling}")]
    CalibrationInfeasible { required: f64, ceiling: u64 },
}

impl GsaError {
    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            GsaError::Domain(_) => "domain",
            GsaError::InsufficientSample { .. } => "insufficient_sample",
            GsaError::DegenerateOutput { .. } => "degenerate_output",
            GsaError::Unsupported(_) => "unsupported",
            GsaError::InvalidDesign(_) => "invalid_design",
            GsaError::Simulator { .. } => "simulator",
            GsaError::CalibrationInfeasible { .. } => "calibration_infeasible",
        }
    }
}
