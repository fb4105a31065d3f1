use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("empty window [{n1}, {n2}]")]
    EmptyWindow { n1: i64, n2: i64 },

    #[error("alpha = {alpha} is not a rational p/q with q <= {max_q}")]
    NotRational { alpha: f64, max_q: u64 },

    #[error("energy {energy} lies within {distance:e} of the eigenvalue {eigenvalue}")]
    NearSingular { energy: f64, eigenvalue: f64, distance: f64 },

    #[error("singular matrix")]
    Singular,

    #[error("log-scale overflow after {step} steps (scale {scale:e}); lower the re-orthogonalization interval")]
    Overflow { step: usize, scale: f64 },

    #[error("QR accumulation lost the smallest direction at step {step}; lower the re-orthogonalization interval")]
    PrecisionLoss { step: usize },

    #[error("boundary mass {mass:e} exceeds the guard at t = {time}")]
    BoundaryContamination { time: f64, mass: f64 },

    #[error("window [{lo}, {hi}] does not contain the packet support [{need_lo}, {need_hi}]")]
    WindowTooSmall { lo: i64, hi: i64, need_lo: i64, need_hi: i64 },

    #[error("step halving changed the result by {defect:e}")]
    NotConverged { defect: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }

    /// True for failures of a numerical guard (as opposed to bad input).
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::NearSingular { .. }
                | Error::Singular
                | Error::Overflow { .. }
                | Error::PrecisionLoss { .. }
                | Error::BoundaryContamination { .. }
                | Error::NotConverged { .. }
                | Error::Eigensolver(_)
        )
    }
}
