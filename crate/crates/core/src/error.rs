use thiserror::Error;

/// Errors raised by the numerical and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is not supported here")]
    DimensionUnsupported(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("super-level set is empty for threshold {0} > 1")]
    EmptyLevelSet(f64),

    #[error("quadrature did not reach tolerance {tolerance:e} (estimate {achieved:e})")]
    ToleranceNotMet { tolerance: f64, achieved: f64 },

    #[error("distance {distance} is outside the trusted range {limit}")]
    DistanceOutOfRange { distance: f64, limit: f64 },

    #[error("step length {length} exceeds the injectivity bound {bound}")]
    InjectivityRadius { length: f64, bound: f64 },

    #[error("sampler internal error: {0}")]
    SamplerInternal(String),

    #[error("index {index} is beyond the computed range {available}")]
    IndexOutOfRange { index: usize, available: usize },

    #[error("resolution too coarse: need at least {required} nodes, got {actual}")]
    Resolution { required: usize, actual: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    SolverNonConvergence { sweeps: usize, off_norm: f64 },

    #[error("{what} out of range: {detail}")]
    Range { what: &'static str, detail: String },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("z = {re}{im:+}i lies in the excluded region: {reason}")]
    ForbiddenRegion { re: f64, im: f64, reason: String },

    #[error("truncation: t = {t} is below the validity limit {t_min}; need {required} terms")]
    Truncation { t: f64, t_min: f64, required: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
