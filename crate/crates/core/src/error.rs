use alloc::string::String;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("cube not aligned to grid cells: {0}")]
    Alignment(String),
    #[error("measure has zero total variation")]
    EmptyMeasure,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("target point too close to image of boundary (gap {gap:.3e}, required {required:.3e})")]
    BoundaryProximity { gap: f64, required: f64 },
    #[error("sequence not Cauchy: {0}")]
    Convergence(String),
    #[error("{unknown_fraction:.2}% of image cells have unknown degree")]
    Coverage { unknown_fraction: f64 },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("{failed} of {total} slice layers failed")]
    SliceIntegrity { failed: usize, total: usize },
    #[error("map `{0}` has no analytic inverse")]
    MissingInverse(String),
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = core::result::Result<T, Error>;
