use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("finite-difference stencil [{lo}, {hi}] leaves the domain")]
    StencilOutsideDomain { lo: f64, hi: f64 },

    #[error("negative sample f({x}) = {value}")]
    NegativeSample { x: f64, value: f64 },

    #[error("family sum vanishes at {point:?}")]
    VanishingSum { point: Vec<f64> },

    #[error("support count {count} at {point:?} exceeds the limit {limit}")]
    SupportTooLarge {
        point: Vec<f64>,
        count: usize,
        limit: usize,
    },

    #[error("group mismatch: {0}")]
    GroupMismatch(String),

    #[error("base point {point:?} is not in chart {chart}")]
    NotInChart { chart: usize, point: Vec<f64> },

    #[error("image {image:?} of {point:?} escapes the target domain")]
    ImageEscapes { point: Vec<f64>, image: Vec<f64> },

    #[error("cover mismatch: {0}")]
    CoverMismatch(String),

    #[error("bundle failed validation: {0}")]
    Invalid(String),

    #[error("no covering multi-index at {point:?} with n <= {n}; increase n")]
    IncreaseN { point: Vec<f64>, n: usize },

    #[error("missing representation for group {0}")]
    MissingRepresentation(String),

    #[error("unknown name: {0}")]
    Unknown(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
