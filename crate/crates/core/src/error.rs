use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("vector length {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),

    #[error("zero-norm vector cannot be normalized")]
    ZeroNorm,

    #[error("dimension {dim} exceeds statevector oracle limit {limit}")]
    OracleTooLarge { dim: usize, limit: usize },

    #[error("invalid noise config: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("need at least {needed} distinct anchors, got {got}")]
    DegenerateAnchors { needed: usize, got: usize },

    #[error("{path}: bad IDX magic 0x{observed:08x}, expected 0x{expected:08x}")]
    BadMagic {
        path: PathBuf,
        observed: u32,
        expected: u32,
    },

    #[error("{path}: truncated IDX file (need {needed} bytes, have {have})")]
    Truncated {
        path: PathBuf,
        needed: usize,
        have: usize,
    },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("all-zero image cannot be normalized")]
    EmptyImage,

    #[error("training set is missing class {0}")]
    MissingClass(usize),

    #[error("singular normal equations (ridge = {0})")]
    Singular(f64),

    #[error("need {needed} samples, have {have}")]
    InsufficientSamples { needed: usize, have: usize },

    #[error("statistic undefined: {0}")]
    Undefined(&'static str),

    #[error("need at least {needed} bins, have {have}")]
    TooFewBins { needed: usize, have: usize },

    #[error("degenerate trace: zero variance")]
    DegenerateTrace,

    #[error("zero margin: required shot count is unbounded")]
    ZeroMargin,

    #[error("zero shrink factor: required shot count is unbounded")]
    ZeroShrink,

    #[error("empty test set")]
    EmptyTestSet,

    #[error("k = {k} does not divide N = {n}")]
    Indivisible { n: usize, k: usize },

    #[error("slice width {0} is below the minimum register size of 2")]
    SliceTooNarrow(usize),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}
