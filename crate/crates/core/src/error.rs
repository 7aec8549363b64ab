use thiserror::Error;

/// Errors produced anywhere in the rank-pruning pipeline.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid noise rates: {0}")]
    InvalidRates(String),

    #[error("labels contain a single class; cannot fit a calibrated classifier")]
    SingleClassInput,

    #[error("dimension mismatch: model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("too few examples: n={n} < k={k}")]
    TooFewExamples { n: usize, k: usize },

    #[error("observed label class {0} is empty")]
    EmptyClass(u8),

    #[error("degenerate confident counts: {0}")]
    DegenerateCounts(String),

    #[error("rank {k} out of range for {len} values")]
    RankOutOfRange { k: usize, len: usize },

    #[error("over-prune: removing {remove} of {size} examples with observed label {label} would empty the class")]
    OverPrune {
        remove: usize,
        size: usize,
        label: u8,
    },

    #[error("dataset carries no hidden labels")]
    MissingHiddenLabels,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("bad magic number {got:#010x}, expected {expected:#010x}")]
    BadMagic { got: u32, expected: u32 },

    #[error("truncated file: needed {needed} bytes, had {had}")]
    TruncatedFile { needed: usize, had: usize },

    #[error("infeasible configuration: {0}")]
    InfeasibleConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
