use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("stage index {j} out of range (spec has {stages} stages)")]
    StageOutOfRange { j: usize, stages: usize },

    #[error("invalid stage {index}: {reason}")]
    InvalidStage { index: usize, reason: String },

    #[error("empty segment: a = {a} > b = {b}")]
    EmptySegment { a: i64, b: i64 },

    #[error("order is not a permutation of 0..{n}")]
    NotAPermutation { n: usize },

    #[error("{solver} solver accepts at most {cap} points, got {n}")]
    TooLarge {
        solver: &'static str,
        n: usize,
        cap: usize,
    },

    #[error("twin index {index} out of range for a path on {n} points")]
    TwinIndexOutOfRange { index: usize, n: usize },

    #[error("stitched length {length} exceeds cell sum plus 3k = {bound}")]
    StitchBound { length: f64, bound: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("sample of {n} points is too small (need at least {required})")]
    UndersizedSample { n: usize, required: usize },

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("mean ratio {ratio} at n = {n} exceeds the sanity cap {cap}")]
    SanityCap { ratio: f64, n: usize, cap: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
