use thiserror::Error;

/// Errors raised by sequence evaluation and the constructions built on it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("materialization budget exceeded: {needed} bits requested, cap is {cap}")]
    Budget { needed: String, cap: u64 },

    #[error("rational {value} is outside [0, 1]")]
    RationalRange { value: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("index {index} is beyond code length {length}")]
    IndexBeyond { index: String, length: String },

    #[error("depth {depth} exceeds the configured cap {cap}")]
    DepthCap { depth: usize, cap: usize },

    #[error("set too sparse within budget: {0}")]
    TooSparse(String),

    #[error("disagreement list exhausted: only {found} disagreements below {scanned}")]
    Exhausted { found: u64, scanned: u64 },

    #[error("no strongly Cauchy subsequence found: {0}")]
    NotCauchy(String),

    #[error("code lengths do not cover index {0}")]
    LengthMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn budget(needed: impl ToString, cap: u64) -> Self {
        Error::Budget {
            needed: needed.to_string(),
            cap,
        }
    }
}
