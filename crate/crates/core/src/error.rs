use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not normalized: probabilities sum to {sum}")]
    NotNormalized { sum: String },

    #[error("negative probability {value} at {at}")]
    NegativeProbability { at: String, value: String },

    #[error("distribution has empty support")]
    EmptySupport,

    #[error("empty alphabet")]
    EmptyAlphabet,

    #[error("duplicate symbol {0:?} in alphabet")]
    DuplicateSymbol(String),

    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),

    #[error("duplicate entry for ({u:?}, {v:?})")]
    DuplicateEntry { u: String, v: String },

    #[error("pair ({u}, {v}) is outside the support")]
    OutsideSupport { u: usize, v: usize },

    #[error("zero variance")]
    ZeroVariance,

    #[error("argument out of range: {0}")]
    ArgumentOutOfRange(f64),

    #[error("support violation: symbol {symbol} has target mass but zero base mass")]
    SupportViolation { symbol: usize },

    #[error("k too small: k = {k} but at least {required} is needed")]
    KTooSmall { k: u64, required: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("infeasible: error floor {floor} exceeds target {eps}")]
    Infeasible { floor: f64, eps: f64 },

    #[error("codebook size search exceeded 2^{cap_bits} without reaching the target error")]
    SearchCapExceeded { cap_bits: u64 },

    #[error("overflow: codebook size 2^{log2_m} is not representable")]
    Overflow { log2_m: f64 },

    #[error("instance too large: {sequences} sequences exceeds cap {cap}")]
    InstanceTooLarge { sequences: f64, cap: u64 },

    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
