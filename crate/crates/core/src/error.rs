use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid range [{a}, {b}) for universe of size 2^{universe_log}")]
    InvalidRange { a: u64, b: u64, universe_log: u32 },

    #[error("index {index} out of range for universe of size 2^{universe_log}")]
    IndexOutOfRange { index: u64, universe_log: u32 },

    #[error("invalid prefix (level {level}, index {index}) for universe of size 2^{universe_log}")]
    InvalidPrefix { level: u32, index: u64, universe_log: u32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("rejection sampler exhausted {attempts} attempts splitting node (level {level}, index {index})")]
    SamplingExhausted { level: u32, index: u64, attempts: u32 },

    #[error("rejection attempt {attempt} does not fit the 7-bit attempt field of a hash key")]
    KeyEncoding { attempt: u32 },

    #[error("random-walk split input violates support/parity: z={z}, n={n}")]
    RwSupport { z: i64, n: u64 },

    #[error("sketch configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("estimator for {wanted} requested from an {actual} sketch")]
    WrongNorm { wanted: &'static str, actual: &'static str },

    #[error("empty sample")]
    EmptySample,

    #[error("universe 2^{universe_log} too large to materialize (limit 2^{limit})")]
    UniverseTooLarge { universe_log: u32, limit: u32 },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
