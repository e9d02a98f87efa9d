use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix must have at least one row and one column (got {rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("modulus {0} is not a prime below 65536")]
    NotPrime(u64),

    #[error("entry {value} at ({row}, {col}) is not reduced modulo {modulus}")]
    EntryOutOfRange {
        row: usize,
        col: usize,
        value: u32,
        modulus: u32,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),

    #[error("null space dimension {dim} exceeds enumeration guard {guard}")]
    GuardExceeded { dim: usize, guard: usize },

    #[error("row set is not a dependency of the matrix")]
    NotADependency,

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("integer overflow evaluating {0}")]
    Overflow(String),

    #[error("outside the hypothesis of the GF(t) limit law: {0}")]
    OutsideHypothesis(String),

    #[error("model mismatch: summary is `{summary}`, theory table is `{table}`")]
    ModelMismatch { summary: String, table: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
