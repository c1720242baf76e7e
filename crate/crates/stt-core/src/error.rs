//! Error type shared across the crate, with the CLI exit-code mapping.

use thiserror::Error;

/// Exit codes used by the CLI and mirrored by the C API status codes.
pub mod exit_code {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const DATA: i32 = 3;
    pub const NUMERICAL: i32 = 4;
    pub const CAPACITY: i32 = 5;
}

#[derive(Error, Debug)]
pub enum SttError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index {index} out of bounds for axis {axis} of size {size}")]
    IndexOutOfBounds {
        axis: usize,
        index: usize,
        size: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dense size {entries} entries exceeds cap {cap}")]
    DenseCapExceeded { entries: usize, cap: usize },

    #[error("Hadamard rank {rank} at mode {mode} exceeds cap {cap}; round the inputs first")]
    RankCapExceeded {
        mode: usize,
        rank: usize,
        cap: usize,
    },

    #[error("{dims} dimensions exceed the exhaustive search cap {cap}; use the heuristic method")]
    ExhaustiveCapExceeded { dims: usize, cap: usize },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("cross approximation budget exhausted: {0}")]
    CrossBudget(String),

    #[error("unknown categorical label {label:?} on axis {axis}")]
    UnknownLabel { axis: usize, label: String },

    #[error("duplicate sample index at line {line}")]
    DuplicateSample { line: u64 },

    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("not a tensor file: bad magic")]
    BadMagic,

    #[error("unsupported file format version {0}")]
    BadVersion(u16),

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error("external evaluator failed: {0}")]
    Evaluator(String),
}

impl SttError {
    /// CLI exit code (and C status code) for this error.
    pub fn exit_code(&self) -> i32 {
        use SttError::*;
        match self {
            InvalidArgument(_) | IndexOutOfBounds { .. } => exit_code::USAGE,
            ShapeMismatch(_)
            | UnknownLabel { .. }
            | DuplicateSample { .. }
            | MalformedRow { .. }
            | Io(_)
            | BadMagic
            | BadVersion(_)
            | CorruptFile(_)
            | Evaluator(_) => exit_code::DATA,
            DegenerateModel(_) | NumericalInstability(_) | CrossBudget(_) => exit_code::NUMERICAL,
            DenseCapExceeded { .. } | RankCapExceeded { .. } | ExhaustiveCapExceeded { .. } => {
                exit_code::CAPACITY
            }
        }
    }

    /// Stable machine-readable kind string for JSON diagnostics.
    pub fn kind(&self) -> &'static str {
        use SttError::*;
        match self {
            ShapeMismatch(_) => "shape_mismatch",
            IndexOutOfBounds { .. } => "index_out_of_bounds",
            InvalidArgument(_) => "invalid_argument",
            DenseCapExceeded { .. } => "dense_cap_exceeded",
            RankCapExceeded { .. } => "rank_cap_exceeded",
            ExhaustiveCapExceeded { .. } => "exhaustive_cap_exceeded",
            DegenerateModel(_) => "degenerate_model",
            NumericalInstability(_) => "numerical_instability",
            CrossBudget(_) => "cross_budget",
            UnknownLabel { .. } => "unknown_label",
            DuplicateSample { .. } => "duplicate_sample",
            MalformedRow { .. } => "malformed_row",
            Io(_) => "io",
            BadMagic => "bad_magic",
            BadVersion(_) => "bad_version",
            CorruptFile(_) => "corrupt_file",
            Evaluator(_) => "evaluator",
        }
    }
}

pub type Result<T> = std::result::Result<T, SttError>;
