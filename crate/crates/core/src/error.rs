use thiserror::Error;

/// Errors produced by the compression toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("SVD did not converge for a {rows}x{cols} matrix")]
    SvdNotConverged { rows: usize, cols: usize },

    #[error("quantizer saturated at ({row}, {col}): |{value}| exceeds dynamic range {range}")]
    Saturated {
        row: usize,
        col: usize,
        value: f64,
        range: f64,
    },

    #[error("quantizer saturated on all {attempts} attempts")]
    SaturationExhausted { attempts: u32 },

    #[error("sketch aspect ratio too small for theory mode: sqrt(d/m) - 1 - t = {margin}")]
    AspectRatioTooSmall { margin: f64 },

    #[error("budget too small for rank-1: {bnq} bits x {n}x{d} cannot hold one column at ({bits}, {bits2}) bits")]
    BudgetTooSmall {
        n: usize,
        d: usize,
        bits: u32,
        bits2: u32,
        bnq: u32,
    },

    #[error("reference matrix has zero Frobenius norm")]
    ZeroReference,

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("trailing data: expected {expected} bytes, found {found}")]
    TrailingData { expected: usize, found: usize },

    #[error("ragged CSV row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("unparseable value {text:?} at row {row}, column {col}")]
    BadNumber { row: usize, col: usize, text: String },

    #[error("unsupported file version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("code overflow in {block} block: bits beyond the {bits}-bit codes are set")]
    CodeOverflow { block: &'static str, bits: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
