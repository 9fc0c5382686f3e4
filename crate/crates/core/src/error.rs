use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty matrix")]
    EmptyMatrix,

    #[error("ragged row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-binary cell {value:?} at row {row}, column {column}")]
    NonBinaryCell {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("duplicate header label {0:?}")]
    DuplicateLabel(String),

    #[error("unknown event {0:?}")]
    UnknownEvent(String),

    #[error("ambiguous event {0:?}: qualify it as kind:label")]
    AmbiguousEvent(String),

    #[error("undefined conditional: conditioning event {0:?} has empty support")]
    UndefinedConditional(String),

    #[error("zero events left after selection")]
    ZeroEvents,

    #[error("invalid hypothesis {label:?}: {reason}")]
    InvalidHypothesis { label: String, reason: String },

    #[error("pattern duplicates: column {pattern:?} is identical to {existing:?}")]
    PatternDuplicates { pattern: String, existing: String },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("input not consolidated: {0}")]
    NotConsolidated(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("search space contains a directed cycle")]
    CyclicSpace,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("undefined score: {0}")]
    Undefined(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the input data rather than by the caller or
    /// the environment.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidParameter(_) | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
