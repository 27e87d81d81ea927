use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message} (expected one of: {})", expected.join(", "))]
    Syntax {
        offset: usize,
        message: String,
        expected: Vec<String>,
    },

    #[error("catalog parse error at line {line}, column {column}: {message}")]
    CatalogParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("catalog invariant violated for table {table}: {message}")]
    CatalogInvariant { table: String, message: String },

    #[error("unknown table: {0}")]
    UnknownTable(String),

    #[error("unknown column: {0}")]
    UnknownColumn(String),

    #[error("ambiguous column reference: {0}")]
    AmbiguousColumn(String),

    #[error("unsupported construct: {0}")]
    Unsupported(String),

    #[error("no legal join order: {0}")]
    NoLegalPlan(String),

    #[error("sketch precision mismatch: {0} vs {1}")]
    PrecisionMismatch(u8, u8),

    #[error("sketch hash seed mismatch: {0:#x} vs {1:#x}")]
    SeedMismatch(u64, u64),

    #[error("invalid sketch precision {0}, must be in [4, 16]")]
    InvalidPrecision(u8),

    #[error("improvement ratio undefined: column II ({naive}) must exceed column I ({off})")]
    UndefinedRatio { off: f64, naive: f64 },

    #[error("range-table index {0} is not covered by the mapping")]
    UnmappedRti(usize),

    #[error("unknown optimizer mode: {0}")]
    UnknownMode(String),

    #[error("report parse error at line {line}: {message}")]
    ReportParse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
