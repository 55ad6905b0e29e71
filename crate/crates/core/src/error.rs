use thiserror::Error;

/// Errors raised while reading a survival CSV file.
///
/// Line numbers are 1-based and count the header as line 1.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsvError {
    #[error("missing columns: header must be time,status,z1,...,zp (found {found:?})")]
    MissingColumns { found: Vec<String> },
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: column `{column}` is not a number: {value:?}")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: status must be 0 or 1, found {value:?}")]
    InvalidStatus { line: u64, value: String },
    #[error("line {line}: follow-up time must be positive, found {value}")]
    NonPositiveTime { line: u64, value: f64 },
    #[error("file contains no data rows")]
    Empty,
    #[error("csv: {0}")]
    Read(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate dataset: no events observed")]
    DegenerateDataset,
    #[error("empty risk set at t = {0}")]
    EmptyRiskSet(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("enumeration of {subsets} subsets exceeds the budget of {budget}; use sampled mode")]
    EnumerationBudget { subsets: u128, budget: u64 },
    #[error("infeasible at gamma = {0}")]
    InfeasibleAtGamma(f64),
    #[error("simplex did not terminate within {0} pivots")]
    PivotLimit(usize),
    #[error("experiment failed: {failed} of {total} replications errored")]
    ExperimentFailed { failed: usize, total: usize },
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
