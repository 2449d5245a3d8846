//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{variable}` has no state `{state}`")]
    UnknownState { variable: String, state: String },

    #[error("state index {index} out of range for `{variable}` (cardinality {cardinality})")]
    StateOutOfRange {
        variable: String,
        index: usize,
        cardinality: usize,
    },

    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },

    #[error("invalid variable `{0}`: {1}")]
    InvalidVariable(String, String),

    #[error("{0}")]
    Shape(String),

    #[error("table row {row} sums to {sum} (tolerance 1e-9)")]
    Normalization { row: usize, sum: f64 },

    #[error("table entry {value} at index {index} outside [0, 1]")]
    OutOfUnitRange { index: usize, value: f64 },

    #[error("variable sets overlap on `{0}`")]
    OverlappingSets(String),

    #[error("tables differ in scope: {0}")]
    ScopeMismatch(String),

    #[error("absolute continuity violated: p = {p} where q = 0")]
    AbsoluteContinuity { p: f64 },

    #[error("evidence has zero probability: {0}")]
    ZeroProbabilityEvidence(String),

    #[error("graph contains a directed cycle through `{0}`")]
    Cycle(String),

    #[error("CPT for `{node}` is inconsistent with the graph: {reason}")]
    CptMismatch { node: String, reason: String },

    #[error("no CPT supplied for `{0}`")]
    MissingCpt(String),

    #[error("state space of {cells} cells exceeds cap of {cap}")]
    StateSpaceCap { cells: u128, cap: usize },

    #[error("not a functional model: {0}")]
    NotFunctional(String),

    #[error("precondition refused: {0}")]
    Refused(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Precondition refusals are distinguished from validation failures at
    /// the process boundary (exit code 2 versus 1).
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::Refused(_) | Error::ZeroProbabilityEvidence(_) | Error::AbsoluteContinuity { .. }
        )
    }
}
