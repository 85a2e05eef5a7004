use alloc::boxed::Box;
use alloc::string::String;

use crate::explain::Assignment;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid variable specification: {0}")]
    InvalidSpec(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("value {value} of `{variable}` is outside [{lo}, {hi}]")]
    OutOfRange { variable: String, value: f64, lo: f64, hi: f64 },

    #[error("label `{label}` is not a level of `{variable}`")]
    UnknownLabel { variable: String, label: String },

    #[error("`{variable}` expects a {expected} value")]
    WrongValueType { variable: String, expected: &'static str },

    #[error("row {row}: {source}")]
    Row { row: usize, source: Box<Error> },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite value in `{0}`")]
    NonFinite(String),

    #[error("degenerate independence test: `{variable}` has {levels} observed level(s)")]
    DegenerateTest { variable: String, levels: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no lexicon phrase for ({variable}, {direction})")]
    MissingPhrase { variable: String, direction: &'static str },

    #[error("no assignment with success probability above {epsilon}; best found {best_p} at depth {best_depth}")]
    NoSolution { epsilon: f64, best: Assignment, best_p: f64, best_depth: usize },

    #[error("probability tables are defined on different grids: {0}")]
    GridMismatch(String),
}

impl Error {
    pub(crate) fn at_row(self, row: usize) -> Self {
        Error::Row { row, source: Box::new(self) }
    }
}
