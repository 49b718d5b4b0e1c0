use thiserror::Error;

use crate::concept::ParseError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid map shape or training schedule.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or inconsistent input data.
    #[error("input error: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown category `{0}`")]
    UnknownCategory(String),

    #[error("category `{0}` has no input stimuli")]
    EmptyCategory(String),

    #[error("unknown domain element `{0}`")]
    UnknownElement(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    /// The derived specificity relation is not a strict order.
    #[error("specificity cycle: {}", cycle.join(" > "))]
    SpecificityCycle { cycle: Vec<String> },

    /// An ordering that must be a strict order is not one. Signals a bug
    /// or a corrupted model.
    #[error("consistency error: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
