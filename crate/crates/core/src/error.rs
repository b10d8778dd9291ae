use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid boundary label: B={set}, k={k} on degree {d}")]
    InvalidLabel { set: String, k: u32, d: u32 },
    #[error("marking index {index} out of range 1..={n}")]
    MarkingOutOfRange { index: usize, n: usize },
    #[error("negative weight {0}")]
    NegativeWeight(String),
    #[error("weight tuple is not admissible: L*d_T = {0} is even")]
    Inadmissible(String),
    #[error("boundary divisor D_{{{set},{k}}} is unstable for the given weights")]
    UnstableBoundary { set: String, k: u32 },
    #[error("class lives on Y_{{{found_d},{found_n}}} but Y_{{{expected_d},{expected_n}}} was expected")]
    SpaceMismatch {
        expected_d: u32,
        expected_n: usize,
        found_d: u32,
        found_n: usize,
    },
    #[error("expected {expected} factors (the dimension), got {found}")]
    DimensionMismatch { expected: i64, found: usize },
    #[error("the moduli space for {0} has no stable points")]
    EmptySpace(String),
    #[error("quotient elimination is inconsistent: {0}")]
    InconsistentElimination(String),
    #[error("invalid class expression on the stable-maps side: {0}")]
    InvalidExpression(String),
    #[error("not a base case: {0}")]
    NotBaseCase(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// True for failures that indicate a bug or a breached invariant rather
    /// than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_) | Error::InconsistentElimination(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
