//! Crate-wide error type.
//!
//! Validation failures are ordinary data (see `model::ValidationReport`);
//! this enum covers the cases where an operation cannot produce a result
//! at all: bad parameters, realization prefixes that are too short for the
//! requested scale, and enumeration budgets that would be exceeded.

use std::fmt;

/// Errors produced by the carpet computations.
#[derive(Debug)]
pub enum Error {
    /// The input ensemble, pattern, or realization fails a structural
    /// invariant. The message lists the first offending item.
    Validation(String),
    /// A numeric parameter is outside its admissible range.
    Domain(String),
    /// A realization prefix ran out before the requested scale was
    /// reached. `needed_hint` is a worst-case bound on the total prefix
    /// length that suffices (every grid side is at least 2).
    InsufficientDepth { have: usize, needed_hint: usize },
    /// An enumeration would exceed the node budget. `log_estimate` is the
    /// natural log of the estimated node count.
    Budget { log_estimate: f64, budget: u64 },
    /// Spectrum curves passed to a multi-curve writer do not share a
    /// common theta grid.
    GridMismatch(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Validation(msg) => write!(f, "validation: {msg}"),
            Error::Domain(msg) => write!(f, "domain: {msg}"),
            Error::InsufficientDepth { have, needed_hint } => write!(
                f,
                "insufficient realization depth: prefix has {have} symbols, \
                 a prefix of length {needed_hint} always suffices at this scale"
            ),
            Error::Budget {
                log_estimate,
                budget,
            } => write!(
                f,
                "depth too large: estimated exp({log_estimate:.2}) enumeration nodes \
                 exceed the budget of {budget}"
            ),
            Error::GridMismatch(msg) => write!(f, "grid mismatch: {msg}"),
            Error::Io(err) => write!(f, "io: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
