//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while validating inputs or evaluating rates.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value fails a structural check (wrong shape, bad
    /// probability mass, negative power, ...). The message names the offending
    /// field and, for stochastic matrices, the row indices.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The feasible set of an optimization is empty, e.g. an input cost budget
    /// below the cheapest symbol.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A closed-form expression was requested for a channel that does not
    /// satisfy the structural conditions it relies on.
    #[error("precondition not met: {0}")]
    Precondition(String),

    /// A conditional variance or determinant collapsed below the supported
    /// range, so the named information term cannot be evaluated.
    #[error("numeric degeneracy while evaluating {term}: {detail}")]
    NumericDegeneracy { term: String, detail: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
