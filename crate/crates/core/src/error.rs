//! Error type shared across the solver.

use thiserror::Error;

/// Errors produced by construction, transformation and evolution routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates a structural precondition (empty grid, non-monotone
    /// nodes, non-finite entries, mismatched lengths, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A scenario or operation parameter is out of its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The alpha grid does not cover the range of x + mu((-inf, x]) spanned
    /// by the data.
    #[error("alpha grid does not cover the data: {0}")]
    DomainCoverage(String),

    /// A Lagrangian state lost monotonicity of y beyond the clamping
    /// tolerance; usually a sign of too large a time step.
    #[error("corrupted state: {0}")]
    CorruptedState(String),

    /// The time integrator produced non-finite values.
    #[error("scheme blow-up at t = {t}: {detail}")]
    BlowUp { t: f64, detail: String },

    /// A weak-form test function is not supported inside the trajectory's
    /// space-time box.
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    /// The multipeakon oracle is queried beyond its detected blow-up time.
    #[error("oracle out of range: {0}")]
    OracleRange(String),

    /// Malformed serialized data.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
