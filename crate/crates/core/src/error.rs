//! Error type shared by the numeric core.

use std::fmt;

/// Errors surfaced by core operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid configuration argument (non-positive extent, bad exponent, ...).
    Config(String),
    /// Vector or matrix dimension mismatch.
    Dimension { expected: usize, got: usize },
    /// Lattice index outside the grid.
    IndexOutOfRange { i: usize, j: usize, n_s: usize, n_t: usize },
    /// A solve produced a non-finite value; coordinates name the first bad node.
    Divergence { i: usize, j: usize },
    /// Evaluation point sits on a time axis where the rectangle degenerates.
    DegenerateRectangle,
    /// Direction vector is not unit length within tolerance.
    NonUnitDirection { norm: f64 },
    /// Expression needs more derivative levels than the dual tower provides.
    DepthExceeded { needed: usize, cap: usize },
    /// Driver covariance failed its positive-semidefiniteness check.
    NotPsd { step: usize, min_eigenvalue: f64 },
    /// An estimator could not produce a value (e.g. all samples singular).
    Estimation(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::IndexOutOfRange { i, j, n_s, n_t } => {
                write!(f, "node ({i},{j}) outside grid with {n_s}x{n_t} cells")
            }
            Error::Divergence { i, j } => {
                write!(f, "solution diverged: non-finite value first seen at node ({i},{j})")
            }
            Error::DegenerateRectangle => {
                write!(f, "evaluation point lies on a time axis (degenerate rectangle)")
            }
            Error::NonUnitDirection { norm } => {
                write!(f, "direction is not a unit vector (|v| = {norm})")
            }
            Error::DepthExceeded { needed, cap } => write!(
                f,
                "expression needs {needed} derivative levels but the dual tower caps at {cap}"
            ),
            Error::NotPsd { step, min_eigenvalue } => write!(
                f,
                "driver covariance not positive semidefinite at step {step} (min eigenvalue {min_eigenvalue:e})"
            ),
            Error::Estimation(msg) => write!(f, "estimation failed: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
