//! Crate-wide error type for numerical routines and dynamics evaluations.

use core::fmt;

/// Errors raised by the numerics layer and by phase-dynamics evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Error {
    /// A linear system was singular to working precision.
    SingularMatrix {
        /// Ratio of largest to smallest pivot encountered before failure.
        cond_estimate: f64,
    },
    /// QR iteration did not reduce the matrix within the sweep cap.
    EigenNoConvergence { sweeps: usize },
    /// Adaptive step size fell below the representable floor.
    StepSizeUnderflow { t: f64 },
    /// The integrator step budget was exhausted.
    MaxStepsExceeded { t: f64 },
    /// Contact configuration too close to singular (leg length near zero).
    DegenerateContact { cond_estimate: f64 },
    /// A state violated a phase precondition.
    InvalidState(&'static str),
    /// Model parameters violate their invariants.
    InvalidParams(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SingularMatrix { cond_estimate } => {
                write!(f, "singular matrix (pivot ratio ~{cond_estimate:.3e})")
            }
            Error::EigenNoConvergence { sweeps } => {
                write!(f, "eigenvalue iteration did not converge in {sweeps} QR sweeps")
            }
            Error::StepSizeUnderflow { t } => {
                write!(f, "step size underflow at t = {t} (system too stiff)")
            }
            Error::MaxStepsExceeded { t } => {
                write!(f, "integrator step budget exhausted at t = {t}")
            }
            Error::DegenerateContact { cond_estimate } => {
                write!(f, "degenerate contact configuration (pivot ratio ~{cond_estimate:.3e})")
            }
            Error::InvalidState(msg) => write!(f, "invalid state: {msg}"),
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
