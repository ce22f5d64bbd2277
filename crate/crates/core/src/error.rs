use thiserror::Error;

use crate::variational::ModeIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("step size {step:e} fell below the floor at t = {t}")]
    StepFailure { t: f64, step: f64 },

    #[error("integrator exceeded {max_steps} steps before reaching t = {target}")]
    TooManySteps { max_steps: usize, target: f64 },

    #[error("invalid bracket [{lo}, {hi}]: {reason}")]
    InvalidBracket { lo: f64, hi: f64, reason: String },

    #[error("variational minimization failed for mode {0}")]
    MinimizationFailure(ModeIndex),

    #[error("quadrature did not converge after {levels} doubling levels (last change {last_change:e})")]
    QuadratureFailure { levels: usize, last_change: f64 },

    #[error("u and v must be strictly positive, got u = {u}, v = {v}")]
    Domain { u: f64, v: f64 },
}

impl Error {
    /// True for errors caused by bad caller input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::InvalidBracket { .. } | Error::Domain { .. }
        )
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
