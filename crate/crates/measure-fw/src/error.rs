//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FwError {
    /// A point lies outside the box domain it must belong to.
    #[error("point {point:?} lies outside the box domain")]
    OutsideDomain { point: Vec<f64> },

    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The instance does not provide the requested oracle.
    #[error("instance `{instance}` does not provide {capability}")]
    Capability {
        instance: String,
        capability: &'static str,
    },

    /// An oracle returned a non-finite value.
    #[error("oracle returned a non-finite value at {point:?}")]
    Oracle { point: Vec<f64> },

    /// The information matrix of a design is singular; the objective is +inf.
    #[error("singular information matrix: objective is +inf at this measure")]
    Singular,

    /// The fully-corrective inner solve failed to make progress.
    #[error("inner simplex solve error: {0}")]
    InnerSolve(String),

    /// Consolidation dropped every atom.
    #[error("consolidation dropped every atom")]
    DegenerateMeasure,
}

pub type Result<T, E = FwError> = std::result::Result<T, E>;

impl FwError {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        FwError::Argument(msg.into())
    }

    pub(crate) fn capability(instance: impl Into<String>, capability: &'static str) -> Self {
        FwError::Capability {
            instance: instance.into(),
            capability,
        }
    }
}
