use thiserror::Error;

use crate::space::Space;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("space mismatch: expected {expected}, got {found}")]
    SpaceMismatch { expected: Space, found: Space },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration failed at t = {t}: step size underflow near {point:?}")]
    StepUnderflow { t: f64, point: Vec<f64> },

    #[error("integration failed at t = {t}: non-finite state")]
    NonFinite { t: f64 },

    #[error("construction check failed for {what}: worst error {worst:.3e} at {point:?}")]
    Construction {
        what: String,
        worst: f64,
        point: Vec<f64>,
    },

    #[error("differential estimate failed at {0:?}")]
    Differential(Vec<f64>),

    #[error("sampling region too small: support leaks through the boundary ({0})")]
    RegionTooSmall(String),
}

pub type Result<T> = std::result::Result<T, Error>;
