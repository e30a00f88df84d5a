//! Reproducible numerical experiments for `contactkit`, each producing a
//! JSON-serialisable report of checked measurements.

pub mod error;
pub mod experiments;
pub mod random;
pub mod report;

pub use error::{ExperimentError, Result};
pub use experiments::{run, Settings, IDS};
pub use report::{ExperimentReport, Measurement};
