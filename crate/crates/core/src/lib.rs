//! Numerical contact dynamics on `R^{2n+1}` and `R^{2n} x S^1`.

pub mod c0;
pub mod constructions;
pub mod error;
pub mod fields;
pub mod flow;
pub mod lifts;
pub mod newton;
mod seeding;
pub mod space;
pub mod support;
pub mod translated;

pub use error::{Error, Result};
pub use space::{Point, Space};
