pub mod bspline;
pub mod decomposition;
pub mod diff;
pub mod error;
pub mod harness;
pub mod kan;
pub mod problems;
pub mod seeding;
pub mod training;

pub use error::{FbkanError, Result};
