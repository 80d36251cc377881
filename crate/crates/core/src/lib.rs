pub mod cli;
pub mod error;
pub mod exterior;
pub mod instance;
pub mod lie;
pub mod linalg;
pub mod rational;
pub mod structure;
pub mod witness;

pub use error::{Error, Hypothesis, Result};
