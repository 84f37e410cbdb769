pub mod circle;
pub mod cli;
pub mod config;
pub mod entropy;
pub mod error;
pub mod minimal_set;
pub mod output;
pub mod plateau;
pub mod rotation;

pub use error::{Error, Result};
