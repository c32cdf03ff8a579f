//! Command-line surface and benchmark harness for CGL inference.

pub mod commands;
pub mod error;
pub mod harness;
pub mod spec;

pub use error::CliError;
