//! Command-line front end for `schur-purify`.

pub mod args;
pub mod commands;
pub mod output;
pub mod parallel;
pub mod plot;

pub use commands::{run, CliError, Status};
