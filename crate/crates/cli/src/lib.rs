//! Command-line front end for the `medsens` sensitivity analysis library.

pub mod args;
pub mod bootstrap;
pub mod commands;
pub mod error;
pub mod input;
pub mod output;
pub mod report;

pub use args::Cli;
pub use commands::run;
pub use error::{CliError, Status};
