//! Command-line front end: measurement files, one command per library capability, CSV output
//! and a harness that recomputes the published constants.

pub mod cli;
pub mod commands;
pub mod error;
pub mod measurement;
pub mod report;
pub mod reproduce;

pub use cli::Cli;
pub use commands::run;
pub use error::{CliError, CliResult};
pub use report::{Row, RunReport, Status, Tolerance};
