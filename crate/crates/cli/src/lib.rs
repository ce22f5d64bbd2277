//! Batch front end for the `topomode` solvers: configuration, subcommand
//! dispatch and CSV/JSON/SVG artifacts.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;

pub use cli::{run, run_from_args, Cli};
pub use commands::Subcommand;
pub use config::RunConfig;
pub use error::CliError;
pub use output::ResultRecord;
