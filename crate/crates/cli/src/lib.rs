//! Command-line front end: configuration parsing and command dispatch.

pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, Command, Format, Grid, NoiseSpec, RunConfig, Settings};
pub use error::CliError;
pub use run::run;
