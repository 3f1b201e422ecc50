//! Configuration, report writers and command pipelines behind the
//! `fracsys` binary.

pub mod config;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, Command, ConfigError, ConfigFormat, RunConfig};
pub use run::{run, CliError, Outcome, Status};
