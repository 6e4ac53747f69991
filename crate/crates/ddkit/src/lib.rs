//! File formats, configuration and the command-line front end for the
//! decoupling simulator in `ddkit-core`.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod output;
pub mod presets;
pub mod schedule_file;
pub mod snapshot;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
