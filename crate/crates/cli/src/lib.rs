//! Configuration loading, experiment dispatch and report/CSV emission for the
//! `gscr` command-line tool.

pub mod config;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, Experiment, StudyConfig};
pub use run::{run, Overrides, RunError, RunManifest, RunOutcome};
