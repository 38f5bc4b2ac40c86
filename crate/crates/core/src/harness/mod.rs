//! Experiment configuration, runner and result records.

pub mod config;
pub mod io;
pub mod record;
pub mod run;

pub use config::{ExperimentSpec, Kind, RawConfig};
pub use record::{Results, RunRecord, SCHEMA_VERSION};
pub use run::run;
