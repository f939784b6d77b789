//! Experiment orchestration: configs, presets, runs, tables and sweeps.

pub mod config;
pub mod presets;
pub mod run;
pub mod tables;

pub use config::RunConfig;
pub use presets::resolve;
pub use run::{run, RunOptions, RunSummary};
