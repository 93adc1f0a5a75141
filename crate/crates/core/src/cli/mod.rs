//! Batch front end: run configurations, sweeps, reports and comparisons.

pub mod compare;
pub mod config;
pub mod run;

pub use compare::{compare, Comparison};
pub use config::RunConfig;
pub use run::{locking_sweep, run, RunOptions, RunReport};
