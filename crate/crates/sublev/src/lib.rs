//! Experiment runner and file formats on top of `sublev-core`.

pub mod builtins;
pub mod config;
pub mod diag;
pub mod output;
pub mod run;

pub use run::{run_file, run_text, RunOptions, RunOutcome};
