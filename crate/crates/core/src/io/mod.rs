//! Configuration, checkpoints, exports and run orchestration.

pub mod checkpoint;
pub mod config;
pub mod export;
pub mod run;

pub use checkpoint::Checkpoint;
pub use config::RunConfig;
pub use run::{run, Command, RunError, RunOptions, RunSummary};
