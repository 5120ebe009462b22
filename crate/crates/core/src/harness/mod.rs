//! Configuration, task dispatch and result files for the `qnn` tool.

pub mod config;
pub mod output;
pub mod run;

pub use config::{apply_text, parse_config, ExperimentConfig, InitPolicy, StateFamily, TaskKind};
pub use run::{initial_schedule, run, test_curve, RunSummary, TestRow};
