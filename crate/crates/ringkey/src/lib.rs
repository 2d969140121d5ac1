//! Experiment runner for `ringkey-core`: scenario files, parallel drivers,
//! the experiments behind each subcommand and CSV output.

pub mod config;
pub mod experiments;
pub mod output;
pub mod parallel;
