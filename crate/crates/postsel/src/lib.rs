//! Parallel execution, report formats and the command line for
//! [`postsel_core`].

pub mod cli;
pub mod experiments;
pub mod output;
pub mod runner;

pub use experiments::{run_experiment, Experiment, RunOptions};
pub use output::{render, Format};
pub use runner::Runner;
