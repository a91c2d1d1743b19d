//! Experiment orchestration for the Gaussian-hill advection-diffusion
//! benchmark: configuration, solver dispatch, error metrics and file output.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{ExperimentConfig, Mode};
pub use experiment::{run_experiment, sweep, ErrorReport, ExperimentResult, SweepParam, SweepRow};
pub use output::emit_outputs;
