//! Configuration, experiment orchestration and result files.

pub mod config;
pub mod experiment;
pub mod figures;
pub mod output;
pub mod selfcheck;

pub use config::{
    experiment_to_string, parse_config, parse_experiment, parse_sweep, sweep_to_string,
    ConfigDocument, EstimatorChoice, ExperimentConfig, SweepSpec,
};
pub use experiment::{run_experiment, run_sweep, simulate_runs, summarize, ResultRow};
pub use figures::{emit_fig1, emit_fig2, fig1_csv, fig2_csv};
pub use output::{read_rows, render_rows, rows_from_csv, rows_to_csv, OutputFormat};
