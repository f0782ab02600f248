//! Experiment configuration, replication runner, CSV/JSON artifacts and plots.

pub mod config;
pub mod plot;
pub mod simulate;
pub mod trajectory;

pub use config::{ExperimentConfig, InitialMeans, OutputFormat};
pub use plot::{aggregate, plot_csv, render_svg, SeriesBand};
pub use simulate::{
    replication_seed, run_experiment, run_replication, write_outputs, ReplicationOutput,
    THREADS_ENV,
};
pub use trajectory::{parse_runs_csv, RunSummary, TrajectoryRow, RUNS_HEADER, SUMMARY_HEADER};
