//! End-to-end experiment harness: configuration, synthetic data, runs,
//! lambda sweeps and their CSV artifacts.

mod config;
mod io;
mod run;
mod synth;

pub use config::{DataSource, ExperimentConfig, Method};
pub use io::{
    read_metrics_csv, read_recommendations_csv, write_metrics_csv, write_recommendations_csv, MetricsRow, PhaseTimings,
    METRICS_HEADER,
};
pub use run::{
    base_recommendations, load_data, prepare, rerank, run_experiment, sweep, train_method, uncertainty_for,
    ArtifactPaths, Prepared, RunArtifacts, SweepRow, SweepTable,
};
pub use synth::{synth_dataset, write_pairs, SynthConfig};
