//! IRIS experiments for `cgp-smbo`: dataset ingestion, PD sample sets,
//! experiment configuration, replicated runs, summary statistics and genome
//! files. The `cgp-smbo` binary exposes these through a CLI.

pub mod config;
pub mod experiment;
pub mod genome_io;
pub mod iris;
pub mod samples;
pub mod summary;

pub use config::{ConfigValues, DistanceTag, ExperimentConfig, Method};
pub use experiment::{run_experiment, run_replication, RunOutcome, RunRecord};
pub use iris::load_iris;
pub use samples::{generate_pd_samples, PdSampleSet, PdSource};
pub use summary::{summarize, SummaryRow};
