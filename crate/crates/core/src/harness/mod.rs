//! Configuration, experiment orchestration and output files.

pub mod config;
pub mod experiment;
pub mod figures;
pub mod seeds;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiment::{run_baselines, run_experiment, run_replicates, Outcome, Summary};
pub use figures::{emit_figure_data, Figure};
pub use seeds::{seed_everything, SubSeeds};
