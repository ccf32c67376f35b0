//! Experiment configs, the batch runner, result files and figures.

pub mod catalog;
pub mod config;
pub mod figure;
pub mod runner;

pub use catalog::{catalog, find_config, CatalogEntry};
pub use config::ExperimentConfig;
pub use runner::{output_dir, primary_mesh, run, write_output, CheckOutcome, ResultBundle, RunOutput, OUTPUT_ROOT_VAR};
