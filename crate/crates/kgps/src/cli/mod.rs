//! Configuration parsing, experiment orchestration and report emission
//! behind the `kgps` binary.

pub mod config;
pub mod manifest;
pub mod runner;

pub use config::{build_config, parse_config, parse_key_values, parse_rational, DataKind, RunConfig};
pub use manifest::{grid_hash, RunManifest};
pub use runner::{load_run, run_experiment, scatter_report, RunMode};
