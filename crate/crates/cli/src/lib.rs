//! Experiment runner for the `noma-pfs` simulator and rate estimator.
//!
//! A run reads a flat TOML config (see [`config::ExperimentConfig`]), sweeps
//! user counts, SIC limits, reported-interferer counts and measurement
//! noise, and writes `results.csv`, `deviations.csv` and `manifest.json`.

pub mod config;
pub mod output;
pub mod selfcheck;
pub mod sweep;

pub use config::{ConfigError, ExperimentConfig, Mode, SicLimit};
pub use sweep::{run_sweep, ResultRow, Status, SweepOutput};
