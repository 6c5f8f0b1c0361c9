//! Experiment runner for `netmfc`: configuration layering, seeded sweeps
//! and metrics persistence.

pub mod config;
pub mod sweep;

pub use config::{parse_config, Cli, Preset};
pub use sweep::{read_metrics, run_sweep, MetricsRecord, RunSpec, SweepReport, SweepSpec};
