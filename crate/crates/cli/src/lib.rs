//! Config-driven runner for the trace-Wishart inequality checks.
//!
//! A run reads one JSON [`ExperimentConfig`], validates it against the
//! target checker, and writes a JSON report (or CSV rows). Exit codes:
//! 0 every verdict holds, 1 some verdict is violated, 3 some verdict is
//! inconclusive and none violated, 2 on any error.

pub mod args;
pub mod config;
pub mod run;

pub use args::{execute, Cli};
pub use config::{CheckSpec, DistributionSpec, ExperimentConfig, SigmaConvention, SigmaSource};
pub use gpi_core::sigma_gen::{generate_sigma, SigmaKind};
pub use run::{check, hunt, run_check, sweep, HuntReport, RunReport};
