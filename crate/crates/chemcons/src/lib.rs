//! Scenario configs, run execution, CSV/JSON output and the `chemcons`
//! command line for chemical average consensus and its gossip baselines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use config::{Algorithm, ScenarioConfig};
pub use error::RunError;
pub use run::{metrics_from_samples, run_oracle, run_scenario, sweep, Metrics, RunRecord};
