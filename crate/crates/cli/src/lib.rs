//! Configuration-driven experiments for the robust-forward solvers:
//! each experiment solves the ergodic problem of a market
//! fixture and adjudicates one family of structural properties, writing
//! `summary.json`, `fields.csv`, `checks.json` and SVG plots.

pub mod config;
pub mod experiments;
pub mod plot;

pub use config::{Experiment, ExperimentConfig, Numerics};
pub use experiments::{run_experiment, Check, RunOutcome};
