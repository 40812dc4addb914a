//! Experiment layer on top of `spdnn`: `(λ, τ)` grid tuning, replication
//! studies of excess risk, the PM10 forecasting pipeline and the `spdnn` CLI.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod pm10;

pub use error::{HarnessError, Result};
pub use experiment::{
    excess_risk, run_replications, ExcessRisk, ExperimentSpec, OraclePredictor, Predictor, ResultsTable,
};
pub use grid::{tune_grid, Criterion, GridSpec, TuneOutcome, TuningGrid};
pub use pm10::{dar_predict, pm10_pipeline, prediction_metrics, MetricsReport, Pm10Config, Pm10Series};
