//! Experiment orchestration: configuration, multi-sample runs, metrics,
//! the exhaustive oracle, published reference values and timing.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod oracle;
pub mod reference;
pub mod timing;

pub use config::{Algorithm, ExperimentConfig, ModelConfig, ScheduleConfig};
pub use experiment::{run_experiment, AggregateResult, ExperimentReport, SampleResult};
pub use metrics::{mse, Summary};
pub use oracle::{exhaustive_oracle, exhaustive_oracle_k, OracleResult};
pub use timing::{timing_report, ScalingReport};
