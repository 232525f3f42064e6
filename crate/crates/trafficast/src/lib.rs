//! Anomaly-aware ISP traffic forecasting toolkit.
//!
//! The pipeline: ingest five-minute telemetry, repair gaps, pick a window
//! size from the PACF, flag outliers (Three-Sigma rule or Isolation
//! Forest) and repair them by backward filling, train recurrent sequence
//! models from scratch, and compare forecast MAPE with and without the
//! outlier adjustment under rolling-origin cross-validation.

pub mod anomaly;
pub mod correlation;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod neuralseq;
pub mod series;
pub mod synth;
pub mod window;

pub use error::{Error, Result};
pub use experiment::{run_experiment, run_matrix, EvalReport, ExperimentConfig};
pub use neuralseq::{ModelConfig, ModelKind, TrainedModel};
pub use series::{parse_telemetry, TimePoint, TimeSeries, Unit};
pub use window::{Scaler, WindowedDataset};
