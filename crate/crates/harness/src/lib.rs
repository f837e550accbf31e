//! Experiment harness for the lanefusion stack: JSON configs, per-run artifacts, the
//! vehicle-count sweep, scheme comparison reports, SVG plots and the out-of-process advisors.

pub mod advisors;
pub mod checkpoint;
pub mod compare;
pub mod config;
pub mod error;
pub mod feedback_log;
pub mod manifest;
pub mod metrics;
pub mod plot;
pub mod run;
pub mod scenes;
pub mod sweep;

pub use config::{load_config, ExperimentConfig, Scheme};
pub use error::HarnessError;
