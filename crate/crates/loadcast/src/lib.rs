//! Household load forecasting pipeline: configuration, file formats and the
//! `ingest → impute-eval → train → evaluate → report` commands built on
//! `loadcast-core`.

pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod models;
pub mod pipeline;
pub mod repair;

pub use config::PipelineConfig;
pub use error::{PipelineError, Result};
pub use models::ModelKind;
