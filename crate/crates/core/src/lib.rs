//! Core numerics for probabilistic household load forecasting.
//!
//! Everything in this crate is a pure function over in-memory data and builds
//! without `std` (an allocator is required). File formats, configuration and
//! the command-line pipeline live in the `loadcast` crate.
//!
//! The pieces, in pipeline order:
//!
//! - [`series`]: raw meter readings, hourly resampling, gap detection, min-max
//!   scaling and the chronological train/test split.
//! - [`imputation`]: kNN repair of small holes, linear and seasonal filling of
//!   structural gaps, and the masked-holdout trial that picks between them.
//! - [`features`]: calendar and lag columns, the tabular design matrix, and
//!   sliding windows for sequence models.
//! - [`classical`]: seasonal naive forecasts and a conditional-sum-of-squares
//!   SARIMAX with a Nelder-Mead optimizer.
//! - [`boosted`]: second-order gradient-boosted regression trees with squared
//!   and pinball losses.
//! - [`neural`]: a stacked quantile LSTM trained by backpropagation through time
//!   and Adam.
//! - [`metrics`]: RMSE, MAE, average quantile score, interval coverage, and the
//!   evaluation report.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod boosted;
pub mod calendar;
pub mod classical;
mod error;
pub mod features;
pub mod imputation;
pub mod metrics;
pub mod neural;
pub mod series;

pub use error::{Error, Result};
