//! Classical forecasters: the seasonal naive baseline and SARIMAX estimated
//! by conditional sum of squares.

mod differencing;
mod naive;
mod sarimax;
pub mod simplex;

pub use differencing::{difference, integrate, DifferenceState};
pub use naive::seasonal_naive_forecast;
pub use sarimax::{sarimax_fit, sarimax_forecast, FitDiagnostics, SarimaxModel, SarimaxOrder};
