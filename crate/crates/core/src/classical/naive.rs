use alloc::vec::Vec;

use crate::{Error, Result};

/// Repeat the last `period` values: `forecast[t] = series[t - period]`,
/// reading earlier forecasts once the horizon exceeds one period.
pub fn seasonal_naive_forecast(history: &[f64], period: usize, horizon: usize) -> Result<Vec<f64>> {
    if period == 0 {
        return Err(Error::InvalidArgument("period must be >= 1".into()));
    }
    if history.len() < period {
        return Err(Error::TooShort {
            needed: period - 1,
            actual: history.len(),
        });
    }
    let mut out: Vec<f64> = Vec::with_capacity(horizon);
    let tail = &history[history.len() - period..];
    for h in 0..horizon {
        let v = if h < period { tail[h] } else { out[h - period] };
        out.push(v);
    }
    Ok(out)
}
