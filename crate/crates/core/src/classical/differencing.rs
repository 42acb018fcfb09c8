use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Values dropped by each differencing pass, in application order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceState {
    /// `(lag, prefix)`: the first `lag` values of the series entering that pass.
    pub passes: Vec<(usize, Vec<f64>)>,
}

impl DifferenceState {
    pub fn dropped(&self) -> usize {
        self.passes.iter().map(|(lag, _)| lag).sum()
    }
}

/// Apply `(1 - B^s)^D` then `(1 - B)^d`.
pub fn difference(series: &[f64], d: usize, seasonal_d: usize, s: usize) -> Result<(Vec<f64>, DifferenceState)> {
    if seasonal_d > 0 && s == 0 {
        return Err(Error::InvalidArgument("season length must be >= 1".into()));
    }
    let dropped = d + seasonal_d * s;
    if series.len() <= dropped {
        return Err(Error::TooShort {
            needed: dropped,
            actual: series.len(),
        });
    }
    let lags = core::iter::repeat_n(s, seasonal_d).chain(core::iter::repeat_n(1, d));
    let mut current = series.to_vec();
    let mut passes = Vec::new();
    for lag in lags {
        passes.push((lag, current[..lag].to_vec()));
        current = (lag..current.len()).map(|t| current[t] - current[t - lag]).collect();
    }
    Ok((current, DifferenceState { passes }))
}

/// Inverse of [`difference`]; also extends the series when `diffed` is longer
/// than the differenced history.
pub fn integrate(diffed: &[f64], state: &DifferenceState) -> Vec<f64> {
    let mut current = diffed.to_vec();
    for (lag, prefix) in state.passes.iter().rev() {
        let mut level = prefix.clone();
        level.reserve(current.len());
        for (t, &dv) in current.iter().enumerate() {
            let v = dv + level[t];
            level.push(v);
        }
        debug_assert_eq!(level.len(), current.len() + lag);
        current = level;
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn ramp_first_difference() {
        let (diffed, state) = difference(&[0.0, 1.0, 2.0, 3.0], 1, 0, 1).unwrap();
        assert_eq!(diffed, vec![1.0, 1.0, 1.0]);
        assert_eq!(state.dropped(), 1);
    }

    #[test]
    fn seasonal_difference_cancels_period() {
        let periodic: Vec<f64> = (0..120).map(|i| ((i % 24) as f64 * 0.7).sin() * 100.0).collect();
        let (diffed, _) = difference(&periodic, 0, 1, 24).unwrap();
        assert!(diffed.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_short_is_error() {
        assert!(difference(&[1.0; 25], 1, 1, 24).is_err());
        assert!(difference(&[1.0; 26], 1, 1, 24).is_ok());
    }

    #[test]
    fn integrate_extends_with_zero_differences() {
        let (diffed, state) = difference(&[5.0, 6.0, 8.0], 1, 0, 1).unwrap();
        let mut ext = diffed.clone();
        ext.extend([0.0, 0.0]);
        assert_eq!(integrate(&ext, &state), vec![5.0, 6.0, 8.0, 8.0, 8.0]);
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(
            xs in proptest::collection::vec(-1e3f64..1e3, 60..120),
            d in 0usize..3,
            sd in 0usize..3,
            s in 1usize..12,
        ) {
            let (diffed, state) = difference(&xs, d, sd, s).unwrap();
            let back = integrate(&diffed, &state);
            prop_assert_eq!(back.len(), xs.len());
            let scale = xs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in xs.iter().zip(&back) {
                prop_assert!((a - b).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn integer_round_trip_is_bitwise(
            xs in proptest::collection::vec(-100_000i32..100_000, 60..200),
            d in 0usize..3,
            sd in 0usize..3,
            s in 1usize..25,
        ) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            prop_assume!(xs.len() > d + sd * s);
            let (diffed, state) = difference(&xs, d, sd, s).unwrap();
            let back = integrate(&diffed, &state);
            prop_assert!(xs.iter().zip(&back).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
