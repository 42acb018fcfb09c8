//! Central finite-difference check of [`QuantileLstmModel::backward`].

use alloc::vec::Vec;

use super::model::QuantileLstmModel;
use crate::Result;

/// Largest elementwise relative error between analytic and numerical
/// gradients of `sum_k weights[k] * output_k` over every parameter.
///
/// Relative error is `|a - n| / max(|a|, |n|, floor)`; the floor keeps
/// near-zero gradients from dividing by round-off.
#[allow(clippy::too_many_arguments)]
pub fn max_relative_error(
    model: &QuantileLstmModel,
    window: &[f64],
    steps: usize,
    train_mode: bool,
    dropout_seed: u64,
    weights: &[f64],
    step: f64,
    floor: f64,
) -> Result<f64> {
    let objective = |m: &QuantileLstmModel| -> Result<f64> {
        let out = m.forward(window, steps, train_mode, dropout_seed)?.outputs;
        Ok(out.iter().zip(weights).map(|(o, w)| o * w).sum())
    };
    let cache = model.forward(window, steps, train_mode, dropout_seed)?;
    let grads = model.backward(&cache, weights)?;
    let analytic: Vec<f64> = grads.slices().concat();

    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let mut offset = 0;
    for tensor in 0..8 {
        let len = model.param_slices()[tensor].len();
        for i in 0..len {
            let original = probe.param_slices()[tensor][i];
            probe.param_slices_mut()[tensor][i] = original + step;
            let up = objective(&probe)?;
            probe.param_slices_mut()[tensor][i] = original - step;
            let down = objective(&probe)?;
            probe.param_slices_mut()[tensor][i] = original;
            let numeric = (up - down) / (2.0 * step);
            let a = analytic[offset + i];
            let denom = a.abs().max(numeric.abs()).max(floor);
            worst = worst.max((a - numeric).abs() / denom);
        }
        offset += len;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::QUANTILES;
    use crate::neural::LstmArchitecture;
    use rand::{Rng, SeedableRng};

    fn case(seed: u64, train_mode: bool) -> f64 {
        let arch = LstmArchitecture {
            n_features: 3,
            hidden1: 4,
            hidden2: 3,
            dropout_rate: 0.2,
            quantiles: QUANTILES.to_vec(),
        };
        let mut model = QuantileLstmModel::new(arch, seed).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 1000);
        for s in model.param_slices_mut() {
            s.iter_mut().for_each(|v| *v += rng.random_range(-0.3..0.3));
        }
        let window: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let weights: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        max_relative_error(&model, &window, 5, train_mode, seed, &weights, 1e-5, 1e-6).unwrap()
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        for seed in 0..10 {
            let eval = case(seed, false);
            let train = case(seed, true);
            assert!(
                eval < 1e-4 && train < 1e-4,
                "seed {seed}: eval {eval:e}, train {train:e}"
            );
        }
    }
}
