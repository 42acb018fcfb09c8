//! Two stacked LSTM blocks and a dense quantile head.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cell::{layer_backward, layer_forward, CellCache, LayerGrads, LstmLayerParams};
use crate::metrics::QUANTILES;
use crate::{Error, Result};

/// Layer sizes and regularization of a [`QuantileLstmModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LstmArchitecture {
    pub n_features: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub dropout_rate: f64,
    pub quantiles: Vec<f64>,
}

impl Default for LstmArchitecture {
    fn default() -> Self {
        Self {
            n_features: 18,
            hidden1: 100,
            hidden2: 50,
            dropout_rate: 0.2,
            quantiles: QUANTILES.to_vec(),
        }
    }
}

impl LstmArchitecture {
    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 || self.hidden1 == 0 || self.hidden2 == 0 {
            return Err(Error::InvalidArgument("layer sizes must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        let q = &self.quantiles;
        if q.is_empty() || q.iter().any(|&t| !(t > 0.0 && t < 1.0)) || q.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "quantiles {q:?} must be strictly increasing in (0, 1)"
            )));
        }
        Ok(())
    }

    /// Total number of trainable parameters.
    pub fn param_count(&self) -> usize {
        let layer = |n_in: usize, h: usize| (n_in + h + 1) * 4 * h;
        layer(self.n_features, self.hidden1)
            + layer(self.hidden1, self.hidden2)
            + (self.hidden2 + 1) * self.quantiles.len()
    }
}

/// Stacked quantile LSTM.
///
/// Each block's hidden outputs pass through relu before the next stage.
/// Dropout (inverted scaling) follows the first block's per-step outputs and
/// the second block's final output. The head maps the last hidden state to one
/// value per quantile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileLstmModel {
    pub arch: LstmArchitecture,
    pub layer1: LstmLayerParams,
    pub layer2: LstmLayerParams,
    /// `hidden2 x n_quantiles`, row-major.
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
    pub seed: u64,
    /// Bumped on every parameter update so stale caches are detected.
    #[serde(skip)]
    version: u64,
}

/// Parameter gradients in the same order as [`QuantileLstmModel::param_slices`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layer1: LayerGrads,
    pub layer2: LayerGrads,
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(model: &QuantileLstmModel) -> Self {
        Self {
            layer1: LayerGrads::zeros_like(&model.layer1),
            layer2: LayerGrads::zeros_like(&model.layer2),
            head_w: vec![0.0; model.head_w.len()],
            head_b: vec![0.0; model.head_b.len()],
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        self.layer1.add(&other.layer1);
        self.layer2.add(&other.layer2);
        self.head_w.iter_mut().zip(&other.head_w).for_each(|(a, b)| *a += b);
        self.head_b.iter_mut().zip(&other.head_b).for_each(|(a, b)| *a += b);
    }

    pub fn slices(&self) -> [&[f64]; 8] {
        [
            &self.layer1.w,
            &self.layer1.u,
            &self.layer1.b,
            &self.layer2.w,
            &self.layer2.u,
            &self.layer2.b,
            &self.head_w,
            &self.head_b,
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 8] {
        [
            &mut self.layer1.w,
            &mut self.layer1.u,
            &mut self.layer1.b,
            &mut self.layer2.w,
            &mut self.layer2.u,
            &mut self.layer2.b,
            &mut self.head_w,
            &mut self.head_b,
        ]
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    version: u64,
    steps: usize,
    cells1: Vec<CellCache>,
    h1: Vec<f64>,
    mask1: Option<Vec<f64>>,
    cells2: Vec<CellCache>,
    h2_last: Vec<f64>,
    mask2: Option<Vec<f64>>,
    head_in: Vec<f64>,
    pub outputs: Vec<f64>,
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn dropout_mask(rng: &mut ChaCha8Rng, len: usize, rate: f64) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.random::<f64>() >= rate { keep } else { 0.0 })
        .collect()
}

impl QuantileLstmModel {
    /// Randomly initialized model; the same seed gives the same parameters.
    pub fn new(arch: LstmArchitecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer1 = LstmLayerParams::init(arch.n_features, arch.hidden1, &mut rng);
        let layer2 = LstmLayerParams::init(arch.hidden1, arch.hidden2, &mut rng);
        let bound = 1.0 / libm::sqrt(arch.hidden2 as f64);
        let q = arch.quantiles.len();
        let head_w = (0..arch.hidden2 * q)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        Ok(Self {
            layer1,
            layer2,
            head_w,
            head_b: vec![0.0; q],
            seed,
            version: 0,
            arch,
        })
    }

    /// All parameters zero.
    pub fn zeros(arch: LstmArchitecture) -> Result<Self> {
        arch.validate()?;
        let q = arch.quantiles.len();
        Ok(Self {
            layer1: LstmLayerParams::zeros(arch.n_features, arch.hidden1),
            layer2: LstmLayerParams::zeros(arch.hidden1, arch.hidden2),
            head_w: vec![0.0; arch.hidden2 * q],
            head_b: vec![0.0; q],
            seed: 0,
            version: 0,
            arch,
        })
    }

    pub fn quantiles(&self) -> &[f64] {
        &self.arch.quantiles
    }

    /// Parameters in checkpoint order: layer1 `w, u, b`, layer2 `w, u, b`,
    /// head weights, head bias.
    pub fn param_slices(&self) -> [&[f64]; 8] {
        [
            &self.layer1.w,
            &self.layer1.u,
            &self.layer1.b,
            &self.layer2.w,
            &self.layer2.u,
            &self.layer2.b,
            &self.head_w,
            &self.head_b,
        ]
    }

    /// Mutable parameters in checkpoint order. Invalidates earlier caches.
    pub fn param_slices_mut(&mut self) -> [&mut [f64]; 8] {
        self.version += 1;
        [
            &mut self.layer1.w,
            &mut self.layer1.u,
            &mut self.layer1.b,
            &mut self.layer2.w,
            &mut self.layer2.u,
            &mut self.layer2.b,
            &mut self.head_w,
            &mut self.head_b,
        ]
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.param_slices().concat()
    }

    /// Rebuild a model from [`Self::to_flat`] output.
    pub fn from_flat(arch: LstmArchitecture, seed: u64, flat: &[f64]) -> Result<Self> {
        let mut model = Self::zeros(arch)?;
        model.seed = seed;
        let expected = model.arch.param_count();
        if flat.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: flat.len(),
            });
        }
        let mut offset = 0;
        for s in model.param_slices_mut() {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        }
        model.layer1.validate()?;
        model.layer2.validate()?;
        Ok(model)
    }

    /// Forward one window of `steps x n_features` values.
    ///
    /// In train mode the dropout masks are drawn from `dropout_seed`; in eval
    /// mode dropout is skipped and the seed is ignored.
    pub fn forward(&self, window: &[f64], steps: usize, train_mode: bool, dropout_seed: u64) -> Result<ForwardCache> {
        let a = &self.arch;
        if steps == 0 || window.len() != steps * a.n_features {
            return Err(Error::Shape(format!(
                "window has {} values, expected {steps} steps x {} features",
                window.len(),
                a.n_features
            )));
        }
        let (mask1, mask2) = if train_mode && a.dropout_rate > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
            let m1 = dropout_mask(&mut rng, steps * a.hidden1, a.dropout_rate);
            let m2 = dropout_mask(&mut rng, a.hidden2, a.dropout_rate);
            (Some(m1), Some(m2))
        } else {
            (None, None)
        };

        let (h1, cells1) = layer_forward(window, steps, &self.layer1)?;
        let mut x2: Vec<f64> = h1.iter().map(|&v| relu(v)).collect();
        if let Some(m) = &mask1 {
            x2.iter_mut().zip(m).for_each(|(x, k)| *x *= k);
        }
        let (h2, cells2) = layer_forward(&x2, steps, &self.layer2)?;
        let h2_last = h2[(steps - 1) * a.hidden2..].to_vec();
        let mut head_in: Vec<f64> = h2_last.iter().map(|&v| relu(v)).collect();
        if let Some(m) = &mask2 {
            head_in.iter_mut().zip(m).for_each(|(x, k)| *x *= k);
        }
        let q = a.quantiles.len();
        let mut outputs = self.head_b.clone();
        for (j, &hj) in head_in.iter().enumerate() {
            let row = &self.head_w[j * q..(j + 1) * q];
            outputs.iter_mut().zip(row).for_each(|(o, w)| *o += hj * w);
        }
        Ok(ForwardCache {
            version: self.version,
            steps,
            cells1,
            h1,
            mask1,
            cells2,
            h2_last,
            mask2,
            head_in,
            outputs,
        })
    }

    /// Eval-mode outputs, one per quantile, before any crossing repair.
    pub fn predict_window(&self, window: &[f64], steps: usize) -> Result<Vec<f64>> {
        Ok(self.forward(window, steps, false, 0)?.outputs)
    }

    /// Gradients of a loss wrt every parameter, given `d loss / d outputs`.
    pub fn backward(&self, cache: &ForwardCache, d_outputs: &[f64]) -> Result<Gradients> {
        if cache.version != self.version || cache.cells1.first().is_some_and(|c| c.x.len() != self.arch.n_features) {
            return Err(Error::Shape(
                "forward cache does not belong to the current parameters".into(),
            ));
        }
        let a = &self.arch;
        let q = a.quantiles.len();
        if d_outputs.len() != q {
            return Err(Error::LengthMismatch {
                expected: q,
                actual: d_outputs.len(),
            });
        }
        let mut grads = Gradients::zeros_like(self);
        grads.head_b.copy_from_slice(d_outputs);
        let mut d_head_in = vec![0.0; a.hidden2];
        for (j, &hj) in cache.head_in.iter().enumerate() {
            let row = j * q..(j + 1) * q;
            for ((g, w), d) in grads.head_w[row.clone()]
                .iter_mut()
                .zip(&self.head_w[row])
                .zip(d_outputs)
            {
                *g = hj * d;
                d_head_in[j] += w * d;
            }
        }

        let steps = cache.steps;
        let mut dh2 = vec![0.0; steps * a.hidden2];
        let last = &mut dh2[(steps - 1) * a.hidden2..];
        for u in 0..a.hidden2 {
            let keep = cache.mask2.as_ref().map_or(1.0, |m| m[u]);
            last[u] = if cache.h2_last[u] > 0.0 {
                d_head_in[u] * keep
            } else {
                0.0
            };
        }
        let dx2 = layer_backward(&dh2, &cache.cells2, &self.layer2, &mut grads.layer2);
        let dh1: Vec<f64> = dx2
            .iter()
            .enumerate()
            .map(|(idx, &d)| {
                let keep = cache.mask1.as_ref().map_or(1.0, |m| m[idx]);
                if cache.h1[idx] > 0.0 {
                    d * keep
                } else {
                    0.0
                }
            })
            .collect();
        layer_backward(&dh1, &cache.cells1, &self.layer1, &mut grads.layer1);
        Ok(grads)
    }
}
