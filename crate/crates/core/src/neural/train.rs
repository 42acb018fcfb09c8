//! Mini-batch training with early stopping, and quantile prediction.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::model::{Gradients, QuantileLstmModel};
use crate::features::WindowTensor;
use crate::metrics::{pinball_grad_unchecked, pinball_unchecked, ForecastDistribution};
use crate::series::ScalerParams;
use crate::{Error, Result};

/// Samples per unit of work. Gradient sums are reduced chunk by chunk in
/// index order, so results do not depend on the thread count.
const CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Seeds batch shuffling and dropout masks.
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 50,
            patience: 5,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 0,
            threads: 0,
        }
    }
}

/// Tracks the best validation loss and how long ago it was seen.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best_loss: f64,
    /// 1-based epoch of the best loss, 0 before any observation.
    pub best_epoch: usize,
    pub epochs_since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best_loss: f64::INFINITY,
            best_epoch: 0,
            epochs_since_best: 0,
        }
    }

    /// Record an epoch's loss; returns true if it is a new best.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_epoch = epoch;
            self.epochs_since_best = 0;
            true
        } else {
            self.epochs_since_best += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.epochs_since_best >= self.patience
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best validation epoch.
    pub model: QuantileLstmModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Mean pinball loss over the quantile outputs of one sample.
pub fn sample_loss(outputs: &[f64], y: f64, quantiles: &[f64]) -> f64 {
    outputs
        .iter()
        .zip(quantiles)
        .map(|(&o, &t)| pinball_unchecked(y, o, t))
        .sum::<f64>()
        / quantiles.len() as f64
}

fn thread_count(requested: usize) -> usize {
    #[cfg(feature = "std")]
    if requested == 0 {
        return std::thread::available_parallelism().map_or(1, |n| n.get());
    }
    requested.max(1)
}

/// `f(0..n)` in order, spread over `threads` workers when `std` is available.
fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "std")]
    if threads > 1 && n > 1 {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let next = AtomicUsize::new(0);
        let mut tagged: Vec<(usize, T)> = std::thread::scope(|s| {
            let workers: Vec<_> = (0..threads.min(n))
                .map(|_| {
                    s.spawn(|| {
                        let mut out = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            if i >= n {
                                break out;
                            }
                            out.push((i, f(i)));
                        }
                    })
                })
                .collect();
            workers
                .into_iter()
                .flat_map(|w| w.join().expect("worker panicked"))
                .collect()
        });
        tagged.sort_by_key(|(i, _)| *i);
        return tagged.into_iter().map(|(_, t)| t).collect();
    }
    let _ = threads;
    (0..n).map(f).collect()
}

fn check_tensor(model: &QuantileLstmModel, tensor: &WindowTensor) -> Result<()> {
    if tensor.samples == 0 {
        return Err(Error::NoRows);
    }
    if tensor.n_features != model.arch.n_features {
        return Err(Error::Shape(format!(
            "tensor has {} features, model expects {}",
            tensor.n_features, model.arch.n_features
        )));
    }
    Ok(())
}

/// Mean eval-mode loss over every sample of `tensor`.
pub fn evaluate_loss(model: &QuantileLstmModel, tensor: &WindowTensor, threads: usize) -> Result<f64> {
    check_tensor(model, tensor)?;
    let n_chunks = tensor.samples.div_ceil(CHUNK);
    let sums = map_indexed(n_chunks, thread_count(threads), |c| -> Result<f64> {
        let mut total = 0.0;
        for i in c * CHUNK..((c + 1) * CHUNK).min(tensor.samples) {
            let out = model.predict_window(tensor.sample(i), tensor.window)?;
            total += sample_loss(&out, tensor.targets[i], model.quantiles());
        }
        Ok(total)
    });
    let mut total = 0.0;
    for s in sums {
        total += s?;
    }
    Ok(total / tensor.samples as f64)
}

/// Summed train-mode loss and gradient over `indices`.
fn batch_gradients(
    model: &QuantileLstmModel,
    tensor: &WindowTensor,
    indices: &[usize],
    dropout_seeds: &[u64],
    threads: usize,
) -> Result<(Gradients, f64)> {
    let q = model.quantiles();
    let n_chunks = indices.len().div_ceil(CHUNK);
    let parts = map_indexed(n_chunks, threads, |c| -> Result<(Gradients, f64)> {
        let mut grads = Gradients::zeros_like(model);
        let mut loss = 0.0;
        for j in c * CHUNK..((c + 1) * CHUNK).min(indices.len()) {
            let i = indices[j];
            let y = tensor.targets[i];
            let cache = model.forward(tensor.sample(i), tensor.window, true, dropout_seeds[j])?;
            loss += sample_loss(&cache.outputs, y, q);
            let d: Vec<f64> = cache
                .outputs
                .iter()
                .zip(q)
                .map(|(&o, &t)| pinball_grad_unchecked(y, o, t) / q.len() as f64)
                .collect();
            grads.add(&model.backward(&cache, &d)?);
        }
        Ok((grads, loss))
    });
    let mut total = Gradients::zeros_like(model);
    let mut loss = 0.0;
    for part in parts {
        let (g, l) = part?;
        total.add(&g);
        loss += l;
    }
    Ok((total, loss))
}

/// Minimize the mean pinball loss over samples and quantiles.
///
/// Stops once the validation loss has not improved for `patience` epochs and
/// returns the parameters of the best epoch. A non-finite loss aborts with
/// [`Error::Diverged`].
pub fn train(
    mut model: QuantileLstmModel,
    train_set: &WindowTensor,
    val_set: &WindowTensor,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    check_tensor(&model, train_set)?;
    check_tensor(&model, val_set)?;
    if config.batch_size == 0 || config.max_epochs == 0 || config.patience == 0 {
        return Err(Error::InvalidArgument(
            "batch size, epochs and patience must be >= 1".into(),
        ));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "learning rate {}",
            config.learning_rate
        )));
    }
    let threads = thread_count(config.threads);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(&model.param_slices(), config.learning_rate);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best_params = model.to_flat();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_set.samples).collect();
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let seeds: Vec<u64> = batch.iter().map(|_| rng.random()).collect();
            let (mut grads, loss) = batch_gradients(&model, train_set, batch, &seeds, threads)?;
            epoch_loss += loss;
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut model.param_slices_mut(), &grads.slices(), &mut adam)?;
        }
        let train_loss = epoch_loss / train_set.samples as f64;
        let val_loss = evaluate_loss(&model, val_set, threads)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if stopper.observe(epoch, val_loss) {
            best_params = model.to_flat();
        } else if stopper.should_stop() {
            stopped_early = true;
            break;
        }
    }
    let best = QuantileLstmModel::from_flat(model.arch.clone(), model.seed, &best_params)?;
    Ok(TrainOutcome {
        model: best,
        history,
        best_epoch: stopper.best_epoch,
        stopped_early,
    })
}

/// Eval-mode forecasts for every sample, sorted per row and mapped back to
/// physical units through the single-channel target scaler.
pub fn predict_quantiles(
    model: &QuantileLstmModel,
    tensor: &WindowTensor,
    scaler: &ScalerParams,
) -> Result<ForecastDistribution> {
    if scaler.n_channels() != 1 {
        return Err(Error::ScalerMismatch(format!(
            "target scaler has {} channels, expected 1",
            scaler.n_channels()
        )));
    }
    check_tensor(model, tensor)?;
    let q = model.quantiles().len();
    let mut values = (0..q).map(|_| Vec::with_capacity(tensor.samples)).collect::<Vec<_>>();
    for i in 0..tensor.samples {
        let mut out = model.predict_window(tensor.sample(i), tensor.window)?;
        out.sort_by(f64::total_cmp);
        for (col, v) in values.iter_mut().zip(out) {
            col.push(scaler.unscale(0, v));
        }
    }
    ForecastDistribution::from_unsorted(tensor.target_timestamps.clone(), model.quantiles().to_vec(), values)
}
