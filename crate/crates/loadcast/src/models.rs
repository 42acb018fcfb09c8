//! Per-model training, artifact persistence and test-split forecasting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use loadcast_core::boosted::{gbdt_fit, gbdt_predict, gbdt_predict_quantiles, GbdtModel, Loss};
use loadcast_core::calendar::CalendarFields;
use loadcast_core::classical::{sarimax_fit, sarimax_forecast, SarimaxModel};
use loadcast_core::features::{assemble_matrix, windowize, CalendarFeature, FeatureMatrix, FeatureSpec, WindowTensor};
use loadcast_core::metrics::ForecastDistribution;
use loadcast_core::neural::{self, EpochRecord, LstmArchitecture, QuantileLstmModel, TrainConfig};
use loadcast_core::series::ScalerParams;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{derive_seed, PipelineConfig};
use crate::error::{PipelineError, Result};
use crate::io::{json_bytes, read_json, write_if_changed};
use crate::pipeline::Prepared;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    SeasonalNaive,
    Sarimax,
    Gbdt,
    GbdtQuantile,
    Lstm,
}

impl ModelKind {
    /// Report order.
    pub const ALL: [ModelKind; 5] = [
        ModelKind::SeasonalNaive,
        ModelKind::Sarimax,
        ModelKind::Gbdt,
        ModelKind::GbdtQuantile,
        ModelKind::Lstm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::SeasonalNaive => "seasonal_naive",
            ModelKind::Sarimax => "sarimax",
            ModelKind::Gbdt => "gbdt",
            ModelKind::GbdtQuantile => "gbdt_quantile",
            ModelKind::Lstm => "lstm",
        }
    }

    /// Row label in the report.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::SeasonalNaive => "Seasonal Naive",
            ModelKind::Sarimax => "SARIMAX",
            ModelKind::Gbdt => "GBDT",
            ModelKind::GbdtQuantile => "GBDT (Prob.)",
            ModelKind::Lstm => "LSTM (Prob.)",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn enabled(self, config: &PipelineConfig) -> bool {
        let m = &config.models;
        match self {
            ModelKind::SeasonalNaive => m.seasonal_naive.enabled,
            ModelKind::Sarimax => m.sarimax.enabled,
            ModelKind::Gbdt => m.gbdt.enabled,
            ModelKind::GbdtQuantile => m.gbdt_quantile.enabled,
            ModelKind::Lstm => m.lstm.enabled,
        }
    }

    /// The file every model writes; its presence means the model is trained.
    pub fn artifact_path(self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.json", self.name()))
    }
}

/// Forecasts for every test hour, in order.
#[derive(Debug, Clone, PartialEq)]
pub enum Forecast {
    Point(Vec<f64>),
    Quantiles(ForecastDistribution),
}

#[derive(Debug, Clone, Default)]
pub struct Trained {
    pub artifacts: Vec<PathBuf>,
    pub notes: Vec<String>,
}

/// Artifact wrapper tying a payload to the config that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Envelope<T> {
    model: String,
    config_hash: String,
    seed: u64,
    payload: T,
}

fn write_envelope<T: Serialize>(path: &Path, kind: ModelKind, config_hash: &str, seed: u64, payload: T) -> Result<()> {
    let env = Envelope {
        model: kind.name().to_string(),
        config_hash: config_hash.to_string(),
        seed,
        payload,
    };
    write_if_changed(path, &json_bytes(&env)).map(|_| ())
}

fn read_envelope<T: DeserializeOwned>(path: &Path, config_hash: &str) -> Result<T> {
    if !path.exists() {
        return Err(PipelineError::Missing(format!(
            "{} not found; run train first",
            path.display()
        )));
    }
    let env: Envelope<T> = read_json(path)?;
    if env.config_hash != config_hash {
        return Err(PipelineError::HashMismatch {
            path: path.to_path_buf(),
            expected: config_hash.to_string(),
            found: env.config_hash,
        });
    }
    Ok(env.payload)
}

fn calendar_exog(timestamps: &[i64]) -> Vec<[f64; 2]> {
    timestamps
        .iter()
        .map(|&t| {
            let f = CalendarFields::from_unix(t);
            [f64::from(f.hour), f64::from(f.dayofweek)]
        })
        .collect()
}

/// Rows `[0, n_train)` of `matrix` target training hours, the rest test hours.
fn split_rows(matrix: &FeatureMatrix, prep: &Prepared) -> Result<usize> {
    let n_train = matrix.timestamps().partition_point(|&t| t < prep.split_ts);
    let test = &matrix.timestamps()[n_train..];
    if test != prep.test_timestamps().as_slice() {
        return Err(PipelineError::Failed(
            "feature rows do not cover every test hour; the series is too short for the configured lags".into(),
        ));
    }
    Ok(n_train)
}

fn validation_split(n: usize, fraction: f64, what: &str) -> Result<usize> {
    let n_val = ((n as f64 * fraction).round() as usize).max(1);
    if n_val >= n {
        return Err(PipelineError::Failed(format!(
            "{what}: {n} training rows leave nothing to fit after validation"
        )));
    }
    Ok(n - n_val)
}

pub fn train_model(kind: ModelKind, config: &PipelineConfig, prep: &Prepared, dir: &Path) -> Result<Trained> {
    let hash = config.hash();
    let seed = derive_seed(config.seed, kind.name());
    let path = kind.artifact_path(dir);
    let mut out = Trained {
        artifacts: vec![path.clone()],
        notes: Vec::new(),
    };
    match kind {
        ModelKind::SeasonalNaive => {
            let period = config.models.seasonal_naive.period;
            if prep.n_train < period {
                return Err(PipelineError::Failed(format!(
                    "training split is shorter than one period ({period} h)"
                )));
            }
            write_envelope(&path, kind, &hash, seed, SeasonalNaivePayload { period })?;
        }
        ModelKind::Sarimax => {
            let cfg = &config.models.sarimax;
            let from = prep.n_train.saturating_sub(cfg.train_hours);
            let endog: Vec<f64> = prep.aggregate()[from..prep.n_train]
                .iter()
                .map(|v| v.expect("repaired"))
                .collect();
            let ts: Vec<i64> = (from..prep.n_train).map(|i| prep.series.timestamp(i)).collect();
            let exog = calendar_exog(&ts);
            let columns = vec![exog.iter().map(|r| r[0]).collect(), exog.iter().map(|r| r[1]).collect()];
            let model = sarimax_fit(&endog, &columns, cfg.order)?;
            out.notes.push(format!(
                "fitted on the final {} hours of the training split with hour and dayofweek regressors",
                endog.len()
            ));
            let d = &model.diagnostics;
            out.notes.push(format!(
                "converged={} iterations={} min_ar_root_modulus={}",
                d.converged,
                d.iterations,
                d.min_ar_root_modulus.map_or("none".to_string(), |m| format!("{m:.4}"))
            ));
            if d.near_unit_root {
                out.notes.push("autoregressive part is close to a unit root".into());
            }
            write_envelope(&path, kind, &hash, seed, model)?;
        }
        ModelKind::Gbdt | ModelKind::GbdtQuantile => {
            let cfg = if kind == ModelKind::Gbdt {
                &config.models.gbdt
            } else {
                &config.models.gbdt_quantile
            };
            let matrix = flat_matrix(prep, &cfg.lags)?;
            let n_train = split_rows(&matrix, prep)?;
            let n_fit = validation_split(n_train, config.validation_fraction, kind.name())?;
            let (fit, val) = (matrix.rows(0..n_fit), matrix.rows(n_fit..n_train));
            let losses: Vec<Loss> = if kind == ModelKind::Gbdt {
                vec![Loss::Squared]
            } else {
                config.quantiles.iter().map(|&tau| Loss::Pinball { tau }).collect()
            };
            let mut models = Vec::new();
            for loss in losses {
                let m = gbdt_fit(&fit, fit.targets(), &val, val.targets(), loss, cfg.params)?;
                out.notes.push(format!(
                    "{loss:?}: best_iteration={} of {} trees",
                    m.best_iteration,
                    m.trees.len()
                ));
                models.push(m);
            }
            if kind == ModelKind::Gbdt {
                write_envelope(&path, kind, &hash, seed, models.remove(0))?;
            } else {
                write_envelope(&path, kind, &hash, seed, models)?;
            }
        }
        ModelKind::Lstm => {
            let trained = train_lstm(config, prep, seed)?;
            out.notes.push(format!(
                "best_epoch={} of {} epochs{}",
                trained.best_epoch,
                trained.history.len(),
                if trained.stopped_early { ", stopped early" } else { "" }
            ));
            let bin = dir.join("lstm.bin");
            let history = dir.join("lstm_history.csv");
            let bytes: Vec<u8> = trained.model.to_flat().iter().flat_map(|v| v.to_le_bytes()).collect();
            write_if_changed(&bin, &bytes)?;
            write_if_changed(&history, &history_csv(&trained.history))?;
            let header = LstmHeader {
                architecture: trained.model.arch.clone(),
                window: config.models.lstm.window,
                feature_names: trained.feature_scaler.channel_names.clone(),
                feature_scaler: trained.feature_scaler,
                target_scaler: trained.target_scaler,
                parameter_order: PARAMETER_ORDER.iter().map(|s| s.to_string()).collect(),
                parameter_count: trained.model.arch.param_count(),
                parameters_file: "lstm.bin".into(),
                best_epoch: trained.best_epoch,
            };
            write_envelope(&path, kind, &hash, seed, header)?;
            out.artifacts.extend([bin, history]);
        }
    }
    Ok(out)
}

pub fn forecast(kind: ModelKind, config: &PipelineConfig, prep: &Prepared, dir: &Path) -> Result<Forecast> {
    let hash = config.hash();
    let path = kind.artifact_path(dir);
    let n_test = prep.series.len() - prep.n_train;
    match kind {
        ModelKind::SeasonalNaive => {
            let p: SeasonalNaivePayload = read_envelope(&path, &hash)?;
            let agg = prep.aggregate();
            if prep.n_train < p.period {
                return Err(PipelineError::Failed(
                    "training split is shorter than one period".into(),
                ));
            }
            Ok(Forecast::Point(
                (prep.n_train..prep.series.len())
                    .map(|i| agg[i - p.period].expect("repaired"))
                    .collect(),
            ))
        }
        ModelKind::Sarimax => {
            let model: SarimaxModel = read_envelope(&path, &hash)?;
            let rows: Vec<Vec<f64>> = calendar_exog(&prep.test_timestamps())
                .iter()
                .map(|r| r.to_vec())
                .collect();
            Ok(Forecast::Point(sarimax_forecast(&model, n_test, &rows)?))
        }
        ModelKind::Gbdt => {
            let model: GbdtModel = read_envelope(&path, &hash)?;
            let matrix = flat_matrix(prep, &config.models.gbdt.lags)?;
            let n_train = split_rows(&matrix, prep)?;
            Ok(Forecast::Point(gbdt_predict(
                &model,
                &matrix.rows(n_train..matrix.n_rows()),
            )?))
        }
        ModelKind::GbdtQuantile => {
            let models: Vec<GbdtModel> = read_envelope(&path, &hash)?;
            let matrix = flat_matrix(prep, &config.models.gbdt_quantile.lags)?;
            let n_train = split_rows(&matrix, prep)?;
            Ok(Forecast::Quantiles(gbdt_predict_quantiles(
                &models,
                &matrix.rows(n_train..matrix.n_rows()),
            )?))
        }
        ModelKind::Lstm => {
            let header: LstmHeader = read_envelope(&path, &hash)?;
            let model = read_lstm_parameters(&header, dir)?;
            let (tensor, _) = lstm_tensor(config, prep, Some(&header.feature_scaler), &header.target_scaler)?;
            let first_test = tensor.target_timestamps.partition_point(|&t| t < prep.split_ts);
            let (_, test) = tensor.split_at(first_test);
            let dist = neural::predict_quantiles(&model, &test, &header.target_scaler)?;
            Ok(Forecast::Quantiles(dist))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SeasonalNaivePayload {
    period: usize,
}

pub const PARAMETER_ORDER: [&str; 8] = [
    "layer1.w", "layer1.u", "layer1.b", "layer2.w", "layer2.u", "layer2.b", "head.w", "head.b",
];

/// JSON half of the LSTM checkpoint; parameters live in a flat little-endian
/// f64 file in [`PARAMETER_ORDER`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LstmHeader {
    pub architecture: LstmArchitecture,
    pub window: usize,
    pub feature_names: Vec<String>,
    pub feature_scaler: ScalerParams,
    pub target_scaler: ScalerParams,
    pub parameter_order: Vec<String>,
    pub parameter_count: usize,
    pub parameters_file: String,
    pub best_epoch: usize,
}

pub fn read_lstm_parameters(header: &LstmHeader, dir: &Path) -> Result<QuantileLstmModel> {
    let path = dir.join(&header.parameters_file);
    let bytes = fs::read(&path).map_err(PipelineError::io(&path))?;
    if bytes.len() != header.parameter_count * 8 {
        return Err(PipelineError::Failed(format!(
            "{} holds {} bytes, expected {}",
            path.display(),
            bytes.len(),
            header.parameter_count * 8
        )));
    }
    let flat: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(QuantileLstmModel::from_flat(header.architecture.clone(), 0, &flat)?)
}

fn history_csv(history: &[EpochRecord]) -> Vec<u8> {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for r in history {
        let _ = writeln!(out, "{},{},{}", r.epoch, r.train_loss, r.val_loss);
    }
    out.into_bytes()
}

fn flat_matrix(prep: &Prepared, lags: &[usize]) -> Result<FeatureMatrix> {
    let spec = FeatureSpec {
        calendar: CalendarFeature::ALL.to_vec(),
        lags: lags.to_vec(),
        channels: Vec::new(),
    };
    Ok(assemble_matrix(&prep.series, &prep.aggregate_name, &spec)?)
}

struct LstmTrained {
    model: QuantileLstmModel,
    history: Vec<EpochRecord>,
    best_epoch: usize,
    stopped_early: bool,
    feature_scaler: ScalerParams,
    target_scaler: ScalerParams,
}

/// Windows over the scaled sequence matrix. Without a stored scaler one is
/// fitted on the rows that precede the split.
fn lstm_tensor(
    config: &PipelineConfig,
    prep: &Prepared,
    feature_scaler: Option<&ScalerParams>,
    target_scaler: &ScalerParams,
) -> Result<(WindowTensor, ScalerParams)> {
    let cfg = &config.models.lstm;
    let spec = FeatureSpec {
        calendar: CalendarFeature::ALL.to_vec(),
        lags: cfg.lags.clone(),
        channels: prep.series.channel_names().to_vec(),
    };
    let matrix = assemble_matrix(&prep.series, &prep.aggregate_name, &spec)?;
    let n_train = split_rows(&matrix, prep)?;
    let scaler = match feature_scaler {
        Some(s) => s.clone(),
        None => matrix.fit_scaler(0..n_train)?,
    };
    let scaled = matrix
        .scale_features(&scaler)?
        .map_targets(|y| target_scaler.scale(0, y));
    Ok((windowize(&scaled, cfg.window, 1)?, scaler))
}

fn train_lstm(config: &PipelineConfig, prep: &Prepared, seed: u64) -> Result<LstmTrained> {
    let cfg = &config.models.lstm;
    // The target scaler is the aggregate channel's range over the training hours.
    let agg: Vec<f64> = prep.aggregate()[..prep.n_train]
        .iter()
        .map(|v| v.expect("repaired"))
        .collect();
    let (lo, hi) = agg.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let target_scaler = ScalerParams {
        channel_names: vec![prep.aggregate_name.clone()],
        min: vec![lo],
        max: vec![hi],
    };
    let (tensor, feature_scaler) = lstm_tensor(config, prep, None, &target_scaler)?;
    let n_train = tensor.target_timestamps.partition_point(|&t| t < prep.split_ts);
    let n_fit = validation_split(n_train, config.validation_fraction, "lstm")?;
    let (train_part, _) = tensor.split_at(n_train);
    let (fit, val) = train_part.split_at(n_fit);
    let arch = cfg.architecture(tensor.n_features, &config.quantiles);
    let model = QuantileLstmModel::new(arch, seed)?;
    let train_cfg = TrainConfig {
        seed,
        ..cfg.training.clone()
    };
    let outcome = neural::train(model, &fit, &val, &train_cfg)?;
    Ok(LstmTrained {
        model: outcome.model,
        history: outcome.history,
        best_epoch: outcome.best_epoch,
        stopped_early: outcome.stopped_early,
        feature_scaler,
        target_scaler,
    })
}
