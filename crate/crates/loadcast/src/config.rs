//! JSON run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use loadcast_core::boosted::GbdtParams;
use loadcast_core::classical::SarimaxOrder;
use loadcast_core::features::DEFAULT_LAGS;
use loadcast_core::imputation::{ImputeMethod, DEFAULT_K, DEFAULT_MAX_GAP};
use loadcast_core::metrics::QUANTILES;
use loadcast_core::neural::{LstmArchitecture, TrainConfig};
use loadcast_core::series::DEFAULT_STRUCTURAL_THRESHOLD;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};

/// Overrides `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "LOADCAST_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    /// Share of the training rows held out for early stopping.
    #[serde(default = "default_validation")]
    pub validation_fraction: f64,
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    #[serde(default)]
    pub impute: ImputeConfig,
    #[serde(default)]
    pub models: ModelRoster,
    /// Forecasts produced elsewhere, in plot-CSV format, scored alongside ours.
    #[serde(default)]
    pub external_predictions: Vec<ExternalPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub path: PathBuf,
    #[serde(default = "default_timestamp_column")]
    pub timestamp_column: String,
    #[serde(default = "default_aggregate_column")]
    pub aggregate_column: String,
    #[serde(default = "default_appliance_columns")]
    pub appliance_columns: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    /// Use whichever method wins the masked-holdout trial.
    Auto,
    Linear,
    Seasonal,
}

impl MethodChoice {
    pub fn fixed(self) -> Option<ImputeMethod> {
        match self {
            MethodChoice::Auto => None,
            MethodChoice::Linear => Some(ImputeMethod::Linear),
            MethodChoice::Seasonal => Some(ImputeMethod::Seasonal),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImputeConfig {
    pub structural_threshold: usize,
    pub knn_k: usize,
    pub knn_max_gap: usize,
    pub method: MethodChoice,
    /// Preferred trial window; the first gapless stretch this long is used.
    pub trial_window_hours: usize,
    /// Fallback: the longest gapless stretch, if at least this long.
    pub min_trial_window_hours: usize,
}

impl Default for ImputeConfig {
    fn default() -> Self {
        Self {
            structural_threshold: DEFAULT_STRUCTURAL_THRESHOLD,
            knn_k: DEFAULT_K,
            knn_max_gap: DEFAULT_MAX_GAP,
            method: MethodChoice::Auto,
            trial_window_hours: 90 * 24,
            min_trial_window_hours: 21 * 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelRoster {
    pub seasonal_naive: SeasonalNaiveConfig,
    pub sarimax: SarimaxConfig,
    pub gbdt: GbdtConfig,
    pub gbdt_quantile: GbdtConfig,
    pub lstm: LstmConfig,
}

impl Default for ModelRoster {
    fn default() -> Self {
        Self {
            seasonal_naive: SeasonalNaiveConfig::default(),
            sarimax: SarimaxConfig::default(),
            gbdt: GbdtConfig::default(),
            gbdt_quantile: GbdtConfig {
                enabled: false,
                ..GbdtConfig::default()
            },
            lstm: LstmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeasonalNaiveConfig {
    pub enabled: bool,
    pub period: usize,
}

impl Default for SeasonalNaiveConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            period: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SarimaxConfig {
    pub enabled: bool,
    pub order: SarimaxOrder,
    /// The model is fitted on this many final hours of the training split.
    pub train_hours: usize,
}

impl Default for SarimaxConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            order: SarimaxOrder::new((1, 1, 1), (1, 1, 0, 24)),
            train_hours: 30 * 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtConfig {
    pub enabled: bool,
    pub lags: Vec<usize>,
    pub params: GbdtParams,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            lags: DEFAULT_LAGS.to_vec(),
            params: GbdtParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmConfig {
    pub enabled: bool,
    pub window: usize,
    pub lags: Vec<usize>,
    pub hidden1: usize,
    pub hidden2: usize,
    pub dropout_rate: f64,
    pub training: TrainConfig,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            window: 48,
            lags: vec![1, 24, 48, 168],
            hidden1: 100,
            hidden2: 50,
            dropout_rate: 0.2,
            training: TrainConfig::default(),
        }
    }
}

impl LstmConfig {
    pub fn architecture(&self, n_features: usize, quantiles: &[f64]) -> LstmArchitecture {
        LstmArchitecture {
            n_features,
            hidden1: self.hidden1,
            hidden2: self.hidden2,
            dropout_rate: self.dropout_rate,
            quantiles: quantiles.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalPrediction {
    /// Report row label, e.g. `TFT (Prob.)`.
    pub name: String,
    pub path: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}
fn default_split() -> f64 {
    0.8
}
fn default_validation() -> f64 {
    0.1
}
fn default_quantiles() -> Vec<f64> {
    QUANTILES.to_vec()
}
fn default_timestamp_column() -> String {
    "Unix".into()
}
fn default_aggregate_column() -> String {
    "Aggregate".into()
}
fn default_appliance_columns() -> Vec<String> {
    (1..=9).map(|i| format!("Appliance{i}")).collect()
}

impl PipelineConfig {
    /// Read and validate a config file. Relative paths inside it resolve
    /// against the file's directory; [`OUTPUT_DIR_ENV`] replaces `output_dir`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(PipelineError::io(path))?;
        let mut config: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
            config.output_dir = PathBuf::from(dir);
        }
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.input.path);
        join(&mut self.output_dir);
        for ext in &mut self.external_predictions {
            join(&mut ext.path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad(format!("split_fraction {} must lie in (0, 1)", self.split_fraction));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!(
                "validation_fraction {} must lie in (0, 1)",
                self.validation_fraction
            ));
        }
        let q = &self.quantiles;
        if q.len() < 2 || q.iter().any(|&t| !(t > 0.0 && t < 1.0)) || q.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "quantiles {q:?} must be at least two strictly increasing levels in (0, 1)"
            ));
        }
        if self.input.timestamp_column.is_empty() || self.input.aggregate_column.is_empty() {
            return bad("timestamp and aggregate column names must be non-empty".into());
        }
        let mut names = vec![&self.input.aggregate_column];
        names.extend(&self.input.appliance_columns);
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) || *n == &self.input.timestamp_column {
                return bad(format!("column `{n}` is listed twice"));
            }
        }
        let imp = &self.impute;
        if imp.structural_threshold == 0 || imp.knn_k == 0 {
            return bad("structural_threshold and knn_k must be >= 1".into());
        }
        if imp.min_trial_window_hours < 3 || imp.trial_window_hours < imp.min_trial_window_hours {
            return bad("trial windows need min_trial_window_hours >= 3 and trial_window_hours >= it".into());
        }
        let m = &self.models;
        if m.seasonal_naive.enabled && m.seasonal_naive.period == 0 {
            return bad("seasonal_naive.period must be >= 1".into());
        }
        if m.sarimax.enabled {
            m.sarimax
                .order
                .validate()
                .map_err(|e| PipelineError::Config(format!("sarimax: {e}")))?;
        }
        for (name, g) in [("gbdt", &m.gbdt), ("gbdt_quantile", &m.gbdt_quantile)] {
            if g.enabled {
                g.params
                    .validate()
                    .map_err(|e| PipelineError::Config(format!("{name}: {e}")))?;
                if g.lags.is_empty() || g.lags.contains(&0) {
                    return bad(format!("{name}.lags must be non-empty and positive"));
                }
            }
        }
        if m.lstm.enabled {
            let l = &m.lstm;
            l.architecture(1, &self.quantiles)
                .validate()
                .map_err(|e| PipelineError::Config(format!("lstm: {e}")))?;
            let t = &l.training;
            if l.window == 0
                || t.batch_size == 0
                || t.max_epochs == 0
                || t.patience == 0
                || t.learning_rate.is_nan()
                || t.learning_rate <= 0.0
            {
                return bad("lstm window, batch_size, max_epochs, patience and learning_rate must be positive".into());
            }
            if l.lags.contains(&0) {
                return bad("lstm.lags must be positive".into());
            }
        }
        let mut ext_names: Vec<&str> = Vec::new();
        for ext in &self.external_predictions {
            if ext.name.is_empty() || ext_names.contains(&ext.name.as_str()) {
                return bad(format!("external prediction name `{}` is empty or repeated", ext.name));
            }
            ext_names.push(&ext.name);
        }
        Ok(())
    }

    pub fn channel_names(&self) -> Vec<String> {
        let mut names = vec![self.input.aggregate_column.clone()];
        names.extend(self.input.appliance_columns.iter().cloned());
        names
    }

    /// SHA-256 of the canonical JSON form. File locations and external
    /// predictions do not count: the data itself is fingerprinted separately.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output_dir");
            obj.remove("external_predictions");
            if let Some(input) = obj.get_mut("input").and_then(|v| v.as_object_mut()) {
                input.remove("path");
            }
        }
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

/// Global seed plus a stable hash of the model name, so adding or removing a
/// model leaves the others' seeds alone.
pub fn derive_seed(global: u64, model: &str) -> u64 {
    let digest = Sha256::digest(model.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    global.wrapping_add(u64::from_le_bytes(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> PipelineConfig {
        serde_json::from_str(r#"{"input": {"path": "house1.csv"}}"#).unwrap()
    }

    #[test]
    fn defaults_follow_the_reference_setup() {
        let c = minimal();
        c.validate().unwrap();
        assert_eq!(c.split_fraction, 0.8);
        assert_eq!(c.channel_names().len(), 10);
        assert_eq!(c.models.lstm.hidden1, 100);
        assert_eq!(c.models.gbdt.params.n_estimators, 1000);
        assert!(!c.models.gbdt_quantile.enabled);
    }

    #[test]
    fn hash_ignores_file_locations() {
        let a = minimal();
        let mut b = minimal();
        b.output_dir = PathBuf::from("/elsewhere");
        b.input.path = PathBuf::from("/data/house1.csv");
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut c = minimal();
        c.split_fraction = 1.0;
        assert!(matches!(c.validate(), Err(PipelineError::Config(_))));
        let mut c = minimal();
        c.quantiles = vec![0.5, 0.05];
        assert!(c.validate().is_err());
        let mut c = minimal();
        c.models.lstm.dropout_rate = 1.0;
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"input": {"path": "x"}, "bogus": 1}"#).is_err());
    }

    #[test]
    fn seeds_differ_per_model_and_are_stable() {
        assert_ne!(derive_seed(7, "gbdt"), derive_seed(7, "lstm"));
        assert_eq!(derive_seed(7, "gbdt"), derive_seed(7, "gbdt"));
    }
}
