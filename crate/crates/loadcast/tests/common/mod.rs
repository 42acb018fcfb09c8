#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use loadcast::config::MethodChoice;
use loadcast::PipelineConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Monday 2014-03-03 00:00 UTC.
pub const MONDAY: i64 = 1_393_804_800;

pub struct Synthetic {
    pub days: usize,
    /// Hours `[start, end)` where every reading is dropped.
    pub outage: Option<(usize, usize)>,
    /// Single readings dropped at random.
    pub hole_rate: f64,
    pub seed: u64,
}

impl Default for Synthetic {
    fn default() -> Self {
        Self {
            days: 70,
            outage: Some((24 * 20, 24 * 22)),
            hole_rate: 0.002,
            seed: 11,
        }
    }
}

/// Hourly mean aggregate load for the weekday double peak / weekend lull pattern.
pub fn regime_load(hour_index: usize) -> f64 {
    let hour = hour_index % 24;
    let weekend = (hour_index / 24) % 7 >= 5;
    if weekend {
        return 60.0;
    }
    let bump = |center: f64, width: f64, height: f64| {
        let d = (hour as f64 - center) / width;
        height * (-0.5 * d * d).exp()
    };
    150.0 + bump(7.5, 1.2, 900.0) + bump(19.0, 1.8, 1400.0)
}

/// REFIT-style meter CSV: `Time,Unix,Aggregate,Appliance1..9`, four readings an hour.
pub fn refit_csv(spec: &Synthetic) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, 40.0).unwrap();
    let mut out = String::from("Time,Unix,Aggregate");
    for i in 1..=9 {
        let _ = write!(out, ",Appliance{i}");
    }
    out.push('\n');
    for h in 0..spec.days * 24 {
        if spec.outage.is_some_and(|(a, b)| (a..b).contains(&h)) {
            continue;
        }
        let level = regime_load(h);
        for k in 0..4 {
            if rng.random::<f64>() < spec.hole_rate {
                continue;
            }
            let ts = MONDAY + (h * 3600 + k * 900 + rng.random_range(0..60)) as i64;
            let agg = (level + noise.sample(&mut rng)).max(0.0);
            let _ = write!(out, "2014-03-03 00:00:00,{ts},{agg:.1}");
            for a in 1..=9 {
                let share = agg * a as f64 / 90.0;
                let _ = write!(out, ",{share:.1}");
            }
            out.push('\n');
        }
    }
    out
}

/// Desk-scale config with every model enabled and small hyperparameters.
pub fn fast_config(input: &Path, output: &Path) -> PipelineConfig {
    let mut c: PipelineConfig = serde_json::from_str(r#"{"input": {"path": "unused.csv"}}"#).unwrap();
    c.input.path = input.to_path_buf();
    c.output_dir = output.to_path_buf();
    c.seed = 42;
    c.impute.trial_window_hours = 24 * 14;
    c.impute.min_trial_window_hours = 24 * 7;
    c.impute.method = MethodChoice::Auto;
    let m = &mut c.models;
    m.sarimax.train_hours = 24 * 14;
    m.gbdt.params.n_estimators = 60;
    m.gbdt.params.learning_rate = 0.2;
    m.gbdt_quantile.enabled = true;
    m.gbdt_quantile.params = m.gbdt.params;
    m.lstm.window = 24;
    m.lstm.hidden1 = 6;
    m.lstm.hidden2 = 4;
    m.lstm.training.max_epochs = 2;
    m.lstm.training.batch_size = 32;
    m.lstm.training.learning_rate = 1e-2;
    c
}

/// Write the synthetic CSV and a config under `root`, returning the config.
pub fn setup(root: &Path, spec: &Synthetic) -> PipelineConfig {
    std::fs::create_dir_all(root).unwrap();
    let input = root.join("house.csv");
    std::fs::write(&input, refit_csv(spec)).unwrap();
    fast_config(&input, &root.join("out"))
}

pub fn write_config(config: &PipelineConfig, path: &Path) -> PathBuf {
    std::fs::write(path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path.to_path_buf()
}

pub fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}
