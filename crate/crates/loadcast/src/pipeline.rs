//! The five commands. Each reads what the previous step left in the output
//! directory and updates the manifest once, at the end.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use loadcast_core::imputation::{run_imputation_trial, ImputeMethod};
use loadcast_core::metrics::{assemble_report, EvalReport, ForecastDistribution, ReportRow, REPORT_COLUMNS};
use loadcast_core::series::{detect_gaps, resample_hourly, split_point, HourlySeries};

use crate::config::{derive_seed, PipelineConfig};
use crate::error::{PipelineError, Result};
use crate::io::{
    format_timestamp, hourly_csv_bytes, plot_csv_bytes, read_hourly_csv, read_plot_csv, read_raw_csv, sha256_hex,
    write_if_changed, write_json, PlotRow,
};
use crate::manifest::{
    relative, DataSummary, ImputationRecord, MethodScore, ModelRecord, ModelStatus, RunManifest, SplitSummary,
};
use crate::models::{forecast, train_model, Forecast, ModelKind, Trained};
use crate::repair::{middle_third, repair_series, trial_window};

pub const HOURLY_FILE: &str = "hourly.csv";
pub const GAPS_FILE: &str = "gaps.json";
pub const TRIAL_FILE: &str = "imputation_trial.json";
pub const HISTOGRAM_FILE: &str = "imputation_histograms.csv";
pub const ARTIFACT_DIR: &str = "artifacts";
pub const PLOT_DIR: &str = "plots";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";

/// Repaired hourly data split chronologically, with the mask of aggregate
/// readings that were actually observed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub series: HourlySeries,
    pub observed: Vec<bool>,
    pub n_train: usize,
    pub split_ts: i64,
    pub aggregate_name: String,
    pub method: ImputeMethod,
}

impl Prepared {
    pub fn new(config: &PipelineConfig, hourly: &HourlySeries, method: ImputeMethod) -> Result<Self> {
        let aggregate_name = config.input.aggregate_column.clone();
        let agg = aggregate_index(hourly, &aggregate_name)?;
        let n_train = split_point(hourly.len(), config.split_fraction)?;
        let series = repair_series(hourly, n_train, method, &config.impute)?;
        Ok(Prepared {
            observed: hourly.channel(agg).iter().map(Option::is_some).collect(),
            split_ts: hourly.timestamp(n_train),
            series,
            n_train,
            aggregate_name,
            method,
        })
    }

    pub fn aggregate(&self) -> &[Option<f64>] {
        self.series
            .channel(self.series.channel_index(&self.aggregate_name).expect("checked in new"))
    }

    pub fn test_timestamps(&self) -> Vec<i64> {
        (self.n_train..self.series.len())
            .map(|i| self.series.timestamp(i))
            .collect()
    }
}

fn aggregate_index(series: &HourlySeries, name: &str) -> Result<usize> {
    series
        .channel_index(name)
        .ok_or_else(|| PipelineError::Config(format!("aggregate column `{name}` is not in the hourly cache")))
}

fn artifact_dir(config: &PipelineConfig) -> PathBuf {
    config.output_dir.join(ARTIFACT_DIR)
}

fn load_cache(config: &PipelineConfig) -> Result<(HourlySeries, String)> {
    let path = config.output_dir.join(HOURLY_FILE);
    let bytes = fs::read(&path)
        .map_err(|_| PipelineError::Missing(format!("{} not found; run ingest first", path.display())))?;
    let series = read_hourly_csv(&path)?;
    if series.channel_names() != config.channel_names().as_slice() {
        return Err(PipelineError::Missing(format!(
            "{} holds channels {:?}, the config expects {:?}; run ingest again",
            path.display(),
            series.channel_names(),
            config.channel_names()
        )));
    }
    Ok((series, sha256_hex(&bytes)))
}

/// Manifest for this config, reset when the cached data no longer matches it.
fn manifest_for(config: &PipelineConfig, fingerprint: &str) -> RunManifest {
    let hash = config.hash();
    let mut m = RunManifest::load_or_new(&config.output_dir, &hash);
    if m.data_fingerprint.as_deref() != Some(fingerprint) {
        if m.data_fingerprint.is_some() {
            log::info!("cached data changed since the last run; starting a new manifest");
        }
        m = RunManifest::new(&hash);
        m.data_fingerprint = Some(fingerprint.to_string());
    }
    m
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestSummary {
    pub fingerprint: String,
    pub hours: usize,
    pub structural_gaps: usize,
    /// False when the cache already held identical data.
    pub rewritten: bool,
}

pub fn cmd_ingest(config: &PipelineConfig) -> Result<IngestSummary> {
    let dir = &config.output_dir;
    let raw = read_raw_csv(&config.input.path, &config.input)?;
    let hourly = resample_hourly(&raw)?;
    let gaps = detect_gaps(&hourly, config.impute.structural_threshold)?;
    let bytes = hourly_csv_bytes(&hourly);
    let fingerprint = sha256_hex(&bytes);
    let rewritten = write_if_changed(&dir.join(HOURLY_FILE), &bytes)?;
    write_json(&dir.join(GAPS_FILE), &gaps)?;

    let mut m = manifest_for(config, &fingerprint);
    m.data = Some(DataSummary {
        start: format_timestamp(hourly.start()),
        end: format_timestamp(hourly.end()),
        hours: hourly.len(),
        channels: hourly.channel_names().to_vec(),
        structural_gaps: gaps.gaps.len(),
        structural_gap_hours: gaps.gaps.iter().map(|g| g.length).sum(),
    });
    m.add_output(HOURLY_FILE);
    m.add_output(GAPS_FILE);
    m.save(dir)?;
    log::info!(
        "ingested {} hours, {} structural gaps, cache {}",
        hourly.len(),
        gaps.gaps.len(),
        if rewritten { "written" } else { "unchanged" }
    );
    Ok(IngestSummary {
        fingerprint,
        hours: hourly.len(),
        structural_gaps: gaps.gaps.len(),
        rewritten,
    })
}

/// Masked-holdout trial on the aggregate channel inside the training segment.
pub fn cmd_impute_eval(config: &PipelineConfig) -> Result<ImputationRecord> {
    let dir = &config.output_dir;
    let (hourly, fingerprint) = load_cache(config)?;
    let agg = aggregate_index(&hourly, &config.input.aggregate_column)?;
    let n_train = split_point(hourly.len(), config.split_fraction)?;
    let train = &hourly.channel(agg)[..n_train];
    let imp = &config.impute;
    let window = trial_window(train, imp.trial_window_hours, imp.min_trial_window_hours).map_err(|longest| {
        PipelineError::NoTrialWindow {
            needed: imp.min_trial_window_hours,
            longest,
        }
    })?;
    let mask = middle_third(window.len());
    let trial = run_imputation_trial(
        &train[window.clone()],
        hourly.timestamp(window.start),
        mask.clone(),
        &[ImputeMethod::Linear, ImputeMethod::Seasonal],
    )?;
    let best = trial.best().expect("two methods were tried");
    let record = ImputationRecord {
        chosen: best.method,
        window_start: format_timestamp(hourly.timestamp(window.start)),
        window_hours: window.len(),
        masked_start: format_timestamp(hourly.timestamp(window.start + mask.start)),
        masked_hours: mask.len(),
        scores: trial
            .method_results
            .iter()
            .map(|r| MethodScore {
                method: r.method,
                rmse: r.rmse,
                mae: r.mae,
                emd: r.emd,
            })
            .collect(),
    };

    write_json(&dir.join(TRIAL_FILE), &trial)?;
    let mut csv = String::from("bin_low,bin_high,truth");
    for r in &trial.method_results {
        csv.push(',');
        csv.push_str(r.method.name());
    }
    csv.push('\n');
    for (bin, count) in trial.truth_histogram.counts.iter().enumerate() {
        let (lo, hi) = trial.truth_histogram.bin_edges(bin);
        csv.push_str(&format!("{lo:.4},{hi:.4},{count}"));
        for r in &trial.method_results {
            csv.push_str(&format!(",{}", r.histogram.counts[bin]));
        }
        csv.push('\n');
    }
    write_if_changed(&dir.join(HISTOGRAM_FILE), csv.as_bytes())?;

    let mut m = manifest_for(config, &fingerprint);
    m.imputation = Some(record.clone());
    m.add_output(TRIAL_FILE);
    m.add_output(HISTOGRAM_FILE);
    m.save(dir)?;
    log::info!("imputation trial chose {}", record.chosen.name());
    Ok(record)
}

fn chosen_method(config: &PipelineConfig, manifest: &RunManifest) -> Result<ImputeMethod> {
    config
        .impute
        .method
        .fixed()
        .or_else(|| manifest.imputation.as_ref().map(|r| r.chosen))
        .ok_or_else(|| PipelineError::Missing("no imputation method chosen yet; run impute-eval first".into()))
}

fn prepare(config: &PipelineConfig) -> Result<(Prepared, RunManifest, HourlySeries)> {
    let (hourly, fingerprint) = load_cache(config)?;
    let mut m = manifest_for(config, &fingerprint);
    let method = chosen_method(config, &m)?;
    let prep = Prepared::new(config, &hourly, method)?;
    m.split = Some(SplitSummary {
        train_hours: prep.n_train,
        test_hours: prep.series.len() - prep.n_train,
        test_start: format_timestamp(prep.split_ts),
    });
    Ok((prep, m, hourly))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrainSummary {
    pub trained: Vec<String>,
    pub failed: Vec<(String, String)>,
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Fit the enabled models, or the listed subset, concurrently. A failing
/// model is recorded and its artifacts removed; the command fails only if
/// every model failed.
pub fn cmd_train(config: &PipelineConfig, only: Option<&[ModelKind]>) -> Result<TrainSummary> {
    let kinds: Vec<ModelKind> = match only {
        Some(list) => {
            if let Some(k) = list.iter().find(|k| !k.enabled(config)) {
                return Err(PipelineError::Config(format!(
                    "model `{}` is disabled in the config",
                    k.name()
                )));
            }
            ModelKind::ALL.into_iter().filter(|k| list.contains(k)).collect()
        }
        None => ModelKind::ALL.into_iter().filter(|k| k.enabled(config)).collect(),
    };
    if kinds.is_empty() {
        return Err(PipelineError::Config("no models enabled".into()));
    }
    let (prep, mut m, _) = prepare(config)?;
    let dir = artifact_dir(config);
    fs::create_dir_all(&dir).map_err(PipelineError::io(&dir))?;

    let results: Vec<(ModelKind, Result<Trained>)> = std::thread::scope(|s| {
        let handles: Vec<_> = kinds
            .iter()
            .map(|&kind| {
                let (prep, dir) = (&prep, &dir);
                s.spawn(move || {
                    log::info!("training {}", kind.name());
                    panic::catch_unwind(AssertUnwindSafe(|| train_model(kind, config, prep, dir)))
                })
            })
            .collect();
        kinds
            .iter()
            .zip(handles)
            .map(|(&kind, h)| {
                let res = match h.join() {
                    Ok(Ok(r)) => r,
                    Ok(Err(p)) | Err(p) => Err(PipelineError::Failed(format!("panicked: {}", panic_message(p)))),
                };
                (kind, res)
            })
            .collect()
    });

    let out_dir = &config.output_dir;
    let mut summary = TrainSummary::default();
    for (kind, res) in results {
        let seed = derive_seed(config.seed, kind.name());
        let record = match res {
            Ok(t) => {
                summary.trained.push(kind.name().to_string());
                ModelRecord {
                    status: ModelStatus::Trained,
                    seed,
                    artifacts: t.artifacts.iter().map(|p| relative(out_dir, p)).collect(),
                    error: None,
                    notes: t.notes,
                }
            }
            Err(e) => {
                log::error!("{} failed: {e}", kind.name());
                summary.failed.push((kind.name().to_string(), e.to_string()));
                let _ = fs::remove_file(kind.artifact_path(&dir));
                ModelRecord {
                    status: ModelStatus::Failed,
                    seed,
                    artifacts: Vec::new(),
                    error: Some(e.to_string()),
                    notes: Vec::new(),
                }
            }
        };
        m.models.insert(kind.name().to_string(), record);
    }
    m.save(out_dir)?;
    if summary.trained.is_empty() {
        let detail: Vec<String> = summary.failed.iter().map(|(k, e)| format!("{k}: {e}")).collect();
        return Err(PipelineError::Failed(format!(
            "every model failed ({})",
            detail.join("; ")
        )));
    }
    Ok(summary)
}

fn plot_rows(prep: &Prepared, actual: &[Option<f64>], fc: &Forecast) -> Vec<PlotRow> {
    let ts = prep.test_timestamps();
    (0..ts.len())
        .map(|i| {
            let (center, lower, upper) = match fc {
                Forecast::Point(p) => (p[i], None, None),
                Forecast::Quantiles(d) => (d.median()[i], Some(d.lower()[i]), Some(d.upper()[i])),
            };
            PlotRow {
                timestamp: ts[i],
                actual: actual[i],
                center,
                lower,
                upper,
            }
        })
        .collect()
}

/// Score `fc` on the observed test hours.
fn score(label: &str, prep: &Prepared, actual: &[Option<f64>], fc: &Forecast) -> Result<ReportRow> {
    let keep: Vec<usize> = (0..actual.len()).filter(|&i| actual[i].is_some()).collect();
    let y: Vec<f64> = keep.iter().map(|&i| actual[i].expect("kept")).collect();
    match fc {
        Forecast::Point(p) => {
            let yhat: Vec<f64> = keep.iter().map(|&i| p[i]).collect();
            Ok(ReportRow::point(label, &y, &yhat)?)
        }
        Forecast::Quantiles(d) => {
            if d.timestamps != prep.test_timestamps() {
                return Err(PipelineError::Failed(
                    "forecast timestamps do not match the test split".into(),
                ));
            }
            let sub = ForecastDistribution::new(
                keep.iter().map(|&i| d.timestamps[i]).collect(),
                d.levels.clone(),
                d.values
                    .iter()
                    .map(|col| keep.iter().map(|&i| col[i]).collect())
                    .collect(),
            )?;
            Ok(ReportRow::probabilistic(label, &y, &sub)?)
        }
    }
}

/// Predictions from a plot-format file, aligned to the test hours.
fn external_forecast(path: &Path, prep: &Prepared) -> Result<Forecast> {
    let rows = read_plot_csv(path)?;
    let ts = prep.test_timestamps();
    let mut aligned = Vec::with_capacity(ts.len());
    for &t in &ts {
        let row = rows.iter().find(|r| r.timestamp == t).ok_or_else(|| {
            PipelineError::Failed(format!("{} has no row for {}", path.display(), format_timestamp(t)))
        })?;
        aligned.push(row);
    }
    if aligned.iter().all(|r| r.lower.is_some() && r.upper.is_some()) {
        let values = vec![
            aligned.iter().map(|r| r.lower.expect("checked")).collect(),
            aligned.iter().map(|r| r.center).collect(),
            aligned.iter().map(|r| r.upper.expect("checked")).collect(),
        ];
        Ok(Forecast::Quantiles(ForecastDistribution::from_unsorted(
            ts,
            vec![0.05, 0.5, 0.95],
            values,
        )?))
    } else {
        Ok(Forecast::Point(aligned.iter().map(|r| r.center).collect()))
    }
}

/// `name` with anything but ASCII letters, digits, `-` and `_` replaced by `_`.
fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn report_csv(report: &EvalReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| PipelineError::Failed(format!("writing report: {e}"));
    w.write_record(REPORT_COLUMNS).map_err(csv_err)?;
    for row in &report.rows {
        w.write_record(row.cells()).map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| PipelineError::Failed(format!("writing report: {e}")))
}

/// Score every enabled model with an artifact, plus external predictions.
/// Models that cannot be scored are recorded and skipped; a config-hash
/// mismatch still fails the command once the rest are written.
pub fn cmd_evaluate(config: &PipelineConfig) -> Result<EvalReport> {
    let out_dir = &config.output_dir;
    let (prep, mut m, hourly) = prepare(config)?;
    let dir = artifact_dir(config);
    let actual: Vec<Option<f64>> =
        hourly.channel(aggregate_index(&hourly, &prep.aggregate_name)?)[prep.n_train..].to_vec();
    if actual.iter().all(Option::is_none) {
        return Err(PipelineError::Failed(
            "the test split has no observed aggregate readings".into(),
        ));
    }

    let mut candidates: Vec<(String, String, Result<Forecast>)> = Vec::new();
    for kind in ModelKind::ALL.into_iter().filter(|k| k.enabled(config)) {
        let fc = panic::catch_unwind(AssertUnwindSafe(|| forecast(kind, config, &prep, &dir)))
            .unwrap_or_else(|p| Err(PipelineError::Failed(format!("panicked: {}", panic_message(p)))));
        candidates.push((kind.name().to_string(), kind.label().to_string(), fc));
    }
    for ext in &config.external_predictions {
        candidates.push((ext.name.clone(), ext.name.clone(), external_forecast(&ext.path, &prep)));
    }

    let mut rows = Vec::new();
    let mut mismatch = None;
    m.evaluation_failures.clear();
    for (name, label, fc) in candidates {
        let plot_path = out_dir.join(PLOT_DIR).join(format!("{}.csv", file_stem(&name)));
        let scored = fc.and_then(|fc| Ok((score(&label, &prep, &actual, &fc)?, fc)));
        match scored {
            Ok((row, fc)) => {
                write_if_changed(&plot_path, &plot_csv_bytes(&plot_rows(&prep, &actual, &fc)))?;
                m.add_output(&relative(out_dir, &plot_path));
                rows.push(row);
            }
            Err(e) => {
                log::warn!("{name} not evaluated: {e}");
                let _ = fs::remove_file(&plot_path);
                m.evaluation_failures.insert(name, e.to_string());
                if matches!(e, PipelineError::HashMismatch { .. }) && mismatch.is_none() {
                    mismatch = Some(e);
                }
            }
        }
    }
    if rows.is_empty() {
        m.save(out_dir)?;
        return Err(mismatch.unwrap_or_else(|| PipelineError::Failed("no model could be evaluated".into())));
    }
    let report = assemble_report(rows)?;
    write_if_changed(&out_dir.join(REPORT_CSV), &report_csv(&report)?)?;
    write_if_changed(&out_dir.join(REPORT_TXT), report.to_string().as_bytes())?;
    m.metrics = report.rows.clone();
    m.add_output(REPORT_CSV);
    m.add_output(REPORT_TXT);
    m.save(out_dir)?;
    match mismatch {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

pub fn cmd_report(config: &PipelineConfig) -> Result<String> {
    let path = config.output_dir.join(REPORT_TXT);
    fs::read_to_string(&path)
        .map_err(|_| PipelineError::Missing(format!("{} not found; run evaluate first", path.display())))
}
