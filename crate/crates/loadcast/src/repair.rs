//! Gap repair for the train/test split, and the imputation-trial window search.
//!
//! The training segment is repaired from training values alone. The test
//! segment is repaired afterwards and may look back into the repaired training
//! values, never the other way round.

use std::ops::Range;

use loadcast_core::imputation::{
    knn_impute_values, linear_impute_values, seasonal_impute_values, ImputeMethod, SeasonalProfile,
};
use loadcast_core::series::{missing_runs, HourlySeries};

use crate::config::ImputeConfig;
use crate::error::Result;

/// Fill every missing slot in `range` of `values`: kNN for short holes, then
/// `method` for the rest. Linear runs without an anchor on both sides use the
/// seasonal profile instead.
fn fill_segment(
    values: &[Option<f64>],
    start: i64,
    range: Range<usize>,
    method: ImputeMethod,
    profile: &SeasonalProfile,
    cfg: &ImputeConfig,
) -> Result<Vec<Option<f64>>> {
    let knn = knn_impute_values(values, cfg.knn_k, cfg.knn_max_gap)?;
    let mut out = values.to_vec();
    out[range.clone()].copy_from_slice(&knn[range.clone()]);
    for run in missing_runs(&out[range.clone()]) {
        let run_range = range.start + run.start..range.start + run.start + run.length;
        let anchored = run_range.start > 0 && run_range.end < out.len() && out[run_range.end].is_some();
        out = match method {
            ImputeMethod::Linear if anchored => linear_impute_values(&out, run_range)?,
            _ => seasonal_impute_values(&out, start, run_range, profile)?,
        };
    }
    Ok(out)
}

/// Repair every channel. Slots `[0, n_train)` see only training data.
pub fn repair_series(
    series: &HourlySeries,
    n_train: usize,
    method: ImputeMethod,
    cfg: &ImputeConfig,
) -> Result<HourlySeries> {
    let n = series.len();
    let start = series.start();
    let mut out = series.clone();
    for c in 0..series.n_channels() {
        let train = &series.channel(c)[..n_train];
        let profile = SeasonalProfile::build(train, start, 0..0);
        let train_filled = fill_segment(train, start, 0..n_train, method, &profile, cfg)?;
        let mut full = train_filled;
        full.extend_from_slice(&series.channel(c)[n_train..]);
        let filled = fill_segment(&full, start, n_train..n, method, &profile, cfg)?;
        out = out.with_channel(c, filled)?;
    }
    Ok(out)
}

/// Maximal runs of present values.
pub fn present_runs(values: &[Option<f64>]) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, v) in values.iter().enumerate() {
        match (v.is_some(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push(s..values.len());
    }
    runs
}

/// The first `preferred` hours of the first gapless run at least that long,
/// else the longest run if it reaches `minimum`.
pub fn trial_window(
    values: &[Option<f64>],
    preferred: usize,
    minimum: usize,
) -> std::result::Result<Range<usize>, usize> {
    let runs = present_runs(values);
    if let Some(r) = runs.iter().find(|r| r.len() >= preferred) {
        return Ok(r.start..r.start + preferred);
    }
    let longest = runs
        .iter()
        .max_by_key(|r| (r.len(), std::cmp::Reverse(r.start)))
        .cloned()
        .unwrap_or(0..0);
    if longest.len() >= minimum {
        Ok(longest)
    } else {
        Err(longest.len())
    }
}

/// Middle third of a window, relative to its start.
pub fn middle_third(len: usize) -> Range<usize> {
    let third = len / 3;
    third..len - third
}
