//! Gap repair: kNN for small holes, linear or seasonal filling for structural
//! gaps, and the masked-holdout trial used to choose between the two.
//!
//! The channel-level functions work on one `&[Option<f64>]` column; the
//! `HourlySeries` wrappers apply them to every channel. No imputer ever
//! changes a value that was present on input.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::calendar::{CalendarFields, HOURS_PER_WEEK, SECONDS_PER_HOUR};
use crate::metrics;
use crate::series::{missing_runs, HourlySeries};
use crate::{Error, Result};

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_MAX_GAP: usize = 6;
pub const HISTOGRAM_BINS: usize = 50;

/// Fill runs of at most `max_gap` missing slots with the mean of the `k`
/// temporally nearest present values. Equidistant candidates prefer the earlier one.
pub fn knn_impute_values(values: &[Option<f64>], k: usize, max_gap: usize) -> Result<Vec<Option<f64>>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let present: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    if present.len() < k {
        return Err(Error::TooFewValues {
            channel: String::new(),
            present: present.len(),
            needed: k,
        });
    }
    let mut out = values.to_vec();
    for run in missing_runs(values) {
        if run.length > max_gap {
            continue;
        }
        // Present values strictly left of the run are present[..split].
        let split = present.partition_point(|&p| p < run.start);
        for slot in run.range() {
            let (mut left, mut right) = (split, split);
            let mut sum = 0.0;
            for _ in 0..k {
                let take_left = match (left.checked_sub(1), present.get(right)) {
                    (Some(l), Some(&r)) => slot - present[l] <= r - slot,
                    (Some(_), None) => true,
                    (None, _) => false,
                };
                let idx = if take_left {
                    left -= 1;
                    present[left]
                } else {
                    right += 1;
                    present[right - 1]
                };
                sum += values[idx].unwrap_or_default();
            }
            out[slot] = Some(sum / k as f64);
        }
    }
    Ok(out)
}

pub fn knn_impute(series: &HourlySeries, k: usize, max_gap: usize) -> Result<HourlySeries> {
    let mut out = series.clone();
    for (c, name) in series.channel_names().iter().enumerate() {
        let filled = knn_impute_values(series.channel(c), k, max_gap).map_err(|e| match e {
            Error::TooFewValues { present, needed, .. } => Error::TooFewValues {
                channel: name.clone(),
                present,
                needed,
            },
            other => other,
        })?;
        out = out.with_channel(c, filled)?;
    }
    Ok(out)
}

fn check_range(range: &Range<usize>, len: usize) -> Result<()> {
    if range.start > range.end || range.end > len {
        return Err(Error::InvalidArgument(alloc::format!(
            "range {range:?} outside series of length {len}"
        )));
    }
    Ok(())
}

/// Fill missing slots in `range` on the straight line between the present
/// values at `range.start - 1` and `range.end`.
pub fn linear_impute_values(values: &[Option<f64>], range: Range<usize>) -> Result<Vec<Option<f64>>> {
    check_range(&range, values.len())?;
    let mut out = values.to_vec();
    if range.is_empty() || values[range.clone()].iter().all(Option::is_some) {
        return Ok(out);
    }
    let anchor = |idx: Option<usize>, side| {
        idx.and_then(|i| values.get(i).copied().flatten())
            .ok_or(Error::MissingAnchor {
                start: range.start,
                end: range.end,
                side,
            })
    };
    let left = anchor(range.start.checked_sub(1), "left")?;
    let right = anchor(Some(range.end), "right")?;
    fill_line(&mut out, range.start - 1, left, range.end, right, range);
    Ok(out)
}

fn fill_line(out: &mut [Option<f64>], x0: usize, y0: f64, x1: usize, y1: f64, slots: Range<usize>) {
    // Weighted form: exact whenever the line takes representable values on integer slots.
    let span = (x1 - x0) as f64;
    for i in slots {
        if out[i].is_none() {
            let (w0, w1) = ((x1 - i) as f64, (i - x0) as f64);
            out[i] = Some((w0 * y0 + w1 * y1) / span);
        }
    }
}

pub fn linear_impute(series: &HourlySeries, range: Range<usize>) -> Result<HourlySeries> {
    let mut out = series.clone();
    for c in 0..series.n_channels() {
        out = out.with_channel(c, linear_impute_values(series.channel(c), range.clone())?)?;
    }
    Ok(out)
}

/// Mean load per (day of week, hour of day), Monday 00:00 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalProfile {
    means: Vec<Option<f64>>,
    counts: Vec<usize>,
}

impl SeasonalProfile {
    /// Profile of one channel starting at `start`, ignoring slots in `exclude`.
    pub fn build(values: &[Option<f64>], start: i64, exclude: Range<usize>) -> Self {
        // Deviations from each cell's first value are summed, so a constant
        // cell averages to exactly that constant.
        let mut firsts = vec![0.0; HOURS_PER_WEEK];
        let mut deviations = vec![0.0; HOURS_PER_WEEK];
        let mut counts = vec![0usize; HOURS_PER_WEEK];
        let first_slot = CalendarFields::from_unix(start).week_slot();
        for (i, v) in values.iter().enumerate() {
            if exclude.contains(&i) {
                continue;
            }
            if let Some(x) = v {
                let cell = (first_slot + i) % HOURS_PER_WEEK;
                if counts[cell] == 0 {
                    firsts[cell] = *x;
                } else {
                    deviations[cell] += x - firsts[cell];
                }
                counts[cell] += 1;
            }
        }
        let means = (0..HOURS_PER_WEEK)
            .map(|c| (counts[c] > 0).then(|| firsts[c] + deviations[c] / counts[c] as f64))
            .collect();
        Self { means, counts }
    }

    pub fn mean(&self, dayofweek: u32, hour: u32) -> Option<f64> {
        self.means[dayofweek as usize * 24 + hour as usize]
    }

    pub fn count(&self, dayofweek: u32, hour: u32) -> usize {
        self.counts[dayofweek as usize * 24 + hour as usize]
    }

    pub fn at(&self, timestamp: i64) -> Option<f64> {
        self.means[CalendarFields::from_unix(timestamp).week_slot()]
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }
}

pub fn build_seasonal_profile(series: &HourlySeries, channel: usize, exclude: Range<usize>) -> SeasonalProfile {
    SeasonalProfile::build(series.channel(channel), series.start(), exclude)
}

/// Fill missing slots in `range` from the profile. Slots whose profile cell
/// is empty fall back to a line across their missing run, then to the
/// channel's global mean.
pub fn seasonal_impute_values(
    values: &[Option<f64>],
    start: i64,
    range: Range<usize>,
    profile: &SeasonalProfile,
) -> Result<Vec<Option<f64>>> {
    check_range(&range, values.len())?;
    let mut out = values.to_vec();
    let mut unresolved = Vec::new();
    for i in range.clone() {
        if out[i].is_none() {
            match profile.at(start + i as i64 * SECONDS_PER_HOUR) {
                Some(v) => out[i] = Some(v),
                None => unresolved.push(i),
            }
        }
    }
    if unresolved.is_empty() {
        return Ok(out);
    }
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let global_mean = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
    for run in missing_runs(values) {
        let slots: Vec<usize> = unresolved.iter().copied().filter(|i| run.range().contains(i)).collect();
        if slots.is_empty() {
            continue;
        }
        let left = run.start.checked_sub(1).and_then(|i| values[i]);
        let right = values.get(run.start + run.length).copied().flatten();
        for &i in &slots {
            out[i] = match (left, right) {
                (Some(a), Some(b)) => {
                    let (x0, x1) = (run.start - 1, run.start + run.length);
                    Some(a + (i - x0) as f64 / (x1 - x0) as f64 * (b - a))
                }
                _ => Some(global_mean.ok_or(Error::Unimputable(i))?),
            };
        }
    }
    Ok(out)
}

/// Seasonal filling of every channel, each with a profile built outside `range`.
pub fn seasonal_impute(series: &HourlySeries, range: Range<usize>) -> Result<HourlySeries> {
    let mut out = series.clone();
    for c in 0..series.n_channels() {
        let profile = build_seasonal_profile(series, c, range.clone());
        let filled = seasonal_impute_values(series.channel(c), series.start(), range.clone(), &profile)?;
        out = out.with_channel(c, filled)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeMethod {
    Linear,
    Seasonal,
}

impl ImputeMethod {
    pub fn name(self) -> &'static str {
        match self {
            ImputeMethod::Linear => "linear",
            ImputeMethod::Seasonal => "seasonal",
        }
    }

    /// Fill `range` of one channel; the seasonal profile comes from the channel outside `range`.
    pub fn impute_values(self, values: &[Option<f64>], start: i64, range: Range<usize>) -> Result<Vec<Option<f64>>> {
        match self {
            ImputeMethod::Linear => linear_impute_values(values, range),
            ImputeMethod::Seasonal => {
                let profile = SeasonalProfile::build(values, start, range.clone());
                seasonal_impute_values(values, start, range, &profile)
            }
        }
    }
}

impl fmt::Display for ImputeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub low: f64,
    pub width: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// `bins` equal-width bins over `[low, high]`; a degenerate range is widened to one watt.
    pub fn binning(low: f64, high: f64, bins: usize) -> Self {
        let (low, high) = if high > low {
            (low, high)
        } else {
            (low - 0.5, low + 0.5)
        };
        Self {
            low,
            width: (high - low) / bins as f64,
            counts: vec![0; bins],
        }
    }

    /// Count `values`; out-of-range values land in the edge bins.
    pub fn fill(mut self, values: &[f64]) -> Self {
        let last = self.counts.len() - 1;
        for &v in values {
            let pos = libm::floor((v - self.low) / self.width);
            let bin = if pos < 0.0 { 0 } else { (pos as usize).min(last) };
            self.counts[bin] += 1;
        }
        self
    }

    pub fn bin_edges(&self, bin: usize) -> (f64, f64) {
        let left = self.low + bin as f64 * self.width;
        (left, left + self.width)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// One-dimensional earth mover's distance between two histograms on the same
/// binning, each normalized to unit mass. Measured in the histogram's units.
pub fn earth_movers_distance(a: &Histogram, b: &Histogram) -> Result<f64> {
    if a.counts.len() != b.counts.len() || a.low != b.low || a.width != b.width {
        return Err(Error::Shape("histograms use different binnings".into()));
    }
    let (na, nb) = (a.total().max(1) as f64, b.total().max(1) as f64);
    let (mut ca, mut cb, mut dist) = (0.0, 0.0, 0.0);
    for (x, y) in a.counts.iter().zip(&b.counts) {
        ca += *x as f64 / na;
        cb += *y as f64 / nb;
        dist += libm::fabs(ca - cb);
    }
    Ok(dist * a.width)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: ImputeMethod,
    pub rmse: f64,
    pub mae: f64,
    pub emd: f64,
    pub histogram: Histogram,
    pub imputed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationTrial {
    pub masked_range: Range<usize>,
    pub truth: Vec<f64>,
    pub truth_histogram: Histogram,
    pub method_results: Vec<MethodResult>,
}

impl ImputationTrial {
    /// Lowest distribution distance wins; ties go to the lower RMSE, then to list order.
    pub fn best(&self) -> Option<&MethodResult> {
        self.method_results.iter().reduce(|best, r| {
            let better = r.emd < best.emd || (r.emd == best.emd && r.rmse < best.rmse);
            if better {
                r
            } else {
                best
            }
        })
    }
}

/// Erase a fully observed interior `mask` of one channel, refill it with each
/// method and score the result against the erased truth.
pub fn run_imputation_trial(
    values: &[Option<f64>],
    start: i64,
    mask: Range<usize>,
    methods: &[ImputeMethod],
) -> Result<ImputationTrial> {
    check_range(&mask, values.len())?;
    if mask.is_empty() || mask.start == 0 || mask.end >= values.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "mask {mask:?} must be non-empty and interior to {} slots",
            values.len()
        )));
    }
    let truth = values[mask.clone()]
        .iter()
        .enumerate()
        .map(|(j, v)| v.ok_or(Error::MaskOverlapsMissing(mask.start + j)))
        .collect::<Result<Vec<f64>>>()?;
    let mut masked = values.to_vec();
    for v in &mut masked[mask.clone()] {
        *v = None;
    }
    let (lo, hi) = truth.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let truth_histogram = Histogram::binning(lo, hi, HISTOGRAM_BINS).fill(&truth);

    let method_results = methods
        .iter()
        .map(|&method| {
            let filled = method.impute_values(&masked, start, mask.clone())?;
            let imputed: Vec<f64> = filled[mask.clone()].iter().map(|v| v.unwrap_or(f64::NAN)).collect();
            let histogram = Histogram::binning(lo, hi, HISTOGRAM_BINS).fill(&imputed);
            Ok(MethodResult {
                method,
                rmse: metrics::rmse(&truth, &imputed)?,
                mae: metrics::mae(&truth, &imputed)?,
                emd: earth_movers_distance(&histogram, &truth_histogram)?,
                histogram,
                imputed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImputationTrial {
        masked_range: mask,
        truth,
        truth_histogram,
        method_results,
    })
}
