//! Raw meter readings, the regular hourly grid, scaling and splitting.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::calendar::{floor_hour, SECONDS_PER_HOUR};
use crate::{Error, Result};

/// Default run length (hours) separating structural gaps from small holes.
pub const DEFAULT_STRUCTURAL_THRESHOLD: usize = 24;

/// High-frequency readings, sorted by timestamp with unique timestamps.
///
/// Stored column-wise. A reading that was empty, negative or non-finite is
/// kept as an invalid slot and reported as `None` by [`RawSeries::value`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    timestamps: Vec<i64>,
    channel_names: Vec<String>,
    // NaN marks an invalid reading.
    channels: Vec<Vec<f64>>,
}

impl RawSeries {
    pub fn builder(channel_names: Vec<String>) -> RawSeriesBuilder {
        RawSeriesBuilder {
            timestamps: Vec::new(),
            channels: vec![Vec::new(); channel_names.len()],
            channel_names,
        }
    }

    /// Build from `(timestamp, values)` rows in any order.
    pub fn from_rows<I>(channel_names: Vec<String>, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Vec<Option<f64>>)>,
    {
        let mut b = Self::builder(channel_names);
        for (ts, values) in rows {
            b.push(ts, &values)?;
        }
        b.finish()
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn value(&self, row: usize, channel: usize) -> Option<f64> {
        let v = self.channels[channel][row];
        (!v.is_nan()).then_some(v)
    }
}

/// Accumulates rows in file order; [`RawSeriesBuilder::finish`] sorts them.
#[derive(Debug)]
pub struct RawSeriesBuilder {
    timestamps: Vec<i64>,
    channel_names: Vec<String>,
    channels: Vec<Vec<f64>>,
}

impl RawSeriesBuilder {
    pub fn push(&mut self, timestamp: i64, values: &[Option<f64>]) -> Result<()> {
        if values.len() != self.channels.len() {
            return Err(Error::LengthMismatch {
                expected: self.channels.len(),
                actual: values.len(),
            });
        }
        self.timestamps.push(timestamp);
        for (col, v) in self.channels.iter_mut().zip(values) {
            col.push(match v {
                Some(x) if x.is_finite() && *x >= 0.0 => *x,
                _ => f64::NAN,
            });
        }
        Ok(())
    }

    /// Sort by timestamp; of duplicate timestamps the last pushed row wins.
    pub fn finish(self) -> Result<RawSeries> {
        if self.timestamps.is_empty() {
            return Err(Error::EmptySeries);
        }
        let n = self.timestamps.len();
        let sorted = self.timestamps.windows(2).all(|w| w[0] < w[1]);
        if sorted {
            return Ok(RawSeries {
                timestamps: self.timestamps,
                channel_names: self.channel_names,
                channels: self.channels,
            });
        }
        let mut order: Vec<usize> = (0..n).collect();
        // Stable: equal timestamps stay in push order.
        order.sort_by_key(|&i| self.timestamps[i]);
        let mut keep: Vec<usize> = Vec::with_capacity(n);
        for &i in &order {
            match keep.last_mut() {
                Some(last) if self.timestamps[*last] == self.timestamps[i] => *last = i,
                _ => keep.push(i),
            }
        }
        Ok(RawSeries {
            timestamps: keep.iter().map(|&i| self.timestamps[i]).collect(),
            channels: self
                .channels
                .iter()
                .map(|col| keep.iter().map(|&i| col[i]).collect())
                .collect(),
            channel_names: self.channel_names,
        })
    }
}

/// A regular hourly grid of optional values per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlySeries {
    start: i64,
    channel_names: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
}

impl HourlySeries {
    /// `values` holds one equally long column per channel; `start` must be hour-aligned.
    pub fn new(start: i64, channel_names: Vec<String>, values: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if start.rem_euclid(SECONDS_PER_HOUR) != 0 {
            return Err(Error::InvalidArgument(alloc::format!(
                "start {start} is not aligned to an hour"
            )));
        }
        if channel_names.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: channel_names.len(),
                actual: values.len(),
            });
        }
        if let Some(first) = values.first() {
            let n = first.len();
            if let Some(bad) = values.iter().find(|c| c.len() != n) {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: bad.len(),
                });
            }
        }
        if values.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite present value".into()));
        }
        Ok(Self {
            start,
            channel_names,
            values,
        })
    }

    /// Single-channel convenience constructor.
    pub fn from_channel(start: i64, name: &str, values: Vec<Option<f64>>) -> Result<Self> {
        Self::new(start, vec![name.into()], vec![values])
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_channels(&self) -> usize {
        self.values.len()
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channel_names.iter().position(|n| n == name)
    }

    pub fn channel(&self, idx: usize) -> &[Option<f64>] {
        &self.values[idx]
    }

    pub fn channels(&self) -> &[Vec<Option<f64>>] {
        &self.values
    }

    pub fn timestamp(&self, idx: usize) -> i64 {
        self.start + idx as i64 * SECONDS_PER_HOUR
    }

    pub fn timestamps(&self) -> Vec<i64> {
        (0..self.len()).map(|i| self.timestamp(i)).collect()
    }

    /// Timestamp one hour past the last slot.
    pub fn end(&self) -> i64 {
        self.timestamp(self.len())
    }

    /// Replace one channel's column.
    pub fn with_channel(mut self, idx: usize, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: values.len(),
            });
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite present value".into()));
        }
        self.values[idx] = values;
        Ok(self)
    }

    pub fn slice(&self, range: Range<usize>) -> HourlySeries {
        HourlySeries {
            start: self.timestamp(range.start),
            channel_names: self.channel_names.clone(),
            values: self.values.iter().map(|c| c[range.clone()].to_vec()).collect(),
        }
    }

    /// Append `other`, which must begin where `self` ends.
    pub fn concat(&self, other: &HourlySeries) -> Result<HourlySeries> {
        if other.start != self.end() || other.channel_names != self.channel_names {
            return Err(Error::InvalidArgument(
                "series are not adjacent or have different channels".into(),
            ));
        }
        Ok(HourlySeries {
            start: self.start,
            channel_names: self.channel_names.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.iter().chain(b).copied().collect())
                .collect(),
        })
    }

    pub fn is_slot_complete(&self, idx: usize) -> bool {
        self.values.iter().all(|c| c[idx].is_some())
    }
}

/// Average raw readings into half-open hour buckets `[h, h + 1h)`.
///
/// The grid runs from the hour of the first reading to the hour of the last;
/// an hour without a valid reading for a channel is missing in that channel.
pub fn resample_hourly(raw: &RawSeries) -> Result<HourlySeries> {
    let (Some(&first), Some(&last)) = (raw.timestamps.first(), raw.timestamps.last()) else {
        return Err(Error::EmptySeries);
    };
    let start = floor_hour(first);
    let n_hours = ((floor_hour(last) - start) / SECONDS_PER_HOUR) as usize + 1;
    let values = raw
        .channels
        .iter()
        .map(|col| {
            let mut sums = vec![0.0; n_hours];
            let mut counts = vec![0usize; n_hours];
            for (&ts, &v) in raw.timestamps.iter().zip(col) {
                if v.is_nan() {
                    continue;
                }
                let slot = ((ts - start).div_euclid(SECONDS_PER_HOUR)) as usize;
                sums[slot] += v;
                counts[slot] += 1;
            }
            sums.into_iter()
                .zip(counts)
                .map(|(s, c)| (c > 0).then(|| s / c as f64))
                .collect()
        })
        .collect();
    HourlySeries::new(start, raw.channel_names.clone(), values)
}

/// One maximal run of missing hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub start: usize,
    pub length: usize,
}

impl Gap {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.length
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub gaps: Vec<Gap>,
    pub structural_threshold: usize,
}

/// Maximal runs of `None` in one column, in order.
pub fn missing_runs(values: &[Option<f64>]) -> Vec<Gap> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < values.len() {
        if values[i].is_none() {
            let start = i;
            while i < values.len() && values[i].is_none() {
                i += 1;
            }
            runs.push(Gap {
                start,
                length: i - start,
            });
        } else {
            i += 1;
        }
    }
    runs
}

/// Runs of at least `structural_threshold` hours in which some channel is missing.
pub fn detect_gaps(series: &HourlySeries, structural_threshold: usize) -> Result<GapReport> {
    if structural_threshold == 0 {
        return Err(Error::InvalidArgument("structural threshold must be >= 1".into()));
    }
    let incomplete: Vec<Option<f64>> = (0..series.len())
        .map(|i| series.is_slot_complete(i).then_some(0.0))
        .collect();
    Ok(GapReport {
        gaps: missing_runs(&incomplete)
            .into_iter()
            .filter(|g| g.length >= structural_threshold)
            .collect(),
        structural_threshold,
    })
}

/// Per-channel min-max scaling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub channel_names: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalerParams {
    pub fn n_channels(&self) -> usize {
        self.min.len()
    }

    /// Parameters of a single channel.
    pub fn select(&self, idx: usize) -> ScalerParams {
        ScalerParams {
            channel_names: vec![self.channel_names[idx].clone()],
            min: vec![self.min[idx]],
            max: vec![self.max[idx]],
        }
    }

    /// `(x - min) / (max - min)`, or 0 for a degenerate range.
    pub fn scale(&self, channel: usize, x: f64) -> f64 {
        let span = self.max[channel] - self.min[channel];
        if span > 0.0 {
            (x - self.min[channel]) / span
        } else {
            0.0
        }
    }

    pub fn unscale(&self, channel: usize, x: f64) -> f64 {
        self.min[channel] + x * (self.max[channel] - self.min[channel])
    }
}

/// Fit min/max per channel over present values in `segment` only.
pub fn minmax_fit(series: &HourlySeries, segment: Range<usize>) -> Result<ScalerParams> {
    if segment.is_empty() || segment.end > series.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "segment {segment:?} is empty or exceeds series length {}",
            series.len()
        )));
    }
    let mut min = Vec::with_capacity(series.n_channels());
    let mut max = Vec::with_capacity(series.n_channels());
    for (name, col) in series.channel_names.iter().zip(&series.values) {
        let mut present = col[segment.clone()].iter().flatten().copied();
        let first = present.next().ok_or_else(|| Error::AllMissing(name.clone()))?;
        let (lo, hi) = present.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
        min.push(lo);
        max.push(hi);
    }
    Ok(ScalerParams {
        channel_names: series.channel_names.clone(),
        min,
        max,
    })
}

fn map_channels(
    series: &HourlySeries,
    params: &ScalerParams,
    f: impl Fn(&ScalerParams, usize, f64) -> f64,
) -> Result<HourlySeries> {
    if params.channel_names != series.channel_names {
        return Err(Error::ScalerMismatch(alloc::format!(
            "scaler channels {:?} do not match series channels {:?}",
            params.channel_names,
            series.channel_names
        )));
    }
    let values = series
        .values
        .iter()
        .enumerate()
        .map(|(c, col)| col.iter().map(|v| v.map(|x| f(params, c, x))).collect())
        .collect();
    HourlySeries::new(series.start, series.channel_names.clone(), values)
}

/// Scale every present value; out-of-range values are not clamped.
pub fn minmax_transform(series: &HourlySeries, params: &ScalerParams) -> Result<HourlySeries> {
    map_channels(series, params, ScalerParams::scale)
}

pub fn minmax_inverse(series: &HourlySeries, params: &ScalerParams) -> Result<HourlySeries> {
    map_channels(series, params, ScalerParams::unscale)
}

/// Number of training slots for a split of `n` slots at `train_fraction`.
pub fn split_point(n: usize, train_fraction: f64) -> Result<usize> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    // The epsilon keeps products like 0.29 * 100 = 28.999999999999996 on the intended side.
    let n_train = libm::floor(train_fraction * n as f64 + 1e-9) as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidArgument(alloc::format!(
            "train fraction {train_fraction} of {n} slots leaves an empty side"
        )));
    }
    Ok(n_train)
}

/// First `floor(fraction * N)` slots train, the rest test. No shuffling.
pub fn chronological_split(series: &HourlySeries, train_fraction: f64) -> Result<(HourlySeries, HourlySeries)> {
    let n = series.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 1, actual: n });
    }
    let n_train = split_point(n, train_fraction)?;
    Ok((series.slice(0..n_train), series.slice(n_train..n)))
}
