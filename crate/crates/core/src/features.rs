//! Calendar and lag features, the tabular design matrix, and sliding windows.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::calendar::{CalendarFields, SECONDS_PER_HOUR};
use crate::series::{HourlySeries, ScalerParams};
use crate::{Error, Result};

pub const DEFAULT_LAGS: [usize; 3] = [1, 24, 168];
pub const DEFAULT_WINDOW: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalendarFeature {
    Hour,
    #[serde(rename = "dayofweek")]
    DayOfWeek,
    Month,
    IsWeekend,
}

impl CalendarFeature {
    pub const ALL: [CalendarFeature; 4] = [
        CalendarFeature::Hour,
        CalendarFeature::DayOfWeek,
        CalendarFeature::Month,
        CalendarFeature::IsWeekend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CalendarFeature::Hour => "hour",
            CalendarFeature::DayOfWeek => "dayofweek",
            CalendarFeature::Month => "month",
            CalendarFeature::IsWeekend => "is_weekend",
        }
    }

    pub fn value(self, fields: &CalendarFields) -> f64 {
        match self {
            CalendarFeature::Hour => fields.hour as f64,
            CalendarFeature::DayOfWeek => fields.dayofweek as f64,
            CalendarFeature::Month => fields.month as f64,
            CalendarFeature::IsWeekend => fields.is_weekend as u8 as f64,
        }
    }
}

pub fn lag_name(lag: usize) -> String {
    format!("lag_{lag}hr")
}

/// Which columns go into a design matrix.
///
/// `channels` are contemporaneous values of other series channels (or of the
/// target itself). They belong in sequence-model windows, where row `t` only
/// feeds predictions for later hours; a flat one-step matrix should leave them empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub calendar: Vec<CalendarFeature>,
    pub lags: Vec<usize>,
    #[serde(default)]
    pub channels: Vec<String>,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            calendar: CalendarFeature::ALL.to_vec(),
            lags: DEFAULT_LAGS.to_vec(),
            channels: Vec::new(),
        }
    }
}

impl FeatureSpec {
    pub fn max_lag(&self) -> usize {
        self.lags.iter().copied().max().unwrap_or(0)
    }

    /// Column order: calendar, then lags, then channels, each sorted by name.
    pub fn feature_order(&self) -> Vec<String> {
        let sorted = |mut v: Vec<String>| {
            v.sort();
            v.dedup();
            v
        };
        let mut order = sorted(self.calendar.iter().map(|c| c.name().to_string()).collect());
        order.extend(sorted(self.lags.iter().map(|&l| lag_name(l)).collect()));
        order.extend(sorted(self.channels.clone()));
        order
    }
}

/// Calendar fields of hour-aligned timestamps.
pub fn calendar_features(timestamps: &[i64]) -> Result<Vec<CalendarFields>> {
    timestamps
        .iter()
        .map(|&ts| {
            if ts.rem_euclid(SECONDS_PER_HOUR) != 0 {
                Err(Error::InvalidArgument(format!("timestamp {ts} is not hour-aligned")))
            } else {
                Ok(CalendarFields::from_unix(ts))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagColumn {
    pub lag: usize,
    /// Same length as the target; undefined for `t < lag` or a missing source value.
    pub values: Vec<Option<f64>>,
}

/// `lag_k[t] = target[t - k]`.
pub fn lag_features(target: &[Option<f64>], lags: &[usize]) -> Result<Vec<LagColumn>> {
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    if target.len() <= max_lag {
        return Err(Error::TooShort {
            needed: max_lag,
            actual: target.len(),
        });
    }
    Ok(lags
        .iter()
        .map(|&lag| LagColumn {
            lag,
            values: (0..target.len())
                .map(|t| t.checked_sub(lag).and_then(|s| target[s]))
                .collect(),
        })
        .collect())
}

/// Dense row-major design matrix with one target per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    feature_names: Vec<String>,
    timestamps: Vec<i64>,
    data: Vec<f64>,
    targets: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(feature_names: Vec<String>, timestamps: Vec<i64>, data: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        let n = timestamps.len();
        if targets.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: targets.len(),
            });
        }
        if data.len() != n * feature_names.len() {
            return Err(Error::LengthMismatch {
                expected: n * feature_names.len(),
                actual: data.len(),
            });
        }
        Ok(Self {
            feature_names,
            timestamps,
            data,
            targets,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let f = self.n_features();
        &self.data[i * f..(i + 1) * f]
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.data[row * self.n_features() + feature]
    }

    pub fn rows(&self, range: Range<usize>) -> FeatureMatrix {
        let f = self.n_features();
        FeatureMatrix {
            feature_names: self.feature_names.clone(),
            timestamps: self.timestamps[range.clone()].to_vec(),
            data: self.data[range.start * f..range.end * f].to_vec(),
            targets: self.targets[range].to_vec(),
        }
    }

    /// Rows with `start <= timestamp < end`.
    pub fn rows_between(&self, start: i64, end: i64) -> FeatureMatrix {
        let lo = self.timestamps.partition_point(|&t| t < start);
        let hi = self.timestamps.partition_point(|&t| t < end);
        self.rows(lo..hi)
    }

    /// Reorder columns to `names`; every name must exist.
    pub fn select(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx = names
            .iter()
            .map(|n| self.feature_index(n).ok_or_else(|| Error::UnknownFeature(n.clone())))
            .collect::<Result<Vec<_>>>()?;
        let data = (0..self.n_rows())
            .flat_map(|r| idx.iter().map(move |&j| (r, j)))
            .map(|(r, j)| self.value(r, j))
            .collect();
        Ok(FeatureMatrix {
            feature_names: names.to_vec(),
            timestamps: self.timestamps.clone(),
            data,
            targets: self.targets.clone(),
        })
    }

    /// Column-wise min/max over `rows`.
    pub fn fit_scaler(&self, rows: Range<usize>) -> Result<ScalerParams> {
        if rows.is_empty() || rows.end > self.n_rows() {
            return Err(Error::InvalidArgument(format!(
                "row range {rows:?} is empty or out of bounds"
            )));
        }
        let f = self.n_features();
        let mut min = alloc::vec![f64::INFINITY; f];
        let mut max = alloc::vec![f64::NEG_INFINITY; f];
        for r in rows {
            for (j, &v) in self.row(r).iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(ScalerParams {
            channel_names: self.feature_names.clone(),
            min,
            max,
        })
    }

    /// Scale feature columns (not the targets) with per-feature parameters.
    pub fn scale_features(&self, params: &ScalerParams) -> Result<FeatureMatrix> {
        if params.channel_names != self.feature_names {
            return Err(Error::ScalerMismatch("feature names differ".into()));
        }
        let f = self.n_features();
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| params.scale(i % f, v))
            .collect();
        Ok(FeatureMatrix { data, ..self.clone() })
    }

    pub fn map_targets(&self, f: impl Fn(f64) -> f64) -> FeatureMatrix {
        FeatureMatrix {
            targets: self.targets.iter().map(|&t| f(t)).collect(),
            ..self.clone()
        }
    }
}

/// Join calendar, lag and channel columns on the hourly grid, dropping rows
/// with any undefined feature or a missing target.
pub fn assemble_matrix(series: &HourlySeries, target: &str, spec: &FeatureSpec) -> Result<FeatureMatrix> {
    let target_idx = series
        .channel_index(target)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown target channel `{target}`")))?;
    let target_col = series.channel(target_idx);
    let timestamps = series.timestamps();
    let calendar = calendar_features(&timestamps)?;
    let lags = lag_features(target_col, &spec.lags)?;
    let order = spec.feature_order();

    enum Source<'a> {
        Calendar(CalendarFeature),
        Column(&'a [Option<f64>]),
    }
    let sources = order
        .iter()
        .map(|name| {
            if let Some(c) = CalendarFeature::ALL.iter().find(|c| c.name() == name) {
                return Ok(Source::Calendar(*c));
            }
            if let Some(l) = lags.iter().find(|l| lag_name(l.lag) == *name) {
                return Ok(Source::Column(&l.values));
            }
            series
                .channel_index(name)
                .map(|idx| Source::Column(series.channel(idx)))
                .ok_or_else(|| Error::UnknownFeature(name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out_ts = Vec::new();
    let mut data = Vec::new();
    let mut targets = Vec::new();
    let mut row = Vec::with_capacity(sources.len());
    'rows: for t in 0..series.len() {
        let Some(y) = target_col[t] else { continue };
        row.clear();
        for s in &sources {
            let v = match s {
                Source::Calendar(c) => Some(c.value(&calendar[t])),
                Source::Column(col) => col[t],
            };
            match v {
                Some(v) => row.push(v),
                None => continue 'rows,
            }
        }
        out_ts.push(timestamps[t]);
        data.extend_from_slice(&row);
        targets.push(y);
    }
    if out_ts.is_empty() {
        return Err(Error::NoRows);
    }
    FeatureMatrix::new(order, out_ts, data, targets)
}

/// Sliding windows over consecutive matrix rows.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowTensor {
    pub samples: usize,
    pub window: usize,
    pub horizon: usize,
    pub n_features: usize,
    /// `samples x window x n_features`, row-major.
    pub data: Vec<f64>,
    pub targets: Vec<f64>,
    pub target_timestamps: Vec<i64>,
}

impl WindowTensor {
    pub fn sample(&self, i: usize) -> &[f64] {
        let len = self.window * self.n_features;
        &self.data[i * len..(i + 1) * len]
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.samples, self.window, self.n_features)
    }

    pub fn select(&self, indices: &[usize]) -> WindowTensor {
        let len = self.window * self.n_features;
        WindowTensor {
            samples: indices.len(),
            data: indices
                .iter()
                .flat_map(|&i| self.data[i * len..(i + 1) * len].iter().copied())
                .collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            target_timestamps: indices.iter().map(|&i| self.target_timestamps[i]).collect(),
            ..*self
        }
    }

    pub fn split_at(&self, n: usize) -> (WindowTensor, WindowTensor) {
        let all: Vec<usize> = (0..self.samples).collect();
        (self.select(&all[..n]), self.select(&all[n..]))
    }
}

/// Sample `i` covers rows `[i, i + window)` and targets row `i + window + horizon - 1`.
pub fn windowize(matrix: &FeatureMatrix, window: usize, horizon: usize) -> Result<WindowTensor> {
    if window == 0 || horizon == 0 {
        return Err(Error::InvalidArgument("window and horizon must be >= 1".into()));
    }
    let rows = matrix.n_rows();
    if rows < window + horizon {
        return Err(Error::TooShort {
            needed: window + horizon - 1,
            actual: rows,
        });
    }
    if let Some(i) = (1..rows).find(|&i| matrix.timestamps[i] - matrix.timestamps[i - 1] != SECONDS_PER_HOUR) {
        return Err(Error::NonContiguous(i - 1, i));
    }
    let samples = rows - window - horizon + 1;
    let f = matrix.n_features();
    Ok(WindowTensor {
        samples,
        window,
        horizon,
        n_features: f,
        data: (0..samples)
            .flat_map(|i| matrix.data[i * f..(i + window) * f].iter().copied())
            .collect(),
        targets: (0..samples).map(|i| matrix.targets[i + window + horizon - 1]).collect(),
        target_timestamps: (0..samples)
            .map(|i| matrix.timestamps[i + window + horizon - 1])
            .collect(),
    })
}
