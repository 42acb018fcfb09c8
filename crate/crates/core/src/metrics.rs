//! Point and probabilistic forecast scores, and the evaluation report.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Quantile levels produced by every probabilistic forecaster.
pub const QUANTILES: [f64; 3] = [0.05, 0.50, 0.95];

fn check_pair(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            actual: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(())
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(libm::sqrt(sse / y.len() as f64))
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let sae: f64 = y.iter().zip(yhat).map(|(a, b)| libm::fabs(a - b)).sum();
    Ok(sae / y.len() as f64)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("quantile level {tau} outside (0, 1)")))
    }
}

/// Pinball loss: `tau * (y - yhat)` when `y > yhat`, else `(1 - tau) * (yhat - y)`.
pub fn pinball_loss(y: f64, yhat: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(pinball_unchecked(y, yhat, tau))
}

/// Derivative of [`pinball_loss`] with respect to `yhat`; at `y == yhat` the `1 - tau` branch.
pub fn pinball_grad(y: f64, yhat: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(pinball_grad_unchecked(y, yhat, tau))
}

#[inline]
pub(crate) fn pinball_unchecked(y: f64, yhat: f64, tau: f64) -> f64 {
    if y > yhat {
        tau * (y - yhat)
    } else {
        (1.0 - tau) * (yhat - y)
    }
}

#[inline]
pub(crate) fn pinball_grad_unchecked(y: f64, yhat: f64, tau: f64) -> f64 {
    if y > yhat {
        -tau
    } else {
        1.0 - tau
    }
}

/// Per-timestep forecasts at increasing quantile levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastDistribution {
    pub timestamps: Vec<i64>,
    pub levels: Vec<f64>,
    /// `values[k][i]` is the level-`k` forecast for timestep `i`.
    pub values: Vec<Vec<f64>>,
}

impl ForecastDistribution {
    /// Validates shapes, strictly increasing levels and non-crossing rows.
    pub fn new(timestamps: Vec<i64>, levels: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let dist = Self::unchecked(timestamps, levels, values)?;
        if let Some(i) = (0..dist.len()).find(|&i| dist.row(i).windows(2).any(|w| w[0] > w[1])) {
            return Err(Error::InvalidArgument(format!("quantiles cross at timestep {i}")));
        }
        Ok(dist)
    }

    /// Sorts each timestep's quantiles ascending, repairing any crossing.
    pub fn from_unsorted(timestamps: Vec<i64>, levels: Vec<f64>, mut values: Vec<Vec<f64>>) -> Result<Self> {
        let n = timestamps.len();
        let mut row = Vec::with_capacity(values.len());
        for i in 0..n.min(values.first().map_or(0, Vec::len)) {
            row.clear();
            row.extend(values.iter().map(|col| col[i]));
            row.sort_by(f64::total_cmp);
            for (col, v) in values.iter_mut().zip(&row) {
                col[i] = *v;
            }
        }
        Self::new(timestamps, levels, values)
    }

    fn unchecked(timestamps: Vec<i64>, levels: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if levels.is_empty() || levels.iter().any(|&t| !(t > 0.0 && t < 1.0)) || levels.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidArgument(format!(
                "quantile levels {levels:?} must be strictly increasing in (0, 1)"
            )));
        }
        if values.len() != levels.len() {
            return Err(Error::LengthMismatch {
                expected: levels.len(),
                actual: values.len(),
            });
        }
        if let Some(col) = values.iter().find(|c| c.len() != timestamps.len()) {
            return Err(Error::LengthMismatch {
                expected: timestamps.len(),
                actual: col.len(),
            });
        }
        Ok(Self {
            timestamps,
            levels,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|c| c[i]).collect()
    }

    pub fn level(&self, tau: f64) -> Option<&[f64]> {
        self.levels
            .iter()
            .position(|&l| libm::fabs(l - tau) < 1e-12)
            .map(|k| self.values[k].as_slice())
    }

    pub fn lower(&self) -> &[f64] {
        &self.values[0]
    }

    pub fn upper(&self) -> &[f64] {
        &self.values[self.values.len() - 1]
    }

    /// The 0.5 level if present, else the middle level.
    pub fn median(&self) -> &[f64] {
        self.level(0.5).unwrap_or(&self.values[self.values.len() / 2])
    }
}

fn check_aligned(y: &[f64], dist: &ForecastDistribution) -> Result<()> {
    if y.len() != dist.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            actual: dist.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(())
}

/// Mean pinball loss over every (timestep, level) pair.
pub fn average_quantile_score(y: &[f64], dist: &ForecastDistribution) -> Result<f64> {
    check_aligned(y, dist)?;
    let mut total = 0.0;
    for (tau, col) in dist.levels.iter().zip(&dist.values) {
        for (&yi, &qi) in y.iter().zip(col) {
            total += pinball_unchecked(yi, qi, *tau);
        }
    }
    Ok(total / (y.len() * dist.levels.len()) as f64)
}

/// Percentage of actuals inside the closed `[lowest, highest]` level interval.
pub fn picp(y: &[f64], dist: &ForecastDistribution) -> Result<f64> {
    check_aligned(y, dist)?;
    let covered = y
        .iter()
        .zip(dist.lower().iter().zip(dist.upper()))
        .filter(|(&yi, (&lo, &hi))| lo <= yi && yi <= hi)
        .count();
    Ok(100.0 * covered as f64 / y.len() as f64)
}

/// One model's scores in watts; probabilistic fields are absent for point models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub rmse: f64,
    pub mae: f64,
    pub picp: Option<f64>,
    pub aqs: Option<f64>,
}

impl ReportRow {
    pub fn point(model: &str, y: &[f64], yhat: &[f64]) -> Result<Self> {
        Ok(Self {
            model: model.into(),
            rmse: rmse(y, yhat)?,
            mae: mae(y, yhat)?,
            picp: None,
            aqs: None,
        })
    }

    /// Point scores use the median level.
    pub fn probabilistic(model: &str, y: &[f64], dist: &ForecastDistribution) -> Result<Self> {
        Ok(Self {
            model: model.into(),
            rmse: rmse(y, dist.median())?,
            mae: mae(y, dist.median())?,
            picp: Some(picp(y, dist)?),
            aqs: Some(average_quantile_score(y, dist)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
}

pub const REPORT_COLUMNS: [&str; 5] = ["Model", "RMSE", "MAE", "PICP", "AQS"];

/// Rows keep the given order; names must be unique.
pub fn assemble_report(entries: Vec<ReportRow>) -> Result<EvalReport> {
    if entries.is_empty() {
        return Err(Error::EmptySeries);
    }
    for (i, row) in entries.iter().enumerate() {
        if entries[..i].iter().any(|r| r.model == row.model) {
            return Err(Error::DuplicateName(row.model.clone()));
        }
    }
    Ok(EvalReport { rows: entries })
}

impl ReportRow {
    /// Cells as rendered in the report: four decimals, PICP as a percentage, absent as `N/A`.
    pub fn cells(&self) -> [String; 5] {
        [
            self.model.clone(),
            format!("{:.4}", self.rmse),
            format!("{:.4}", self.mae),
            self.picp.map_or_else(|| "N/A".into(), |p| format!("{p:.2}%")),
            self.aqs.map_or_else(|| "N/A".into(), |a| format!("{a:.4}")),
        ]
    }
}

impl fmt::Display for EvalReport {
    /// Aligned plain-text table: model left-aligned, numbers right-aligned.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<[String; 5]> = self.rows.iter().map(ReportRow::cells).collect();
        let mut widths = REPORT_COLUMNS.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |f: &mut fmt::Formatter<'_>, row: [&str; 5]| {
            write!(f, "{:<w$}", row[0], w = widths[0])?;
            for (c, w) in row[1..].iter().zip(&widths[1..]) {
                write!(f, "  {c:>w$}")?;
            }
            writeln!(f)
        };
        line(f, REPORT_COLUMNS)?;
        let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
        writeln!(f, "{}", "-".repeat(total))?;
        for row in &cells {
            line(f, [&row[0], &row[1], &row[2], &row[3], &row[4]])?;
        }
        Ok(())
    }
}
