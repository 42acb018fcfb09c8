//! File formats: raw meter CSV, the hourly cache, JSON documents and plot CSVs.

use std::fs;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use loadcast_core::series::{HourlySeries, RawSeries};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::InputConfig;
use crate::error::{PipelineError, Result};

const ISO_HOUR: &str = "%Y-%m-%dT%H:%M:%SZ";

pub fn format_timestamp(ts: i64) -> String {
    DateTime::from_timestamp(ts, 0).map_or_else(|| ts.to_string(), |t| t.format(ISO_HOUR).to_string())
}

pub fn parse_timestamp(text: &str) -> Option<i64> {
    NaiveDateTime::parse_from_str(text, ISO_HOUR)
        .ok()
        .map(|t| t.and_utc().timestamp())
        .or_else(|| DateTime::parse_from_rfc3339(text).ok().map(|t| t.timestamp()))
}

/// Parse a meter CSV. Empty, non-numeric or negative power cells are kept as
/// invalid readings; a bad timestamp or a short row is an error naming its line.
pub fn read_raw_csv(path: &Path, schema: &InputConfig) -> Result<RawSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| PipelineError::Config(format!("{}: no column named `{name}`", path.display())))
    };
    let ts_col = find(&schema.timestamp_column)?;
    let mut channels = vec![schema.aggregate_column.clone()];
    channels.extend(schema.appliance_columns.iter().cloned());
    let cols = channels.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;

    let mut builder = RawSeries::builder(channels);
    let mut record = csv::StringRecord::new();
    let mut values = vec![None; cols.len()];
    loop {
        let more = reader.read_record(&mut record).map_err(|e| csv_error(path, e))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |message: String| PipelineError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let ts_text = record
            .get(ts_col)
            .ok_or_else(|| parse_err(format!("missing column `{}`", schema.timestamp_column)))?
            .trim();
        let ts = parse_unix(ts_text).ok_or_else(|| parse_err(format!("bad timestamp `{ts_text}`")))?;
        for (v, &c) in values.iter_mut().zip(&cols) {
            let cell = record
                .get(c)
                .ok_or_else(|| parse_err(format!("row has {} fields, expected more than {c}", record.len())))?
                .trim();
            *v = if cell.is_empty() {
                None
            } else {
                cell.parse::<f64>().ok()
            };
        }
        builder.push(ts, &values)?;
    }
    Ok(builder.finish()?)
}

fn parse_unix(text: &str) -> Option<i64> {
    text.parse::<i64>().ok().or_else(|| {
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(|v| v.floor() as i64)
    })
}

fn csv_error(path: &Path, e: csv::Error) -> PipelineError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => PipelineError::Io {
            path: path.to_path_buf(),
            source,
        },
        kind => PipelineError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Hourly cache: ISO-8601 hour column then one column per channel, empty cell
/// for a missing value. Values print in shortest round-trip form.
pub fn hourly_csv_bytes(series: &HourlySeries) -> Vec<u8> {
    let mut out = String::from("timestamp");
    for name in series.channel_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..series.len() {
        out.push_str(&format_timestamp(series.timestamp(i)));
        for c in 0..series.n_channels() {
            out.push(',');
            if let Some(v) = series.channel(c)[i] {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out.into_bytes()
}

pub fn read_hourly_csv(path: &Path) -> Result<HourlySeries> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut values: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
    let mut start = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let err = |message: String| PipelineError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let ts = parse_timestamp(&record[0]).ok_or_else(|| err(format!("bad timestamp `{}`", &record[0])))?;
        let first = *start.get_or_insert(ts);
        if ts != first + row as i64 * 3600 {
            return Err(err("hours are not consecutive".into()));
        }
        for (c, col) in values.iter_mut().enumerate() {
            let cell = record.get(c + 1).unwrap_or("");
            col.push(if cell.is_empty() {
                None
            } else {
                Some(cell.parse::<f64>().map_err(|_| err(format!("bad value `{cell}`")))?)
            });
        }
    }
    let start = start.ok_or_else(|| PipelineError::Missing(format!("{} holds no hours", path.display())))?;
    Ok(HourlySeries::new(start, names, values)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write unless the file already holds exactly these bytes. Returns whether it wrote.
pub fn write_if_changed(path: &Path, bytes: &[u8]) -> Result<bool> {
    if fs::read(path).is_ok_and(|old| old == bytes) {
        return Ok(false);
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(PipelineError::io(&tmp))?;
    fs::rename(&tmp, path).map_err(PipelineError::io(path))?;
    Ok(true)
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("document serializes");
    bytes.push(b'\n');
    bytes
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_if_changed(path, &json_bytes(value)).map(|_| ())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(PipelineError::io(path))?;
    serde_json::from_slice(&bytes).map_err(PipelineError::json(path))
}

/// One row of a plot CSV: `timestamp, actual, point_or_q50, q05, q95`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub timestamp: i64,
    pub actual: Option<f64>,
    pub center: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

pub const PLOT_HEADER: &str = "timestamp,actual,point_or_q50,q05,q95";

pub fn plot_csv_bytes(rows: &[PlotRow]) -> Vec<u8> {
    let cell = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.4}"));
    let mut out = format!("{PLOT_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.4},{},{}\n",
            format_timestamp(r.timestamp),
            cell(r.actual),
            r.center,
            cell(r.lower),
            cell(r.upper)
        ));
    }
    out.into_bytes()
}

pub fn read_plot_csv(path: &Path) -> Result<Vec<PlotRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected: Vec<&str> = PLOT_HEADER.split(',').collect();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != expected {
        return Err(PipelineError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("header must be `{PLOT_HEADER}`"),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let err = |message: String| PipelineError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let num = |i: usize| -> Result<Option<f64>> {
            let cell = record.get(i).unwrap_or("").trim();
            if cell.is_empty() {
                return Ok(None);
            }
            cell.parse::<f64>()
                .map(Some)
                .map_err(|_| err(format!("bad number `{cell}`")))
        };
        rows.push(PlotRow {
            timestamp: parse_timestamp(record[0].trim())
                .ok_or_else(|| err(format!("bad timestamp `{}`", &record[0])))?,
            actual: num(1)?,
            center: num(2)?.ok_or_else(|| err("point_or_q50 is empty".into()))?,
            lower: num(3)?,
            upper: num(4)?,
        });
    }
    Ok(rows)
}
