//! UTC calendar fields of hour-aligned unix timestamps.

use chrono::{DateTime, Datelike, Timelike};

pub const SECONDS_PER_HOUR: i64 = 3600;
pub const HOURS_PER_WEEK: usize = 168;

/// Calendar position of one hour.
///
/// `dayofweek` counts from Monday = 0, so the weekend is {5, 6}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalendarFields {
    pub hour: u32,
    pub dayofweek: u32,
    pub month: u32,
    pub is_weekend: bool,
}

impl CalendarFields {
    pub fn from_unix(timestamp: i64) -> Self {
        // Beyond chrono's ±262k-year range: 1970-01-01 was a Thursday.
        match DateTime::from_timestamp(timestamp, 0) {
            Some(dt) => {
                let dayofweek = dt.weekday().num_days_from_monday();
                Self {
                    hour: dt.hour(),
                    dayofweek,
                    month: dt.month(),
                    is_weekend: dayofweek >= 5,
                }
            }
            None => {
                let days = timestamp.div_euclid(86_400);
                let dayofweek = (days + 3).rem_euclid(7) as u32;
                Self {
                    hour: (timestamp.rem_euclid(86_400) / SECONDS_PER_HOUR) as u32,
                    dayofweek,
                    month: 1,
                    is_weekend: dayofweek >= 5,
                }
            }
        }
    }

    /// Index into a 168-cell week table: `dayofweek * 24 + hour`.
    pub fn week_slot(&self) -> usize {
        self.dayofweek as usize * 24 + self.hour as usize
    }
}

/// Floor a unix timestamp to the start of its hour.
pub fn floor_hour(timestamp: i64) -> i64 {
    timestamp.div_euclid(SECONDS_PER_HOUR) * SECONDS_PER_HOUR
}
