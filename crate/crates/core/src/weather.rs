//! Hourly cloud coverage per station and the cloud filter.
//!
//! `clouds.csv` has one row per station and UTC date:
//! `station_id,date,h00,h01,...,h23`, each value in `[0, 1]`. A value covers
//! the left-closed hour `[hh:00, hh+1:00)` of that date.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, Timelike};
use thiserror::Error;

use crate::channel::ChannelTable;
use crate::num::Real;
use crate::scenario::{Scenario, TimeGrid};

#[derive(Debug, Error)]
pub enum WeatherError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("no cloud data for station {station_id} on {date}")]
    Missing { station_id: u32, date: NaiveDate },
}

/// 24 hourly values for one station and one UTC date.
#[derive(Clone, Debug, PartialEq)]
pub struct CloudSeries {
    pub station_id: u32,
    pub date: NaiveDate,
    pub hourly: [f64; 24],
}

impl CloudSeries {
    pub fn clear(station_id: u32, date: NaiveDate) -> Self {
        Self {
            station_id,
            date,
            hourly: [0.0; 24],
        }
    }

    pub fn value_at_hour(&self, hour: u32) -> f64 {
        self.hourly[hour as usize]
    }
}

/// Cloud factor of a simulated slot; the series must cover the slot's date.
pub fn cloud_at(series: &CloudSeries, slot: u32, grid: &TimeGrid) -> f64 {
    debug_assert!(slot < grid.slot_count);
    let at = grid.instant_at(slot);
    debug_assert_eq!(at.date(), series.date, "series does not cover slot {slot}");
    series.value_at_hour(at.hour())
}

/// Parsed cloud file, keyed by (station id, date).
#[derive(Clone, Debug, Default)]
pub struct CloudTable {
    series: BTreeMap<(u32, NaiveDate), CloudSeries>,
}

impl CloudTable {
    pub fn insert(&mut self, series: CloudSeries) {
        self.series.insert((series.station_id, series.date), series);
    }

    pub fn get(&self, station_id: u32, date: NaiveDate) -> Option<&CloudSeries> {
        self.series.get(&(station_id, date))
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self, WeatherError> {
        let perr = |line: usize, message: String| WeatherError::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut table = Self::default();
        let mut header_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if !header_seen {
                header_seen = true;
                if fields.first() == Some(&"station_id") {
                    if fields.len() != 26 {
                        return Err(perr(line, format!("header has {} columns, expected 26", fields.len())));
                    }
                    continue;
                }
            }
            if fields.len() != 26 {
                return Err(perr(line, format!("{} columns, expected station_id,date,h00..h23", fields.len())));
            }
            let station_id: u32 = fields[0]
                .parse()
                .map_err(|_| perr(line, format!("bad station id {:?}", fields[0])))?;
            let date = NaiveDate::parse_from_str(fields[1], "%Y-%m-%d")
                .map_err(|_| perr(line, format!("bad date {:?}", fields[1])))?;
            let mut hourly = [0.0; 24];
            for (h, cell) in fields[2..].iter().enumerate() {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| perr(line, format!("h{h:02}: not a number: {cell:?}")))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(perr(line, format!("h{h:02}: {v} outside [0, 1]")));
                }
                hourly[h] = v;
            }
            if table.get(station_id, date).is_some() {
                return Err(perr(line, format!("duplicate row for station {station_id} on {date}")));
            }
            table.insert(CloudSeries {
                station_id,
                date,
                hourly,
            });
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WeatherError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| WeatherError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }
}

/// Per-slot cloud factors for every station of a scenario, resolved once so
/// lookups cannot fail.
#[derive(Clone, Debug)]
pub struct CloudField {
    grid: TimeGrid,
    first_date: NaiveDate,
    /// `[station][day][hour]`; empty means clear sky everywhere.
    values: Vec<Vec<[f64; 24]>>,
}

impl CloudField {
    pub fn clear_sky(scenario: &Scenario) -> Self {
        Self {
            grid: scenario.time_grid.clone(),
            first_date: scenario.time_grid.epoch.date(),
            values: Vec::new(),
        }
    }

    /// Checks that every station has a series for every date the grid touches.
    pub fn resolve(table: &CloudTable, scenario: &Scenario) -> Result<Self, WeatherError> {
        let grid = &scenario.time_grid;
        let first_date = grid.epoch.date();
        let last_date = grid.instant_at(grid.slot_count - 1).date();
        let days = (last_date - first_date).num_days() as usize + 1;
        let mut values = Vec::with_capacity(scenario.ground_stations.len());
        for gs in &scenario.ground_stations {
            let mut per_day = Vec::with_capacity(days);
            for d in 0..days {
                let date = first_date + chrono::Duration::days(d as i64);
                let series = table.get(gs.id, date).ok_or(WeatherError::Missing {
                    station_id: gs.id,
                    date,
                })?;
                per_day.push(series.hourly);
            }
            values.push(per_day);
        }
        Ok(Self {
            grid: grid.clone(),
            first_date,
            values,
        })
    }

    pub fn is_clear_sky(&self) -> bool {
        self.values.is_empty()
    }

    /// Cloud factor for the station at index `station` during `slot`.
    pub fn factor(&self, station: usize, slot: u32) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let at = self.grid.instant_at(slot);
        let day = (at.date() - self.first_date).num_days() as usize;
        self.values[station][day][at.hour() as usize]
    }
}

/// Drops every row whose cloud factor is strictly above `threshold`.
pub fn apply_filter<T: Real>(table: &ChannelTable<T>, threshold: f64) -> ChannelTable<T> {
    table.retain(|row| row.cloud_factor.to_f64_lossy() <= threshold)
}
