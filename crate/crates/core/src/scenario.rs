//! Simulation world: satellites, ground stations, the slot grid and the
//! hardware limits, plus loading all of it from a TOML scenario file.
//!
//! A scenario file has four sections. `[constellation]` describes a polar
//! constellation, `[time]` the slot grid, `[hardware]` the per-satellite and
//! receiver parameters, and `[ground_stations]` lists the stations together
//! with optional CSV tables for seasonal zenith transmissivity
//! (`station_id,season,zenith_transmissivity`) and background noise
//! (`station_id,hour_bucket,background_prob`). CSV paths are resolved relative
//! to the scenario file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelParams;

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const DEFAULT_MIN_ELEVATION_DEG: f64 = 20.0;
pub const DEFAULT_SLOT_COUNT: u32 = 86_400;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// One of the four representative days used for the atmosphere tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Mar,
    Jun,
    Sep,
    Dec,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Mar, Season::Jun, Season::Sep, Season::Dec];

    /// Season whose representative day (the 15th of Mar/Jun/Sep/Dec) covers
    /// the given month. Each season spans its month and the two following.
    pub fn for_month(month: u32) -> Season {
        match month {
            3..=5 => Season::Mar,
            6..=8 => Season::Jun,
            9..=11 => Season::Sep,
            _ => Season::Dec,
        }
    }

    pub fn for_date(date: NaiveDate) -> Season {
        Self::for_month(date.month())
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Season::Mar => "mar",
            Season::Jun => "jun",
            Season::Sep => "sep",
            Season::Dec => "dec",
        })
    }
}

impl FromStr for Season {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mar" | "march" | "03" | "3" => Ok(Season::Mar),
            "jun" | "june" | "06" | "6" => Ok(Season::Jun),
            "sep" | "september" | "09" | "9" => Ok(Season::Sep),
            "dec" | "december" | "12" => Ok(Season::Dec),
            other => Err(format!("unknown season `{other}` (expected mar/jun/sep/dec)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundStation {
    pub id: u32,
    pub name: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub receiver_count: u32,
    pub zenith_transmissivity: BTreeMap<Season, f64>,
    /// Local-solar-time bucket start hour -> background click probability per
    /// detection window. Piecewise constant; see [`GroundStation::background_prob`].
    pub background_noise: BTreeMap<u8, f64>,
}

impl GroundStation {
    pub fn zenith_for(&self, season: Season) -> Option<f64> {
        self.zenith_transmissivity.get(&season).copied()
    }

    /// Background probability for a local solar hour in `[0, 24)`.
    ///
    /// Uses the latest bucket starting at or before `local_hour`; hours before
    /// the first bucket wrap around to the last one. An empty profile is a
    /// noiseless sky.
    pub fn background_prob(&self, local_hour: f64) -> f64 {
        let hour = local_hour.rem_euclid(24.0);
        let mut chosen = None;
        for (&bucket, &p) in &self.background_noise {
            if f64::from(bucket) <= hour {
                chosen = Some(p);
            }
        }
        chosen
            .or_else(|| self.background_noise.values().next_back().copied())
            .unwrap_or(0.0)
    }

    fn validate(&self, field: &str) -> Result<(), ScenarioError> {
        if !(-90.0..=90.0).contains(&self.latitude_deg) {
            return Err(ScenarioError::invalid(
                format!("{field}.latitude"),
                format!("{} outside [-90, 90]", self.latitude_deg),
            ));
        }
        if !(-180.0..=180.0).contains(&self.longitude_deg) {
            return Err(ScenarioError::invalid(
                format!("{field}.longitude"),
                format!("{} outside [-180, 180]", self.longitude_deg),
            ));
        }
        if self.receiver_count < 1 {
            return Err(ScenarioError::invalid(format!("{field}.receiver_count"), "must be >= 1"));
        }
        for (season, &v) in &self.zenith_transmissivity {
            if !(v > 0.0 && v <= 1.0) {
                return Err(ScenarioError::invalid(
                    format!("{field}.zenith_transmissivity[{season}]"),
                    format!("{v} outside (0, 1]"),
                ));
            }
        }
        for (bucket, &p) in &self.background_noise {
            if *bucket >= 24 {
                return Err(ScenarioError::invalid(
                    format!("{field}.background_noise"),
                    format!("hour bucket {bucket} outside [0, 24)"),
                ));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(ScenarioError::invalid(
                    format!("{field}.background_noise[{bucket}]"),
                    format!("{p} outside [0, 1]"),
                ));
            }
        }
        Ok(())
    }
}

/// Per-satellite hardware shared by every satellite of a generated constellation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatelliteHardware {
    pub transmitter_count: u32,
    pub source_rate_hz: f64,
    pub optics_transmissivity: f64,
    pub detector_dark_count_prob: f64,
}

impl Default for SatelliteHardware {
    fn default() -> Self {
        Self {
            transmitter_count: 1,
            source_rate_hz: 1.0e9,
            optics_transmissivity: 0.5,
            detector_dark_count_prob: 1.0e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatelliteSpec {
    pub id: u32,
    pub ring_index: u32,
    pub slot_in_ring: u32,
    pub altitude_km: f64,
    /// Right ascension of the ascending node at the epoch.
    pub raan_deg: f64,
    /// Argument of latitude at the epoch (circular orbit).
    pub anomaly_deg: f64,
    pub transmitter_count: u32,
    pub source_rate_hz: f64,
    pub optics_transmissivity: f64,
    pub detector_dark_count_prob: f64,
}

impl SatelliteSpec {
    fn validate(&self, field: &str) -> Result<(), ScenarioError> {
        if !(self.altitude_km > 0.0) {
            return Err(ScenarioError::invalid(format!("{field}.altitude_km"), "must be > 0"));
        }
        if self.transmitter_count < 1 {
            return Err(ScenarioError::invalid(format!("{field}.transmitter_count"), "must be >= 1"));
        }
        if !(self.source_rate_hz > 0.0) {
            return Err(ScenarioError::invalid(format!("{field}.source_rate_hz"), "must be > 0"));
        }
        if !(self.optics_transmissivity > 0.0 && self.optics_transmissivity <= 1.0) {
            return Err(ScenarioError::invalid(
                format!("{field}.optics_transmissivity"),
                "must be in (0, 1]",
            ));
        }
        if !(0.0..1.0).contains(&self.detector_dark_count_prob) {
            return Err(ScenarioError::invalid(
                format!("{field}.detector_dark_count_prob"),
                "must be in [0, 1)",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub slot_duration_s: f64,
    pub slot_count: u32,
    /// UTC instant of the start of slot 0.
    pub epoch: NaiveDateTime,
}

impl TimeGrid {
    pub fn new(epoch: NaiveDateTime, slot_duration_s: f64, slot_count: u32) -> Self {
        Self {
            slot_duration_s,
            slot_count,
            epoch,
        }
    }

    /// Seconds since the epoch at the start of `slot`.
    #[inline]
    pub fn seconds_at(&self, slot: u32) -> f64 {
        f64::from(slot) * self.slot_duration_s
    }

    /// UTC timestamp at the start of `slot`, truncated to whole milliseconds.
    pub fn instant_at(&self, slot: u32) -> NaiveDateTime {
        let millis = (self.seconds_at(slot) * 1000.0).floor() as i64;
        self.epoch + chrono::Duration::milliseconds(millis)
    }

    /// UTC hour of day (fractional) at the start of `slot`.
    pub fn utc_hour_at(&self, slot: u32) -> f64 {
        let t = self.instant_at(slot);
        f64::from(t.hour()) + f64::from(t.minute()) / 60.0 + f64::from(t.second()) / 3600.0
    }

    pub fn season(&self) -> Season {
        Season::for_date(self.epoch.date())
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if self.slot_count < 1 {
            return Err(ScenarioError::invalid("time.slot_count", "must be >= 1"));
        }
        if !(self.slot_duration_s > 0.0) {
            return Err(ScenarioError::invalid("time.slot_duration_s", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub satellites: Vec<SatelliteSpec>,
    pub ground_stations: Vec<GroundStation>,
    pub time_grid: TimeGrid,
    pub min_elevation_deg: f64,
    pub earth_radius_km: f64,
    pub channel: ChannelParams<f64>,
}

impl Scenario {
    /// Checks every type invariant. Satellites and stations are addressed by
    /// their position in these lists everywhere else; ids are only used at the
    /// file boundary.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut seen = BTreeSet::new();
        for (i, sat) in self.satellites.iter().enumerate() {
            if !seen.insert(sat.id) {
                return Err(ScenarioError::invalid(format!("satellites[{i}].id"), format!("duplicate id {}", sat.id)));
            }
            sat.validate(&format!("satellites[{i}]"))?;
        }
        let mut seen = BTreeSet::new();
        for (i, gs) in self.ground_stations.iter().enumerate() {
            if !seen.insert(gs.id) {
                return Err(ScenarioError::invalid(
                    format!("ground_stations.station[{i}].id"),
                    format!("duplicate id {}", gs.id),
                ));
            }
            gs.validate(&format!("ground_stations.station[{i}]"))?;
            let season = self.time_grid.season();
            if gs.zenith_for(season).is_none() {
                return Err(ScenarioError::invalid(
                    format!("ground_stations.station[{i}].zenith_transmissivity"),
                    format!("no value for season {season} (station {})", gs.name),
                ));
            }
        }
        self.time_grid.validate()?;
        if !(self.min_elevation_deg > 0.0 && self.min_elevation_deg < 90.0) {
            return Err(ScenarioError::invalid("constellation.min_elevation_deg", "must be in (0, 90)"));
        }
        if !(self.earth_radius_km > 0.0) {
            return Err(ScenarioError::invalid("earth_radius_km", "must be > 0"));
        }
        self.channel
            .validate()
            .map_err(|(field, reason)| ScenarioError::invalid(format!("hardware.{field}"), reason))?;
        Ok(())
    }

    pub fn satellite_ids(&self) -> Vec<u32> {
        self.satellites.iter().map(|s| s.id).collect()
    }

    pub fn station_ids(&self) -> Vec<u32> {
        self.ground_stations.iter().map(|g| g.id).collect()
    }
}

/// Polar constellation with `rings` orbital planes spread evenly over 180° of
/// RAAN and `sats_per_ring` satellites evenly phased within each plane. There
/// is no phase offset between planes. Ids are `ring * sats_per_ring + slot`.
///
/// # Panics
/// If `rings` or `sats_per_ring` is zero.
pub fn build_polar_constellation(
    rings: u32,
    sats_per_ring: u32,
    altitude_km: f64,
    hardware: &SatelliteHardware,
) -> Vec<SatelliteSpec> {
    assert!(rings >= 1 && sats_per_ring >= 1, "constellation needs at least one ring and one satellite per ring");
    let raan_step = 180.0 / f64::from(rings);
    let phase_step = 360.0 / f64::from(sats_per_ring);
    let mut out = Vec::with_capacity((rings * sats_per_ring) as usize);
    for ring in 0..rings {
        for slot in 0..sats_per_ring {
            out.push(SatelliteSpec {
                id: ring * sats_per_ring + slot,
                ring_index: ring,
                slot_in_ring: slot,
                altitude_km,
                raan_deg: f64::from(ring) * raan_step,
                anomaly_deg: f64::from(slot) * phase_step,
                transmitter_count: hardware.transmitter_count,
                source_rate_hz: hardware.source_rate_hz,
                optics_transmissivity: hardware.optics_transmissivity,
                detector_dark_count_prob: hardware.detector_dark_count_prob,
            });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    constellation: ConstellationSection,
    time: TimeSection,
    #[serde(default)]
    hardware: HardwareSection,
    ground_stations: StationsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstellationSection {
    rings: u32,
    sats_per_ring: u32,
    altitude_km: f64,
    #[serde(default = "default_min_elevation")]
    min_elevation_deg: f64,
    #[serde(default = "default_earth_radius")]
    earth_radius_km: f64,
}

fn default_min_elevation() -> f64 {
    DEFAULT_MIN_ELEVATION_DEG
}
fn default_earth_radius() -> f64 {
    EARTH_RADIUS_KM
}
fn default_slot_duration() -> f64 {
    1.0
}
fn default_slot_count() -> u32 {
    DEFAULT_SLOT_COUNT
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSection {
    epoch: String,
    #[serde(default = "default_slot_duration")]
    slot_duration_s: f64,
    #[serde(default = "default_slot_count")]
    slot_count: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct HardwareSection {
    transmitter_count: u32,
    receiver_count: u32,
    source_rate_hz: f64,
    optics_transmissivity: f64,
    detector_dark_count_prob: f64,
    wavelength_nm: f64,
    transmit_divergence_urad: f64,
    receiver_aperture_m: f64,
    detector_efficiency: f64,
    sifting_factor: f64,
    intrinsic_error: f64,
}

impl Default for HardwareSection {
    fn default() -> Self {
        let sat = SatelliteHardware::default();
        let ch = ChannelParams::<f64>::default();
        Self {
            transmitter_count: sat.transmitter_count,
            receiver_count: 1,
            source_rate_hz: sat.source_rate_hz,
            optics_transmissivity: sat.optics_transmissivity,
            detector_dark_count_prob: sat.detector_dark_count_prob,
            wavelength_nm: ch.wavelength_nm,
            transmit_divergence_urad: ch.transmit_divergence_urad,
            receiver_aperture_m: ch.receiver_aperture_m,
            detector_efficiency: ch.detector_efficiency,
            sifting_factor: ch.sifting_factor,
            intrinsic_error: ch.intrinsic_error,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationsSection {
    atmosphere: Option<String>,
    noise: Option<String>,
    #[serde(default)]
    station: Vec<StationEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationEntry {
    id: u32,
    name: String,
    latitude: f64,
    longitude: f64,
    receiver_count: Option<u32>,
    /// Fallback used for every season missing from the atmosphere CSV.
    zenith_transmissivity: Option<f64>,
    /// Fallback used when the station has no rows in the noise CSV.
    background_prob: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct AtmosphereRow {
    station_id: u32,
    season: String,
    zenith_transmissivity: f64,
}

#[derive(Debug, Deserialize)]
struct NoiseRow {
    station_id: u32,
    hour_bucket: u8,
    background_prob: f64,
}

pub(crate) fn parse_epoch(raw: &str) -> Result<NaiveDateTime, String> {
    let raw = raw.trim();
    if let Ok(t) = NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S") {
        return Ok(t);
    }
    if let Ok(t) = NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S") {
        return Ok(t);
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight"))
        .map_err(|e| format!("`{raw}` is not YYYY-MM-DD[THH:MM:SS]: {e}"))
}

fn read_csv<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>, ScenarioError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| ScenarioError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    reader
        .deserialize()
        .map(|row| {
            row.map_err(|e| ScenarioError::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Parses a scenario from TOML text. Relative CSV paths resolve against `base_dir`.
pub fn parse_scenario(text: &str, origin: &Path, base_dir: &Path) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;

    let epoch = parse_epoch(&file.time.epoch).map_err(|r| ScenarioError::invalid("time.epoch", r))?;
    let time_grid = TimeGrid::new(epoch, file.time.slot_duration_s, file.time.slot_count);

    let c = &file.constellation;
    if c.rings < 1 {
        return Err(ScenarioError::invalid("constellation.rings", "must be >= 1"));
    }
    if c.sats_per_ring < 1 {
        return Err(ScenarioError::invalid("constellation.sats_per_ring", "must be >= 1"));
    }
    let hw = &file.hardware;
    let sat_hw = SatelliteHardware {
        transmitter_count: hw.transmitter_count,
        source_rate_hz: hw.source_rate_hz,
        optics_transmissivity: hw.optics_transmissivity,
        detector_dark_count_prob: hw.detector_dark_count_prob,
    };
    let satellites = build_polar_constellation(c.rings, c.sats_per_ring, c.altitude_km, &sat_hw);

    let mut atmosphere: BTreeMap<u32, BTreeMap<Season, f64>> = BTreeMap::new();
    if let Some(rel) = &file.ground_stations.atmosphere {
        let path = base_dir.join(rel);
        for row in read_csv::<AtmosphereRow>(&path)? {
            let season = row.season.parse::<Season>().map_err(|message| ScenarioError::Parse {
                path: path.clone(),
                message,
            })?;
            atmosphere.entry(row.station_id).or_default().insert(season, row.zenith_transmissivity);
        }
    }
    let mut noise: BTreeMap<u32, BTreeMap<u8, f64>> = BTreeMap::new();
    if let Some(rel) = &file.ground_stations.noise {
        let path = base_dir.join(rel);
        for row in read_csv::<NoiseRow>(&path)? {
            noise.entry(row.station_id).or_default().insert(row.hour_bucket, row.background_prob);
        }
    }

    let mut ground_stations = Vec::with_capacity(file.ground_stations.station.len());
    for entry in file.ground_stations.station {
        let mut zenith = atmosphere.remove(&entry.id).unwrap_or_default();
        if let Some(fallback) = entry.zenith_transmissivity {
            for season in Season::ALL {
                zenith.entry(season).or_insert(fallback);
            }
        }
        let background = match noise.remove(&entry.id) {
            Some(profile) => profile,
            None => entry
                .background_prob
                .map(|p| BTreeMap::from([(0u8, p)]))
                .unwrap_or_default(),
        };
        ground_stations.push(GroundStation {
            id: entry.id,
            name: entry.name,
            latitude_deg: entry.latitude,
            longitude_deg: entry.longitude,
            receiver_count: entry.receiver_count.unwrap_or(hw.receiver_count),
            zenith_transmissivity: zenith,
            background_noise: background,
        });
    }
    if let Some((id, _)) = atmosphere.into_iter().next() {
        return Err(ScenarioError::invalid("ground_stations.atmosphere", format!("rows for unknown station id {id}")));
    }
    if let Some((id, _)) = noise.into_iter().next() {
        return Err(ScenarioError::invalid("ground_stations.noise", format!("rows for unknown station id {id}")));
    }

    let scenario = Scenario {
        satellites,
        ground_stations,
        time_grid,
        min_elevation_deg: c.min_elevation_deg,
        earth_radius_km: c.earth_radius_km,
        channel: ChannelParams {
            wavelength_nm: hw.wavelength_nm,
            transmit_divergence_urad: hw.transmit_divergence_urad,
            receiver_aperture_m: hw.receiver_aperture_m,
            detector_efficiency: hw.detector_efficiency,
            sifting_factor: hw.sifting_factor,
            intrinsic_error: hw.intrinsic_error,
        },
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_scenario(&text, path, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[constellation]
rings = 1
sats_per_ring = 1
altitude_km = 500.0

[time]
epoch = "2022-09-15"
slot_count = 10

[ground_stations]
[[ground_stations.station]]
id = 1
name = "A"
latitude = 10.0
longitude = 20.0
zenith_transmissivity = 0.7

[[ground_stations.station]]
id = 2
name = "B"
latitude = -10.0
longitude = 40.0
zenith_transmissivity = 0.8
background_prob = 1e-6
"#;

    fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        parse_scenario(text, Path::new("inline.toml"), Path::new("."))
    }

    #[test]
    fn minimal_config_loads() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.satellites.len(), 1);
        assert_eq!(s.ground_stations.len(), 2);
        assert_eq!(s.time_grid.slot_count, 10);
        assert_eq!(s.min_elevation_deg, 20.0);
        assert_eq!(s.time_grid.season(), Season::Sep);
        assert_eq!(s.ground_stations[1].background_prob(13.0), 1e-6);
        assert_eq!(s.ground_stations[0].background_prob(13.0), 0.0);
    }

    #[test]
    fn latitude_out_of_range_is_rejected() {
        let text = MINIMAL.replace("latitude = 10.0", "latitude = 91.0");
        match parse(&text) {
            Err(ScenarioError::Invalid { field, .. }) => assert!(field.ends_with("latitude"), "{field}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn zero_altitude_is_rejected() {
        let text = MINIMAL.replace("altitude_km = 500.0", "altitude_km = 0.0");
        match parse(&text) {
            Err(ScenarioError::Invalid { field, .. }) => assert!(field.ends_with("altitude_km"), "{field}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_carries_line() {
        let text = MINIMAL.replace("rings = 1", "rings = = 1");
        let err = parse(&text).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ScenarioError::Parse { .. }));
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn duplicate_station_ids_rejected() {
        let text = MINIMAL.replace("id = 2", "id = 1");
        assert!(matches!(parse(&text), Err(ScenarioError::Invalid { .. })));
    }

    #[test]
    fn polar_constellation_spacing() {
        let hw = SatelliteHardware::default();
        let sats = build_polar_constellation(20, 20, 500.0, &hw);
        assert_eq!(sats.len(), 400);
        assert_eq!(sats[20].raan_deg, 9.0);
        assert_eq!(sats[1].anomaly_deg, 18.0);

        let one = build_polar_constellation(1, 1, 500.0, &hw);
        assert_eq!((one[0].raan_deg, one[0].anomaly_deg), (0.0, 0.0));

        let six = build_polar_constellation(2, 3, 800.0, &hw);
        let raans: BTreeSet<_> = six.iter().map(|s| s.raan_deg as i64).collect();
        let phases: BTreeSet<_> = six.iter().map(|s| s.anomaly_deg as i64).collect();
        assert_eq!(raans, BTreeSet::from([0, 90]));
        assert_eq!(phases, BTreeSet::from([0, 120, 240]));
    }

    #[test]
    fn constellation_is_deterministic_and_valid() {
        let hw = SatelliteHardware::default();
        let a = serde_json::to_string(&build_polar_constellation(7, 5, 650.0, &hw)).unwrap();
        let b = serde_json::to_string(&build_polar_constellation(7, 5, 650.0, &hw)).unwrap();
        assert_eq!(a, b);
        for (i, s) in build_polar_constellation(7, 5, 650.0, &hw).iter().enumerate() {
            s.validate(&format!("satellites[{i}]")).unwrap();
        }
    }

    #[test]
    fn background_buckets_are_piecewise_constant() {
        let gs = GroundStation {
            id: 0,
            name: "x".into(),
            latitude_deg: 0.0,
            longitude_deg: 0.0,
            receiver_count: 1,
            zenith_transmissivity: BTreeMap::new(),
            background_noise: BTreeMap::from([(0, 1.0e-7), (6, 1.0e-5), (12, 5.0e-5), (18, 1.0e-6)]),
        };
        assert_eq!(gs.background_prob(0.0), 1.0e-7);
        assert_eq!(gs.background_prob(5.99), 1.0e-7);
        assert_eq!(gs.background_prob(6.0), 1.0e-5);
        assert_eq!(gs.background_prob(12.5), 5.0e-5);
        assert_eq!(gs.background_prob(23.9), 1.0e-6);
        assert_eq!(gs.background_prob(-1.0), 1.0e-6);
    }

    #[test]
    fn season_mapping() {
        assert_eq!(Season::for_month(3), Season::Mar);
        assert_eq!(Season::for_month(7), Season::Jun);
        assert_eq!(Season::for_month(11), Season::Sep);
        assert_eq!(Season::for_month(1), Season::Dec);
        assert_eq!("Sep".parse::<Season>().unwrap(), Season::Sep);
    }
}
