//! Link budget and key-rate model.
//!
//! For each visible (satellite, station, slot) the transmissivity is the
//! product of free-space, atmospheric and optics factors. Photon successes,
//! QBER and the asymptotic BB84 rate `max(0, 1 - 2 h(E))` follow, and key
//! bits are scaled by the clear-sky fraction `1 - c`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;
use crate::orbit::{GeometrySample, VisibilityTable};
use crate::scenario::{GroundStation, SatelliteSpec, Scenario, TimeGrid};
use crate::weather::CloudField;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("{op}: argument {value} outside its domain")]
    Domain { op: &'static str, value: f64 },
    #[error("channel table line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("channel table: {0}")]
    Invalid(String),
}

/// Receiver and link parameters shared by every link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams<T = f64> {
    /// Carried for reporting; the loss model is wavelength independent.
    pub wavelength_nm: T,
    /// Beam divergence half-angle, microradians.
    pub transmit_divergence_urad: T,
    pub receiver_aperture_m: T,
    pub detector_efficiency: T,
    pub sifting_factor: T,
    pub intrinsic_error: T,
}

impl<T: Real> Default for ChannelParams<T> {
    fn default() -> Self {
        Self {
            wavelength_nm: T::lit(785.0),
            transmit_divergence_urad: T::lit(10.0),
            receiver_aperture_m: T::lit(1.0),
            detector_efficiency: T::lit(0.5),
            sifting_factor: T::lit(0.5),
            intrinsic_error: T::lit(0.01),
        }
    }
}

impl<T: Real> ChannelParams<T> {
    /// Returns the offending field and the reason.
    pub fn validate(&self) -> Result<(), (String, String)> {
        let positive = [
            ("wavelength_nm", self.wavelength_nm),
            ("transmit_divergence_urad", self.transmit_divergence_urad),
            ("receiver_aperture_m", self.receiver_aperture_m),
        ];
        for (name, v) in positive {
            if !(v > T::zero() && v.is_finite()) {
                return Err((name.into(), format!("{v} must be > 0")));
            }
        }
        for (name, v) in [("detector_efficiency", self.detector_efficiency), ("sifting_factor", self.sifting_factor)] {
            if !(v > T::zero() && v <= T::one()) {
                return Err((name.into(), format!("{v} outside (0, 1]")));
            }
        }
        if !(self.intrinsic_error >= T::zero() && self.intrinsic_error < T::lit(0.5)) {
            return Err(("intrinsic_error".into(), format!("{} outside [0, 0.5)", self.intrinsic_error)));
        }
        Ok(())
    }

    /// Distance (km) at which the beam footprint diameter equals the aperture.
    pub fn full_capture_distance_km(&self) -> T {
        let half_angle = self.transmit_divergence_urad * T::lit(1e-6);
        self.receiver_aperture_m / (T::lit(2.0) * half_angle) / T::lit(1000.0)
    }
}

fn domain<T: Real>(op: &'static str, value: T) -> ChannelError {
    ChannelError::Domain {
        op,
        value: value.to_f64_lossy(),
    }
}

/// `h(x) = -x log2 x - (1-x) log2 (1-x)`, with `h(0) = h(1) = 0`.
pub fn binary_entropy<T: Real>(x: T) -> Result<T, ChannelError> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(domain("binary_entropy", x));
    }
    let term = |p: T| if p > T::zero() { -p * p.log2() } else { T::zero() };
    Ok(term(x) + term(T::one() - x))
}

/// Asymptotic BB84 secret fraction, clamped at zero.
pub fn key_rate<T: Real>(qber: T) -> Result<T, ChannelError> {
    if !(qber >= T::zero() && qber <= T::lit(0.5)) {
        return Err(domain("key_rate", qber));
    }
    let raw = T::one() - T::lit(2.0) * binary_entropy(qber)?;
    Ok(raw.max(T::zero()))
}

/// Zenith transmissivity scaled to slant path: `zenith^(1/sin(elevation))`.
pub fn atmospheric_transmissivity<T: Real>(zenith_value: T, elevation_deg: T) -> Result<T, ChannelError> {
    if !(elevation_deg > T::zero() && elevation_deg <= T::lit(90.0)) {
        return Err(domain("atmospheric_transmissivity", elevation_deg));
    }
    if !(zenith_value > T::zero() && zenith_value <= T::one()) {
        return Err(domain("atmospheric_transmissivity", zenith_value));
    }
    Ok(zenith_value.powf(T::one() / elevation_deg.to_radians().sin()))
}

/// Inverse-square footprint loss, 1 inside the full-capture distance.
pub fn free_space_transmissivity<T: Real>(distance_km: T, params: &ChannelParams<T>) -> T {
    let d0 = params.full_capture_distance_km();
    if distance_km <= d0 {
        return T::one();
    }
    let ratio = d0 / distance_km;
    ratio * ratio
}

/// QBER from per-window click probabilities: intrinsic error plus half the
/// share of noise clicks, capped at 0.5.
pub fn qber<T: Real>(p_signal: T, p_noise: T, intrinsic_error: T) -> T {
    let total = p_signal + p_noise;
    let noise_share = if total > T::zero() { p_noise / total } else { T::zero() };
    (intrinsic_error + T::lit(0.5) * noise_share).min(T::lit(0.5))
}

/// Local mean solar hour at a longitude.
pub fn local_solar_hour(utc_hour: f64, longitude_deg: f64) -> f64 {
    (utc_hour + longitude_deg / 15.0).rem_euclid(24.0)
}

/// One row of the scheduler input. `satellite` and `station` are dense
/// indices into the owning table's id lists.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelEstimate<T = f64> {
    pub satellite: u32,
    pub station: u32,
    pub slot: u32,
    pub transmissivity: T,
    pub photon_successes: T,
    pub qber: T,
    pub key_rate: T,
    pub cloud_factor: T,
    pub key_bits: T,
}

impl<T: Real> ChannelEstimate<T> {
    pub fn zero(satellite: u32, station: u32, slot: u32, cloud_factor: T) -> Self {
        Self {
            satellite,
            station,
            slot,
            transmissivity: T::zero(),
            photon_successes: T::zero(),
            qber: T::zero(),
            key_rate: T::zero(),
            cloud_factor,
            key_bits: T::zero(),
        }
    }
}

/// Channel estimate for one geometry sample.
pub fn estimate_channel<T: Real>(
    geom: &GeometrySample<T>,
    station: &GroundStation,
    sat: &SatelliteSpec,
    params: &ChannelParams<T>,
    grid: &TimeGrid,
    cloud_factor: T,
) -> ChannelEstimate<T> {
    let cloud_factor = cloud_factor.max(T::zero()).min(T::one());
    if !geom.visible || geom.elevation_deg <= T::zero() {
        return ChannelEstimate::zero(geom.satellite, geom.station, geom.slot, cloud_factor);
    }
    let zenith = station.zenith_for(grid.season()).expect("validated scenario has every season");
    let eta_atm = atmospheric_transmissivity(T::lit(zenith), geom.elevation_deg).expect("positive elevation");
    let eta_fs = free_space_transmissivity(geom.distance_km, params);
    let eta = eta_fs * eta_atm * T::lit(sat.optics_transmissivity);
    let pulses = T::lit(sat.source_rate_hz * grid.slot_duration_s);
    let p_signal = eta * params.detector_efficiency;
    let photon_successes = pulses * p_signal * params.sifting_factor;
    let local_hour = local_solar_hour(grid.utc_hour_at(geom.slot), station.longitude_deg);
    let p_noise = T::lit(station.background_prob(local_hour) + sat.detector_dark_count_prob);
    let e = qber(p_signal, p_noise, params.intrinsic_error);
    let r = key_rate(e).expect("qber capped at 0.5");
    ChannelEstimate {
        satellite: geom.satellite,
        station: geom.station,
        slot: geom.slot,
        transmissivity: eta,
        photon_successes,
        qber: e,
        key_rate: r,
        cloud_factor,
        key_bits: (T::one() - cloud_factor) * photon_successes * r,
    }
}

/// Every visible triple with its estimate, grouped by slot and ordered by
/// (satellite, station) inside a slot.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTable<T = f64> {
    satellite_ids: Vec<u32>,
    station_ids: Vec<u32>,
    satellite_capacity: Vec<u32>,
    station_capacity: Vec<u32>,
    slot_count: u32,
    offsets: Vec<usize>,
    rows: Vec<ChannelEstimate<T>>,
}

pub const CSV_HEADER: &str =
    "satellite_id,station_id,slot,transmissivity,photon_successes,qber,key_rate,cloud_factor,key_bits";

impl<T: Real> ChannelTable<T> {
    /// Builds a table from rows in any order. Capacities are `M_s` and `R_g`.
    pub fn new(
        satellite_ids: Vec<u32>,
        station_ids: Vec<u32>,
        satellite_capacity: Vec<u32>,
        station_capacity: Vec<u32>,
        slot_count: u32,
        mut rows: Vec<ChannelEstimate<T>>,
    ) -> Result<Self, ChannelError> {
        if satellite_capacity.len() != satellite_ids.len() || station_capacity.len() != station_ids.len() {
            return Err(ChannelError::Invalid("capacity list length mismatch".into()));
        }
        if satellite_capacity.iter().chain(&station_capacity).any(|&c| c == 0) {
            return Err(ChannelError::Invalid("capacities must be >= 1".into()));
        }
        for ids in [&satellite_ids, &station_ids] {
            let mut sorted = ids.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(ChannelError::Invalid("duplicate id".into()));
            }
        }
        for r in &rows {
            if r.satellite as usize >= satellite_ids.len()
                || r.station as usize >= station_ids.len()
                || r.slot >= slot_count
            {
                return Err(ChannelError::Invalid(format!(
                    "row ({}, {}, {}) out of range",
                    r.satellite, r.station, r.slot
                )));
            }
            if !(r.key_bits >= T::zero()) || !(r.cloud_factor >= T::zero() && r.cloud_factor <= T::one()) {
                return Err(ChannelError::Invalid(format!(
                    "row ({}, {}, {}) has invalid key bits or cloud factor",
                    r.satellite, r.station, r.slot
                )));
            }
        }
        rows.sort_by_key(|r| (r.slot, r.satellite, r.station));
        if rows
            .windows(2)
            .any(|w| (w[0].slot, w[0].satellite, w[0].station) == (w[1].slot, w[1].satellite, w[1].station))
        {
            return Err(ChannelError::Invalid("duplicate (satellite, station, slot) row".into()));
        }
        let mut offsets = vec![0usize; slot_count as usize + 1];
        for r in &rows {
            offsets[r.slot as usize + 1] += 1;
        }
        for i in 0..slot_count as usize {
            offsets[i + 1] += offsets[i];
        }
        Ok(Self {
            satellite_ids,
            station_ids,
            satellite_capacity,
            station_capacity,
            slot_count,
            offsets,
            rows,
        })
    }

    pub fn satellite_ids(&self) -> &[u32] {
        &self.satellite_ids
    }
    pub fn station_ids(&self) -> &[u32] {
        &self.station_ids
    }
    pub fn satellite_capacity(&self) -> &[u32] {
        &self.satellite_capacity
    }
    pub fn station_capacity(&self) -> &[u32] {
        &self.station_capacity
    }
    pub fn satellite_count(&self) -> usize {
        self.satellite_ids.len()
    }
    pub fn station_count(&self) -> usize {
        self.station_ids.len()
    }
    pub fn slot_count(&self) -> u32 {
        self.slot_count
    }
    pub fn rows(&self) -> &[ChannelEstimate<T>] {
        &self.rows
    }

    pub fn slot(&self, slot: u32) -> &[ChannelEstimate<T>] {
        let i = slot as usize;
        &self.rows[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Slots that contain at least one row.
    pub fn nonempty_slots(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.slot_count).filter(|&t| self.offsets[t as usize] < self.offsets[t as usize + 1])
    }

    pub fn get(&self, satellite: usize, station: usize, slot: u32) -> Option<&ChannelEstimate<T>> {
        self.slot(slot)
            .iter()
            .find(|r| r.satellite as usize == satellite && r.station as usize == station)
    }

    /// `T_s`: slots in which satellite `s` has at least one row.
    pub fn active_slots(&self) -> Vec<Vec<u32>> {
        let mut active = vec![Vec::new(); self.satellite_count()];
        for r in &self.rows {
            let list: &mut Vec<u32> = &mut active[r.satellite as usize];
            if list.last() != Some(&r.slot) {
                list.push(r.slot);
            }
        }
        active
    }

    pub fn active_slot_counts(&self) -> Vec<usize> {
        self.active_slots().iter().map(Vec::len).collect()
    }

    /// Largest per-slot key bits over all rows (0 for an empty table).
    pub fn max_key_bits(&self) -> T {
        self.rows.iter().map(|r| r.key_bits).fold(T::zero(), T::max)
    }

    /// Copy keeping only rows for which `keep` holds.
    pub fn retain(&self, keep: impl Fn(&ChannelEstimate<T>) -> bool) -> Self {
        let rows: Vec<_> = self.rows.iter().filter(|r| keep(r)).copied().collect();
        Self::new(
            self.satellite_ids.clone(),
            self.station_ids.clone(),
            self.satellite_capacity.clone(),
            self.station_capacity.clone(),
            self.slot_count,
            rows,
        )
        .expect("subset of a valid table")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        let list = |ids: &[u32], caps: &[u32]| {
            let mut s = String::new();
            for (i, (id, cap)) in ids.iter().zip(caps).enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{id}:{cap}");
            }
            s
        };
        writeln!(w, "# satellites={}", list(&self.satellite_ids, &self.satellite_capacity))?;
        writeln!(w, "# stations={}", list(&self.station_ids, &self.station_capacity))?;
        writeln!(w, "# slots={}", self.slot_count)?;
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                self.satellite_ids[r.satellite as usize],
                self.station_ids[r.station as usize],
                r.slot,
                r.transmissivity,
                r.photon_successes,
                r.qber,
                r.key_rate,
                r.cloud_factor,
                r.key_bits
            )?;
        }
        w.flush()
    }

    /// Reads the format written by [`ChannelTable::write_csv`]. The `#`
    /// metadata lines are optional; without them ids are taken from the rows,
    /// capacities default to 1 and the slot count to the last slot + 1.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, ChannelError> {
        let perr = |line: usize, message: String| ChannelError::Parse { line, message };
        let mut sats: Option<Vec<(u32, u32)>> = None;
        let mut stations: Option<Vec<(u32, u32)>> = None;
        let mut slots: Option<u32> = None;
        let mut raw_rows = Vec::new();
        let mut header_seen = false;
        for (i, line) in input.lines().enumerate() {
            let n = i + 1;
            let line = line.map_err(|e| perr(n, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let meta = meta.trim();
                let parse_list = |v: &str| -> Result<Vec<(u32, u32)>, ChannelError> {
                    v.split_whitespace()
                        .map(|item| {
                            let (id, cap) = item.split_once(':').unwrap_or((item, "1"));
                            Ok((
                                id.parse().map_err(|_| perr(n, format!("bad id {id:?}")))?,
                                cap.parse().map_err(|_| perr(n, format!("bad capacity {cap:?}")))?,
                            ))
                        })
                        .collect()
                };
                if let Some(v) = meta.strip_prefix("satellites=") {
                    sats = Some(parse_list(v)?);
                } else if let Some(v) = meta.strip_prefix("stations=") {
                    stations = Some(parse_list(v)?);
                } else if let Some(v) = meta.strip_prefix("slots=") {
                    slots = Some(v.trim().parse().map_err(|_| perr(n, format!("bad slot count {v:?}")))?);
                }
                continue;
            }
            if !header_seen {
                header_seen = true;
                if line.starts_with("satellite_id") {
                    if line.replace(' ', "") != CSV_HEADER {
                        return Err(perr(n, format!("unexpected header, expected {CSV_HEADER}")));
                    }
                    continue;
                }
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 9 {
                return Err(perr(n, format!("{} columns, expected 9", f.len())));
            }
            let int = |k: usize| -> Result<u32, ChannelError> {
                f[k].parse().map_err(|_| perr(n, format!("column {}: bad integer {:?}", k + 1, f[k])))
            };
            let real = |k: usize| -> Result<T, ChannelError> {
                let v: f64 = f[k]
                    .parse()
                    .map_err(|_| perr(n, format!("column {}: bad number {:?}", k + 1, f[k])))?;
                if !v.is_finite() {
                    return Err(perr(n, format!("column {}: non-finite value", k + 1)));
                }
                Ok(T::lit(v))
            };
            raw_rows.push((
                int(0)?,
                int(1)?,
                int(2)?,
                [real(3)?, real(4)?, real(5)?, real(6)?, real(7)?, real(8)?],
                n,
            ));
        }
        let infer = |pick: fn(&(u32, u32, u32, [T; 6], usize)) -> u32| {
            let mut ids: Vec<u32> = raw_rows.iter().map(pick).collect();
            ids.sort_unstable();
            ids.dedup();
            ids.into_iter().map(|id| (id, 1)).collect::<Vec<_>>()
        };
        let sats = sats.unwrap_or_else(|| infer(|r| r.0));
        let stations = stations.unwrap_or_else(|| infer(|r| r.1));
        let slot_count = slots.unwrap_or_else(|| raw_rows.iter().map(|r| r.2 + 1).max().unwrap_or(0));
        let index = |list: &[(u32, u32)], id: u32| list.iter().position(|&(x, _)| x == id);
        let mut rows = Vec::with_capacity(raw_rows.len());
        for (s, g, t, v, n) in raw_rows {
            let si = index(&sats, s).ok_or_else(|| perr(n, format!("satellite {s} not declared")))?;
            let gi = index(&stations, g).ok_or_else(|| perr(n, format!("station {g} not declared")))?;
            rows.push(ChannelEstimate {
                satellite: si as u32,
                station: gi as u32,
                slot: t,
                transmissivity: v[0],
                photon_successes: v[1],
                qber: v[2],
                key_rate: v[3],
                cloud_factor: v[4],
                key_bits: v[5],
            });
        }
        Self::new(
            sats.iter().map(|x| x.0).collect(),
            stations.iter().map(|x| x.0).collect(),
            sats.iter().map(|x| x.1).collect(),
            stations.iter().map(|x| x.1).collect(),
            slot_count,
            rows,
        )
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, ChannelError> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| ChannelError::Invalid(format!("cannot open {}: {e}", path.as_ref().display())))?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    /// Converts every scalar, e.g. to run a scheduler in another precision.
    pub fn cast<U: Real>(&self) -> ChannelTable<U> {
        let c = |x: T| U::lit(x.to_f64_lossy());
        ChannelTable {
            satellite_ids: self.satellite_ids.clone(),
            station_ids: self.station_ids.clone(),
            satellite_capacity: self.satellite_capacity.clone(),
            station_capacity: self.station_capacity.clone(),
            slot_count: self.slot_count,
            offsets: self.offsets.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| ChannelEstimate {
                    satellite: r.satellite,
                    station: r.station,
                    slot: r.slot,
                    transmissivity: c(r.transmissivity),
                    photon_successes: c(r.photon_successes),
                    qber: c(r.qber),
                    key_rate: c(r.key_rate),
                    cloud_factor: c(r.cloud_factor),
                    key_bits: c(r.key_bits),
                })
                .collect(),
        }
    }
}

/// Estimates every visible triple of a scenario.
pub fn build_channel_table<T: Real>(
    scenario: &Scenario,
    visibility: &VisibilityTable<T>,
    clouds: &CloudField,
) -> ChannelTable<T> {
    let params = ChannelParams::<T> {
        wavelength_nm: T::lit(scenario.channel.wavelength_nm),
        transmit_divergence_urad: T::lit(scenario.channel.transmit_divergence_urad),
        receiver_aperture_m: T::lit(scenario.channel.receiver_aperture_m),
        detector_efficiency: T::lit(scenario.channel.detector_efficiency),
        sifting_factor: T::lit(scenario.channel.sifting_factor),
        intrinsic_error: T::lit(scenario.channel.intrinsic_error),
    };
    let grid = &scenario.time_grid;
    let per_slot: Vec<Vec<ChannelEstimate<T>>> = (0..visibility.slot_count())
        .into_par_iter()
        .map(|t| {
            visibility
                .slot(t)
                .iter()
                .map(|g| {
                    let station = &scenario.ground_stations[g.station as usize];
                    let sat = &scenario.satellites[g.satellite as usize];
                    let cloud = T::lit(clouds.factor(g.station as usize, t));
                    estimate_channel(g, station, sat, &params, grid, cloud)
                })
                .collect()
        })
        .collect();
    ChannelTable::new(
        scenario.satellite_ids(),
        scenario.station_ids(),
        scenario.satellites.iter().map(|s| s.transmitter_count).collect(),
        scenario.ground_stations.iter().map(|g| g.receiver_count).collect(),
        grid.slot_count,
        per_slot.into_iter().flatten().collect(),
    )
    .expect("visibility rows are in range and unique")
}
