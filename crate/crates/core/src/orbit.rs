//! Circular polar orbit propagation and per-slot station geometry.
//!
//! Spherical Earth rotating at the sidereal rate. Satellites move on inertial
//! circular orbits; stations are fixed to the rotating frame. Geometry is
//! evaluated at the start of each slot and held constant over the slot.

use std::io::Write;

use chrono::NaiveDateTime;
use rayon::prelude::*;

use crate::num::Real;
use crate::scenario::{Scenario, SatelliteSpec, TimeGrid};

/// Standard gravitational parameter of the Earth, km^3/s^2.
pub const MU_EARTH: f64 = 398_600.441_8;
/// Sidereal rotation rate of the Earth, rad/s.
pub const EARTH_ROTATION_RATE: f64 = 7.292_115_0e-5;

/// Earth rotation angle (radians, in `[0, 2π)`) at a UTC instant, treating
/// UTC as UT1.
pub fn earth_rotation_angle(at: NaiveDateTime) -> f64 {
    let j2000 = chrono::NaiveDate::from_ymd_opt(2000, 1, 1)
        .and_then(|d| d.and_hms_opt(12, 0, 0))
        .expect("valid J2000 epoch");
    let days = (at - j2000).num_milliseconds() as f64 / 86_400_000.0;
    let turns = 0.779_057_273_264_0 + 1.002_737_811_911_354_48 * days;
    turns.rem_euclid(1.0) * std::f64::consts::TAU
}

pub fn orbital_radius_km(sat: &SatelliteSpec, earth_radius_km: f64) -> f64 {
    earth_radius_km + sat.altitude_km
}

pub fn mean_motion(radius_km: f64) -> f64 {
    (MU_EARTH / radius_km.powi(3)).sqrt()
}

pub fn orbital_period_s(radius_km: f64) -> f64 {
    std::f64::consts::TAU / mean_motion(radius_km)
}

/// Earth-centred inertial position (km) of `sat` at the start of `slot`.
pub fn propagate<T: Real>(sat: &SatelliteSpec, slot: u32, grid: &TimeGrid, earth_radius_km: f64) -> [T; 3] {
    debug_assert!(slot < grid.slot_count, "slot {slot} beyond grid");
    SatelliteOrbit::<T>::new(sat, earth_radius_km).position(T::lit(grid.seconds_at(slot)))
}

/// Precomputed constants of one circular polar orbit.
#[derive(Clone, Copy, Debug)]
struct SatelliteOrbit<T> {
    radius: T,
    rate: T,
    phase0: T,
    cos_raan: T,
    sin_raan: T,
}

impl<T: Real> SatelliteOrbit<T> {
    fn new(sat: &SatelliteSpec, earth_radius_km: f64) -> Self {
        let radius = orbital_radius_km(sat, earth_radius_km);
        let raan = sat.raan_deg.to_radians();
        Self {
            radius: T::lit(radius),
            rate: T::lit(mean_motion(radius)),
            phase0: T::lit(sat.anomaly_deg.to_radians()),
            cos_raan: T::lit(raan.cos()),
            sin_raan: T::lit(raan.sin()),
        }
    }

    /// Inclination 90°: the orbit plane contains the z axis.
    #[inline]
    fn position(&self, seconds: T) -> [T; 3] {
        let u = self.phase0 + self.rate * seconds;
        let (s, c) = u.sin_cos();
        [
            self.radius * c * self.cos_raan,
            self.radius * c * self.sin_raan,
            self.radius * s,
        ]
    }
}

#[derive(Clone, Copy, Debug)]
struct StationFrame<T> {
    cos_lat: T,
    sin_lat: T,
    lon: T,
}

/// Geometry of one (satellite, station, slot) triple. `satellite` and
/// `station` index the scenario lists.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometrySample<T = f64> {
    pub satellite: u32,
    pub station: u32,
    pub slot: u32,
    pub elevation_deg: T,
    pub distance_km: T,
    pub visible: bool,
}

/// Inclusive elevation threshold.
#[inline]
pub fn passes_threshold<T: Real>(elevation_deg: T, min_elevation_deg: T) -> bool {
    elevation_deg >= min_elevation_deg
}

/// Evaluates geometry for every (satellite, station) pair of a scenario.
#[derive(Clone, Debug)]
pub struct GeometryEngine<T> {
    orbits: Vec<SatelliteOrbit<T>>,
    stations: Vec<StationFrame<T>>,
    earth_radius: T,
    era0: T,
    slot_duration: T,
    min_elevation_deg: T,
    /// Per satellite: cosine of the largest central angle at which the
    /// satellite can still clear the threshold, with a small safety margin.
    cos_reach: Vec<T>,
}

impl<T: Real> GeometryEngine<T> {
    pub fn new(scenario: &Scenario) -> Self {
        let re = scenario.earth_radius_km;
        let theta = scenario.min_elevation_deg.to_radians();
        let orbits = scenario
            .satellites
            .iter()
            .map(|s| SatelliteOrbit::new(s, re))
            .collect();
        let cos_reach = scenario
            .satellites
            .iter()
            .map(|s| {
                let r = orbital_radius_km(s, re);
                let reach = (re * theta.cos() / r).clamp(-1.0, 1.0).acos() - theta;
                T::lit((reach + 1e-3).min(std::f64::consts::PI).cos())
            })
            .collect();
        let stations = scenario
            .ground_stations
            .iter()
            .map(|g| {
                let lat = g.latitude_deg.to_radians();
                StationFrame {
                    cos_lat: T::lit(lat.cos()),
                    sin_lat: T::lit(lat.sin()),
                    lon: T::lit(g.longitude_deg.to_radians()),
                }
            })
            .collect();
        Self {
            orbits,
            stations,
            earth_radius: T::lit(re),
            era0: T::lit(earth_rotation_angle(scenario.time_grid.epoch)),
            slot_duration: T::lit(scenario.time_grid.slot_duration_s),
            min_elevation_deg: T::lit(scenario.min_elevation_deg),
            cos_reach,
        }
    }

    #[inline]
    fn seconds(&self, slot: u32) -> T {
        T::lit(f64::from(slot)) * self.slot_duration
    }

    /// Unit vector of a station in the inertial frame.
    #[inline]
    fn station_unit(&self, station: usize, seconds: T) -> [T; 3] {
        let f = &self.stations[station];
        let lon = f.lon + self.era0 + T::lit(EARTH_ROTATION_RATE) * seconds;
        let (s, c) = lon.sin_cos();
        [f.cos_lat * c, f.cos_lat * s, f.sin_lat]
    }

    pub fn satellite_position(&self, satellite: usize, slot: u32) -> [T; 3] {
        self.orbits[satellite].position(self.seconds(slot))
    }

    pub fn station_position(&self, station: usize, slot: u32) -> [T; 3] {
        let u = self.station_unit(station, self.seconds(slot));
        [u[0] * self.earth_radius, u[1] * self.earth_radius, u[2] * self.earth_radius]
    }

    #[inline]
    fn sample_from(&self, sat_pos: [T; 3], unit: [T; 3], satellite: u32, station: u32, slot: u32) -> GeometrySample<T> {
        let re = self.earth_radius;
        let d = [
            sat_pos[0] - unit[0] * re,
            sat_pos[1] - unit[1] * re,
            sat_pos[2] - unit[2] * re,
        ];
        let distance = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let up = d[0] * unit[0] + d[1] * unit[1] + d[2] * unit[2];
        let sin_el = (up / distance).max(-T::one()).min(T::one());
        let elevation_deg = sin_el.asin().to_degrees();
        GeometrySample {
            satellite,
            station,
            slot,
            elevation_deg,
            distance_km: distance,
            visible: passes_threshold(elevation_deg, self.min_elevation_deg),
        }
    }

    pub fn geometry(&self, satellite: usize, station: usize, slot: u32) -> GeometrySample<T> {
        let t = self.seconds(slot);
        let pos = self.orbits[satellite].position(t);
        let unit = self.station_unit(station, t);
        self.sample_from(pos, unit, satellite as u32, station as u32, slot)
    }

    /// Visible samples of one slot, ordered by (satellite, station).
    pub fn visible_in_slot(&self, slot: u32) -> Vec<GeometrySample<T>> {
        let t = self.seconds(slot);
        let units: Vec<[T; 3]> = (0..self.stations.len()).map(|g| self.station_unit(g, t)).collect();
        let mut out = Vec::new();
        for (s, orbit) in self.orbits.iter().enumerate() {
            let pos = orbit.position(t);
            let reach = self.cos_reach[s] * orbit.radius;
            for (g, unit) in units.iter().enumerate() {
                let dot = pos[0] * unit[0] + pos[1] * unit[1] + pos[2] * unit[2];
                // Cheap necessary condition before the exact elevation test.
                if dot < reach {
                    continue;
                }
                let sample = self.sample_from(pos, *unit, s as u32, g as u32, slot);
                if sample.visible {
                    out.push(sample);
                }
            }
        }
        out
    }
}

/// Free-function form over a scenario.
pub fn geometry<T: Real>(scenario: &Scenario, satellite: usize, station: usize, slot: u32) -> GeometrySample<T> {
    GeometryEngine::<T>::new(scenario).geometry(satellite, station, slot)
}

/// Every visible (satellite, station, slot) triple of a scenario, grouped by
/// slot, plus the per-satellite active-slot sets.
#[derive(Clone, Debug)]
pub struct VisibilityTable<T = f64> {
    satellite_count: usize,
    station_count: usize,
    slot_count: u32,
    offsets: Vec<usize>,
    samples: Vec<GeometrySample<T>>,
    active: Vec<Vec<u32>>,
    union: Vec<u32>,
}

impl<T: Real> VisibilityTable<T> {
    /// Builds from per-slot visible samples (index = slot).
    pub fn from_slots(satellite_count: usize, station_count: usize, per_slot: Vec<Vec<GeometrySample<T>>>) -> Self {
        let slot_count = per_slot.len() as u32;
        let mut offsets = Vec::with_capacity(per_slot.len() + 1);
        let mut samples = Vec::with_capacity(per_slot.iter().map(Vec::len).sum());
        let mut active = vec![Vec::new(); satellite_count];
        let mut union = Vec::new();
        offsets.push(0);
        for (slot, mut rows) in per_slot.into_iter().enumerate() {
            rows.sort_by_key(|r| (r.satellite, r.station));
            let slot = slot as u32;
            let mut last = None;
            for r in &rows {
                debug_assert!(r.visible && r.slot == slot);
                if last != Some(r.satellite) {
                    active[r.satellite as usize].push(slot);
                    last = Some(r.satellite);
                }
            }
            if !rows.is_empty() {
                union.push(slot);
            }
            samples.extend(rows);
            offsets.push(samples.len());
        }
        Self {
            satellite_count,
            station_count,
            slot_count,
            offsets,
            samples,
            active,
            union,
        }
    }

    pub fn satellite_count(&self) -> usize {
        self.satellite_count
    }
    pub fn station_count(&self) -> usize {
        self.station_count
    }
    pub fn slot_count(&self) -> u32 {
        self.slot_count
    }

    pub fn slot(&self, slot: u32) -> &[GeometrySample<T>] {
        let i = slot as usize;
        &self.samples[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn samples(&self) -> &[GeometrySample<T>] {
        &self.samples
    }

    pub fn is_visible(&self, satellite: usize, station: usize, slot: u32) -> bool {
        self.slot(slot)
            .iter()
            .any(|r| r.satellite as usize == satellite && r.station as usize == station)
    }

    /// Slots in which `satellite` sees at least one station.
    pub fn active_slots(&self, satellite: usize) -> &[u32] {
        &self.active[satellite]
    }

    /// Union of all active-slot sets.
    pub fn union_slots(&self) -> &[u32] {
        &self.union
    }

    pub fn mean_active_slots(&self) -> f64 {
        if self.satellite_count == 0 {
            return 0.0;
        }
        self.active.iter().map(|a| a.len() as f64).sum::<f64>() / self.satellite_count as f64
    }

    /// Debug dump: `satellite_id,station_id,slot,elevation_deg,distance_km`.
    pub fn write_csv<W: Write>(&self, scenario: &Scenario, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "satellite_id,station_id,slot,elevation_deg,distance_km")?;
        for r in &self.samples {
            writeln!(
                w,
                "{},{},{},{},{}",
                scenario.satellites[r.satellite as usize].id,
                scenario.ground_stations[r.station as usize].id,
                r.slot,
                r.elevation_deg,
                r.distance_km
            )?;
        }
        w.flush()
    }
}

/// Computes the visibility relation over the whole time grid, in parallel
/// over slots; the result does not depend on the thread count.
pub fn build_visibility<T: Real>(scenario: &Scenario) -> VisibilityTable<T> {
    let engine = GeometryEngine::<T>::new(scenario);
    let per_slot: Vec<_> = (0..scenario.time_grid.slot_count)
        .into_par_iter()
        .map(|t| engine.visible_in_slot(t))
        .collect();
    VisibilityTable::from_slots(scenario.satellites.len(), scenario.ground_stations.len(), per_slot)
}
