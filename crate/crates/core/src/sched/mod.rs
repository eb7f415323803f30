//! Phase-1 schedulers: which satellite serves which station in each slot.
//!
//! Every scheduler reads only a [`ChannelTable`]: its rows are the usable
//! (satellite, station, slot) links, and `T_s` is the set of slots in which a
//! satellite has at least one row.

mod greedy;
mod opportunistic;
mod rr;
mod slot;

use std::io::Write;

use thiserror::Error;

use crate::channel::ChannelTable;
use crate::num::Real;

pub use greedy::run_greedy;
pub use opportunistic::{run_opportunistic, OpportunisticConfig, OpportunisticOutcome};
pub use rr::run_rr;
pub use slot::{solve_slot, SlotEdge};

/// Served links per slot, as dense (satellite, station) indices of the
/// table the schedule was computed from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    satellite_ids: Vec<u32>,
    station_ids: Vec<u32>,
    slot_count: u32,
    offsets: Vec<usize>,
    served: Vec<(u32, u32)>,
}

impl Schedule {
    /// `per_slot[t]` lists the links served in slot `t`.
    pub fn from_slots<T: Real>(table: &ChannelTable<T>, per_slot: Vec<Vec<(u32, u32)>>) -> Self {
        assert_eq!(per_slot.len(), table.slot_count() as usize);
        let mut offsets = Vec::with_capacity(per_slot.len() + 1);
        let mut served = Vec::new();
        offsets.push(0);
        for mut links in per_slot {
            links.sort_unstable();
            served.extend(links);
            offsets.push(served.len());
        }
        Self {
            satellite_ids: table.satellite_ids().to_vec(),
            station_ids: table.station_ids().to_vec(),
            slot_count: table.slot_count(),
            offsets,
            served,
        }
    }

    pub fn empty<T: Real>(table: &ChannelTable<T>) -> Self {
        Self::from_slots(table, vec![Vec::new(); table.slot_count() as usize])
    }

    pub fn slot_count(&self) -> u32 {
        self.slot_count
    }

    pub fn slot(&self, slot: u32) -> &[(u32, u32)] {
        let i = slot as usize;
        &self.served[self.offsets[i]..self.offsets[i + 1]]
    }

    /// `(slot, satellite, station)` for every served link, in slot order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        (0..self.slot_count).flat_map(move |t| self.slot(t).iter().map(move |&(s, g)| (t, s, g)))
    }

    pub fn len(&self) -> usize {
        self.served.len()
    }

    pub fn is_empty(&self) -> bool {
        self.served.is_empty()
    }

    /// CSV `slot,satellite_id,station_id`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "slot,satellite_id,station_id")?;
        for (t, s, g) in self.iter() {
            writeln!(w, "{t},{},{}", self.satellite_ids[s as usize], self.station_ids[g as usize])?;
        }
        w.flush()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleViolation {
    #[error("slot {slot}: link ({satellite}, {station}) is not in the channel table")]
    UnknownLink { slot: u32, satellite: u32, station: u32 },
    #[error("slot {slot}: link ({satellite}, {station}) served twice")]
    Duplicate { slot: u32, satellite: u32, station: u32 },
    #[error("slot {slot}: satellite {satellite} serves {count} stations, capacity {capacity}")]
    Transmitters { slot: u32, satellite: u32, count: u32, capacity: u32 },
    #[error("slot {slot}: station {station} served by {count} satellites, capacity {capacity}")]
    Receivers { slot: u32, station: u32, count: u32, capacity: u32 },
    #[error("schedule has {got} slots, table has {want}")]
    Shape { got: u32, want: u32 },
}

/// Checks the per-slot transmitter and receiver limits and that every served
/// link is a row of `table`.
pub fn validate_schedule<T: Real>(schedule: &Schedule, table: &ChannelTable<T>) -> Result<(), ScheduleViolation> {
    if schedule.slot_count != table.slot_count() {
        return Err(ScheduleViolation::Shape {
            got: schedule.slot_count,
            want: table.slot_count(),
        });
    }
    let mut sat_use = vec![0u32; table.satellite_count()];
    let mut sta_use = vec![0u32; table.station_count()];
    for t in 0..schedule.slot_count {
        let links = schedule.slot(t);
        for (i, &(s, g)) in links.iter().enumerate() {
            if table.get(s as usize, g as usize, t).is_none() {
                return Err(ScheduleViolation::UnknownLink {
                    slot: t,
                    satellite: s,
                    station: g,
                });
            }
            if links[..i].contains(&(s, g)) {
                return Err(ScheduleViolation::Duplicate {
                    slot: t,
                    satellite: s,
                    station: g,
                });
            }
            sat_use[s as usize] += 1;
            sta_use[g as usize] += 1;
        }
        for &(s, g) in links {
            let cap = table.satellite_capacity()[s as usize];
            if sat_use[s as usize] > cap {
                return Err(ScheduleViolation::Transmitters {
                    slot: t,
                    satellite: s,
                    count: sat_use[s as usize],
                    capacity: cap,
                });
            }
            let cap = table.station_capacity()[g as usize];
            if sta_use[g as usize] > cap {
                return Err(ScheduleViolation::Receivers {
                    slot: t,
                    station: g,
                    count: sta_use[g as usize],
                    capacity: cap,
                });
            }
        }
        for &(s, g) in links {
            sat_use[s as usize] = 0;
            sta_use[g as usize] = 0;
        }
    }
    Ok(())
}

/// Integer key-pool sizes `|K_{s,g}|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyPools {
    satellite_ids: Vec<u32>,
    station_ids: Vec<u32>,
    bits: Vec<u64>,
}

impl KeyPools {
    pub fn zeros(satellite_ids: Vec<u32>, station_ids: Vec<u32>) -> Self {
        let bits = vec![0; satellite_ids.len() * station_ids.len()];
        Self {
            satellite_ids,
            station_ids,
            bits,
        }
    }

    /// `rows[s][g]`.
    pub fn from_matrix(satellite_ids: Vec<u32>, station_ids: Vec<u32>, rows: &[Vec<u64>]) -> Self {
        assert_eq!(rows.len(), satellite_ids.len());
        assert!(rows.iter().all(|r| r.len() == station_ids.len()));
        Self {
            satellite_ids,
            station_ids,
            bits: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn satellite_ids(&self) -> &[u32] {
        &self.satellite_ids
    }
    pub fn station_ids(&self) -> &[u32] {
        &self.station_ids
    }
    pub fn satellite_count(&self) -> usize {
        self.satellite_ids.len()
    }
    pub fn station_count(&self) -> usize {
        self.station_ids.len()
    }

    #[inline]
    pub fn get(&self, satellite: usize, station: usize) -> u64 {
        self.bits[satellite * self.station_ids.len() + station]
    }

    pub fn set(&mut self, satellite: usize, station: usize, bits: u64) {
        let g = self.station_ids.len();
        self.bits[satellite * g + station] = bits;
    }

    pub fn total(&self) -> u128 {
        self.bits.iter().map(|&b| u128::from(b)).sum()
    }

    /// Sum over satellites for one station.
    pub fn station_total(&self, station: usize) -> u128 {
        (0..self.satellite_count()).map(|s| u128::from(self.get(s, station))).sum()
    }

    /// CSV `satellite_id,station_id,bits`, nonzero pools only.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "satellite_id,station_id,bits")?;
        for s in 0..self.satellite_count() {
            for g in 0..self.station_count() {
                let b = self.get(s, g);
                if b > 0 {
                    writeln!(w, "{},{},{b}", self.satellite_ids[s], self.station_ids[g])?;
                }
            }
        }
        w.flush()
    }
}

/// Real-valued pool sums, before flooring.
pub(crate) fn pool_sums<T: Real>(schedule: &Schedule, table: &ChannelTable<T>) -> Vec<f64> {
    let g_count = table.station_count();
    let mut sums = vec![0.0f64; table.satellite_count() * g_count];
    for (t, s, g) in schedule.iter() {
        let row = table
            .get(s as usize, g as usize, t)
            .expect("schedule link is a table row");
        sums[s as usize * g_count + g as usize] += row.key_bits.to_f64_lossy();
    }
    sums
}

/// `|K_{s,g}| = floor(sum of served key bits)`; accumulation is in `f64`
/// whatever the table precision, and the floor is taken once at the end.
pub fn accumulate_pools<T: Real>(schedule: &Schedule, table: &ChannelTable<T>) -> KeyPools {
    let sums = pool_sums(schedule, table);
    KeyPools {
        satellite_ids: table.satellite_ids().to_vec(),
        station_ids: table.station_ids().to_vec(),
        bits: sums.into_iter().map(|x| x.floor() as u64).collect(),
    }
}

/// Which heuristic produced a [`MinRateProfile`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateSource {
    RoundRobin,
    Greedy,
    Given,
}

/// Normalized minimum rates `r_{s,g}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MinRateProfile<T = f64> {
    pub source: RateSource,
    station_count: usize,
    rates: Vec<T>,
}

impl<T: Real> MinRateProfile<T> {
    pub fn zeros(satellite_count: usize, station_count: usize) -> Self {
        Self {
            source: RateSource::Given,
            station_count,
            rates: vec![T::zero(); satellite_count * station_count],
        }
    }

    /// `rows[s][g]`, already normalized.
    pub fn from_matrix(rows: &[Vec<T>]) -> Self {
        let station_count = rows.first().map_or(0, Vec::len);
        Self {
            source: RateSource::Given,
            station_count,
            rates: rows.iter().flatten().copied().collect(),
        }
    }

    #[inline]
    pub fn get(&self, satellite: usize, station: usize) -> T {
        self.rates[satellite * self.station_count + station]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.rates
    }
}

/// Key-bit normalizer: the largest per-slot key bits of the table, or 1 when
/// the table has no usable link.
pub fn normalizer<T: Real>(table: &ChannelTable<T>) -> T {
    let m = table.max_key_bits();
    if m > T::zero() {
        m
    } else {
        T::one()
    }
}

/// `r_{s,g} = |K_{s,g}| / |T_s|`, divided by the table normalizer.
pub fn derive_min_rates<T: Real>(pools: &KeyPools, table: &ChannelTable<T>, source: RateSource) -> MinRateProfile<T> {
    let active = table.active_slot_counts();
    let norm = normalizer(table).to_f64_lossy();
    let mut rates = Vec::with_capacity(pools.bits.len());
    for (s, &n) in active.iter().enumerate() {
        for g in 0..pools.station_count() {
            let r = if n == 0 {
                0.0
            } else {
                pools.get(s, g) as f64 / n as f64 / norm
            };
            rates.push(T::lit(r));
        }
    }
    MinRateProfile {
        source,
        station_count: pools.station_count(),
        rates,
    }
}


#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    #[test]
    fn pools_floor_once() {
        let t = table(1, 2, 3, &[(0, 0, 0, 10.5), (0, 0, 1, 10.5), (0, 1, 2, 123.7)]);
        let sched = Schedule::from_slots(&t, vec![vec![(0, 0)], vec![(0, 0)], vec![(0, 1)]]);
        let pools = accumulate_pools(&sched, &t);
        assert_eq!(pools.get(0, 0), 21);
        assert_eq!(pools.get(0, 1), 123);
        let empty = accumulate_pools(&Schedule::empty(&t), &t);
        assert_eq!(empty.total(), 0);
    }

    #[test]
    fn validator_catches_violations() {
        let t = full(2, 2, 1, |_, _, _| 1.0);
        let ok = Schedule::from_slots(&t, vec![vec![(0, 0), (1, 1)]]);
        assert!(validate_schedule(&ok, &t).is_ok());
        let two_tx = Schedule::from_slots(&t, vec![vec![(0, 0), (0, 1)]]);
        assert!(matches!(validate_schedule(&two_tx, &t), Err(ScheduleViolation::Transmitters { .. })));
        let two_rx = Schedule::from_slots(&t, vec![vec![(0, 0), (1, 0)]]);
        assert!(matches!(validate_schedule(&two_rx, &t), Err(ScheduleViolation::Receivers { .. })));
        let t2 = table(2, 2, 1, &[(0, 0, 0, 1.0)]);
        let unknown = Schedule::from_slots(&t2, vec![vec![(1, 1)]]);
        assert!(matches!(validate_schedule(&unknown, &t2), Err(ScheduleViolation::UnknownLink { .. })));
    }

    #[test]
    fn min_rates_divide_by_active_slots() {
        let mut rows: Vec<_> = (0..100).map(|t| (0, 0, t, 20.0)).collect();
        rows.push((0, 1, 5, 40.0));
        let t = table(2, 2, 100, &rows);
        let pools = KeyPools::from_matrix(vec![0, 1], vec![0, 1], &[vec![1000, 0], vec![0, 0]]);
        let r = derive_min_rates(&pools, &t, RateSource::RoundRobin);
        assert!((r.get(0, 0) - 10.0 / 40.0).abs() < 1e-12);
        assert_eq!(r.get(1, 0), 0.0);
        assert_eq!(r.get(1, 1), 0.0);
    }
}
