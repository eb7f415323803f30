//! Round-robin: balance the number of slots each satellite spends on each
//! station.

use crate::assign::Sense;
use crate::channel::ChannelTable;
use crate::num::Real;

use super::slot::{solve_slot, SlotEdge};
use super::Schedule;

/// Links of a slot whose satellite and station see nothing else.
fn isolated<T: Real>(rows: &[crate::channel::ChannelEstimate<T>]) -> Vec<bool> {
    rows.iter()
        .map(|r| {
            rows.iter()
                .all(|o| (o.satellite == r.satellite) == (o.station == r.station))
        })
        .collect()
}

/// Two passes over the table. First every isolated link (its satellite sees
/// only that station and the station sees only that satellite) is served and
/// counted. Then the remaining links of each slot, in time order, are
/// assigned to minimize the sum of the service counters `C_{s,g}`, with the
/// counters updated after every slot.
pub fn run_rr<T: Real>(table: &ChannelTable<T>) -> Schedule {
    let g_count = table.station_count();
    let mut counters = vec![0i64; table.satellite_count() * g_count];
    let mut per_slot: Vec<Vec<(u32, u32)>> = vec![Vec::new(); table.slot_count() as usize];
    let mut rest: Vec<Vec<bool>> = Vec::with_capacity(per_slot.len());

    for t in 0..table.slot_count() {
        let rows = table.slot(t);
        let iso = isolated(rows);
        for (r, &alone) in rows.iter().zip(&iso) {
            if alone {
                per_slot[t as usize].push((r.satellite, r.station));
                counters[r.satellite as usize * g_count + r.station as usize] += 1;
            }
        }
        rest.push(iso);
    }

    let mut edges = Vec::new();
    let mut idx = Vec::new();
    for t in 0..table.slot_count() {
        let rows = table.slot(t);
        edges.clear();
        idx.clear();
        for (k, r) in rows.iter().enumerate() {
            if !rest[t as usize][k] {
                edges.push(SlotEdge {
                    satellite: r.satellite,
                    station: r.station,
                    weight: counters[r.satellite as usize * g_count + r.station as usize],
                });
                idx.push(k);
            }
        }
        if edges.is_empty() {
            continue;
        }
        for i in solve_slot(&edges, table.satellite_capacity(), table.station_capacity(), Sense::Minimize) {
            let r = &rows[idx[i]];
            per_slot[t as usize].push((r.satellite, r.station));
            counters[r.satellite as usize * g_count + r.station as usize] += 1;
        }
    }
    Schedule::from_slots(table, per_slot)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::validate_schedule;
    use super::*;

    fn counts(s: &Schedule, sats: usize, stations: usize) -> Vec<Vec<u32>> {
        let mut c = vec![vec![0; stations]; sats];
        for (_, a, b) in s.iter() {
            c[a as usize][b as usize] += 1;
        }
        c
    }

    #[test]
    fn one_satellite_alternates() {
        let t = full(1, 2, 10, |_, _, _| 1.0);
        let s = run_rr(&t);
        assert_eq!(counts(&s, 1, 2), vec![vec![5, 5]]);
        assert_eq!(s.slot(0), &[(0, 0)]);
        assert_eq!(s.slot(1), &[(0, 1)]);
        validate_schedule(&s, &t).unwrap();
    }

    #[test]
    fn symmetric_two_by_two_serves_everyone() {
        let t = full(2, 2, 8, |_, _, _| 1.0);
        let s = run_rr(&t);
        for slot in 0..8 {
            assert_eq!(s.slot(slot).len(), 2);
        }
        assert_eq!(counts(&s, 2, 2), vec![vec![4, 4], vec![4, 4]]);
    }

    #[test]
    fn isolated_links_counted_first() {
        // Slot 2 holds the only isolated link (0, 0). Counting it first makes
        // the contested slots 0 and 1 pick station 1 once before returning to 0.
        let rows = [(0, 0, 0, 1.0), (0, 1, 0, 1.0), (0, 0, 1, 1.0), (0, 1, 1, 1.0), (0, 0, 2, 1.0)];
        let t = table(1, 2, 3, &rows);
        let s = run_rr(&t);
        assert_eq!(s.slot(2), &[(0, 0)]);
        assert_eq!(s.slot(0), &[(0, 1)]);
        assert_eq!(counts(&s, 1, 2), vec![vec![2, 1]]);
    }
}
