//! Greedy: every station asks for its best satellite of the slot; a contested
//! satellite goes to the station it has shared fewer key bits with.

use std::cmp::Ordering;

use crate::channel::ChannelTable;
use crate::num::Real;

use super::Schedule;

/// Per slot, stations propose to satellites in decreasing key-bit order
/// (lower satellite index on ties). A satellite keeps up to `M_s` proposals,
/// preferring the station with the smaller accumulated pool `K_{s,g}` and
/// then the lower station index; a displaced station moves on to its next
/// option, so no station idles while an acceptable satellite is free. Pools
/// grow by the served key bits after each slot.
pub fn run_greedy<T: Real>(table: &ChannelTable<T>) -> Schedule {
    let g_count = table.station_count();
    let mut pools = vec![0.0f64; table.satellite_count() * g_count];
    let mut per_slot: Vec<Vec<(u32, u32)>> = vec![Vec::new(); table.slot_count() as usize];

    for t in 0..table.slot_count() {
        let rows = table.slot(t);
        if rows.is_empty() {
            continue;
        }
        let mut stations: Vec<u32> = rows.iter().map(|r| r.station).collect();
        stations.sort_unstable();
        stations.dedup();
        // Preference lists: indices into `rows`.
        let prefs: Vec<Vec<usize>> = stations
            .iter()
            .map(|&g| {
                let mut p: Vec<usize> = (0..rows.len()).filter(|&k| rows[k].station == g).collect();
                p.sort_by(|&a, &b| {
                    rows[b]
                        .key_bits
                        .partial_cmp(&rows[a].key_bits)
                        .unwrap_or(Ordering::Equal)
                        .then(rows[a].satellite.cmp(&rows[b].satellite))
                });
                p
            })
            .collect();
        let mut next = vec![0usize; stations.len()];
        let mut held: Vec<usize> = vec![0; stations.len()];
        // Satellite index -> accepted row indices.
        let mut accepted: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
        let priority = |k: usize| {
            let r = &rows[k];
            (pools[r.satellite as usize * g_count + r.station as usize], r.station)
        };
        loop {
            let Some(gi) = (0..stations.len()).find(|&gi| {
                held[gi] < table.station_capacity()[stations[gi] as usize] as usize && next[gi] < prefs[gi].len()
            }) else {
                break;
            };
            let k = prefs[gi][next[gi]];
            next[gi] += 1;
            let sat = rows[k].satellite;
            let cap = table.satellite_capacity()[sat as usize] as usize;
            let list = accepted.entry(sat).or_default();
            list.push(k);
            held[gi] += 1;
            if list.len() > cap {
                // Evict the least preferred holder.
                let worst = (0..list.len())
                    .max_by(|&a, &b| {
                        let (pa, ga) = priority(list[a]);
                        let (pb, gb) = priority(list[b]);
                        pa.partial_cmp(&pb).unwrap_or(Ordering::Equal).then(ga.cmp(&gb))
                    })
                    .expect("non-empty");
                let out = list.swap_remove(worst);
                let og = stations.binary_search(&rows[out].station).expect("proposing station");
                held[og] -= 1;
            }
        }
        for list in accepted.values() {
            for &k in list {
                let r = &rows[k];
                per_slot[t as usize].push((r.satellite, r.station));
                pools[r.satellite as usize * g_count + r.station as usize] += r.key_bits.to_f64_lossy();
            }
        }
    }
    Schedule::from_slots(table, per_slot)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::validate_schedule;
    use super::*;

    #[test]
    fn distinct_best_satellites() {
        let t = full(2, 2, 1, |s, g, _| if s == g { 10.0 } else { 1.0 });
        let s = run_greedy(&t);
        assert_eq!(s.slot(0), &[(0, 0), (1, 1)]);
    }

    #[test]
    fn conflict_goes_to_smaller_pool() {
        // Slots 0-1 build pools: s0 has 100 bits with g0 and 10 with g1.
        let mut rows = vec![(0, 0, 0, 100.0), (0, 1, 1, 10.0)];
        // Slot 2: s0 is best for both stations; s1 is a weak fallback.
        rows.extend([(0, 0, 2, 50.0), (0, 1, 2, 50.0), (1, 0, 2, 1.0), (1, 1, 2, 1.0)]);
        let t = table(2, 2, 3, &rows);
        let s = run_greedy(&t);
        assert_eq!(s.slot(2), &[(0, 1), (1, 0)]);
        validate_schedule(&s, &t).unwrap();
    }

    #[test]
    fn equal_pools_favor_lower_station() {
        let t = table(1, 2, 1, &[(0, 0, 0, 5.0), (0, 1, 0, 5.0)]);
        assert_eq!(run_greedy(&t).slot(0), &[(0, 0)]);
        // Lower station proposes second but still wins the tie.
        let t = table(1, 2, 1, &[(0, 0, 0, 5.0), (0, 1, 0, 9.0)]);
        assert_eq!(run_greedy(&t).slot(0), &[(0, 0)]);
    }
}
