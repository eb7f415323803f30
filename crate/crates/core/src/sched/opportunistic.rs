//! Opportunistic scheduling with minimum-rate multipliers.
//!
//! Per slot the links are weighted `w = (1 + λ_{s,g}) U` with `U` the
//! normalized key bits, and a maximum-weight assignment is served. After the
//! slot, for every satellite present in it and every station `g`:
//! `λ ← max(0, λ − δ (U·served − r_{s,g}))`, where `U·served` is zero for
//! links not served (or not visible). Passes over the day repeat until the
//! multipliers settle; the last pass is the schedule.

use crate::assign::Sense;
use crate::channel::ChannelTable;
use crate::num::Real;

use super::slot::{solve_slot, SlotEdge};
use super::{normalizer, MinRateProfile, Schedule};

#[derive(Clone, Debug, PartialEq)]
pub struct OpportunisticConfig {
    pub step_size: f64,
    pub max_passes: u32,
    pub convergence_tol: f64,
}

impl Default for OpportunisticConfig {
    fn default() -> Self {
        Self {
            step_size: 0.01,
            max_passes: 50,
            convergence_tol: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OpportunisticOutcome<T = f64> {
    pub schedule: Schedule,
    pub passes: u32,
    pub converged: bool,
    /// Largest multiplier change over the last pass.
    pub final_change: T,
    /// `λ_{s,g}` after the last pass, row-major by satellite.
    pub multipliers: Vec<T>,
    pub normalizer: T,
}

pub fn run_opportunistic<T: Real>(
    table: &ChannelTable<T>,
    targets: &MinRateProfile<T>,
    config: &OpportunisticConfig,
) -> OpportunisticOutcome<T> {
    let g_count = table.station_count();
    let norm = normalizer(table);
    let delta = T::lit(config.step_size);
    let slots: Vec<u32> = table.nonempty_slots().collect();
    let mut lambda = vec![T::zero(); table.satellite_count() * g_count];
    let mut start = lambda.clone();
    let mut per_slot: Vec<Vec<(u32, u32)>> = vec![Vec::new(); table.slot_count() as usize];
    let mut edges: Vec<SlotEdge<T>> = Vec::new();
    let mut gain: Vec<T> = vec![T::zero(); g_count];
    let mut passes = 0;
    let mut converged = false;
    let mut change = T::zero();

    while passes < config.max_passes.max(1) {
        passes += 1;
        start.copy_from_slice(&lambda);
        for &t in &slots {
            let rows = table.slot(t);
            edges.clear();
            edges.extend(rows.iter().map(|r| {
                let u = r.key_bits / norm;
                let l = lambda[r.satellite as usize * g_count + r.station as usize];
                SlotEdge {
                    satellite: r.satellite,
                    station: r.station,
                    weight: (T::one() + l) * u,
                }
            }));
            let chosen = solve_slot(&edges, table.satellite_capacity(), table.station_capacity(), Sense::Maximize);
            let served = &mut per_slot[t as usize];
            served.clear();
            served.extend(chosen.iter().map(|&i| (rows[i].satellite, rows[i].station)));

            // Rows are grouped by satellite; update each present satellite once.
            let mut k = 0;
            while k < rows.len() {
                let s = rows[k].satellite as usize;
                gain.iter_mut().for_each(|x| *x = T::zero());
                while k < rows.len() && rows[k].satellite as usize == s {
                    k += 1;
                }
                for &i in &chosen {
                    if rows[i].satellite as usize == s {
                        gain[rows[i].station as usize] = rows[i].key_bits / norm;
                    }
                }
                let base = s * g_count;
                for g in 0..g_count {
                    let l = &mut lambda[base + g];
                    *l = (*l - delta * (gain[g] - targets.get(s, g))).max(T::zero());
                }
            }
        }
        change = lambda
            .iter()
            .zip(&start)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max);
        if change < T::lit(config.convergence_tol) {
            converged = true;
            break;
        }
    }

    OpportunisticOutcome {
        schedule: Schedule::from_slots(table, per_slot),
        passes,
        converged,
        final_change: change,
        multipliers: lambda,
        normalizer: norm,
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::{accumulate_pools, validate_schedule};
    use super::*;

    #[test]
    fn zero_targets_give_plain_max_weight() {
        let t = full(2, 3, 20, |s, g, t| f64::from((s * 7 + g * 3 + t * 5) % 11 + 1));
        let out = run_opportunistic(&t, &MinRateProfile::zeros(2, 3), &OpportunisticConfig::default());
        assert!(out.multipliers.iter().all(|&l| l == 0.0));
        assert!(out.converged);
        for slot in 0..20 {
            let rows = t.slot(slot);
            let edges: Vec<_> = rows
                .iter()
                .map(|r| SlotEdge {
                    satellite: r.satellite,
                    station: r.station,
                    weight: r.key_bits,
                })
                .collect();
            let want: Vec<_> = solve_slot(&edges, &[1, 1], &[1, 1, 1], Sense::Maximize)
                .into_iter()
                .map(|i| (rows[i].satellite, rows[i].station))
                .collect();
            assert_eq!(out.schedule.slot(slot), want.as_slice());
        }
    }

    #[test]
    fn distinct_best_stations_match_argmax() {
        let t = full(2, 2, 5, |s, g, _| if s == g { 9.0 } else { 2.0 });
        let out = run_opportunistic(&t, &MinRateProfile::zeros(2, 2), &OpportunisticConfig::default());
        for slot in 0..5 {
            assert_eq!(out.schedule.slot(slot), &[(0, 0), (1, 1)]);
        }
    }

    #[test]
    fn single_satellite_is_weighted_argmax() {
        let t = full(1, 3, 200, |_, g, t| f64::from((g + 1) * 10 + (t * 13 + g * 7) % 9));
        let r = [0.05, 0.2, 0.1];
        let targets = MinRateProfile::from_matrix(&[r.to_vec()]);
        let cfg = OpportunisticConfig {
            max_passes: 1,
            ..Default::default()
        };
        let out = run_opportunistic(&t, &targets, &cfg);
        validate_schedule(&out.schedule, &t).unwrap();
        // Independent replay: argmax_g (1 + λ_g) U_g, lowest g on ties.
        let norm = out.normalizer;
        let mut lambda = [0.0f64; 3];
        for slot in 0..200 {
            let u: Vec<f64> = (0..3).map(|g| t.get(0, g, slot).unwrap().key_bits / norm).collect();
            let mut best = 0;
            for g in 1..3 {
                if (1.0 + lambda[g]) * u[g] > (1.0 + lambda[best]) * u[best] {
                    best = g;
                }
            }
            assert_eq!(out.schedule.slot(slot), &[(0, best as u32)], "slot {slot}");
            for g in 0..3 {
                let served = if g == best { u[g] } else { 0.0 };
                lambda[g] = (lambda[g] - 0.01 * (served - r[g])).max(0.0);
            }
        }
        assert_eq!(out.multipliers, lambda.to_vec());
    }

    #[test]
    fn target_lifts_weak_station() {
        // Station 1 always has a quarter of station 0's bits.
        let t = full(1, 2, 400, |_, g, t| if g == 0 { 100.0 + f64::from(t % 3) } else { 25.0 });
        let none = run_opportunistic(&t, &MinRateProfile::zeros(1, 2), &OpportunisticConfig::default());
        assert_eq!(accumulate_pools(&none.schedule, &t).get(0, 1), 0);
        // Ask for 0.05 (normalized) per slot at station 1.
        let targets = MinRateProfile::from_matrix(&[vec![0.0, 0.05]]);
        let cfg = OpportunisticConfig {
            max_passes: 200,
            ..Default::default()
        };
        let out = run_opportunistic(&t, &targets, &cfg);
        let pools = accumulate_pools(&out.schedule, &t);
        let rate = pools.get(0, 1) as f64 / 400.0 / out.normalizer;
        assert!(rate >= 0.05 - 0.02, "rate {rate}");
        assert!(out.multipliers.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn f32_tables_run() {
        let t = full(2, 2, 30, |s, g, t| f64::from(1 + (s + 2 * g + t) % 5)).cast::<f32>();
        let targets = MinRateProfile::<f32>::zeros(2, 2);
        let out = run_opportunistic(&t, &targets, &OpportunisticConfig::default());
        validate_schedule(&out.schedule, &t).unwrap();
    }
}
