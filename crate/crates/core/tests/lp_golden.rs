//! LP export of a toy baseline program.

use satqkd::alloc::baseline::{build_baseline_model, BaselineObjective};
use satqkd::alloc::lp_format::{parse_lp, to_lp_string};
use satqkd::alloc::milp::{solve, Budget, SolveStatus};
use satqkd::channel::{ChannelEstimate, ChannelTable};

/// One satellite, three stations, two slots.
fn toy() -> ChannelTable<f64> {
    let row = |station, slot, key_bits| ChannelEstimate {
        satellite: 0,
        station,
        slot,
        transmissivity: 0.0,
        photon_successes: key_bits,
        qber: 0.0,
        key_rate: 1.0,
        cloud_factor: 0.0,
        key_bits,
    };
    let rows = vec![row(0, 0, 6.5), row(1, 0, 4.0), row(1, 1, 3.0), row(2, 1, 5.0)];
    ChannelTable::new(vec![9], vec![1, 2, 3], vec![1], vec![1; 3], 2, rows).unwrap()
}

#[test]
fn maxmin_lp_golden() {
    let bm = build_baseline_model(&toy(), BaselineObjective::MaxMin);
    assert_eq!(to_lp_string(&bm.model), include_str!("data/toy_maxmin.lp"));
}

#[test]
fn lp_round_trip_and_solve() {
    for objective in [BaselineObjective::MaxMin, BaselineObjective::MaxSum] {
        let bm = build_baseline_model(&toy(), objective);
        let text = to_lp_string(&bm.model);
        let parsed = parse_lp(&text).unwrap();
        assert_eq!(to_lp_string(&parsed), text);
        let a = solve(&bm.model, &Budget::default(), None, None).unwrap();
        let b = solve(&parsed, &Budget::default(), None, None).unwrap();
        assert_eq!(a.status, SolveStatus::Optimal);
        assert_eq!(a.objective, b.objective);
    }
}

#[test]
fn maxmin_toy_optimum() {
    // Slot 0 serves station 1 or 2, slot 1 station 2 or 3. Serving 1 then 3
    // leaves pools 6 and 5: pair (1,3) gets 5 and the others nothing, so the
    // min over all three pairs is 0 and no schedule does better.
    let bm = build_baseline_model(&toy(), BaselineObjective::MaxMin);
    let sol = solve(&bm.model, &Budget::default(), None, None).unwrap();
    assert_eq!(sol.objective.round(), 0.0);
    // Max-sum: the same schedule, pair (1,3) takes 5.
    let bm = build_baseline_model(&toy(), BaselineObjective::MaxSum);
    let sol = solve(&bm.model, &Budget::default(), None, None).unwrap();
    assert_eq!(sol.objective.round(), 5.0);
}
