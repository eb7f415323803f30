//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout. With
//! `SATQKD_ACCEPT_STRICT=1` the process exits nonzero if any criterion fails.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use satqkd::alloc::{
    baseline::table_possible_pairs, iterate_phase2, solve_baseline, solve_phase2_maxmin, BaselineObjective, Budget,
    PairAllocation, PairSet, SolveStatus,
};
use satqkd::assign::{solve_assignment, AssignError, Sense, WeightMatrix};
use satqkd::channel::{atmospheric_transmissivity, build_channel_table, key_rate, ChannelEstimate, ChannelTable};
use satqkd::cli::{generate_synthetic, BitsDistribution, Shape};
use satqkd::metrics::{choice_histograms, summarize};
use satqkd::orbit::build_visibility;
use satqkd::scenario::{load_scenario, Scenario, TimeGrid};
use satqkd::sched::{
    accumulate_pools, derive_min_rates, normalizer, run_greedy, run_opportunistic, run_rr, KeyPools,
    OpportunisticConfig, RateSource, Schedule,
};
use satqkd::weather::{apply_filter, CloudField, CloudTable};

const LSAP_CASES: usize = 1200;
const LSAP_MAX_DIM: usize = 7;
const LSAP_TIME_LIMIT: Duration = Duration::from_secs(5);
const PHASE2_CASES: usize = 250;
const BASELINE_CASES: u64 = 60;
const MPG_SEEDS: u64 = 10;
const MPG_SLACK: f64 = 0.02;
const UPLIFT_FRACTION: f64 = 0.90;
const ENTROPY_ZERO: f64 = 0.1104;
const ENTROPY_ZERO_TOL: f64 = 0.0005;
const ATMOSPHERE_TOL: f64 = 1e-12;
const GLOBAL_MEAN_ACTIVE: f64 = 3537.0;
const GLOBAL_MEAN_TOL: f64 = 0.15;
const GLOBAL_MAX_SUPPORT: usize = 4;
const GLOBAL_TIME_LIMIT: Duration = Duration::from_secs(120);
const FILTER_THRESHOLD: f64 = 0.8;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn below(r: &mut ChaCha8Rng, n: u64) -> u64 {
    r.next_u64() % n
}

fn unit(r: &mut ChaCha8Rng) -> f64 {
    (r.next_u64() >> 11) as f64 / 9007199254740992.0
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

// 1 ------------------------------------------------------------------------

fn brute_assignment(w: &WeightMatrix<i64>, sense: Sense) -> Option<i64> {
    fn go(w: &WeightMatrix<i64>, r: usize, used: &mut Vec<bool>, acc: i64, sense: Sense, best: &mut Option<i64>) {
        if r == w.rows() {
            let better = match (sense, *best) {
                (_, None) => true,
                (Sense::Maximize, Some(b)) => acc > b,
                (Sense::Minimize, Some(b)) => acc < b,
            };
            if better {
                *best = Some(acc);
            }
            return;
        }
        for c in 0..w.cols() {
            if used[c] {
                continue;
            }
            if let Some(x) = w.get(r, c) {
                used[c] = true;
                go(w, r + 1, used, acc + x, sense, best);
                used[c] = false;
            }
        }
    }
    let mut best = None;
    go(w, 0, &mut vec![false; w.cols()], 0, sense, &mut best);
    best
}

fn assignment_exactness() -> Verdict {
    let start = Instant::now();
    let mut r = rng(11);
    let mut mismatches = 0;
    for case in 0..LSAP_CASES {
        let rows = 1 + below(&mut r, LSAP_MAX_DIM as u64) as usize;
        let cols = rows + below(&mut r, (LSAP_MAX_DIM - rows + 1) as u64) as usize;
        let holes = case % 3 == 0;
        let range = if case % 2 == 0 { 10 } else { 1000 };
        let m: Vec<Vec<Option<i64>>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| {
                        let x = below(&mut r, range) as i64 - (range as i64) / 4;
                        (!holes || below(&mut r, 4) > 0).then_some(x)
                    })
                    .collect()
            })
            .collect();
        let w = WeightMatrix::from_rows(m);
        let sense = if case % 4 < 2 { Sense::Maximize } else { Sense::Minimize };
        let want = brute_assignment(&w, sense);
        let ok = match solve_assignment(&w, sense) {
            Ok(a) => {
                let mut seen = HashSet::new();
                let valid = a.row_to_col.iter().enumerate().all(|(row, &c)| w.get(row, c).is_some() && seen.insert(c));
                valid && Some(a.total) == want
            }
            Err(AssignError::Infeasible | AssignError::EmptyRow { .. }) => want.is_none(),
            Err(_) => false,
        };
        if !ok {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        mismatches == 0 && elapsed < LSAP_TIME_LIMIT,
        format!("{LSAP_CASES} matrices up to {LSAP_MAX_DIM}x{LSAP_MAX_DIM}, {mismatches} mismatches, {elapsed:.2?}"),
    )
}

// 2 ------------------------------------------------------------------------

/// Can every pair reach `k`? Exhaustive search over integer splits.
fn feasible(pools: &[u64], g: usize, pairs: &[(usize, usize)], k: u64) -> bool {
    fn go(
        left: &mut Vec<u64>,
        g: usize,
        pairs: &[(usize, usize)],
        u: usize,
        s: usize,
        need: u64,
        k: u64,
        dead: &mut HashSet<(usize, usize, u64, Vec<u64>)>,
    ) -> bool {
        let sats = left.len() / g;
        if need == 0 {
            return u + 1 == pairs.len() || go(left, g, pairs, u + 1, 0, k, k, dead);
        }
        if s == sats {
            return false;
        }
        let key = (u, s, need, left.clone());
        if dead.contains(&key) {
            return false;
        }
        let (a, b) = pairs[u];
        let cap = left[s * g + a].min(left[s * g + b]).min(need);
        for take in (0..=cap).rev() {
            left[s * g + a] -= take;
            left[s * g + b] -= take;
            let ok = go(left, g, pairs, u, s + 1, need - take, k, dead);
            left[s * g + a] += take;
            left[s * g + b] += take;
            if ok {
                return true;
            }
        }
        dead.insert(key);
        false
    }
    if pairs.is_empty() || k == 0 {
        return true;
    }
    go(&mut pools.to_vec(), g, pairs, 0, 0, k, k, &mut HashSet::new())
}

fn exhaustive_maxmin(pools: &[u64], g: usize) -> u64 {
    let pairs = PairSet::all(g);
    let mut k = 0;
    while feasible(pools, g, pairs.pairs(), k + 1) {
        k += 1;
    }
    k
}

fn phase2_exactness() -> Verdict {
    let mut r = rng(22);
    let mut mismatches = 0;
    let mut nontrivial = 0;
    for _ in 0..PHASE2_CASES {
        let s = 1 + below(&mut r, 3) as usize;
        let g = 2 + below(&mut r, 3) as usize;
        let rows: Vec<Vec<u64>> = (0..s).map(|_| (0..g).map(|_| below(&mut r, 13)).collect()).collect();
        let pools = KeyPools::from_matrix((0..s as u32).collect(), (0..g as u32).collect(), &rows);
        let flat: Vec<u64> = rows.iter().flatten().copied().collect();
        let want = exhaustive_maxmin(&flat, g);
        nontrivial += usize::from(want > 0);
        let out = solve_phase2_maxmin(&pools, &PairSet::all(g), &Budget::default()).expect("solver runs");
        let ok = out.status == SolveStatus::Optimal
            && out.min_total == want
            && out.allocation.validate(&pools).is_ok()
            && out.allocation.pair_totals().into_iter().min() == Some(want);
        if !ok {
            mismatches += 1;
        }
    }
    verdict(
        mismatches == 0,
        format!("{PHASE2_CASES} instances (|S|<=3, |G|<=4, pools<=12, {nontrivial} with positive optimum), {mismatches} mismatches"),
    )
}

// 3 ------------------------------------------------------------------------

struct Keys {
    name: &'static str,
    min: u64,
    total: u64,
}

fn keys_of(name: &'static str, allocation: &PairAllocation, excluded: &PairSet) -> Keys {
    let r = summarize(name, allocation, excluded);
    Keys {
        name,
        min: r.min_key_bits,
        total: r.total_key_bits,
    }
}

fn excluded_pairs(table: &ChannelTable<f64>) -> PairSet {
    let possible = table_possible_pairs(table);
    let all = PairSet::all(table.station_count());
    PairSet::from_pairs(
        all.station_count(),
        all.pairs().iter().copied().filter(|&(a, b)| possible.index_of(a, b).is_none()),
    )
}

/// Heuristic schedulers through Phase 2, as the CLI runs them.
fn heuristic_keys(table: &ChannelTable<f64>, budget: &Budget) -> Vec<Keys> {
    let excluded = excluded_pairs(table);
    let cfg = OpportunisticConfig::default();
    let rr = run_rr(table);
    let greedy = run_greedy(table);
    let rr_pools = accumulate_pools(&rr, table);
    let greedy_pools = accumulate_pools(&greedy, table);
    let op_rr = run_opportunistic(table, &derive_min_rates(&rr_pools, table, RateSource::RoundRobin), &cfg).schedule;
    let op_greedy = run_opportunistic(table, &derive_min_rates(&greedy_pools, table, RateSource::Greedy), &cfg).schedule;
    let mut out = Vec::new();
    for (name, s) in [("rr", rr), ("greedy", greedy), ("op-rr", op_rr), ("op-greedy", op_greedy)] {
        let pools = accumulate_pools(&s, table);
        let it = iterate_phase2(&pools, budget).expect("phase 2 runs");
        out.push(keys_of(name, &it.allocation, &excluded));
    }
    out
}

fn baseline_dominance() -> Verdict {
    let budget = Budget {
        max_nodes: 200_000,
        ..Budget::default()
    };
    let mut violations = Vec::new();
    let mut not_optimal = 0;
    let mut strict = 0;
    for seed in 1..=BASELINE_CASES {
        let shape = Shape {
            satellites: 1 + (seed % 2) as usize,
            stations: 3,
            slots: 6 + (seed % 3) as u32,
        };
        let table = generate_synthetic(shape, seed, BitsDistribution::Uniform { lo: 0.0, hi: 100.0 }, 0.6);
        let heuristics = heuristic_keys(&table, &budget);
        let excluded = excluded_pairs(&table);
        let maxmin = solve_baseline(&table, BaselineObjective::MaxMin, &budget, &[]).expect("baseline runs");
        let maxsum = solve_baseline(&table, BaselineObjective::MaxSum, &budget, &[]).expect("baseline runs");
        not_optimal += usize::from(maxmin.status != SolveStatus::Optimal) + usize::from(maxsum.status != SolveStatus::Optimal);
        let mm = keys_of("maxmin", &maxmin.allocation, &excluded);
        let ms = keys_of("maxsum", &maxsum.allocation, &excluded);
        for h in &heuristics {
            if mm.min < h.min {
                violations.push(format!("seed {seed}: maxmin min {} < {} min {}", mm.min, h.name, h.min));
            }
            if ms.total < h.total {
                violations.push(format!("seed {seed}: maxsum total {} < {} total {}", ms.total, h.name, h.total));
            }
        }
        strict += usize::from(heuristics.iter().any(|h| mm.min > h.min));
    }
    verdict(
        violations.is_empty(),
        format!(
            "{BASELINE_CASES} toy tables, {} violations, {not_optimal} solves not proven optimal, max-min strictly better on {strict}{}",
            violations.len(),
            violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    )
}

// 4 ------------------------------------------------------------------------

/// Stationary channel: each link is visible with a fixed probability and
/// draws its key bits around a fixed mean.
fn stationary_table(seed: u64, sats: usize, stations: usize, slots: u32) -> ChannelTable<f64> {
    let mut r = rng(seed);
    let visible: Vec<f64> = (0..sats * stations).map(|_| 0.3 + 0.6 * unit(&mut r)).collect();
    let mean: Vec<f64> = (0..sats * stations).map(|_| 20.0 + 80.0 * unit(&mut r)).collect();
    let mut rows = Vec::new();
    for t in 0..slots {
        for s in 0..sats {
            for g in 0..stations {
                let k = s * stations + g;
                if unit(&mut r) < visible[k] {
                    let bits = mean[k] * (0.5 + unit(&mut r));
                    rows.push(row(s as u32, g as u32, t, bits));
                }
            }
        }
    }
    ChannelTable::new(
        (0..sats as u32).collect(),
        (0..stations as u32).collect(),
        vec![1; sats],
        vec![1; stations],
        slots,
        rows,
    )
    .expect("valid table")
}

fn row(satellite: u32, station: u32, slot: u32, key_bits: f64) -> ChannelEstimate<f64> {
    ChannelEstimate {
        satellite,
        station,
        slot,
        transmissivity: 0.0,
        photon_successes: key_bits,
        qber: 0.0,
        key_rate: 1.0,
        cloud_factor: 0.0,
        key_bits,
    }
}

/// `pool / |T_s| / normalizer` of a schedule.
fn empirical_rates(schedule: &Schedule, table: &ChannelTable<f64>) -> Vec<Vec<f64>> {
    let pools = accumulate_pools(schedule, table);
    let norm = normalizer(table);
    let active = table.active_slot_counts();
    (0..table.satellite_count())
        .map(|s| {
            (0..table.station_count())
                .map(|g| if active[s] == 0 { 0.0 } else { pools.get(s, g) as f64 / active[s] as f64 / norm })
                .collect()
        })
        .collect()
}

fn mpg_guarantee() -> Verdict {
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    let mut converged = 0;
    for seed in 0..MPG_SEEDS {
        let table = stationary_table(100 + seed, 3, 4, 3000);
        let target = derive_min_rates(&accumulate_pools(&run_rr(&table), &table), &table, RateSource::RoundRobin);
        let out = run_opportunistic(&table, &target, &OpportunisticConfig::default());
        converged += usize::from(out.converged);
        let got = empirical_rates(&out.schedule, &table);
        for (s, row) in got.iter().enumerate() {
            for (g, &rate) in row.iter().enumerate() {
                let r = target.get(s, g);
                if r > 0.0 {
                    checked += 1;
                    worst = worst.min(rate - r);
                }
            }
        }
    }
    verdict(
        worst >= -MPG_SLACK,
        format!("{MPG_SEEDS} seeds, 3x4 links, {checked} positive targets, worst rate - target {worst:.4} (allowed -{MPG_SLACK}), {converged} runs converged"),
    )
}

// 5 ------------------------------------------------------------------------

/// Pass-structured synthetic day: each satellite crosses a cluster of nearby
/// stations a few times; neighbours see it at once with shifted, scaled
/// elevation-like profiles.
fn pass_table(seed: u64, sats: usize, stations: usize, slots: u32) -> ChannelTable<f64> {
    let mut r = rng(seed);
    let mut bits = vec![0.0f64; sats * stations * slots as usize];
    for s in 0..sats {
        let passes = 3 + below(&mut r, 3);
        for _ in 0..passes {
            let start = below(&mut r, u64::from(slots)) as i64;
            let len = 200 + below(&mut r, 300) as i64;
            for g in 0..stations {
                if unit(&mut r) < 0.25 {
                    continue;
                }
                let shift = below(&mut r, 120) as i64 - 60;
                let d = (len as f64 * (0.5 + 0.5 * unit(&mut r))) as i64;
                let peak = 200.0 + 800.0 * unit(&mut r);
                for k in 0..d {
                    let t = start + shift + k;
                    if t < 0 || t >= i64::from(slots) {
                        continue;
                    }
                    let x = (std::f64::consts::PI * k as f64 / d as f64).sin();
                    let i = (s * stations + g) * slots as usize + t as usize;
                    bits[i] = bits[i].max(peak * x * x);
                }
            }
        }
    }
    let mut rows = Vec::new();
    for s in 0..sats {
        for g in 0..stations {
            for t in 0..slots {
                let b = bits[(s * stations + g) * slots as usize + t as usize];
                if b > 1.0 {
                    rows.push(row(s as u32, g as u32, t, b));
                }
            }
        }
    }
    ChannelTable::new(
        (0..sats as u32).collect(),
        (0..stations as u32).collect(),
        vec![1; sats],
        vec![1; stations],
        slots,
        rows,
    )
    .expect("valid table")
}

fn scenario_table(path: &Path, slots: u32) -> ChannelTable<f64> {
    let mut sc = load_scenario(path).expect("scenario loads");
    let g = &sc.time_grid;
    sc.time_grid = TimeGrid::new(g.epoch, g.slot_duration_s, slots);
    let vis = build_visibility::<f64>(&sc);
    build_channel_table(&sc, &vis, &CloudField::clear_sky(&sc))
}

fn opportunistic_uplift() -> Verdict {
    let mut cases: Vec<(String, ChannelTable<f64>)> = (0..3)
        .map(|seed| (format!("passes#{seed}"), pass_table(300 + seed, 12, 4, 6000)))
        .collect();
    cases.push(("regional 6h".into(), scenario_table(&repo().join("scenarios/regional/scenario.toml"), 21_600)));
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, table) in &cases {
        let rr = accumulate_pools(&run_rr(table), table);
        let target = derive_min_rates(&rr, table, RateSource::RoundRobin);
        let op = accumulate_pools(&run_opportunistic(table, &target, &OpportunisticConfig::default()).schedule, table);
        let mut links = 0;
        let mut up = 0;
        for s in 0..rr.satellite_count() {
            for g in 0..rr.station_count() {
                if rr.get(s, g) > 0 || op.get(s, g) > 0 {
                    links += 1;
                    up += usize::from(op.get(s, g) >= rr.get(s, g));
                }
            }
        }
        let frac = up as f64 / links.max(1) as f64;
        let ok = frac >= UPLIFT_FRACTION && op.total() > rr.total();
        pass &= ok;
        parts.push(format!(
            "{name}: {up}/{links} links op>=rr ({:.1}%), total ratio {:.3}",
            100.0 * frac,
            op.total() as f64 / rr.total().max(1) as f64
        ));
    }
    verdict(pass, parts.join("; "))
}

// 6 ------------------------------------------------------------------------

fn channel_math() -> Verdict {
    let (mut lo, mut hi) = (0.01f64, 0.3f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if key_rate(mid).expect("in domain") > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let bisected = 0.5 * (lo + hi);
    // Closed form: h(E) = 1/2, by Newton on the entropy written out here.
    let h = |e: f64| -e * e.log2() - (1.0 - e) * (1.0 - e).log2();
    let dh = |e: f64| ((1.0 - e) / e).log2();
    let mut e = 0.1;
    for _ in 0..50 {
        e -= (h(e) - 0.5) / dh(e);
    }
    let mut atm_err = 0.0f64;
    for z in [0.3f64, 0.5, 0.7, 0.8, 0.95] {
        atm_err = atm_err.max((atmospheric_transmissivity(z, 30.0).unwrap() - z * z).abs());
    }
    let pass = (bisected - ENTROPY_ZERO).abs() <= ENTROPY_ZERO_TOL && (bisected - e).abs() < 1e-9 && atm_err <= ATMOSPHERE_TOL;
    verdict(
        pass,
        format!("zero crossing {bisected:.6} (closed form {e:.6}, expected {ENTROPY_ZERO}±{ENTROPY_ZERO_TOL}), |eta(30°) - z²| max {atm_err:.1e}"),
    )
}

// 7 ------------------------------------------------------------------------

fn geometry_regression() -> Verdict {
    let sc: Scenario = load_scenario(repo().join("scenarios/global/scenario.toml")).expect("global scenario");
    let start = Instant::now();
    let vis = build_visibility::<f64>(&sc);
    let elapsed = start.elapsed();
    let mean = vis.mean_active_slots();
    let support = choice_histograms(&vis).satellite_view.max_support();
    let rel = (mean - GLOBAL_MEAN_ACTIVE) / GLOBAL_MEAN_ACTIVE;
    verdict(
        rel.abs() <= GLOBAL_MEAN_TOL && support >= GLOBAL_MAX_SUPPORT && elapsed <= GLOBAL_TIME_LIMIT,
        format!(
            "{} sats x {} stations, {} slots: mean |T_s| {mean:.1} ({:+.1}% vs {GLOBAL_MEAN_ACTIVE}), satellite-view support {support}, {elapsed:.2?}",
            sc.satellites.len(),
            sc.ground_stations.len(),
            sc.time_grid.slot_count,
            100.0 * rel
        ),
    )
}

// 8 ------------------------------------------------------------------------

fn filtering_semantics() -> Verdict {
    let sc = load_scenario(repo().join("scenarios/toy/scenario.toml")).expect("toy scenario");
    let mut text = String::from("station_id,date");
    for h in 0..24 {
        text += &format!(",h{h:02}");
    }
    text.push('\n');
    let date = sc.time_grid.epoch.date();
    let overcast = sc.ground_stations[0].id;
    for gs in &sc.ground_stations {
        let c = if gs.id == overcast { "1.0" } else { "0.2" };
        text += &format!("{},{date}{}\n", gs.id, format!(",{c}").repeat(24));
    }
    let clouds = CloudField::resolve(&CloudTable::parse(&text, Path::new("clouds.csv")).unwrap(), &sc).unwrap();
    let vis = build_visibility::<f64>(&sc);
    let table = build_channel_table(&sc, &vis, &clouds);
    let budget = Budget::default();
    let run = |t: &ChannelTable<f64>| {
        let pools = accumulate_pools(&run_rr(t), t);
        let it = iterate_phase2(&pools, &budget).unwrap();
        let excluded = excluded_pairs(t);
        (summarize("rr", &it.allocation, &excluded), run_rr(t))
    };
    let (filtered, schedule) = run(&apply_filter(&table, FILTER_THRESHOLD));
    let (unfiltered, _) = run(&table);
    let served = schedule.iter().filter(|&(_, _, g)| g == 0).count();
    let station_key: u64 = filtered.pairs.iter().filter(|p| p.station_a == overcast || p.station_b == overcast).map(|p| p.bits).sum();
    verdict(
        served == 0 && station_key == 0 && filtered.total_key_bits > unfiltered.total_key_bits,
        format!(
            "toy + overcast station {overcast}: {served} slots served, {station_key} pairwise bits; total filtered {} vs unfiltered {} ({:.2}x)",
            filtered.total_key_bits,
            unfiltered.total_key_bits,
            filtered.total_key_bits as f64 / unfiltered.total_key_bits.max(1) as f64
        ),
    )
}

// 9 ------------------------------------------------------------------------

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn cli_determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = repo().join("scenarios/toy/scenario.toml");
    let mut snaps = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_satqkd"))
            .args(["run", "--scenario"])
            .arg(&scenario)
            .args(["--schedulers", "rr,greedy,op-rr,op-greedy,maxmin,maxsum", "--export-lp", "--write-channels", "--out"])
            .arg(&out)
            .env_remove("SATQKD_LOG")
            .status()
            .unwrap();
        if !status.success() {
            return verdict(false, format!("run {name} exited with {status}"));
        }
        snaps.push(snapshot(&out));
    }
    let files = snaps[0].len();
    let bytes: usize = snaps[0].iter().map(|(_, b)| b.len()).sum();
    verdict(snaps[0] == snaps[1], format!("toy scenario, 6 schedulers: {files} files, {bytes} bytes compared"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("assignment exactness", assignment_exactness),
        ("phase-2 exactness", phase2_exactness),
        ("baseline dominance", baseline_dominance),
        ("minimum-rate guarantee", mpg_guarantee),
        ("opportunistic uplift", opportunistic_uplift),
        ("channel math", channel_math),
        ("geometry regression", geometry_regression),
        ("filtering semantics", filtering_semantics),
        ("end-to-end determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = f();
        failed += usize::from(!v.pass);
        println!("[{}] {}. {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var_os("SATQKD_ACCEPT_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
