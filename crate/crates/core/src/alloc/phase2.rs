//! Combining link pools into pairwise keys.
//!
//! A satellite holding `K_{s,a}` and `K_{s,b}` can give pair `(a, b)` up to
//! `min` of the two, and every bit it spends comes out of both pools.

use super::milp::{self, Budget, Cmp, Direction, MilpError, Model, SolveStatus};
use super::pairs::{PairAllocation, PairSet};
use crate::sched::KeyPools;

#[derive(Clone, Debug, PartialEq)]
pub struct Phase2Outcome {
    pub allocation: PairAllocation,
    /// `min_u Σ_s y_{s,u}` of the allocation (0 for an empty pair set).
    pub min_total: u64,
    /// Proven upper bound on the max-min value.
    pub bound: u64,
    pub status: SolveStatus,
    pub nodes: u64,
}

fn joint(pools: &KeyPools, s: usize, (a, b): (usize, usize)) -> u64 {
    pools.get(s, a).min(pools.get(s, b))
}

/// Pairs some satellite could serve with the given pools.
pub fn possible_pairs(pools: &KeyPools, pairs: &PairSet) -> PairSet {
    PairSet::from_pairs(
        pairs.station_count(),
        pairs
            .pairs()
            .iter()
            .copied()
            .filter(|&p| (0..pools.satellite_count()).any(|s| joint(pools, s, p) > 0)),
    )
}

/// `(satellite, pair)` index of each integer variable.
struct Phase2Model {
    model: Model,
    vars: Vec<(usize, usize)>,
}

/// `max z` s.t. `z ≤ Σ_s y_{s,u}` for every pair and the pool capacities.
fn build_maxmin(pools: &KeyPools, pairs: &PairSet) -> Phase2Model {
    let mut m = Model::new("phase2_maxmin", Direction::Maximize);
    let z = m.add_var("z", 0.0, f64::INFINITY, false, 1.0);
    let mut vars = Vec::new();
    let mut per_pair: Vec<Vec<(usize, f64)>> = vec![vec![(z, 1.0)]; pairs.len()];
    let mut per_pool: Vec<Vec<(usize, f64)>> = vec![Vec::new(); pools.satellite_count() * pools.station_count()];
    let g_count = pools.station_count();
    for s in 0..pools.satellite_count() {
        for (u, &(a, b)) in pairs.pairs().iter().enumerate() {
            let cap = joint(pools, s, (a, b));
            if cap == 0 {
                continue;
            }
            let v = m.add_var(format!("y_{s}_{u}"), 0.0, cap as f64, true, 0.0);
            vars.push((s, u));
            per_pair[u].push((v, -1.0));
            per_pool[s * g_count + a].push((v, 1.0));
            per_pool[s * g_count + b].push((v, 1.0));
        }
    }
    for (u, terms) in per_pair.into_iter().enumerate() {
        m.add_constraint(format!("pair_{u}"), terms, Cmp::Le, 0.0);
    }
    for (k, terms) in per_pool.into_iter().enumerate() {
        // A single variable is already bounded by the pool.
        if terms.len() > 1 {
            m.add_constraint(format!("pool_{}_{}", k / g_count, k % g_count), terms, Cmp::Le, pools.get(k / g_count, k % g_count) as f64);
        }
    }
    Phase2Model { model: m, vars }
}

/// Rounds a relaxation down and tops every pair up towards `floor(z)`.
fn round_and_top_up(pm: &Phase2Model, pools: &KeyPools, pairs: &PairSet, x: &[f64]) -> Vec<f64> {
    let g_count = pools.station_count();
    let mut left: Vec<u64> = (0..pools.satellite_count() * g_count)
        .map(|k| pools.get(k / g_count, k % g_count))
        .collect();
    let mut y: Vec<u64> = vec![0; pm.vars.len()];
    let mut totals = vec![0u64; pairs.len()];
    for (i, &(s, u)) in pm.vars.iter().enumerate() {
        let (a, b) = pairs.get(u);
        let want = (x[i + 1] + 1e-6).floor().max(0.0) as u64;
        let take = want.min(left[s * g_count + a]).min(left[s * g_count + b]);
        y[i] = take;
        left[s * g_count + a] -= take;
        left[s * g_count + b] -= take;
        totals[u] += take;
    }
    let target = (x[0] + 1e-6).floor().max(0.0) as u64;
    for (i, &(s, u)) in pm.vars.iter().enumerate() {
        if totals[u] >= target {
            continue;
        }
        let (a, b) = pairs.get(u);
        let take = (target - totals[u]).min(left[s * g_count + a]).min(left[s * g_count + b]);
        y[i] += take;
        left[s * g_count + a] -= take;
        left[s * g_count + b] -= take;
        totals[u] += take;
    }
    repair(pm, pools, pairs, &mut y, &mut left, &mut totals, target);
    let z = totals.iter().copied().min().unwrap_or(0);
    std::iter::once(z as f64).chain(y.iter().map(|&v| v as f64)).collect()
}

/// Draws up to `need` bits for pair `u` from pools with room on both
/// stations; returns the amount drawn.
fn direct_fill(st: &mut Repair<'_>, u: usize, need: u64) -> u64 {
    let (a, b) = st.pairs.get(u);
    let g = st.g_count;
    let mut got = 0;
    for s in 0..st.sat_count {
        if got == need {
            break;
        }
        let Some(i) = st.var(s, u) else { continue };
        let take = (need - got).min(st.left[s * g + a]).min(st.left[s * g + b]);
        st.y[i] += take;
        st.left[s * g + a] -= take;
        st.left[s * g + b] -= take;
        st.totals[u] += take;
        got += take;
    }
    got
}

struct Repair<'a> {
    pairs: &'a PairSet,
    g_count: usize,
    sat_count: usize,
    index: Vec<usize>,
    y: &'a mut [u64],
    left: &'a mut [u64],
    totals: &'a mut [u64],
}

impl Repair<'_> {
    fn var(&self, s: usize, u: usize) -> Option<usize> {
        let i = self.index[s * self.pairs.len() + u];
        (i != usize::MAX).then_some(i)
    }

    /// Bits pair `v` could still draw directly, skipping satellite `skip`.
    fn refill_room(&self, v: usize, skip: usize) -> u64 {
        let (a, b) = self.pairs.get(v);
        let g = self.g_count;
        (0..self.sat_count)
            .filter(|&s| s != skip && self.var(s, v).is_some())
            .map(|s| self.left[s * g + a].min(self.left[s * g + b]))
            .sum()
    }
}

/// Closes deficits below `target`: direct draws first, then moving bits on
/// one satellite from a pair `(b, c)` to `(a, b)` when `(b, c)` has surplus
/// or can be refilled elsewhere.
fn repair(
    pm: &Phase2Model,
    pools: &KeyPools,
    pairs: &PairSet,
    y: &mut [u64],
    left: &mut [u64],
    totals: &mut [u64],
    target: u64,
) {
    let g = pools.station_count();
    let p_count = pairs.len();
    let mut index = vec![usize::MAX; pools.satellite_count() * p_count];
    for (i, &(s, u)) in pm.vars.iter().enumerate() {
        index[s * p_count + u] = i;
    }
    let mut st = Repair {
        pairs,
        g_count: g,
        sat_count: pools.satellite_count(),
        index,
        y,
        left,
        totals,
    };
    for _ in 0..4 * p_count + 4 {
        let mut progress = false;
        for u in 0..p_count {
            if st.totals[u] >= target {
                continue;
            }
            let need = target - st.totals[u];
            progress |= direct_fill(&mut st, u, need) > 0;
            let (a, b) = pairs.get(u);
            'swap: for s in 0..st.sat_count {
                let Some(i) = st.var(s, u) else { continue };
                for (free, busy) in [(a, b), (b, a)] {
                    for c in (0..g).filter(|&c| c != a && c != b) {
                        if st.totals[u] >= target {
                            break 'swap;
                        }
                        if st.left[s * g + free] == 0 {
                            break;
                        }
                        let v = pairs.index_of(busy, c);
                        let Some((v, j)) = v.and_then(|v| st.var(s, v).map(|j| (v, j))) else { continue };
                        let spare = st.totals[v].saturating_sub(target) + st.refill_room(v, s);
                        let m = (target - st.totals[u]).min(st.left[s * g + free]).min(st.y[j]).min(spare);
                        if m == 0 {
                            continue;
                        }
                        st.y[j] -= m;
                        st.totals[v] -= m;
                        st.left[s * g + c] += m;
                        st.y[i] += m;
                        st.totals[u] += m;
                        st.left[s * g + free] -= m;
                        if st.totals[v] < target {
                            let back = target - st.totals[v];
                            direct_fill(&mut st, v, back);
                        }
                        progress = true;
                    }
                }
            }
        }
        if !progress {
            break;
        }
    }
}

/// Odd-set inequalities `Σ_{u ⊆ W} y_{s,u} ≤ ⌊Σ_{g ∈ W} K_{s,g} / 2⌋`
/// violated by the relaxation, added until none is left. `vars[i]` is the
/// `(satellite, pair)` of model variable `offset + i`.
fn add_odd_set_cuts(m: &mut Model, pools: &KeyPools, pairs: &PairSet, vars: &[(usize, usize)], offset: usize) -> Result<(), MilpError> {
    let sat_count = pools.satellite_count();
    let mut support: Vec<Vec<usize>> = vec![Vec::new(); sat_count];
    for &(s, u) in vars {
        let (a, b) = pairs.get(u);
        support[s].extend([a, b]);
    }
    for sup in &mut support {
        sup.sort_unstable();
        sup.dedup();
    }
    // Per satellite: (model variable, station bitmask over its support).
    let mut by_sat: Vec<Vec<(usize, u32)>> = vec![Vec::new(); sat_count];
    for (i, &(s, u)) in vars.iter().enumerate() {
        let (a, b) = pairs.get(u);
        let bit = |g: usize| 1u32 << support[s].binary_search(&g).expect("in support");
        by_sat[s].push((offset + i, bit(a) | bit(b)));
    }
    for round in 0..MAX_CUT_ROUNDS {
        let Some((_, x)) = milp::solve_relaxation(m)? else { return Ok(()) };
        let mut added = 0;
        for s in 0..sat_count {
            let n = support[s].len();
            if n < 3 || n > MAX_CUT_SUPPORT {
                continue;
            }
            for w in 1u32..(1 << n) {
                if w.count_ones() < 3 || w.count_ones() % 2 == 0 {
                    continue;
                }
                let cap: u64 = (0..n).filter(|&i| w >> i & 1 == 1).map(|i| pools.get(s, support[s][i])).sum();
                if cap % 2 == 0 {
                    continue;
                }
                let inside: Vec<usize> = by_sat[s].iter().filter(|&&(_, pm)| pm & w == pm).map(|&(v, _)| v).collect();
                let lhs: f64 = inside.iter().map(|&v| x[v]).sum();
                let rhs = (cap / 2) as f64;
                if lhs > rhs + 1e-6 {
                    let terms = inside.into_iter().map(|v| (v, 1.0)).collect();
                    m.add_constraint(format!("odd_{s}_{w}_{round}"), terms, Cmp::Le, rhs);
                    added += 1;
                }
            }
        }
        if added == 0 {
            break;
        }
    }
    Ok(())
}

/// Cut rounds per solve.
const MAX_CUT_ROUNDS: usize = 20;
/// Satellites serving more stations than this get no odd-set cuts.
const MAX_CUT_SUPPORT: usize = 12;

fn phase2_budget(budget: &Budget) -> Budget {
    Budget {
        integral_objective: true,
        ..budget.clone()
    }
}

/// Exact max-min Phase-2 allocation over `pairs` by branch and bound on the
/// LP relaxation. If the budget runs out the incumbent is returned with its
/// bound.
pub fn solve_phase2_maxmin(pools: &KeyPools, pairs: &PairSet, budget: &Budget) -> Result<Phase2Outcome, MilpError> {
    let mut allocation = PairAllocation::for_pools(pools, pairs.clone());
    let trivial = |allocation| Phase2Outcome {
        allocation,
        min_total: 0,
        bound: 0,
        status: SolveStatus::Optimal,
        nodes: 0,
    };
    if pairs.is_empty() || possible_pairs(pools, pairs).len() < pairs.len() {
        return Ok(trivial(allocation));
    }
    let mut pm = build_maxmin(pools, pairs);
    add_odd_set_cuts(&mut pm.model, pools, pairs, &pm.vars, 1)?;
    let heuristic = |x: &[f64]| Some(round_and_top_up(&pm, pools, pairs, x));
    let mut start = round_and_top_up(&pm, pools, pairs, &vec![0.0; pm.model.vars.len()]);
    if let Some((_, x)) = milp::solve_relaxation(&pm.model)? {
        let rounded = round_and_top_up(&pm, pools, pairs, &x);
        if rounded[0] > start[0] {
            start = rounded;
        }
    }
    let sol = milp::solve(&pm.model, &phase2_budget(budget), Some(start), Some(&heuristic))?;
    if sol.values.is_empty() {
        return Err(MilpError::Engine(format!("phase-2 solve ended {}", sol.status.as_str())));
    }
    for (i, &(s, u)) in pm.vars.iter().enumerate() {
        allocation.set(s, u, sol.values[i + 1].round() as u64);
    }
    let min_total = allocation.pair_totals().into_iter().min().unwrap_or(0);
    Ok(Phase2Outcome {
        allocation,
        min_total,
        bound: (sol.bound + 1e-6).floor().max(min_total as f64) as u64,
        status: sol.status,
        nodes: sol.nodes,
    })
}

/// Maximum total allocation; satellites are independent so each is solved on
/// its own.
pub fn solve_phase2_maxsum(pools: &KeyPools, pairs: &PairSet, budget: &Budget) -> Result<Phase2Outcome, MilpError> {
    let mut allocation = PairAllocation::for_pools(pools, pairs.clone());
    let g_count = pools.station_count();
    let mut status = SolveStatus::Optimal;
    let mut bound = 0u128;
    let mut nodes = 0;
    for s in 0..pools.satellite_count() {
        let mut m = Model::new(format!("phase2_maxsum_{s}"), Direction::Maximize);
        let mut vars = Vec::new();
        let mut per_pool: Vec<Vec<(usize, f64)>> = vec![Vec::new(); g_count];
        for (u, &p) in pairs.pairs().iter().enumerate() {
            let cap = joint(pools, s, p);
            if cap > 0 {
                let v = m.add_var(format!("y_{s}_{u}"), 0.0, cap as f64, true, 1.0);
                vars.push(u);
                per_pool[p.0].push((v, 1.0));
                per_pool[p.1].push((v, 1.0));
            }
        }
        if vars.is_empty() {
            continue;
        }
        for (g, terms) in per_pool.into_iter().enumerate() {
            if terms.len() > 1 {
                m.add_constraint(format!("pool_{g}"), terms, Cmp::Le, pools.get(s, g) as f64);
            }
        }
        let sv: Vec<(usize, usize)> = vars.iter().map(|&u| (s, u)).collect();
        add_odd_set_cuts(&mut m, pools, pairs, &sv, 0)?;
        // Greedy rounding of the relaxation.
        let heuristic = |x: &[f64]| {
            let mut left: Vec<u64> = (0..g_count).map(|g| pools.get(s, g)).collect();
            let mut y = vec![0.0; x.len()];
            for pass in 0..2 {
                for (i, &u) in vars.iter().enumerate() {
                    let (a, b) = pairs.get(u);
                    let want = if pass == 0 { (x[i] + 1e-6).floor() as u64 } else { u64::MAX };
                    let take = want.min(left[a]).min(left[b]);
                    y[i] += take as f64;
                    left[a] -= take;
                    left[b] -= take;
                }
            }
            Some(y)
        };
        let sol = milp::solve(&m, &phase2_budget(budget), heuristic(&vec![0.0; vars.len()]), Some(&heuristic))?;
        if sol.values.is_empty() {
            return Err(MilpError::Engine(format!("phase-2 solve ended {}", sol.status.as_str())));
        }
        for (i, &u) in vars.iter().enumerate() {
            allocation.set(s, u, sol.values[i].round() as u64);
        }
        if sol.status != SolveStatus::Optimal {
            status = SolveStatus::Feasible;
        }
        bound += (sol.bound + 1e-6).floor() as u128;
        nodes += sol.nodes;
    }
    let min_total = allocation.pair_totals().into_iter().min().unwrap_or(0);
    Ok(Phase2Outcome {
        bound: u64::try_from(bound.max(allocation.total())).unwrap_or(u64::MAX),
        allocation,
        min_total,
        status,
        nodes,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterateOutcome {
    pub allocation: PairAllocation,
    /// Max-min value of each productive round.
    pub round_values: Vec<u64>,
    /// Whether the final round was a max-sum pass over leftover pools.
    pub cleanup: bool,
    /// `Optimal` unless some round stopped on its budget.
    pub status: SolveStatus,
}

/// Repeated max-min rounds over all pairs.
///
/// Each round maximizes the smallest pair total over the pairs still
/// active, gives every active pair exactly that value (any extra is handed
/// back, highest satellite index first), and draws it from the pools. Pairs
/// no satellite can serve any more are frozen. Once a round cannot raise
/// every active pair, one max-sum pass spends what is left and the loop
/// ends.
pub fn iterate_phase2(pools: &KeyPools, budget: &Budget) -> Result<IterateOutcome, MilpError> {
    let all = PairSet::all(pools.station_count());
    let mut total = PairAllocation::for_pools(pools, all.clone());
    let mut left = pools.clone();
    let mut round_values = Vec::new();
    let mut status = SolveStatus::Optimal;
    let mut cleanup = false;
    let max_rounds = 4 * all.len() + 10;

    for _ in 0..max_rounds {
        let active = possible_pairs(&left, &all);
        if active.is_empty() {
            break;
        }
        let out = solve_phase2_maxmin(&left, &active, budget)?;
        if out.status != SolveStatus::Optimal {
            status = SolveStatus::Feasible;
        }
        if out.min_total == 0 {
            let rest = solve_phase2_maxsum(&left, &active, budget)?;
            if rest.status != SolveStatus::Optimal {
                status = SolveStatus::Feasible;
            }
            merge(&mut total, &rest.allocation);
            cleanup = true;
            break;
        }
        let mut trimmed = out.allocation;
        let k = out.min_total;
        for (u, t) in trimmed.pair_totals().into_iter().enumerate() {
            let mut excess = t - k;
            for s in (0..trimmed.satellite_count()).rev() {
                if excess == 0 {
                    break;
                }
                let y = trimmed.get(s, u);
                let cut = y.min(excess);
                trimmed.set(s, u, y - cut);
                excess -= cut;
            }
        }
        left = trimmed.remaining(&left);
        merge(&mut total, &trimmed);
        round_values.push(k);
    }
    Ok(IterateOutcome {
        allocation: total,
        round_values,
        cleanup,
        status,
    })
}

fn merge(total: &mut PairAllocation, part: &PairAllocation) {
    for (u, &(a, b)) in part.pairs().pairs().iter().enumerate() {
        let w = total.pairs().index_of(a, b).expect("pair of the full set");
        for s in 0..part.satellite_count() {
            total.add(s, w, part.get(s, u));
        }
    }
}
