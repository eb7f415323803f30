//! Single-phase baselines: schedule and pairwise allocation chosen jointly by
//! one mixed-integer program.

use super::milp::{self, Budget, Cmp, Direction, MilpError, Model, SolveStatus};
use super::pairs::{PairAllocation, PairSet};
use super::phase2::{solve_phase2_maxmin, solve_phase2_maxsum};
use crate::channel::ChannelTable;
use crate::num::Real;
use crate::sched::{accumulate_pools, KeyPools, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineObjective {
    /// Maximize the smallest pair total over the possible pairs.
    MaxMin,
    /// Maximize the sum of all pair totals.
    MaxSum,
}

impl BaselineObjective {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineObjective::MaxMin => "maxmin",
            BaselineObjective::MaxSum => "maxsum",
        }
    }
}

/// Upper bound on `|K_{s,g}|`: every row of the link served.
fn pool_upper_bounds<T: Real>(table: &ChannelTable<T>) -> KeyPools {
    let g_count = table.station_count();
    let mut sums = vec![0.0f64; table.satellite_count() * g_count];
    for r in table.rows() {
        sums[r.satellite as usize * g_count + r.station as usize] += r.key_bits.to_f64_lossy();
    }
    let rows: Vec<Vec<u64>> = sums.chunks(g_count.max(1)).map(|c| c.iter().map(|x| x.floor() as u64).collect()).collect();
    let rows = if g_count == 0 { vec![Vec::new(); table.satellite_count()] } else { rows };
    KeyPools::from_matrix(table.satellite_ids().to_vec(), table.station_ids().to_vec(), &rows)
}

/// Pairs that can obtain a key under some schedule: a single satellite has
/// links with at least one key bit to both stations.
pub fn table_possible_pairs<T: Real>(table: &ChannelTable<T>) -> PairSet {
    super::phase2::possible_pairs(&pool_upper_bounds(table), &PairSet::all(table.station_count()))
}

/// The baseline program and the meaning of its variables.
pub struct BaselineModel {
    pub model: Model,
    /// Table row index of each `x` variable.
    pub x_rows: Vec<usize>,
    /// `(satellite, pair index in pairs)` of each `y` variable.
    pub y_vars: Vec<(usize, usize)>,
    /// Index of the `z` variable (max-min only).
    pub z: Option<usize>,
    pub pairs: PairSet,
    pub possible: Vec<bool>,
    x_offset: usize,
    y_offset: usize,
}

/// `x` binary per usable row, `y_{s,u}` integer, per-slot transmitter and
/// receiver limits, and `Σ_{u∋g} y_{s,u} ≤ Σ_t n x` per link.
pub fn build_baseline_model<T: Real>(table: &ChannelTable<T>, objective: BaselineObjective) -> BaselineModel {
    let mut m = Model::new(format!("baseline_{}", objective.as_str()), Direction::Maximize);
    let pairs = PairSet::all(table.station_count());
    let ub = pool_upper_bounds(table);
    let g_count = table.station_count();
    let z = (objective == BaselineObjective::MaxMin).then(|| m.add_var("z", 0.0, f64::INFINITY, false, 1.0));

    let x_offset = m.vars.len();
    let mut x_rows = Vec::new();
    for (i, r) in table.rows().iter().enumerate() {
        if r.key_bits > T::zero() {
            m.add_var(format!("x_{}_{}_{}", r.satellite, r.station, r.slot), 0.0, 1.0, true, 0.0);
            x_rows.push(i);
        }
    }
    let y_offset = m.vars.len();
    let mut y_vars = Vec::new();
    let mut possible = vec![false; pairs.len()];
    let y_obj = if z.is_some() { 0.0 } else { 1.0 };
    for s in 0..table.satellite_count() {
        for (u, &(a, b)) in pairs.pairs().iter().enumerate() {
            let cap = ub.get(s, a).min(ub.get(s, b));
            if cap > 0 {
                m.add_var(format!("y_{s}_{a}_{b}"), 0.0, cap as f64, true, y_obj);
                y_vars.push((s, u));
                possible[u] = true;
            }
        }
    }

    // Per-slot limits, only where they can bind.
    let rows = table.rows();
    let mut k = 0;
    while k < x_rows.len() {
        let t = rows[x_rows[k]].slot;
        let mut end = k;
        while end < x_rows.len() && rows[x_rows[end]].slot == t {
            end += 1;
        }
        let mut by_sat: Vec<Vec<(usize, f64)>> = vec![Vec::new(); table.satellite_count()];
        let mut by_sta: Vec<Vec<(usize, f64)>> = vec![Vec::new(); g_count];
        for j in k..end {
            let r = &rows[x_rows[j]];
            by_sat[r.satellite as usize].push((x_offset + j, 1.0));
            by_sta[r.station as usize].push((x_offset + j, 1.0));
        }
        for (s, terms) in by_sat.into_iter().enumerate() {
            let cap = table.satellite_capacity()[s];
            if terms.len() > cap as usize {
                m.add_constraint(format!("tx_{s}_{t}"), terms, Cmp::Le, f64::from(cap));
            }
        }
        for (g, terms) in by_sta.into_iter().enumerate() {
            let cap = table.station_capacity()[g];
            if terms.len() > cap as usize {
                m.add_constraint(format!("rx_{g}_{t}"), terms, Cmp::Le, f64::from(cap));
            }
        }
        k = end;
    }

    // Key bits drawn from a link never exceed what it collected.
    let mut link: Vec<Vec<(usize, f64)>> = vec![Vec::new(); table.satellite_count() * g_count];
    for (j, &i) in x_rows.iter().enumerate() {
        let r = &rows[i];
        link[r.satellite as usize * g_count + r.station as usize].push((x_offset + j, -r.key_bits.to_f64_lossy()));
    }
    let mut draws: Vec<Vec<(usize, f64)>> = vec![Vec::new(); table.satellite_count() * g_count];
    for (j, &(s, u)) in y_vars.iter().enumerate() {
        let (a, b) = pairs.get(u);
        draws[s * g_count + a].push((y_offset + j, 1.0));
        draws[s * g_count + b].push((y_offset + j, 1.0));
    }
    for (idx, (d, l)) in draws.into_iter().zip(link).enumerate() {
        if d.is_empty() {
            continue;
        }
        let terms: Vec<(usize, f64)> = d.into_iter().chain(l).collect();
        m.add_constraint(format!("pool_{}_{}", idx / g_count, idx % g_count), terms, Cmp::Le, 0.0);
    }

    if let Some(z) = z {
        let mut per_pair: Vec<Vec<(usize, f64)>> = vec![vec![(z, 1.0)]; pairs.len()];
        for (j, &(_, u)) in y_vars.iter().enumerate() {
            per_pair[u].push((y_offset + j, -1.0));
        }
        let mut any = false;
        for (u, terms) in per_pair.into_iter().enumerate() {
            if possible[u] {
                m.add_constraint(format!("min_{u}"), terms, Cmp::Le, 0.0);
                any = true;
            }
        }
        if !any {
            m.vars[z].upper = 0.0;
        }
    }
    BaselineModel {
        model: m,
        x_rows,
        y_vars,
        z,
        pairs,
        possible,
        x_offset,
        y_offset,
    }
}

#[derive(Clone, Debug)]
pub struct BaselineOutcome {
    pub schedule: Schedule,
    pub pools: KeyPools,
    pub allocation: PairAllocation,
    pub status: SolveStatus,
    /// Objective of the returned solution.
    pub objective: u64,
    /// Proven upper bound on the optimum.
    pub bound: u64,
    pub nodes: u64,
}

impl BaselineOutcome {
    pub fn gap(&self) -> u64 {
        self.bound.saturating_sub(self.objective)
    }
}

impl BaselineModel {
    /// Allocation for the given pools reading the model objective.
    fn objective_of(&self, alloc: &PairAllocation) -> u64 {
        let totals = alloc.pair_totals();
        match self.z {
            Some(_) => totals
                .iter()
                .zip(&self.possible)
                .filter(|(_, &p)| p)
                .map(|(&t, _)| t)
                .min()
                .unwrap_or(0),
            None => totals.iter().sum(),
        }
    }

    /// Model vector for a schedule and an allocation drawn from its pools.
    fn encode<T: Real>(&self, table: &ChannelTable<T>, schedule: &Schedule, alloc: &PairAllocation) -> Vec<f64> {
        let mut x = vec![0.0; self.model.vars.len()];
        let rows = table.rows();
        for (j, &i) in self.x_rows.iter().enumerate() {
            let r = &rows[i];
            if schedule.slot(r.slot).binary_search(&(r.satellite, r.station)).is_ok() {
                x[self.x_offset + j] = 1.0;
            }
        }
        for (j, &(s, u)) in self.y_vars.iter().enumerate() {
            x[self.y_offset + j] = alloc.get(s, u) as f64;
        }
        if let Some(z) = self.z {
            x[z] = self.objective_of(alloc) as f64;
        }
        x
    }

    fn schedule_of<T: Real>(&self, table: &ChannelTable<T>, x: &[f64]) -> Schedule {
        let mut per_slot = vec![Vec::new(); table.slot_count() as usize];
        for (j, &i) in self.x_rows.iter().enumerate() {
            if x[self.x_offset + j] > 0.5 {
                let r = &table.rows()[i];
                per_slot[r.slot as usize].push((r.satellite, r.station));
            }
        }
        Schedule::from_slots(table, per_slot)
    }

    /// Reads `y` and trims it to fit the integer pools of the schedule.
    fn allocation_of(&self, pools: &KeyPools, x: &[f64]) -> PairAllocation {
        let mut alloc = PairAllocation::for_pools(pools, self.pairs.clone());
        let mut left = pools.clone();
        for (j, &(s, u)) in self.y_vars.iter().enumerate() {
            let (a, b) = self.pairs.get(u);
            let want = (x[self.y_offset + j] + 1e-6).floor().max(0.0) as u64;
            let take = want.min(left.get(s, a)).min(left.get(s, b));
            alloc.set(s, u, take);
            left.set(s, a, left.get(s, a) - take);
            left.set(s, b, left.get(s, b) - take);
        }
        alloc
    }
}

/// Phase-2 allocation matching the baseline objective.
fn allocate(pools: &KeyPools, bm: &BaselineModel, objective: BaselineObjective, budget: &Budget) -> Result<PairAllocation, MilpError> {
    let possible = PairSet::from_pairs(
        bm.pairs.station_count(),
        bm.pairs.pairs().iter().zip(&bm.possible).filter(|(_, &p)| p).map(|(&p, _)| p),
    );
    let part = match objective {
        BaselineObjective::MaxMin => solve_phase2_maxmin(pools, &possible, budget)?.allocation,
        BaselineObjective::MaxSum => solve_phase2_maxsum(pools, &bm.pairs, budget)?.allocation,
    };
    let mut alloc = PairAllocation::for_pools(pools, bm.pairs.clone());
    for (u, &(a, b)) in part.pairs().pairs().iter().enumerate() {
        let w = bm.pairs.index_of(a, b).expect("pair of the full set");
        for s in 0..part.satellite_count() {
            alloc.set(s, w, part.get(s, u));
        }
    }
    Ok(alloc)
}

/// Solves the baseline by branch and bound. `seeds` are schedules (for
/// example from the heuristics) whose Phase-2 allocations start the search.
pub fn solve_baseline<T: Real>(
    table: &ChannelTable<T>,
    objective: BaselineObjective,
    budget: &Budget,
    seeds: &[Schedule],
) -> Result<BaselineOutcome, MilpError> {
    let bm = build_baseline_model(table, objective);
    let budget = Budget {
        integral_objective: true,
        ..budget.clone()
    };
    let phase2_budget = Budget {
        time_limit: None,
        ..budget.clone()
    };

    let mut incumbent: Option<(u64, Vec<f64>)> = None;
    let empty = Schedule::empty(table);
    for sched in seeds.iter().chain(std::iter::once(&empty)) {
        let pools = accumulate_pools(sched, table);
        let alloc = allocate(&pools, &bm, objective, &phase2_budget)?;
        let obj = bm.objective_of(&alloc);
        if incumbent.as_ref().map_or(true, |(b, _)| obj > *b) {
            incumbent = Some((obj, bm.encode(table, sched, &alloc)));
        }
    }

    // Rounds a relaxation: per slot, links in decreasing x order while the
    // limits allow, then a cheap allocation of the resulting pools.
    let heuristic = |x: &[f64]| -> Option<Vec<f64>> {
        let rows = table.rows();
        let mut order: Vec<usize> = (0..bm.x_rows.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (&rows[bm.x_rows[a]], &rows[bm.x_rows[b]]);
            ra.slot
                .cmp(&rb.slot)
                .then(x[bm.x_offset + b].total_cmp(&x[bm.x_offset + a]))
                .then(a.cmp(&b))
        });
        let mut sat_use = vec![0u32; table.satellite_count()];
        let mut sta_use = vec![0u32; table.station_count()];
        let mut per_slot = vec![Vec::new(); table.slot_count() as usize];
        let mut current = u32::MAX;
        for j in order {
            let r = &rows[bm.x_rows[j]];
            if r.slot != current {
                current = r.slot;
                sat_use.iter_mut().for_each(|c| *c = 0);
                sta_use.iter_mut().for_each(|c| *c = 0);
            }
            if x[bm.x_offset + j] < 1e-6 {
                continue;
            }
            let (s, g) = (r.satellite as usize, r.station as usize);
            if sat_use[s] < table.satellite_capacity()[s] && sta_use[g] < table.station_capacity()[g] {
                sat_use[s] += 1;
                sta_use[g] += 1;
                per_slot[r.slot as usize].push((r.satellite, r.station));
            }
        }
        let sched = Schedule::from_slots(table, per_slot);
        let pools = accumulate_pools(&sched, table);
        let alloc = bm.allocation_of(&pools, x);
        Some(bm.encode(table, &sched, &alloc))
    };

    let sol = milp::solve(&bm.model, &budget, incumbent.map(|i| i.1), Some(&heuristic))?;
    if sol.values.is_empty() {
        return Err(MilpError::Engine(format!("baseline solve ended {}", sol.status.as_str())));
    }
    let schedule = bm.schedule_of(table, &sol.values);
    let pools = accumulate_pools(&schedule, table);
    let mut allocation = bm.allocation_of(&pools, &sol.values);
    let mut value = bm.objective_of(&allocation);
    // Rounding slack in the pool constraints can cost a bit; re-solving
    // Phase 2 on the final pools recovers it.
    if (value as f64) + 0.5 < sol.objective {
        let again = allocate(&pools, &bm, objective, &phase2_budget)?;
        let v = bm.objective_of(&again);
        if v > value {
            allocation = again;
            value = v;
        }
    }
    let bound = ((sol.bound + 1e-6).floor().max(0.0) as u64).max(value);
    Ok(BaselineOutcome {
        schedule,
        pools,
        allocation,
        status: if bound == value { SolveStatus::Optimal } else { SolveStatus::Feasible },
        objective: value,
        bound,
        nodes: sol.nodes,
    })
}
