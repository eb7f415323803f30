//! Small mixed-integer linear programs and an exact branch-and-bound solver.
//!
//! Relaxations are solved with `microlp` as a plain LP engine; branching,
//! bounding and incumbent handling live here. Nodes are explored best-bound
//! first, ties broken by creation order, so results do not depend on timing
//! unless the time limit fires.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Solution, SolveOutcome, Variable};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Var {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
    pub objective: f64,
}

impl Var {
    pub fn is_binary(&self) -> bool {
        self.integer && self.lower == 0.0 && self.upper == 1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub name: String,
    pub direction: Direction,
    pub vars: Vec<Var>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Error, PartialEq)]
pub enum MilpError {
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error("LP engine failure: {0}")]
    Engine(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

impl Model {
    pub fn new(name: impl Into<String>, direction: Direction) -> Self {
        Self {
            name: name.into(),
            direction,
            vars: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, integer: bool, objective: f64) -> usize {
        self.vars.push(Var {
            name: name.into(),
            lower,
            upper,
            integer,
            objective,
        });
        self.vars.len() - 1
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            cmp,
            rhs,
        });
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper || !v.objective.is_finite() {
                return Err(MilpError::Invalid(format!("variable {}", v.name)));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(MilpError::Invalid(format!("variable {} bounds", v.name)));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() || c.terms.iter().any(|&(i, a)| i >= self.vars.len() || !a.is_finite()) {
                return Err(MilpError::Invalid(format!("constraint {}", c.name)));
            }
            let mut idx: Vec<usize> = c.terms.iter().map(|t| t.0).collect();
            idx.sort_unstable();
            if idx.windows(2).any(|w| w[0] == w[1]) {
                return Err(MilpError::Invalid(format!("constraint {} repeats a variable", c.name)));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, &xi)| v.objective * xi).sum()
    }

    /// Largest violation of bounds, integrality and constraints.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xi) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xi).max(xi - v.upper);
            if v.integer {
                worst = worst.max((xi - xi.round()).abs());
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(i, a)| a * x[i]).sum();
            let d = match c.cmp {
                Cmp::Le => lhs - c.rhs,
                Cmp::Ge => c.rhs - lhs,
                Cmp::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(d);
        }
        worst
    }

    /// Larger is better in the model's direction.
    fn better(&self, a: f64, b: f64) -> bool {
        match self.direction {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        }
    }

    /// Solves the root LP relaxation.
    fn solve_root(&self, deadline: Option<Instant>) -> Result<(Option<Lp>, Vec<Variable>), MilpError> {
        let dir = match self.direction {
            Direction::Maximize => OptimizationDirection::Maximize,
            Direction::Minimize => OptimizationDirection::Minimize,
        };
        let mut p = Problem::new(dir);
        if let Some(d) = deadline {
            let left = d.saturating_duration_since(Instant::now());
            p.set_time_limit(left.max(Duration::from_millis(1)));
        }
        let handles: Vec<Variable> = self.vars.iter().map(|v| p.add_var(v.objective, (v.lower, v.upper))).collect();
        for c in &self.constraints {
            let mut e = LinearExpr::empty();
            for &(i, a) in &c.terms {
                e.add(handles[i], a);
            }
            p.add_constraint(e, op(c.cmp), c.rhs);
        }
        Ok((Lp::from_outcome(p.solve(), &handles)?, handles))
    }
}

fn op(cmp: Cmp) -> ComparisonOp {
    match cmp {
        Cmp::Le => ComparisonOp::Le,
        Cmp::Ge => ComparisonOp::Ge,
        Cmp::Eq => ComparisonOp::Eq,
    }
}

/// A solved relaxation. The engine state is kept (when memory allows) so
/// children can be re-solved from it.
#[derive(Clone)]
struct Lp {
    solution: Option<Solution>,
    objective: f64,
    x: Vec<f64>,
}

impl Lp {
    fn from_outcome(outcome: Result<SolveOutcome, microlp::Error>, handles: &[Variable]) -> Result<Option<Lp>, MilpError> {
        match outcome {
            Ok(outcome) => match outcome.into_solution() {
                Ok(solution) => {
                    let x = handles.iter().map(|&h| solution.var_value_raw(h)).collect();
                    Ok(Some(Lp {
                        objective: solution.objective(),
                        solution: Some(solution),
                        x,
                    }))
                }
                Err(_) => Err(MilpError::Engine("LP interrupted".into())),
            },
            Err(microlp::Error::Infeasible) => Ok(None),
            Err(microlp::Error::Unbounded) => Err(MilpError::Unbounded),
            Err(e) => Err(MilpError::Engine(e.to_string())),
        }
    }

    /// The relaxation with `var cmp rhs` added.
    fn with(&self, handles: &[Variable], var: usize, cmp: Cmp, rhs: f64) -> Result<Option<Lp>, MilpError> {
        let mut e = LinearExpr::empty();
        e.add(handles[var], 1.0);
        let solution = self.solution.clone().expect("engine state kept");
        Lp::from_outcome(solution.add_constraint(e, op(cmp), rhs), handles)
    }

    /// Re-solves `root` with the bounds of a node whose engine state was
    /// dropped.
    fn rebuild(root: &Lp, handles: &[Variable], root_bounds: &[(f64, f64)], bounds: &[(f64, f64)]) -> Result<Option<Lp>, MilpError> {
        let mut lp = root.clone();
        for (j, (r, b)) in root_bounds.iter().zip(bounds).enumerate() {
            if b.0 > r.0 {
                match lp.with(handles, j, Cmp::Ge, b.0)? {
                    Some(next) => lp = next,
                    None => return Ok(None),
                }
            }
            if b.1 < r.1 {
                match lp.with(handles, j, Cmp::Le, b.1)? {
                    Some(next) => lp = next,
                    None => return Ok(None),
                }
            }
        }
        Ok(Some(lp))
    }
}

/// Rough engine-state footprint of the model, in bytes.
fn state_bytes(model: &Model) -> usize {
    let nnz: usize = model.constraints.iter().map(|c| c.terms.len()).sum();
    64 * (nnz + model.vars.len() + model.constraints.len()) + 4096
}

/// Memory allowed for the engine states of open nodes.
const WARM_BYTES: usize = 512 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct Budget {
    pub max_nodes: u64,
    pub time_limit: Option<Duration>,
    /// Every feasible objective value is an integer (enables rounding the
    /// bound before pruning).
    pub integral_objective: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_nodes: 20_000,
            time_limit: None,
            integral_objective: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Incumbent proven optimal.
    Optimal,
    /// Budget exhausted with an incumbent; see the gap.
    Feasible,
    /// Budget exhausted without an incumbent.
    NoSolution,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::NoSolution => "no_solution",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    /// Best proven bound on the optimum.
    pub bound: f64,
    pub nodes: u64,
}

impl MilpSolution {
    /// `|bound - objective|`, zero when optimal.
    pub fn gap(&self) -> f64 {
        if self.status == SolveStatus::Optimal {
            0.0
        } else {
            (self.bound - self.objective).abs()
        }
    }
}

const INT_TOL: f64 = 1e-6;
const FEAS_TOL: f64 = 1e-6;

struct Node {
    bound: f64,
    id: u64,
    bounds: Vec<(f64, f64)>,
    lp: Lp,
}

/// Heap order: best bound first, then lower id. `key` is the bound oriented
/// so that larger is better.
struct Keyed(f64, Node);

impl PartialEq for Keyed {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Keyed {}
impl PartialOrd for Keyed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Keyed {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.id.cmp(&self.1.id))
    }
}

/// Rounds integer variables that are within tolerance.
fn snap(model: &Model, x: &mut [f64]) {
    for (v, xi) in model.vars.iter().zip(x.iter_mut()) {
        if v.integer && (*xi - xi.round()).abs() <= INT_TOL {
            *xi = xi.round();
        }
    }
}

/// Most fractional integer variable, binaries before general integers,
/// lowest index on ties.
fn branching_var(model: &Model, x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, (bool, f64))> = None;
    for (i, v) in model.vars.iter().enumerate() {
        if !v.integer {
            continue;
        }
        let frac = x[i] - x[i].floor();
        if frac <= INT_TOL || frac >= 1.0 - INT_TOL {
            continue;
        }
        let score = (!v.is_binary(), (frac - 0.5).abs());
        if best.map_or(true, |(_, s)| score < s) {
            best = Some((i, score));
        }
    }
    best.map(|b| b.0)
}

pub type Heuristic<'a> = dyn Fn(&[f64]) -> Option<Vec<f64>> + 'a;

/// Optimal value and point of the LP relaxation; `None` if infeasible.
pub fn solve_relaxation(model: &Model) -> Result<Option<(f64, Vec<f64>)>, MilpError> {
    model.validate()?;
    let (lp, _) = model.solve_root(None)?;
    Ok(lp.map(|lp| (lp.objective, lp.x)))
}

/// Branch and bound. `incumbent` seeds the search if it is feasible;
/// `heuristic` may turn a fractional relaxation into a feasible point.
pub fn solve(
    model: &Model,
    budget: &Budget,
    incumbent: Option<Vec<f64>>,
    heuristic: Option<&Heuristic<'_>>,
) -> Result<MilpSolution, MilpError> {
    let warm_limit = (WARM_BYTES / state_bytes(model)).max(8);
    solve_limited(model, budget, incumbent, heuristic, warm_limit)
}

/// [`solve`] keeping the engine state of at most `warm_limit` open nodes;
/// the others are re-solved from the root when they are expanded.
fn solve_limited(
    model: &Model,
    budget: &Budget,
    incumbent: Option<Vec<f64>>,
    heuristic: Option<&Heuristic<'_>>,
    warm_limit: usize,
) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let deadline = budget.time_limit.map(|d| Instant::now() + d);
    let orient = |v: f64| match model.direction {
        Direction::Maximize => v,
        Direction::Minimize => -v,
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let offer = |x: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| {
        let mut x = x;
        snap(model, &mut x);
        if model.max_violation(&x) > FEAS_TOL {
            return;
        }
        let obj = model.objective_value(&x);
        if best.as_ref().map_or(true, |(b, _)| model.better(obj, *b)) {
            *best = Some((obj, x));
        }
    };
    if let Some(x) = incumbent {
        if x.len() == model.vars.len() {
            offer(x, &mut best);
        }
    }
    // A node whose bound cannot beat the incumbent is pruned.
    let prunable = |bound: f64, best: &Option<(f64, Vec<f64>)>| {
        let Some((inc, _)) = best else { return false };
        let mut b = orient(bound);
        if budget.integral_objective {
            b = (b + INT_TOL).floor();
        }
        b <= orient(*inc) + FEAS_TOL
    };

    let root_bounds: Vec<(f64, f64)> = model.vars.iter().map(|v| (v.lower, v.upper)).collect();
    let mut nodes = 0u64;
    let mut next_id = 0u64;
    let mut heap = BinaryHeap::new();
    let mut exhausted = false;

    let (root, handles) = model.solve_root(deadline)?;
    let mut warm = 0usize;
    let root_lp = root.clone();
    match root {
        None => {
            return Ok(match best {
                Some((obj, x)) => MilpSolution {
                    status: SolveStatus::Optimal,
                    values: x,
                    objective: obj,
                    bound: obj,
                    nodes: 1,
                },
                None => MilpSolution {
                    status: SolveStatus::Infeasible,
                    values: Vec::new(),
                    objective: f64::NAN,
                    bound: f64::NAN,
                    nodes: 1,
                },
            })
        }
        Some(lp) => {
            nodes += 1;
            warm += 1;
            heap.push(Keyed(
                orient(lp.objective),
                Node {
                    bound: lp.objective,
                    id: next_id,
                    bounds: root_bounds.clone(),
                    lp,
                },
            ));
            next_id += 1;
        }
    }

    while let Some(Keyed(_, mut node)) = heap.pop() {
        if node.lp.solution.is_some() {
            warm -= 1;
        }
        if prunable(node.bound, &best) {
            continue;
        }
        let mut x = node.lp.x.clone();
        snap(model, &mut x);
        let Some(j) = branching_var(model, &x) else {
            offer(x, &mut best);
            continue;
        };
        if let Some(h) = heuristic {
            if let Some(cand) = h(&x) {
                offer(cand, &mut best);
                if prunable(node.bound, &best) {
                    continue;
                }
            }
        }
        if nodes >= budget.max_nodes || deadline.is_some_and(|d| Instant::now() >= d) {
            heap.push(Keyed(orient(node.bound), node));
            exhausted = true;
            break;
        }
        if node.lp.solution.is_none() {
            let root = root_lp.as_ref().expect("root relaxation solved");
            match Lp::rebuild(root, &handles, &root_bounds, &node.bounds)? {
                Some(lp) => node.lp.solution = lp.solution,
                None => continue,
            }
        }
        let v = x[j];
        let down = ((node.bounds[j].0, v.floor()), Cmp::Le, v.floor());
        let up = ((v.ceil(), node.bounds[j].1), Cmp::Ge, v.ceil());
        for ((lo, hi), cmp, rhs) in [down, up] {
            if lo > hi {
                continue;
            }
            let mut bounds = node.bounds.clone();
            bounds[j] = (lo, hi);
            nodes += 1;
            if let Some(mut lp) = node.lp.with(&handles, j, cmp, rhs)? {
                if warm < warm_limit {
                    warm += 1;
                } else {
                    lp.solution = None;
                }
                let child = Node {
                    bound: lp.objective,
                    id: next_id,
                    bounds,
                    lp,
                };
                next_id += 1;
                if !prunable(child.bound, &best) {
                    heap.push(Keyed(orient(child.bound), child));
                } else if child.lp.solution.is_some() {
                    warm -= 1;
                }
            }
        }
    }

    let open_bound = heap
        .iter()
        .map(|k| k.1.bound)
        .fold(None, |acc: Option<f64>, b| match acc {
            None => Some(b),
            Some(a) => Some(if model.better(b, a) { b } else { a }),
        });
    Ok(match best {
        Some((obj, x)) => {
            let bound = match open_bound {
                Some(b) if exhausted && model.better(b, obj) => b,
                _ => obj,
            };
            let optimal = !exhausted || !model.better(bound, obj) || prunable(bound, &Some((obj, x.clone())));
            MilpSolution {
                status: if optimal { SolveStatus::Optimal } else { SolveStatus::Feasible },
                values: x,
                objective: obj,
                bound: if optimal { obj } else { bound },
                nodes,
            }
        }
        None => MilpSolution {
            status: if exhausted { SolveStatus::NoSolution } else { SolveStatus::Infeasible },
            values: Vec::new(),
            objective: f64::NAN,
            bound: open_bound.unwrap_or(f64::NAN),
            nodes,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 0/1 knapsack: values, weights, capacity.
    fn knapsack(values: &[f64], weights: &[f64], cap: f64) -> Model {
        let mut m = Model::new("knap", Direction::Maximize);
        let terms: Vec<_> = values
            .iter()
            .zip(weights)
            .enumerate()
            .map(|(i, (&v, &w))| (m.add_var(format!("x{i}"), 0.0, 1.0, true, v), w))
            .collect();
        m.add_constraint("cap", terms, Cmp::Le, cap);
        m
    }

    fn brute_knapsack(values: &[f64], weights: &[f64], cap: f64) -> f64 {
        (0u32..1 << values.len())
            .filter_map(|mask| {
                let (mut v, mut w) = (0.0, 0.0);
                for i in 0..values.len() {
                    if mask >> i & 1 == 1 {
                        v += values[i];
                        w += weights[i];
                    }
                }
                (w <= cap).then_some(v)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn knapsack_is_exact() {
        let values = [10.0, 13.0, 7.0, 8.0, 2.0, 6.0];
        let weights = [5.0, 7.0, 4.0, 4.0, 1.0, 3.0];
        let m = knapsack(&values, &weights, 12.0);
        let sol = solve(&m, &Budget::default(), None, None).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - brute_knapsack(&values, &weights, 12.0)).abs() < 1e-9);
        assert!(m.max_violation(&sol.values) < 1e-9);
    }

    #[test]
    fn dropped_states_are_rebuilt() {
        let values: Vec<f64> = (0..12).map(|i| f64::from(3 + (i * 5) % 13)).collect();
        let weights: Vec<f64> = (0..12).map(|i| f64::from(2 + (i * 7) % 9)).collect();
        let m = knapsack(&values, &weights, 23.5);
        let warm = solve(&m, &Budget::default(), None, None).unwrap();
        for limit in [0, 1, 3] {
            let cold = solve_limited(&m, &Budget::default(), None, None, limit).unwrap();
            assert_eq!(cold.status, SolveStatus::Optimal);
            assert_eq!(cold.objective, warm.objective);
        }
        assert_eq!(warm.objective, brute_knapsack(&values, &weights, 23.5));
    }

    #[test]
    fn general_integer_and_infeasible() {
        // max x + y, 2x + 2y <= 5, integer -> 2.
        let mut m = Model::new("int", Direction::Maximize);
        let x = m.add_var("x", 0.0, f64::INFINITY, true, 1.0);
        let y = m.add_var("y", 0.0, f64::INFINITY, true, 1.0);
        m.add_constraint("c", vec![(x, 2.0), (y, 2.0)], Cmp::Le, 5.0);
        let sol = solve(&m, &Budget::default(), None, None).unwrap();
        assert_eq!(sol.objective, 2.0);
        m.add_constraint("d", vec![(x, 1.0)], Cmp::Ge, 3.0);
        assert_eq!(solve(&m, &Budget::default(), None, None).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn budget_reports_gap() {
        let values: Vec<f64> = (0..14).map(|i| f64::from(10 + (i * 7) % 11)).collect();
        let weights: Vec<f64> = (0..14).map(|i| f64::from(5 + (i * 5) % 9)).collect();
        let m = knapsack(&values, &weights, 31.5);
        let tight = Budget {
            max_nodes: 3,
            ..Default::default()
        };
        let start = vec![0.0; 14];
        let sol = solve(&m, &tight, Some(start), None).unwrap();
        assert!(matches!(sol.status, SolveStatus::Feasible | SolveStatus::Optimal));
        assert!(sol.bound >= sol.objective);
        let full = solve(&m, &Budget::default(), None, None).unwrap();
        assert_eq!(full.status, SolveStatus::Optimal);
        assert!((full.objective - brute_knapsack(&values, &weights, 31.5)).abs() < 1e-9);
        assert!(sol.bound + 1e-9 >= full.objective);
    }

    #[test]
    fn minimize_direction() {
        // min 3a + 2b, a + b >= 3.5, integers -> a=0, b=4 -> 8.
        let mut m = Model::new("min", Direction::Minimize);
        let a = m.add_var("a", 0.0, 10.0, true, 3.0);
        let b = m.add_var("b", 0.0, 10.0, true, 2.0);
        m.add_constraint("c", vec![(a, 1.0), (b, 1.0)], Cmp::Ge, 3.5);
        let sol = solve(&m, &Budget::default(), None, None).unwrap();
        assert_eq!(sol.objective, 8.0);
    }

    #[test]
    fn invalid_models_rejected() {
        let mut m = Model::new("bad", Direction::Maximize);
        let x = m.add_var("x", 2.0, 1.0, false, 1.0);
        assert!(m.validate().is_err());
        m.vars[x].upper = 3.0;
        m.add_constraint("c", vec![(x, 1.0), (x, 2.0)], Cmp::Le, 1.0);
        assert!(m.validate().is_err());
    }
}
