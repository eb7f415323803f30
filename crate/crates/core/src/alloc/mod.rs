//! Pairwise key allocation and the single-phase baselines.

pub mod baseline;
pub mod lp_format;
pub mod milp;
pub mod pairs;
pub mod phase2;

pub use baseline::{solve_baseline, BaselineObjective, BaselineOutcome};
pub use milp::{Budget, MilpError, SolveStatus};
pub use pairs::{AllocViolation, PairAllocation, PairSet};
pub use phase2::{iterate_phase2, possible_pairs, solve_phase2_maxmin, solve_phase2_maxsum, IterateOutcome, Phase2Outcome};
