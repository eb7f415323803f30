//! Discrete-time scheduling and pairwise key allocation for QKD satellite
//! constellations with a single downlink per satellite.
//!
//! The pipeline runs scenario → orbit → channel → weather → sched → alloc →
//! metrics. Physical models are generic over [`num::Real`]; the aliases
//! below fix the default precision.

pub mod alloc;
pub mod assign;
pub mod channel;
pub mod cli;
pub mod metrics;
pub mod num;
pub mod orbit;
pub mod scenario;
pub mod sched;
pub mod weather;

pub use num::{Real, Weight};

/// Default floating-point scalar.
pub type Scalar = f64;
/// Channel table in the default precision.
pub type Table = channel::ChannelTable<Scalar>;
/// Channel table in single precision.
pub type Table32 = channel::ChannelTable<f32>;
/// Visibility table in the default precision.
pub type Visibility = orbit::VisibilityTable<Scalar>;
