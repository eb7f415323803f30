//! Scalar abstractions shared by the geometry, channel, assignment and
//! scheduling code.
//!
//! Floating-point kernels are written against [`Real`] so they run in `f32`
//! or `f64`. The assignment solver only needs an ordered additive group, which
//! [`Weight`] captures; integers (exact round-robin counters), floats, and the
//! lexicographic [`Lex`] pair all implement it.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive, Zero};

/// Floating-point scalar used by the physical models.
pub trait Real:
    Weight + Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal or config value.
    #[inline]
    fn lit(x: f64) -> Self {
        // Every finite f64 maps to f32/f64 (possibly rounded).
        Self::from_f64(x).expect("finite f64 literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Edge weight for linear sum assignment.
///
/// Needs `+`, `-`, a zero, and a total order on the values actually used
/// (NaN is never fed to the solver).
pub trait Weight: Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Zero + Debug {}

impl Weight for i32 {}
impl Weight for i64 {}
impl Weight for i128 {}
impl Weight for f32 {}
impl Weight for f64 {}

/// Lexicographic pair: `major` is compared first, `minor` breaks ties.
///
/// Componentwise addition keeps this an ordered abelian group, so the
/// shortest-augmenting-path duals stay valid. Used to minimise the number of
/// unmatched rows before the actual cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lex<W> {
    pub major: i64,
    pub minor: W,
}

impl<W> Lex<W> {
    pub fn new(major: i64, minor: W) -> Self {
        Self { major, minor }
    }
}

impl<W: Weight> PartialOrd for Lex<W> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match self.major.cmp(&other.major) {
            std::cmp::Ordering::Equal => self.minor.partial_cmp(&other.minor),
            ord => Some(ord),
        }
    }
}

impl<W: Weight> Add for Lex<W> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.major + rhs.major, self.minor + rhs.minor)
    }
}

impl<W: Weight> Sub for Lex<W> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.major - rhs.major, self.minor - rhs.minor)
    }
}

impl<W: Weight> Zero for Lex<W> {
    fn zero() -> Self {
        Self::new(0, W::zero())
    }
    fn is_zero(&self) -> bool {
        self.major == 0 && self.minor.is_zero()
    }
}

impl<W: Weight> Weight for Lex<W> {}

impl<W: Display> Display for Lex<W> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.major, self.minor)
    }
}
