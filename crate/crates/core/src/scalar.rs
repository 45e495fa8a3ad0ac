//! Floating-point abstraction used by the flow and codelength code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the map-equation code is generic over: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or edge weight.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 is representable")
    }

    /// `x * log2(x)`, with `0 * log2(0) = 0`. Non-positive input (including
    /// round-off below zero) contributes nothing.
    #[inline]
    fn plogp(self) -> Self {
        if self > Self::zero() {
            self * self.log2()
        } else {
            Self::zero()
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
