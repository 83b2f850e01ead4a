//! Scalar abstraction: the numeric kernels are generic over the floating
//! point type through [`Real`].

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar (f32 or f64).
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Conversion from an f64 constant.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    /// Conversion from an integer count.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize count fits in scalar")
    }

    /// Round-trip to f64 for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
