//! Floating-point scalar abstraction shared by every numerical kernel.
//!
//! All algorithms in this crate are written against [`Scalar`], which is
//! implemented for `f32` and `f64`. Constants enter through [`Scalar::lit`]
//! so that the same code path serves both precisions.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point type usable by the solvers.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`, rounding to nearest.
    fn lit(x: f64) -> Self;

    /// Converts a count or index into `Self`.
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    /// Widens to `f64` (used for reporting and file output).
    fn to_f64_lossy(self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

/// Compensated (Neumaier) accumulator.
///
/// The rounding error of the final sum is bounded by about `2·ulp·Σ|terms|`
/// independently of the number of terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T: Scalar> {
    sum: T,
    comp: T,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}
