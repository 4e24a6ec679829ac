//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every finite `f64` is representable (with rounding)
    /// by the implementors, so this never fails for finite input.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in a float")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Default central finite-difference step for first derivatives.
    fn fd_step() -> Self;

    /// Default step for second differences.
    fn fd_step2() -> Self;
}

impl Real for f64 {
    #[inline]
    fn fd_step() -> Self {
        1e-5
    }

    #[inline]
    fn fd_step2() -> Self {
        1e-4
    }
}

impl Real for f32 {
    #[inline]
    fn fd_step() -> Self {
        // cube root of f32 epsilon
        5e-3
    }

    #[inline]
    fn fd_step2() -> Self {
        3e-2
    }
}

/// Euclidean inner product.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Euclidean length.
#[inline]
pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
