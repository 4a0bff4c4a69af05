//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive};

/// Floating point sample type: `f32` or `f64`.
///
/// Dense products (patch rendering, dictionary correlations) run in `Self`;
/// norms, objective terms and inner products used for convergence decisions
/// are accumulated in `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`.
    #[inline]
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).unwrap()
    }

    /// Widening conversion to `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Inner product accumulated in double precision.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.as_f64() * y.as_f64()).sum()
}

/// Squared Euclidean norm accumulated in double precision.
pub fn norm_sq<T: Real>(a: &[T]) -> f64 {
    a.iter().map(|x| {
        let v = x.as_f64();
        v * v
    }).sum()
}
