//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Default
    + serde::Serialize
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant. Every finite `f64` has a nearest value in both
    /// supported types, so this never fails for finite input.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in a float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Small dense-vector helpers on slices. Kept free-standing so hot loops can
/// work on caller-owned buffers.
pub mod vector {
    use super::Real;

    #[inline]
    pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
        a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
    }

    #[inline]
    pub fn norm_sq<T: Real>(a: &[T]) -> T {
        dot(a, a)
    }

    #[inline]
    pub fn norm<T: Real>(a: &[T]) -> T {
        norm_sq(a).sqrt()
    }

    #[inline]
    pub fn dist_sq<T: Real>(a: &[T], b: &[T]) -> T {
        a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
            let d = x - y;
            acc + d * d
        })
    }

    #[inline]
    pub fn dist<T: Real>(a: &[T], b: &[T]) -> T {
        dist_sq(a, b).sqrt()
    }

    pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
        a.iter().zip(b).map(|(&x, &y)| x - y).collect()
    }

    pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
        a.iter().zip(b).map(|(&x, &y)| x + y).collect()
    }

    pub fn scale<T: Real>(a: &[T], s: T) -> Vec<T> {
        a.iter().map(|&x| x * s).collect()
    }

    /// `a + s * b`
    pub fn axpy<T: Real>(a: &[T], s: T, b: &[T]) -> Vec<T> {
        a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
    }

    /// Unit vector along `a`, or `None` for the zero vector.
    pub fn normalized<T: Real>(a: &[T]) -> Option<Vec<T>> {
        let n = norm(a);
        if n > T::zero() && n.is_finite() {
            Some(scale(a, T::one() / n))
        } else {
            None
        }
    }

    pub fn all_finite<T: Real>(a: &[T]) -> bool {
        a.iter().all(|x| x.is_finite())
    }

    pub fn to_f64<T: Real>(a: &[T]) -> Vec<f64> {
        a.iter().map(|x| x.as_f64()).collect()
    }
}
