//! Floating-point scalar abstraction shared by the analytic and limit-process code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// A real scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_count(k: usize) -> Self {
        Self::from_usize(k).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Absolute tolerance that root finders aim for in this precision.
    fn root_tolerance() -> Self;
}

impl Scalar for f32 {
    fn root_tolerance() -> Self {
        1e-6
    }
}

impl Scalar for f64 {
    fn root_tolerance() -> Self {
        1e-12
    }
}
