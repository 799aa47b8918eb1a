//! Floating-point scalar abstraction: all simulator math runs over `f32` or
//! `f64` through this trait.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar type underlying every matrix, vector, and parameter.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for lifting an `f64` literal into the working scalar type.
pub(crate) fn r<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Real literal as a complex number.
pub(crate) fn cr<T: Scalar>(x: f64) -> Complex<T> {
    Complex::new(r(x), T::zero())
}

/// The imaginary unit.
pub(crate) fn im<T: Scalar>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}
