use std::fmt::LowerExp;

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Floating-point scalar the numerical core is written against.
///
/// Implemented for `f32` and `f64`. Everything in this crate is tested in
/// `f64`; the `f32` instantiation is only good to a few digits.
pub trait Real: RealField + Copy + ToPrimitive + LowerExp {}

impl<T> Real for T where T: RealField + Copy + ToPrimitive + LowerExp {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts `T` back to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub(crate) fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("integer representable in scalar type")
}
