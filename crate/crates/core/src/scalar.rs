//! Scalar abstractions.
//!
//! Two tiers are used across the crate:
//!
//! * [`Scalar`] is any ordered field-like number type that can be converted
//!   to and from `f64`. It covers `f32`, `f64` and exact rationals
//!   ([`Rational`]). Group arithmetic and the combinatorial parts of the
//!   Milnor construction only need this tier, so they can be run exactly.
//! * [`Real`] adds the transcendental functions of [`num_traits::Float`] and
//!   is what the smooth-function machinery (bumps, quadrature, finite
//!   differences) needs.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Num
    + Neg<Output = Self>
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// Converts a finite `f64`. Non-finite input is a caller bug.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| panic!("scalar cannot represent {x}"))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn magnitude(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Largest integer not above `self`.
    fn floor_value(&self) -> Self;
}

impl Scalar for f32 {
    fn floor_value(&self) -> Self {
        self.floor()
    }
}

impl Scalar for f64 {
    fn floor_value(&self) -> Self {
        self.floor()
    }
}

impl Scalar for Rational {
    fn floor_value(&self) -> Self {
        self.floor()
    }
}

/// Floating point scalar: `f32` or `f64`.
pub trait Real: Scalar + Float + FloatConst + Copy + Display + Default {}

impl<T> Real for T where T: Scalar + Float + FloatConst + Copy + Display + Default {}

#[inline]
pub(crate) fn c<T: Real>(x: f64) -> T {
    T::lit(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_roundtrips_dyadic_values() {
        let q = Rational::lit(0.375);
        assert_eq!(q.to_f64_lossy(), 0.375);
        assert_eq!((-q.clone()).magnitude(), q);
        assert_eq!(Rational::lit(-0.25).floor_value(), Rational::lit(-1.0));
    }

    #[test]
    fn f32_is_real() {
        fn half<T: Real>() -> T {
            c::<T>(0.5)
        }
        assert_eq!(half::<f32>(), 0.5f32);
    }
}
