//! Scalar abstraction shared by plain floating point evaluation and the
//! reverse-mode tape.
//!
//! Every numeric routine in this crate (dynamics rollout, robustness,
//! the synthesis objective) is written once against [`Scalar`]. Running it
//! with `f64` gives a plain value; running it with [`Var`](crate::ad::Var)
//! records the same arithmetic on a tape so gradients can be pulled back.
//! Because both paths execute identical operations, traced values are
//! bitwise equal to plain values.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{Float, FromPrimitive, ToPrimitive, Zero};

use crate::ad::Var;
use crate::dynamics::CustomDynamics;

/// Primitive floating point types: f32 or f64.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
    + Scalar<Prim = Self>
{
}

impl Real for f32 {}
impl Real for f64 {}

/// A value that the semantics can compute with.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    type Prim: Real;

    /// A value that carries no derivative information.
    fn constant(v: Self::Prim) -> Self;

    fn value(self) -> Self::Prim;

    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;

    /// Square root with a zero subgradient at the origin.
    fn sqrt(self) -> Self;

    /// Dispatches a user supplied dynamics step to the matching
    /// (plain or traced) implementation.
    fn custom_step(model: &dyn CustomDynamics<Self::Prim>, x: &[Self], u: &[Self]) -> Vec<Self>;

    /// Dispatches a user supplied workspace map.
    fn custom_workspace(model: &dyn CustomDynamics<Self::Prim>, x: &[Self]) -> [Self; 2];

    fn lit(v: f64) -> Self {
        Self::constant(<Self::Prim as FromPrimitive>::from_f64(v).expect("literal representable"))
    }

    fn is_zero(self) -> bool {
        self.value() == <Self::Prim as Zero>::zero()
    }

    /// Returns `self` unless `other` is strictly smaller; the first operand
    /// wins ties so derivative routing is deterministic.
    fn min_of(self, other: Self) -> Self {
        if other.value() < self.value() {
            other
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other.value() > self.value() {
            other
        } else {
            self
        }
    }

    /// Saturates the value into `[lo, hi]`; outside the range the result is
    /// a constant.
    fn clamp_to(self, lo: Self::Prim, hi: Self::Prim) -> Self {
        let v = self.value();
        if v < lo {
            Self::constant(lo)
        } else if v > hi {
            Self::constant(hi)
        } else {
            self
        }
    }

    fn scale(self, k: Self::Prim) -> Self {
        self * Self::constant(k)
    }
}

macro_rules! impl_plain_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type Prim = $t;

            #[inline]
            fn constant(v: $t) -> Self {
                v
            }
            #[inline]
            fn value(self) -> $t {
                self
            }
            #[inline]
            fn exp(self) -> Self {
                Float::exp(self)
            }
            #[inline]
            fn sin(self) -> Self {
                Float::sin(self)
            }
            #[inline]
            fn cos(self) -> Self {
                Float::cos(self)
            }
            #[inline]
            fn sqrt(self) -> Self {
                Float::sqrt(self)
            }
            fn custom_step(model: &dyn CustomDynamics<$t>, x: &[Self], u: &[Self]) -> Vec<Self> {
                model.step(x, u)
            }
            fn custom_workspace(model: &dyn CustomDynamics<$t>, x: &[Self]) -> [Self; 2] {
                model.workspace(x)
            }
        }
    };
}

impl_plain_scalar!(f32);
impl_plain_scalar!(f64);

impl<'t, F: Real> Scalar for Var<'t, F> {
    type Prim = F;

    fn constant(v: F) -> Self {
        Var::constant(v)
    }
    fn value(self) -> F {
        Var::value(&self)
    }
    fn exp(self) -> Self {
        Var::exp(self)
    }
    fn sin(self) -> Self {
        Var::sin(self)
    }
    fn cos(self) -> Self {
        Var::cos(self)
    }
    fn sqrt(self) -> Self {
        Var::sqrt(self)
    }
    fn custom_step(model: &dyn CustomDynamics<F>, x: &[Self], u: &[Self]) -> Vec<Self> {
        model.step_traced(x, u)
    }
    fn custom_workspace(model: &dyn CustomDynamics<F>, x: &[Self]) -> [Self; 2] {
        model.workspace_traced(x)
    }
}

/// Arithmetic mean of a nonempty slice.
pub(crate) fn mean<S: Scalar>(xs: &[S]) -> S {
    let n = S::Prim::from_usize(xs.len()).expect("length representable");
    let sum = xs[1..].iter().fold(xs[0], |acc, &x| acc + x);
    sum / S::constant(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_and_max_prefer_first_operand_on_ties() {
        assert_eq!(Scalar::min_of(1.0_f64, 1.0), 1.0);
        assert_eq!(Scalar::max_of(-0.0_f64, 0.0).to_bits(), (-0.0_f64).to_bits());
    }

    #[test]
    fn clamp_saturates() {
        assert_eq!(Scalar::clamp_to(80.0_f64, -50.0, 50.0), 50.0);
        assert_eq!(Scalar::clamp_to(-80.0_f32, -50.0, 50.0), -50.0);
        assert_eq!(Scalar::clamp_to(3.0_f64, -50.0, 50.0), 3.0);
    }

    #[test]
    fn mean_of_values() {
        assert_eq!(mean(&[1.0_f64, 2.0, 6.0]), 3.0);
    }
}
