//! The [`Scalar`] abstraction: one set of formulas, two evaluation modes.
//!
//! All numeric code in this crate is generic over `Scalar`. Instantiated with
//! `f64` it is a plain forward evaluation (used for inference, metrics and the
//! finite-difference oracle); instantiated with [`crate::tape::Var`] the same
//! code records a computation graph for reverse-mode differentiation.

use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::math;

/// Lower bound for the argument of `acosh` ([`Scalar::acosh_clamped`]).
///
/// Rounding can push the Lorentz inner product of near-identical points a hair
/// below 1; clamping to this bound absorbs that noise. The clamp acts as a
/// stop-gradient while it is active.
pub const ACOSH_ARG_MIN: f64 = 1.0 + 1e-12;

/// A differentiable-or-plain scalar.
///
/// Implementors: `f64` (plain evaluation) and [`crate::tape::Var`]
/// (tape-recorded). `val` exposes the current numeric value for control flow;
/// branching on it routes gradients through the branch that was taken, which is
/// the subgradient convention used throughout (top-k selection, thresholding,
/// elementwise max).
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + Sized
{
    /// Current numeric value.
    fn val(&self) -> f64;

    /// A constant in the same evaluation context as `self` (for `Var`, a leaf
    /// on the same tape; for `f64`, just the value).
    fn lit(&self, c: f64) -> Self;

    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn cosh(&self) -> Self;
    fn sinh(&self) -> Self;

    /// `acosh(max(x, ACOSH_ARG_MIN))`; zero gradient while the clamp is active.
    fn acosh_clamped(&self) -> Self;

    fn sigmoid(&self) -> Self;
    fn relu(&self) -> Self;

    /// Sigmoid-gated linear unit `x * sigmoid(x)`.
    fn silu(&self) -> Self;

    /// Clamp to `[lo, hi]` with zero gradient outside the interval.
    fn clamp_stop(&self, lo: f64, hi: f64) -> Self;

    /// Elementwise maximum; gradient routed to the larger operand (ties go to
    /// `self`).
    fn max(&self, other: &Self) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn val(&self) -> f64 {
        *self
    }

    #[inline]
    fn lit(&self, c: f64) -> Self {
        c
    }

    #[inline]
    fn exp(&self) -> Self {
        math::exp(*self)
    }

    #[inline]
    fn ln(&self) -> Self {
        math::ln(*self)
    }

    #[inline]
    fn sqrt(&self) -> Self {
        math::sqrt(*self)
    }

    #[inline]
    fn cosh(&self) -> Self {
        math::cosh(*self)
    }

    #[inline]
    fn sinh(&self) -> Self {
        math::sinh(*self)
    }

    #[inline]
    fn acosh_clamped(&self) -> Self {
        math::acosh(math::fmax(*self, ACOSH_ARG_MIN))
    }

    #[inline]
    fn sigmoid(&self) -> Self {
        math::sigmoid(*self)
    }

    #[inline]
    fn relu(&self) -> Self {
        if *self > 0.0 {
            *self
        } else {
            0.0
        }
    }

    #[inline]
    fn silu(&self) -> Self {
        *self * math::sigmoid(*self)
    }

    #[inline]
    fn clamp_stop(&self, lo: f64, hi: f64) -> Self {
        if *self < lo {
            lo
        } else if *self > hi {
            hi
        } else {
            *self
        }
    }

    #[inline]
    fn max(&self, other: &Self) -> Self {
        if *self >= *other {
            *self
        } else {
            *other
        }
    }
}
