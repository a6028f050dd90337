//! Floating-point abstraction for the numeric core.
//!
//! Everything that crunches numbers in this crate is generic over [`Scalar`],
//! which is `f32`, `f64`, or a [`crate::dual::Dual`] tower built on top of
//! them. Forward-mode differentiation of coefficient fields works by
//! re-running the same evaluation code at the next [`Lift`] level.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the numeric core.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Shorthand conversion from `f64`; panics only if the target type cannot
    /// represent any `f64` at all, which none of our scalar types do.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("scalar conversion from f64")
    }

    /// Value collapsed to `f64` (derivative parts of dual towers are dropped).
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar conversion to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// A scalar that can be lifted one forward-mode derivative level.
///
/// `f64` lifts to `Dual<f64>`, which lifts to `Dual<Dual<f64>>`, and so on up
/// to a fixed tower height ([`MAX_LIFT_DEPTH`]). Covariant-derivative
/// expressions consume one level per nesting; public entry points check the
/// required depth before evaluating.
pub trait Lift: Scalar {
    /// The scalar type one derivative level up.
    type Up: Lift;

    /// Remaining levels above this type in the tower.
    const DEPTH_LEFT: usize;

    /// Embed as a constant (zero tangent).
    fn lift(self) -> Self::Up;

    /// Embed with unit tangent: the variable we differentiate with respect to.
    fn lift_seeded(self) -> Self::Up;

    /// Value part of a lifted scalar.
    fn value_of(up: Self::Up) -> Self;

    /// Tangent part of a lifted scalar.
    fn tangent_of(up: Self::Up) -> Self;
}

/// Height of the dual-number tower: the deepest supported nesting of
/// covariant-derivative expressions plus explicitly requested derivative
/// orders. Six levels cover bracket hierarchies to level 4 evaluated together
/// with second spatial derivatives.
pub const MAX_LIFT_DEPTH: usize = 6;
