//! Forward-mode dual numbers, nestable to higher derivative orders.
//!
//! A [`Dual`] carries a value and one tangent. Nesting (`Dual<Dual<f64>>`,
//! ...) yields exact higher-order directional derivatives; the [`Lift`]
//! ladder in [`crate::scalar`] wires a fixed-height tower of these types so
//! that expression evaluation can climb one derivative level at a time.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

use crate::scalar::{Lift, Scalar, MAX_LIFT_DEPTH};

/// Value plus tangent: `re + du·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<F> {
    /// Value part.
    pub re: F,
    /// Tangent (derivative) part.
    pub du: F,
}

impl<F: Scalar> Dual<F> {
    #[inline]
    pub fn new(re: F, du: F) -> Self {
        Dual { re, du }
    }

    /// Embed a plain value with zero tangent.
    #[inline]
    pub fn constant(re: F) -> Self {
        Dual { re, du: F::zero() }
    }

    /// Embed a value with unit tangent: the differentiation variable.
    #[inline]
    pub fn seeded(re: F) -> Self {
        Dual { re, du: F::one() }
    }

    /// Apply a scalar function given its value and derivative at `self.re`.
    #[inline]
    fn chain(self, value: F, slope: F) -> Self {
        Dual {
            re: value,
            du: slope * self.du,
        }
    }
}

impl<F: Scalar> fmt::Display for Dual<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}ε", self.re, self.du)
    }
}

impl<F: Scalar> Add for Dual<F> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.re + rhs.re, self.du + rhs.du)
    }
}

impl<F: Scalar> Sub for Dual<F> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.re - rhs.re, self.du - rhs.du)
    }
}

impl<F: Scalar> Mul for Dual<F> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual::new(self.re * rhs.re, self.re * rhs.du + self.du * rhs.re)
    }
}

impl<F: Scalar> Div for Dual<F> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        Dual::new(
            self.re / rhs.re,
            (self.du * rhs.re - self.re * rhs.du) / (rhs.re * rhs.re),
        )
    }
}

impl<F: Scalar> Rem for Dual<F> {
    type Output = Self;
    #[inline]
    fn rem(self, rhs: Self) -> Self {
        // x % y = x − y·trunc(x/y); the quotient is piecewise constant.
        let q = (self.re / rhs.re).trunc();
        Dual::new(self.re % rhs.re, self.du - rhs.du * q)
    }
}

impl<F: Scalar> Neg for Dual<F> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.du)
    }
}

impl<F: Scalar> PartialOrd for Dual<F> {
    /// Ordering compares value parts only; tangents do not participate.
    #[inline]
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl<F: Scalar> Zero for Dual<F> {
    #[inline]
    fn zero() -> Self {
        Dual::constant(F::zero())
    }
    #[inline]
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.du.is_zero()
    }
}

impl<F: Scalar> One for Dual<F> {
    #[inline]
    fn one() -> Self {
        Dual::constant(F::one())
    }
}

impl<F: Scalar> Num for Dual<F> {
    type FromStrRadixErr = F::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        F::from_str_radix(s, radix).map(Dual::constant)
    }
}

impl<F: Scalar> ToPrimitive for Dual<F> {
    fn to_i64(&self) -> Option<i64> {
        self.re.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.re.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        self.re.to_f64()
    }
}

impl<F: Scalar> FromPrimitive for Dual<F> {
    fn from_i64(n: i64) -> Option<Self> {
        F::from_i64(n).map(Dual::constant)
    }
    fn from_u64(n: u64) -> Option<Self> {
        F::from_u64(n).map(Dual::constant)
    }
    fn from_f64(n: f64) -> Option<Self> {
        F::from_f64(n).map(Dual::constant)
    }
}

impl<F: Scalar> NumCast for Dual<F> {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        F::from(n).map(Dual::constant)
    }
}

macro_rules! dual_consts {
    ($($name:ident),* $(,)?) => {
        $(
            #[inline]
            fn $name() -> Self {
                Dual::constant(F::$name())
            }
        )*
    };
}

impl<F: Scalar> FloatConst for Dual<F> {
    dual_consts!(
        E,
        FRAC_1_PI,
        FRAC_1_SQRT_2,
        FRAC_2_PI,
        FRAC_2_SQRT_PI,
        FRAC_PI_2,
        FRAC_PI_3,
        FRAC_PI_4,
        FRAC_PI_6,
        FRAC_PI_8,
        LN_10,
        LN_2,
        LOG10_E,
        LOG2_E,
        PI,
        SQRT_2,
    );
}

impl<F: Scalar> Float for Dual<F> {
    fn nan() -> Self {
        Dual::constant(F::nan())
    }
    fn infinity() -> Self {
        Dual::constant(F::infinity())
    }
    fn neg_infinity() -> Self {
        Dual::constant(F::neg_infinity())
    }
    fn neg_zero() -> Self {
        Dual::constant(F::neg_zero())
    }
    fn min_value() -> Self {
        Dual::constant(F::min_value())
    }
    fn min_positive_value() -> Self {
        Dual::constant(F::min_positive_value())
    }
    fn max_value() -> Self {
        Dual::constant(F::max_value())
    }
    fn epsilon() -> Self {
        Dual::constant(F::epsilon())
    }

    fn is_nan(self) -> bool {
        self.re.is_nan() || self.du.is_nan()
    }
    fn is_infinite(self) -> bool {
        !self.is_nan() && (self.re.is_infinite() || self.du.is_infinite())
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.du.is_finite()
    }
    fn is_normal(self) -> bool {
        self.re.is_normal()
    }
    fn classify(self) -> std::num::FpCategory {
        self.re.classify()
    }

    fn floor(self) -> Self {
        Dual::constant(self.re.floor())
    }
    fn ceil(self) -> Self {
        Dual::constant(self.re.ceil())
    }
    fn round(self) -> Self {
        Dual::constant(self.re.round())
    }
    fn trunc(self) -> Self {
        Dual::constant(self.re.trunc())
    }
    fn fract(self) -> Self {
        Dual::new(self.re.fract(), self.du)
    }

    fn abs(self) -> Self {
        if self.re >= F::zero() {
            self
        } else {
            -self
        }
    }
    fn signum(self) -> Self {
        Dual::constant(self.re.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.re.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.re.is_sign_negative()
    }

    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        let inv = self.re.recip();
        self.chain(inv, -inv * inv)
    }

    fn powi(self, n: i32) -> Self {
        let slope = F::from_i32(n).expect("exponent fits scalar") * self.re.powi(n - 1);
        self.chain(self.re.powi(n), slope)
    }
    fn powf(self, n: Self) -> Self {
        // d(x^y) = x^y (y dx/x + ln x dy)
        let v = self.re.powf(n.re);
        Dual::new(
            v,
            v * (n.re * self.du / self.re + self.re.ln() * n.du),
        )
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        self.chain(r, (r + r).recip())
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn exp2(self) -> Self {
        let e = self.re.exp2();
        self.chain(e, e * F::LN_2())
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), self.re.recip())
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.chain(self.re.log2(), (self.re * F::LN_2()).recip())
    }
    fn log10(self) -> Self {
        self.chain(self.re.log10(), (self.re * F::LN_10()).recip())
    }

    fn max(self, other: Self) -> Self {
        if self.re >= other.re {
            self
        } else {
            other
        }
    }
    fn min(self, other: Self) -> Self {
        if self.re <= other.re {
            self
        } else {
            other
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        if self.re > other.re {
            self - other
        } else {
            Self::zero()
        }
    }
    fn cbrt(self) -> Self {
        let c = self.re.cbrt();
        self.chain(c, (F::of(3.0) * c * c).recip())
    }
    fn hypot(self, other: Self) -> Self {
        let h = self.re.hypot(other.re);
        Dual::new(h, (self.re * self.du + other.re * other.du) / h)
    }

    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn tan(self) -> Self {
        let c = self.re.cos();
        self.chain(self.re.tan(), (c * c).recip())
    }
    fn asin(self) -> Self {
        self.chain(
            self.re.asin(),
            (F::one() - self.re * self.re).sqrt().recip(),
        )
    }
    fn acos(self) -> Self {
        self.chain(
            self.re.acos(),
            -(F::one() - self.re * self.re).sqrt().recip(),
        )
    }
    fn atan(self) -> Self {
        self.chain(self.re.atan(), (F::one() + self.re * self.re).recip())
    }
    fn atan2(self, other: Self) -> Self {
        let denom = self.re * self.re + other.re * other.re;
        Dual::new(
            self.re.atan2(other.re),
            (other.re * self.du - self.re * other.du) / denom,
        )
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn exp_m1(self) -> Self {
        self.chain(self.re.exp_m1(), self.re.exp())
    }
    fn ln_1p(self) -> Self {
        self.chain(self.re.ln_1p(), (F::one() + self.re).recip())
    }
    fn sinh(self) -> Self {
        self.chain(self.re.sinh(), self.re.cosh())
    }
    fn cosh(self) -> Self {
        self.chain(self.re.cosh(), self.re.sinh())
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        self.chain(t, F::one() - t * t)
    }
    fn asinh(self) -> Self {
        self.chain(
            self.re.asinh(),
            (self.re * self.re + F::one()).sqrt().recip(),
        )
    }
    fn acosh(self) -> Self {
        self.chain(
            self.re.acosh(),
            (self.re * self.re - F::one()).sqrt().recip(),
        )
    }
    fn atanh(self) -> Self {
        self.chain(self.re.atanh(), (F::one() - self.re * self.re).recip())
    }

    fn integer_decode(self) -> (u64, i16, i8) {
        self.re.integer_decode()
    }
}

impl<F: Scalar> Scalar for Dual<F> {}

/// One level of the lift ladder between two concrete scalar types.
macro_rules! lift_step {
    ($lo:ty, $hi:ty, $left:expr) => {
        impl Lift for $lo {
            type Up = $hi;
            const DEPTH_LEFT: usize = $left;
            #[inline]
            fn lift(self) -> $hi {
                Dual::constant(self)
            }
            #[inline]
            fn lift_seeded(self) -> $hi {
                Dual::seeded(self)
            }
            #[inline]
            fn value_of(up: $hi) -> Self {
                up.re
            }
            #[inline]
            fn tangent_of(up: $hi) -> Self {
                up.du
            }
        }
    };
}

/// Tower cap: lifting past [`MAX_LIFT_DEPTH`] is a caller bug; evaluation
/// entry points check depth before descending.
macro_rules! lift_cap {
    ($ty:ty) => {
        impl Lift for $ty {
            type Up = $ty;
            const DEPTH_LEFT: usize = 0;
            fn lift(self) -> Self {
                panic!("dual tower exhausted (max depth {})", MAX_LIFT_DEPTH)
            }
            fn lift_seeded(self) -> Self {
                panic!("dual tower exhausted (max depth {})", MAX_LIFT_DEPTH)
            }
            fn value_of(_: Self) -> Self {
                panic!("dual tower exhausted (max depth {})", MAX_LIFT_DEPTH)
            }
            fn tangent_of(_: Self) -> Self {
                panic!("dual tower exhausted (max depth {})", MAX_LIFT_DEPTH)
            }
        }
    };
}

macro_rules! lift_ladder {
    ($base:ty) => {
        lift_step!($base, Dual<$base>, MAX_LIFT_DEPTH);
        lift_step!(Dual<$base>, Dual<Dual<$base>>, MAX_LIFT_DEPTH - 1);
        lift_step!(Dual<Dual<$base>>, Dual<Dual<Dual<$base>>>, MAX_LIFT_DEPTH - 2);
        lift_step!(
            Dual<Dual<Dual<$base>>>,
            Dual<Dual<Dual<Dual<$base>>>>,
            MAX_LIFT_DEPTH - 3
        );
        lift_step!(
            Dual<Dual<Dual<Dual<$base>>>>,
            Dual<Dual<Dual<Dual<Dual<$base>>>>>,
            MAX_LIFT_DEPTH - 4
        );
        lift_step!(
            Dual<Dual<Dual<Dual<Dual<$base>>>>>,
            Dual<Dual<Dual<Dual<Dual<Dual<$base>>>>>>,
            MAX_LIFT_DEPTH - 5
        );
        lift_cap!(Dual<Dual<Dual<Dual<Dual<Dual<$base>>>>>>);
    };
}

lift_ladder!(f64);
lift_ladder!(f32);

#[cfg(test)]
mod tests {
    use super::*;

    fn f(x: Dual<f64>) -> Dual<f64> {
        // x·sin(x²) + exp(−x)/ (1+x²)
        x * (x * x).sin() + (-x).exp() / (Dual::constant(1.0) + x * x)
    }

    fn f_plain(x: f64) -> f64 {
        x * (x * x).sin() + (-x).exp() / (1.0 + x * x)
    }

    #[test]
    fn first_derivative_matches_central_difference() {
        for &x in &[0.0, 0.3, 1.1, -2.7, 4.2] {
            let d = f(Dual::seeded(x));
            let h = 1e-6;
            let fd = (f_plain(x + h) - f_plain(x - h)) / (2.0 * h);
            assert!((d.re - f_plain(x)).abs() < 1e-14);
            assert!(
                (d.du - fd).abs() < 1e-7 * (1.0 + fd.abs()),
                "x={x}: ad={} fd={fd}",
                d.du
            );
        }
    }

    #[test]
    fn nested_dual_gives_second_derivative() {
        // g(x) = sin(x): g'' = −sin(x)
        for &x in &[0.2, 1.5, -0.9] {
            let xx: Dual<Dual<f64>> = Dual::seeded(Dual::seeded(x));
            let g = xx.sin();
            let second = g.du.du;
            assert!((second + x.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn lift_roundtrip() {
        let x = 3.25_f64;
        let up = x.lift_seeded();
        assert_eq!(f64::value_of(up), x);
        assert_eq!(f64::tangent_of(up), 1.0);
        let c = x.lift();
        assert_eq!(f64::tangent_of(c), 0.0);
    }

    #[test]
    fn division_and_power_rules() {
        let x = Dual::seeded(2.0_f64);
        let y = x.powi(3);
        assert_eq!(y.re, 8.0);
        assert_eq!(y.du, 12.0);
        let q = Dual::constant(1.0) / x;
        assert_eq!(q.du, -0.25);
        let s = x.sqrt();
        assert!((s.du - 0.5 / 2.0_f64.sqrt()).abs() < 1e-15);
    }
}
