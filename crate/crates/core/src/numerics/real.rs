//! Real scalar abstraction shared by every precision level.

use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use super::precision::Precision;

/// Real field used by the complex linear algebra.
///
/// Arithmetic is expressed as owned-left/borrowed-right so that heap-backed
/// types (MPFR floats) reuse the left operand's storage.
pub trait Real:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + for<'a> DivAssign<&'a Self>
{
    /// Significand bits carried by values created in the current context.
    fn precision_bits() -> u32;

    /// Precision level of this particular value.
    fn precision(&self) -> Precision;

    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    /// Value as an MPFR float with at least `bits` of significand.
    fn to_float(&self, bits: u32) -> rug::Float;

    /// Rounds an MPFR float to this level (multiprecision: context bits).
    fn from_float(f: &rug::Float) -> Self;

    /// Converts between precision levels through MPFR.
    fn convert<S: Real>(&self) -> S {
        S::from_float(&self.to_float(S::precision_bits().max(Self::precision_bits()).max(64)))
    }

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    /// Exact conversion of a small integer.
    fn from_i64(n: i64) -> Self {
        debug_assert!(n.unsigned_abs() < (1u64 << 53));
        Self::from_f64(n as f64)
    }

    /// Parses a decimal literal to full working precision.
    fn from_decimal(s: &str) -> Self;

    fn pi() -> Self;

    fn abs(&self) -> Self;

    fn sqrt(&self) -> Self;

    fn exp(&self) -> Self;

    fn ln(&self) -> Self;

    fn sin_cos(&self) -> (Self, Self);

    /// Four-quadrant arctangent of `self / x`, in [-π, π].
    fn atan2(&self, x: &Self) -> Self;

    /// Multiplies by 2^e exactly.
    fn mul_pow2(&self, e: i32) -> Self;

    fn is_zero(&self) -> bool;

    fn is_finite(&self) -> bool;

    fn is_sign_negative(&self) -> bool;

    /// log2|x| to roughly double accuracy; -inf for zero. Valid far beyond the
    /// f64 exponent range for multiprecision values.
    fn log2_abs(&self) -> f64;

    /// Unit roundoff as a power of two exponent: u = 2^(-bits).
    fn unit_roundoff() -> Self {
        Self::one().mul_pow2(-(Self::precision_bits() as i32))
    }

    fn sqr(&self) -> Self {
        self.clone() * self
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn hypot(&self, other: &Self) -> Self {
        let a = self.abs();
        let b = other.abs();
        let (big, small) = if a >= b { (a, b) } else { (b, a) };
        if big.is_zero() {
            return big;
        }
        let r = small / &big;
        big * (Self::one() + r.sqr()).sqrt()
    }

    /// Nearest power-of-two exponent of |x| (floor of log2), for balancing.
    fn exponent(&self) -> Option<i64> {
        if self.is_zero() || !self.is_finite() {
            None
        } else {
            Some(self.log2_abs().floor() as i64)
        }
    }
}

impl Real for f64 {
    fn precision_bits() -> u32 {
        53
    }

    fn precision(&self) -> Precision {
        Precision::Double
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_float(&self, bits: u32) -> rug::Float {
        rug::Float::with_val(bits.max(53), *self)
    }

    fn from_float(f: &rug::Float) -> Self {
        f.to_f64()
    }

    fn from_decimal(s: &str) -> Self {
        s.trim().parse().expect("invalid decimal literal")
    }

    fn pi() -> Self {
        std::f64::consts::PI
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn ln(&self) -> Self {
        f64::ln(*self)
    }

    fn sin_cos(&self) -> (Self, Self) {
        f64::sin_cos(*self)
    }

    fn atan2(&self, x: &Self) -> Self {
        f64::atan2(*self, *x)
    }

    fn mul_pow2(&self, e: i32) -> Self {
        let mut v = *self;
        let mut e = e;
        // powi of 2 stays exact; split to avoid intermediate overflow.
        while e > 1000 {
            v *= 2f64.powi(1000);
            e -= 1000;
        }
        while e < -1000 {
            v *= 2f64.powi(-1000);
            e += 1000;
        }
        v * 2f64.powi(e)
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn is_sign_negative(&self) -> bool {
        f64::is_sign_negative(*self)
    }

    fn log2_abs(&self) -> f64 {
        f64::abs(*self).log2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_hypot_avoids_overflow() {
        let x = 1e300_f64;
        assert!((Real::hypot(&x, &x) / 1e300 - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn f64_mul_pow2_large_exponents() {
        assert_eq!(Real::mul_pow2(&1.0f64, -1074), 5e-324);
        assert_eq!(Real::mul_pow2(&0.5f64, 1024), f64::MAX / f64::MAX * 2f64.powi(1023));
    }
}
