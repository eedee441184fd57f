//! Arbitrary-precision real backed by MPFR.
//!
//! New values take their precision from a thread-local context set with
//! [`with_precision`]; arithmetic results keep the precision of the left operand.

use std::cell::Cell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Constant;
use rug::Float;

use super::precision::Precision;
use super::real::Real;

thread_local! {
    static CONTEXT_BITS: Cell<u32> = const { Cell::new(256) };
}

/// Significand bits used for newly created values on this thread.
pub fn context_bits() -> u32 {
    CONTEXT_BITS.with(|c| c.get())
}

/// Runs `f` with the thread's MPFR precision set to `bits`, restoring it after.
pub fn with_precision<T>(bits: u32, f: impl FnOnce() -> T) -> T {
    struct Restore(u32);
    impl Drop for Restore {
        fn drop(&mut self) {
            CONTEXT_BITS.with(|c| c.set(self.0));
        }
    }
    let _restore = Restore(CONTEXT_BITS.with(|c| c.replace(bits)));
    f()
}

#[derive(Clone, Debug)]
pub struct MpFloat(Float);

impl MpFloat {
    pub fn from_rug(f: Float) -> Self {
        Self(f)
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    /// Copy rounded to `bits` of significand.
    pub fn with_bits(&self, bits: u32) -> Self {
        Self(Float::with_val(bits, &self.0))
    }

    pub fn bits(&self) -> u32 {
        self.0.prec()
    }
}

impl PartialEq for MpFloat {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for MpFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl Neg for MpFloat {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

macro_rules! mp_binop {
    ($tr:ident, $f:ident, $tra:ident, $fa:ident) => {
        impl $tr for MpFloat {
            type Output = MpFloat;
            #[inline]
            fn $f(mut self, rhs: MpFloat) -> MpFloat {
                self.0.$fa(rhs.0);
                self
            }
        }
        impl<'a> $tr<&'a MpFloat> for MpFloat {
            type Output = MpFloat;
            #[inline]
            fn $f(mut self, rhs: &'a MpFloat) -> MpFloat {
                self.0.$fa(&rhs.0);
                self
            }
        }
        impl $tra for MpFloat {
            #[inline]
            fn $fa(&mut self, rhs: MpFloat) {
                self.0.$fa(rhs.0);
            }
        }
        impl<'a> $tra<&'a MpFloat> for MpFloat {
            #[inline]
            fn $fa(&mut self, rhs: &'a MpFloat) {
                self.0.$fa(&rhs.0);
            }
        }
    };
}

mp_binop!(Add, add, AddAssign, add_assign);
mp_binop!(Sub, sub, SubAssign, sub_assign);
mp_binop!(Mul, mul, MulAssign, mul_assign);
mp_binop!(Div, div, DivAssign, div_assign);

impl fmt::Display for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(((self.0.prec() as f64) * std::f64::consts::LOG10_2).ceil() as usize);
        write!(f, "{}", self.0.to_string_radix(10, Some(digits)))
    }
}

impl Real for MpFloat {
    fn precision_bits() -> u32 {
        context_bits()
    }

    fn precision(&self) -> Precision {
        Precision::Multi(self.0.prec())
    }

    fn from_f64(x: f64) -> Self {
        Self(Float::with_val(context_bits(), x))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    fn to_float(&self, bits: u32) -> Float {
        if bits <= self.0.prec() {
            self.0.clone()
        } else {
            Float::with_val(bits, &self.0)
        }
    }

    fn from_float(f: &Float) -> Self {
        Self(Float::with_val(context_bits(), f))
    }

    fn from_decimal(s: &str) -> Self {
        let v = Float::parse(s.trim()).expect("invalid decimal literal");
        Self(Float::with_val(context_bits(), v))
    }

    fn pi() -> Self {
        Self(Float::with_val(context_bits(), Constant::Pi))
    }

    fn abs(&self) -> Self {
        Self(self.0.clone().abs())
    }

    fn sqrt(&self) -> Self {
        Self(self.0.clone().sqrt())
    }

    fn exp(&self) -> Self {
        Self(self.0.clone().exp())
    }

    fn ln(&self) -> Self {
        Self(self.0.clone().ln())
    }

    fn sin_cos(&self) -> (Self, Self) {
        let (s, c) = self.0.clone().sin_cos(Float::new(self.0.prec()));
        (Self(s), Self(c))
    }

    fn atan2(&self, x: &Self) -> Self {
        Self(self.0.clone().atan2(&x.0))
    }

    fn mul_pow2(&self, e: i32) -> Self {
        Self(self.0.clone() << e)
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative()
    }

    fn log2_abs(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        if !self.0.is_finite() {
            return if self.0.is_nan() { f64::NAN } else { f64::INFINITY };
        }
        let (m, e) = self.0.to_f64_exp();
        m.abs().log2() + e as f64
    }

    fn unit_roundoff() -> Self {
        Self(Float::with_val(context_bits(), 1) >> context_bits() as i32)
    }
}
