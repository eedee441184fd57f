//! Double-double arithmetic: an unevaluated sum `hi + lo` with |lo| <= ulp(hi)/2.

use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use rug::Float;

use super::eft::{atan2_kernel, exp_kernel, ln_kernel, quick_two_sum, sin_cos_kernel, two_prod, two_sum};
use super::precision::Precision;
use super::real::Real;

#[derive(Clone, Copy, Debug, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    pub const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn renorm(s: f64, e: f64) -> Self {
        if !s.is_finite() {
            return Self { hi: s, lo: 0.0 };
        }
        let (hi, lo) = quick_two_sum(s, e);
        Self { hi, lo }
    }

    fn add_dd(a: Self, b: Self) -> Self {
        let (s1, s2) = two_sum(a.hi, b.hi);
        if !s1.is_finite() {
            return Self { hi: s1, lo: 0.0 };
        }
        let (t1, t2) = two_sum(a.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Self::renorm(s1, s2 + t2)
    }

    fn mul_dd(a: Self, b: Self) -> Self {
        let (p1, p2) = two_prod(a.hi, b.hi);
        Self::renorm(p1, p2 + (a.hi * b.lo + a.lo * b.hi))
    }

    fn mul_f64(a: Self, b: f64) -> Self {
        let (p1, p2) = two_prod(a.hi, b);
        Self::renorm(p1, p2 + a.lo * b)
    }

    fn div_dd(a: Self, b: Self) -> Self {
        let q1 = a.hi / b.hi;
        if !q1.is_finite() || b.hi.is_infinite() {
            return Self { hi: q1, lo: 0.0 };
        }
        let r = Self::add_dd(a, -Self::mul_f64(b, q1));
        let q2 = r.hi / b.hi;
        let r = Self::add_dd(r, -Self::mul_f64(b, q2));
        let q3 = r.hi / b.hi;
        let (h, l) = quick_two_sum(q1, q2);
        Self::add_dd(Self { hi: h, lo: l }, Self { hi: q3, lo: 0.0 })
    }

    pub fn to_mpfr(self, bits: u32) -> Float {
        let mut f = Float::with_val(bits.max(128), self.hi);
        f += self.lo;
        f
    }

    pub fn from_mpfr(f: &Float) -> Self {
        let hi = f.to_f64();
        if !hi.is_finite() {
            return Self { hi, lo: 0.0 };
        }
        let rem = Float::with_val(f.prec().max(128), f - hi);
        Self::renorm(hi, rem.to_f64())
    }

    fn constants() -> &'static (DoubleDouble, DoubleDouble) {
        static C: OnceLock<(DoubleDouble, DoubleDouble)> = OnceLock::new();
        C.get_or_init(|| {
            let pi = Float::with_val(256, rug::float::Constant::Pi);
            let ln2 = Float::with_val(256, rug::float::Constant::Log2);
            (DoubleDouble::from_mpfr(&pi), DoubleDouble::from_mpfr(&ln2))
        })
    }
}

impl PartialEq for DoubleDouble {
    fn eq(&self, other: &Self) -> bool {
        self.hi == other.hi && self.lo == other.lo
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl std::ops::Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.hi.is_finite() {
            return write!(f, "{}", self.hi);
        }
        let digits = f.precision().unwrap_or(32);
        write!(f, "{}", self.to_mpfr(128).to_string_radix(10, Some(digits)))
    }
}

super::copy_ops!(DoubleDouble, add_dd, mul_dd, div_dd);

impl Real for DoubleDouble {
    fn precision_bits() -> u32 {
        106
    }

    fn precision(&self) -> Precision {
        Precision::DoubleDouble
    }

    fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn to_f64(&self) -> f64 {
        self.hi + self.lo
    }

    fn to_float(&self, bits: u32) -> Float {
        self.to_mpfr(bits)
    }

    fn from_float(f: &Float) -> Self {
        Self::from_mpfr(f)
    }

    fn from_decimal(s: &str) -> Self {
        let v = Float::parse(s.trim()).expect("invalid decimal literal");
        Self::from_mpfr(&Float::with_val(256, v))
    }

    fn pi() -> Self {
        Self::constants().0
    }

    fn abs(&self) -> Self {
        if self.hi < 0.0 {
            -*self
        } else {
            *self
        }
    }

    fn sqrt(&self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Self::zero() } else { Self::from_f64(f64::NAN) };
        }
        if self.hi.is_infinite() {
            return *self;
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let ax_dd = Self::from_f64(ax);
        let corr = (*self - ax_dd * ax_dd).hi * (x * 0.5);
        ax_dd + Self::from_f64(corr)
    }

    fn exp(&self) -> Self {
        exp_kernel(self, &Self::constants().1)
    }

    fn ln(&self) -> Self {
        ln_kernel(self, 1)
    }

    fn sin_cos(&self) -> (Self, Self) {
        sin_cos_kernel(self, &Self::pi())
    }

    fn atan2(&self, x: &Self) -> Self {
        atan2_kernel(self, x, 1)
    }

    fn mul_pow2(&self, e: i32) -> Self {
        Self { hi: Real::mul_pow2(&self.hi, e), lo: Real::mul_pow2(&self.lo, e) }
    }

    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }

    fn is_finite(&self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    fn is_sign_negative(&self) -> bool {
        self.hi.is_sign_negative()
    }

    fn log2_abs(&self) -> f64 {
        (self.hi + self.lo).abs().log2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(x: DoubleDouble) -> Float {
        x.to_mpfr(400)
    }

    fn rel_err(a: DoubleDouble, b: &Float) -> f64 {
        let d = Float::with_val(400, &mp(a) - b);
        (d / b.clone()).to_f64().abs()
    }

    fn sample(seed: u64) -> DoubleDouble {
        // Cheap deterministic mixing; full 106-bit values.
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
        let mut next = || {
            s ^= s >> 33;
            s = s.wrapping_mul(0xff51_afd7_ed55_8ccd);
            s ^= s >> 29;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let hi = (next() - 0.5) * 8.0;
        DoubleDouble::renorm(hi, hi * f64::EPSILON * (next() - 0.5))
    }

    #[test]
    fn arithmetic_matches_mpfr() {
        for i in 0..200 {
            let a = sample(2 * i);
            let b = sample(2 * i + 1);
            let (fa, fb) = (mp(a), mp(b));
            assert!(rel_err(a * b, &Float::with_val(400, &fa * &fb)) < 1e-31);
            assert!(rel_err(a / b, &Float::with_val(400, &fa / &fb)) < 1e-31);
            let s = Float::with_val(400, &fa + &fb);
            let err = Float::with_val(400, &mp(a + b) - &s).to_f64().abs();
            assert!(err <= 1e-31 * (fa.to_f64().abs() + fb.to_f64().abs()));
        }
    }

    #[test]
    fn elementary_functions_match_mpfr() {
        for i in 0..50 {
            let a = sample(i);
            let fa = mp(a);
            assert!(rel_err(a.exp(), &Float::with_val(400, fa.exp_ref())) < 1e-30);
            let (s, c) = a.sin_cos();
            let fs = Float::with_val(400, fa.sin_ref());
            let fc = Float::with_val(400, fa.cos_ref());
            assert!(Float::with_val(400, &mp(s) - &fs).to_f64().abs() < 1e-31);
            assert!(Float::with_val(400, &mp(c) - &fc).to_f64().abs() < 1e-31);
            let pos = a.abs() + DoubleDouble::from_f64(0.1);
            assert!(rel_err(pos.sqrt(), &Float::with_val(400, mp(pos).sqrt_ref())) < 1e-31);
            assert!(Float::with_val(400, &mp(pos.ln()) - Float::with_val(400, mp(pos).ln_ref())).to_f64().abs() < 1e-31);
            let b = sample(i + 1000);
            let at = a.atan2(&b);
            let fat = Float::with_val(400, fa.atan2_ref(&mp(b)));
            assert!(Float::with_val(400, &mp(at) - &fat).to_f64().abs() < 1e-31);
        }
    }

    #[test]
    fn decimal_parse_and_constants() {
        let third = DoubleDouble::from_decimal("0.3333333333333333333333333333333333333");
        let expect = DoubleDouble::one() / DoubleDouble::from_f64(3.0);
        assert!((third - expect).abs().to_f64() < 1e-32);
        assert_eq!(DoubleDouble::pi().hi(), std::f64::consts::PI);
    }

    #[test]
    fn overflow_is_infinite_not_nan() {
        let big = DoubleDouble::from_f64(800.0).exp();
        assert!(big.hi().is_infinite());
        let p = big * DoubleDouble::from_f64(2.0);
        assert!(p.hi().is_infinite());
    }
}
