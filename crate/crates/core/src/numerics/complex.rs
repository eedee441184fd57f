use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use super::real::Real;

/// Complex number over any [`Real`] precision level.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Complex<R> {
    pub re: R,
    pub im: R,
}

pub type C64 = Complex<f64>;

impl<R: Real> Complex<R> {
    pub fn new(re: R, im: R) -> Self {
        Self { re, im }
    }

    pub fn from_real(re: R) -> Self {
        Self { re, im: R::zero() }
    }

    pub fn from_f64(re: f64, im: f64) -> Self {
        Self { re: R::from_f64(re), im: R::from_f64(im) }
    }

    pub fn from_c64(z: C64) -> Self {
        Self::from_f64(z.re, z.im)
    }

    pub fn zero() -> Self {
        Self::from_f64(0.0, 0.0)
    }

    pub fn one() -> Self {
        Self::from_f64(1.0, 0.0)
    }

    pub fn i() -> Self {
        Self::from_f64(0.0, 1.0)
    }

    pub fn to_c64(&self) -> C64 {
        Complex { re: self.re.to_f64(), im: self.im.to_f64() }
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -self.im.clone() }
    }

    /// Multiplication by i.
    pub fn mul_i(&self) -> Self {
        Self { re: -self.im.clone(), im: self.re.clone() }
    }

    pub fn scale(&self, s: &R) -> Self {
        Self { re: self.re.clone() * s, im: self.im.clone() * s }
    }

    pub fn mul_pow2(&self, e: i32) -> Self {
        Self { re: self.re.mul_pow2(e), im: self.im.mul_pow2(e) }
    }

    pub fn norm_sqr(&self) -> R {
        self.re.sqr() + self.im.sqr()
    }

    pub fn abs(&self) -> R {
        self.re.hypot(&self.im)
    }

    /// |re| + |im|; cheap magnitude within a factor √2 of |z|.
    pub fn abs1(&self) -> R {
        self.re.abs() + self.im.abs()
    }

    /// Principal argument in (-π, π].
    pub fn arg(&self) -> R {
        let a = self.im.atan2(&self.re);
        // atan2(-0, x<0) = -π lies outside the half-open zone.
        if a <= -R::pi() {
            R::pi()
        } else {
            a
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    /// log2|z| without forming |z|² (no overflow for multiprecision values).
    pub fn log2_abs(&self) -> f64 {
        let a = self.re.log2_abs();
        let b = self.im.log2_abs();
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        if hi == f64::NEG_INFINITY {
            return hi;
        }
        hi + 0.5 * (1.0 + (2f64).powf(2.0 * (lo - hi))).log2()
    }

    pub fn inv(&self) -> Self {
        Self::one() / self
    }

    pub fn exp(&self) -> Self {
        let m = self.re.exp();
        let (s, c) = self.im.sin_cos();
        Self { re: m.clone() * c, im: m * s }
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Self {
        Self { re: self.abs().ln(), im: self.arg() }
    }

    /// Principal square root (branch cut on the negative real axis).
    pub fn sqrt(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let r = self.abs();
        let half = R::from_f64(0.5);
        if !self.re.is_sign_negative() {
            let t = ((r + &self.re) * &half).sqrt();
            let im = self.im.clone() / t.clone().mul_pow2(1);
            Self { re: t, im }
        } else {
            let t = ((r - &self.re) * &half).sqrt();
            let re = self.im.abs() / t.clone().mul_pow2(1);
            let im = if self.im.is_sign_negative() { -t } else { t };
            Self { re, im }
        }
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc *= &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// self += a * b
    #[inline]
    pub fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        self.re += a.re.clone() * &b.re;
        self.re -= a.im.clone() * &b.im;
        self.im += a.re.clone() * &b.im;
        self.im += a.im.clone() * &b.re;
    }

    fn mul_ref(a: &Self, b: &Self) -> Self {
        let re = a.re.clone() * &b.re - a.im.clone() * &b.im;
        let im = a.re.clone() * &b.im + a.im.clone() * &b.re;
        Self { re, im }
    }

    /// Smith's algorithm.
    fn div_ref(a: &Self, b: &Self) -> Self {
        if b.re.abs() >= b.im.abs() {
            if b.re.is_zero() {
                let inf = R::from_f64(f64::NAN);
                return Self { re: inf.clone(), im: inf };
            }
            let r = b.im.clone() / &b.re;
            let d = b.re.clone() + r.clone() * &b.im;
            Self { re: (a.re.clone() + a.im.clone() * &r) / &d, im: (a.im.clone() - a.re.clone() * &r) / &d }
        } else {
            let r = b.re.clone() / &b.im;
            let d = b.im.clone() + r.clone() * &b.re;
            Self { re: (a.re.clone() * &r + &a.im) / &d, im: (a.im.clone() * &r - &a.re) / &d }
        }
    }
}

impl<R: Real> fmt::Display for Complex<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_sign_negative() {
            write!(f, "{}-{}i", self.re, self.im.abs())
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl<R: Real> Neg for Complex<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { re: -self.re, im: -self.im }
    }
}

impl<R: Real> Neg for &Complex<R> {
    type Output = Complex<R>;
    fn neg(self) -> Complex<R> {
        Complex { re: -self.re.clone(), im: -self.im.clone() }
    }
}

impl<R: Real> AddAssign<&Complex<R>> for Complex<R> {
    fn add_assign(&mut self, rhs: &Complex<R>) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl<R: Real> SubAssign<&Complex<R>> for Complex<R> {
    fn sub_assign(&mut self, rhs: &Complex<R>) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl<R: Real> MulAssign<&Complex<R>> for Complex<R> {
    fn mul_assign(&mut self, rhs: &Complex<R>) {
        *self = Complex::mul_ref(self, rhs);
    }
}

impl<R: Real> DivAssign<&Complex<R>> for Complex<R> {
    fn div_assign(&mut self, rhs: &Complex<R>) {
        *self = Complex::div_ref(self, rhs);
    }
}

macro_rules! complex_binop {
    ($tr:ident, $f:ident, $tra:ident, $fa:ident) => {
        impl<R: Real> $tra for Complex<R> {
            fn $fa(&mut self, rhs: Complex<R>) {
                $tra::$fa(self, &rhs);
            }
        }
        impl<R: Real> $tr for Complex<R> {
            type Output = Complex<R>;
            fn $f(mut self, rhs: Complex<R>) -> Complex<R> {
                $tra::$fa(&mut self, &rhs);
                self
            }
        }
        impl<'a, R: Real> $tr<&'a Complex<R>> for Complex<R> {
            type Output = Complex<R>;
            fn $f(mut self, rhs: &'a Complex<R>) -> Complex<R> {
                $tra::$fa(&mut self, rhs);
                self
            }
        }
        impl<'a, 'b, R: Real> $tr<&'b Complex<R>> for &'a Complex<R> {
            type Output = Complex<R>;
            fn $f(self, rhs: &'b Complex<R>) -> Complex<R> {
                let mut out = self.clone();
                $tra::$fa(&mut out, rhs);
                out
            }
        }
    };
}

complex_binop!(Add, add, AddAssign, add_assign);
complex_binop!(Sub, sub, SubAssign, sub_assign);
complex_binop!(Mul, mul, MulAssign, mul_assign);
complex_binop!(Div, div, DivAssign, div_assign);
