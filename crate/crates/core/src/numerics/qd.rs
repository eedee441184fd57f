//! Quad-double arithmetic: four non-overlapping f64 limbs, ~212 significand bits.

use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use rug::Float;

use super::eft::{atan2_kernel, exp_kernel, ln_kernel, quick_two_sum, sin_cos_kernel, two_prod, two_sum};
use super::precision::Precision;
use super::real::Real;

#[derive(Clone, Copy, Debug, Default)]
pub struct QuadDouble([f64; 4]);

#[inline(always)]
fn three_sum(a: &mut f64, b: &mut f64, c: &mut f64) {
    let (t1, t2) = two_sum(*a, *b);
    let (s, t3) = two_sum(*c, t1);
    *a = s;
    let (s2, cc) = two_sum(t2, t3);
    *b = s2;
    *c = cc;
}

#[inline(always)]
fn three_sum2(a: &mut f64, b: &mut f64, c: f64) {
    let (t1, t2) = two_sum(*a, *b);
    let (s, t3) = two_sum(c, t1);
    *a = s;
    *b = t2 + t3;
}

/// Accumulates `c` into the running pair (a, b); returns a finished limb or 0.
#[inline(always)]
fn quick_three_accum(a: &mut f64, b: &mut f64, c: f64) -> f64 {
    let (s, bb) = two_sum(*b, c);
    let (s, aa) = two_sum(*a, s);
    let za = aa != 0.0;
    let zb = bb != 0.0;
    if za && zb {
        *a = aa;
        *b = bb;
        return s;
    }
    if !zb {
        *b = aa;
        *a = s;
    } else {
        *a = s;
        *b = bb;
    }
    0.0
}

fn renorm5(mut c0: f64, mut c1: f64, mut c2: f64, mut c3: f64, mut c4: f64) -> QuadDouble {
    if !c0.is_finite() {
        return QuadDouble([c0, 0.0, 0.0, 0.0]);
    }
    let (s, t) = quick_two_sum(c3, c4);
    c4 = t;
    let (s, t) = quick_two_sum(c2, s);
    c3 = t;
    let (s, t) = quick_two_sum(c1, s);
    c2 = t;
    let (s0, t) = quick_two_sum(c0, s);
    c0 = s0;
    c1 = t;

    let mut s0 = c0;
    let mut s1 = c1;
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    if s1 != 0.0 {
        (s1, s2) = quick_two_sum(s1, c2);
        if s2 != 0.0 {
            (s2, s3) = quick_two_sum(s2, c3);
            if s3 != 0.0 {
                s3 += c4;
            } else {
                (s2, s3) = quick_two_sum(s2, c4);
            }
        } else {
            (s1, s2) = quick_two_sum(s1, c3);
            if s2 != 0.0 {
                (s2, s3) = quick_two_sum(s2, c4);
            } else {
                (s1, s2) = quick_two_sum(s1, c4);
            }
        }
    } else {
        (s0, s1) = quick_two_sum(s0, c2);
        if s1 != 0.0 {
            (s1, s2) = quick_two_sum(s1, c3);
            if s2 != 0.0 {
                (s2, s3) = quick_two_sum(s2, c4);
            } else {
                (s1, s2) = quick_two_sum(s1, c4);
            }
        } else {
            (s0, s1) = quick_two_sum(s0, c3);
            if s1 != 0.0 {
                (s1, s2) = quick_two_sum(s1, c4);
            } else {
                (s0, s1) = quick_two_sum(s0, c4);
            }
        }
    }
    QuadDouble([s0, s1, s2, s3])
}

impl QuadDouble {
    pub const fn from_limbs(limbs: [f64; 4]) -> Self {
        Self(limbs)
    }

    pub fn limbs(self) -> [f64; 4] {
        self.0
    }

    fn add_qd(a: Self, b: Self) -> Self {
        let (a, b) = (a.0, b.0);
        let first = a[0] + b[0];
        if !first.is_finite() {
            return Self([first, 0.0, 0.0, 0.0]);
        }
        let mut i = 0;
        let mut j = 0;
        let mut x = [0.0f64; 4];
        let pick = |i: &mut usize, j: &mut usize| -> f64 {
            if *i >= 4 {
                *j += 1;
                b[*j - 1]
            } else if *j >= 4 {
                *i += 1;
                a[*i - 1]
            } else if a[*i].abs() > b[*j].abs() {
                *i += 1;
                a[*i - 1]
            } else {
                *j += 1;
                b[*j - 1]
            }
        };
        let u0 = pick(&mut i, &mut j);
        let v0 = pick(&mut i, &mut j);
        let (mut u, mut v) = quick_two_sum(u0, v0);
        let mut k = 0;
        while k < 4 {
            if i >= 4 && j >= 4 {
                x[k] = u;
                if k < 3 {
                    k += 1;
                    x[k] = v;
                }
                break;
            }
            let t = pick(&mut i, &mut j);
            let s = quick_three_accum(&mut u, &mut v, t);
            if s != 0.0 {
                x[k] = s;
                k += 1;
            }
        }
        for &ak in &a[i..] {
            x[3] += ak;
        }
        for &bk in &b[j..] {
            x[3] += bk;
        }
        renorm5(x[0], x[1], x[2], x[3], 0.0)
    }

    fn mul_qd(a: Self, b: Self) -> Self {
        let (a, b) = (a.0, b.0);
        let (p0, q0) = two_prod(a[0], b[0]);
        if !p0.is_finite() {
            return Self([p0, 0.0, 0.0, 0.0]);
        }
        let (mut p1, mut q1) = two_prod(a[0], b[1]);
        let (mut p2, mut q2) = two_prod(a[1], b[0]);
        let (mut p3, q3) = two_prod(a[0], b[2]);
        let (mut p4, q4) = two_prod(a[1], b[1]);
        let (mut p5, q5) = two_prod(a[2], b[0]);

        let mut q0m = q0;
        three_sum(&mut p1, &mut p2, &mut q0m);

        three_sum(&mut p2, &mut q1, &mut q2);
        three_sum(&mut p3, &mut p4, &mut p5);
        let (s0, t0) = two_sum(p2, p3);
        let (s1, t1) = two_sum(q1, p4);
        let mut s2 = q2 + p5;
        let (s1, t0) = two_sum(s1, t0);
        s2 += t0 + t1;

        let s1 = s1 + (a[0] * b[3] + a[1] * b[2] + a[2] * b[1] + a[3] * b[0] + q0m + q3 + q4 + q5);
        renorm5(p0, p1, s0, s1, s2)
    }

    fn mul_f64(a: Self, b: f64) -> Self {
        let a = a.0;
        let (p0, q0) = two_prod(a[0], b);
        if !p0.is_finite() {
            return Self([p0, 0.0, 0.0, 0.0]);
        }
        let (p1, mut q1) = two_prod(a[1], b);
        let (mut p2, mut q2) = two_prod(a[2], b);
        let p3 = a[3] * b;
        let s0 = p0;
        let (s1, mut s2) = two_sum(q0, p1);
        three_sum(&mut s2, &mut q1, &mut p2);
        three_sum2(&mut q1, &mut q2, p3);
        let s3 = q1;
        let s4 = q2 + p2;
        renorm5(s0, s1, s2, s3, s4)
    }

    fn div_qd(a: Self, b: Self) -> Self {
        let q0 = a.0[0] / b.0[0];
        if !q0.is_finite() || b.0[0].is_infinite() {
            return Self([q0, 0.0, 0.0, 0.0]);
        }
        let mut r = Self::add_qd(a, -Self::mul_f64(b, q0));
        let q1 = r.0[0] / b.0[0];
        r = Self::add_qd(r, -Self::mul_f64(b, q1));
        let q2 = r.0[0] / b.0[0];
        r = Self::add_qd(r, -Self::mul_f64(b, q2));
        let q3 = r.0[0] / b.0[0];
        r = Self::add_qd(r, -Self::mul_f64(b, q3));
        let q4 = r.0[0] / b.0[0];
        renorm5(q0, q1, q2, q3, q4)
    }

    pub fn to_mpfr(self, bits: u32) -> Float {
        let mut f = Float::with_val(bits.max(256), self.0[0]);
        for &l in &self.0[1..] {
            f += l;
        }
        f
    }

    pub fn from_mpfr(f: &Float) -> Self {
        let mut limbs = [0.0; 4];
        let mut rem = Float::with_val(f.prec().max(256), f);
        for l in limbs.iter_mut() {
            *l = rem.to_f64();
            if !l.is_finite() {
                return Self([*l, 0.0, 0.0, 0.0]);
            }
            rem -= *l;
        }
        renorm5(limbs[0], limbs[1], limbs[2], limbs[3], rem.to_f64())
    }

    fn constants() -> &'static (QuadDouble, QuadDouble) {
        static C: OnceLock<(QuadDouble, QuadDouble)> = OnceLock::new();
        C.get_or_init(|| {
            let pi = Float::with_val(512, rug::float::Constant::Pi);
            let ln2 = Float::with_val(512, rug::float::Constant::Log2);
            (QuadDouble::from_mpfr(&pi), QuadDouble::from_mpfr(&ln2))
        })
    }
}

impl PartialEq for QuadDouble {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for QuadDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        for k in 0..4 {
            match self.0[k].partial_cmp(&other.0[k])? {
                Ordering::Equal => continue,
                o => return Some(o),
            }
        }
        Some(Ordering::Equal)
    }
}

impl std::ops::Neg for QuadDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self([-self.0[0], -self.0[1], -self.0[2], -self.0[3]])
    }
}

impl fmt::Display for QuadDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.0[0].is_finite() {
            return write!(f, "{}", self.0[0]);
        }
        let digits = f.precision().unwrap_or(64);
        write!(f, "{}", self.to_mpfr(256).to_string_radix(10, Some(digits)))
    }
}

super::copy_ops!(QuadDouble, add_qd, mul_qd, div_qd);

impl Real for QuadDouble {
    fn precision_bits() -> u32 {
        212
    }

    fn precision(&self) -> Precision {
        Precision::QuadDouble
    }

    fn from_f64(x: f64) -> Self {
        Self([x, 0.0, 0.0, 0.0])
    }

    fn to_f64(&self) -> f64 {
        self.0[0] + self.0[1]
    }

    fn to_float(&self, bits: u32) -> Float {
        self.to_mpfr(bits)
    }

    fn from_float(f: &Float) -> Self {
        Self::from_mpfr(f)
    }

    fn from_decimal(s: &str) -> Self {
        let v = Float::parse(s.trim()).expect("invalid decimal literal");
        Self::from_mpfr(&Float::with_val(512, v))
    }

    fn pi() -> Self {
        Self::constants().0
    }

    fn abs(&self) -> Self {
        if self.0[0] < 0.0 {
            -*self
        } else {
            *self
        }
    }

    fn sqrt(&self) -> Self {
        if self.0[0] <= 0.0 {
            return if self.0[0] == 0.0 { Self::zero() } else { Self::from_f64(f64::NAN) };
        }
        if self.0[0].is_infinite() {
            return *self;
        }
        // Newton on 1/sqrt(a), then one multiply.
        let half = Self::from_f64(0.5);
        let mut r = Self::from_f64(1.0 / self.0[0].sqrt());
        let h = *self * half;
        for _ in 0..3 {
            r += r * (half - h * r * r);
        }
        let x = *self * r;
        x + (*self - x * x) * r * half
    }

    fn exp(&self) -> Self {
        exp_kernel(self, &Self::constants().1)
    }

    fn ln(&self) -> Self {
        ln_kernel(self, 2)
    }

    fn sin_cos(&self) -> (Self, Self) {
        sin_cos_kernel(self, &Self::pi())
    }

    fn atan2(&self, x: &Self) -> Self {
        atan2_kernel(self, x, 3)
    }

    fn mul_pow2(&self, e: i32) -> Self {
        Self(self.0.map(|l| Real::mul_pow2(&l, e)))
    }

    fn is_zero(&self) -> bool {
        self.0[0] == 0.0
    }

    fn is_finite(&self) -> bool {
        self.0.iter().all(|l| l.is_finite())
    }

    fn is_sign_negative(&self) -> bool {
        self.0[0].is_sign_negative()
    }

    fn log2_abs(&self) -> f64 {
        (self.0[0] + self.0[1]).abs().log2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BITS: u32 = 800;

    fn mp(x: QuadDouble) -> Float {
        x.to_mpfr(BITS)
    }

    fn abs_diff(a: QuadDouble, b: &Float) -> f64 {
        Float::with_val(BITS, &mp(a) - b).to_f64().abs()
    }

    fn sample(seed: u64) -> QuadDouble {
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x94D0_49BB_1331_11EB;
        let mut next = || {
            s ^= s >> 31;
            s = s.wrapping_mul(0xbf58_476d_1ce4_e5b9);
            s ^= s >> 27;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let e = f64::EPSILON;
        let h = next() * 6.0;
        renorm5(h, h * e * next(), h * e * e * next(), h * e * e * e * next(), 0.0)
    }

    #[test]
    fn arithmetic_matches_mpfr() {
        for i in 0..300 {
            let a = sample(2 * i);
            let b = sample(2 * i + 1);
            let (fa, fb) = (mp(a), mp(b));
            let prod = Float::with_val(BITS, &fa * &fb);
            assert!(abs_diff(a * b, &prod) <= 1e-62 * prod.to_f64().abs());
            let quo = Float::with_val(BITS, &fa / &fb);
            assert!(abs_diff(a / b, &quo) <= 1e-62 * quo.to_f64().abs());
            let sum = Float::with_val(BITS, &fa + &fb);
            assert!(abs_diff(a + b, &sum) <= 1e-63 * (fa.to_f64().abs() + fb.to_f64().abs()));
        }
    }

    #[test]
    fn cancellation_is_exact_to_limb_level() {
        let a = sample(7);
        let tiny = QuadDouble::from_f64(1e-50);
        let r = (a + tiny) - a;
        assert!((r - tiny).abs().to_f64() < 1e-63);
    }

    #[test]
    fn elementary_functions_match_mpfr() {
        for i in 0..30 {
            let a = sample(i);
            let fa = mp(a);
            let ex = Float::with_val(BITS, fa.exp_ref());
            assert!(abs_diff(a.exp(), &ex) <= 1e-61 * ex.to_f64());
            let (s, c) = a.sin_cos();
            assert!(abs_diff(s, &Float::with_val(BITS, fa.sin_ref())) < 1e-62);
            assert!(abs_diff(c, &Float::with_val(BITS, fa.cos_ref())) < 1e-62);
            let pos = a.abs() + QuadDouble::from_f64(0.25);
            let sq = Float::with_val(BITS, mp(pos).sqrt_ref());
            assert!(abs_diff(pos.sqrt(), &sq) < 1e-62);
            assert!(abs_diff(pos.ln(), &Float::with_val(BITS, mp(pos).ln_ref())) < 1e-62);
            let b = sample(i + 500);
            assert!(abs_diff(a.atan2(&b), &Float::with_val(BITS, fa.atan2_ref(&mp(b)))) < 1e-62);
        }
    }
}
