//! Error-free transformations and the elementary-function kernels shared by
//! the double-double and quad-double types.

use super::real::Real;

#[inline(always)]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Requires |a| >= |b| (or a == 0).
#[inline(always)]
pub fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline(always)]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Stops a Taylor loop once `term` is below 2^-(bits+4) relative to `sum`.
fn negligible<R: Real>(term: &R, sum: &R) -> bool {
    term.is_zero() || term.log2_abs() < sum.log2_abs() - R::precision_bits() as f64 - 4.0
}

/// exp for types sharing the f64 exponent range.
pub fn exp_kernel<R: Real>(a: &R, ln2: &R) -> R {
    let x = a.to_f64();
    if x.is_nan() {
        return R::from_f64(f64::NAN);
    }
    if x > 709.8 {
        return R::from_f64(f64::INFINITY);
    }
    if x < -745.2 {
        return R::zero();
    }
    let k = (x / std::f64::consts::LN_2).round();
    let r = (a.clone() - ln2.clone() * R::from_f64(k)).mul_pow2(-10);
    // expm1(r) by Taylor, then (1+s)^2 - 1 = 2s + s^2 ten times.
    let mut term = r.clone();
    let mut s = r.clone();
    let mut n = 1.0;
    loop {
        n += 1.0;
        term = term * &r / R::from_f64(n);
        s += &term;
        if negligible(&term, &s) || n > 200.0 {
            break;
        }
    }
    for _ in 0..10 {
        let sq = s.sqr();
        s = s.mul_pow2(1) + sq;
    }
    (s + R::one()).mul_pow2(k as i32)
}

/// Natural log by Newton iteration on exp, seeded from f64.
pub fn ln_kernel<R: Real>(a: &R, newton_steps: usize) -> R {
    let x = a.to_f64();
    if x < 0.0 || x.is_nan() {
        return R::from_f64(f64::NAN);
    }
    if x == 0.0 {
        return R::from_f64(f64::NEG_INFINITY);
    }
    if x.is_infinite() {
        return R::from_f64(f64::INFINITY);
    }
    let mut y = R::from_f64(x.ln());
    for _ in 0..newton_steps {
        y = y.clone() + a.clone() * (-y).exp() - R::one();
    }
    y
}

/// sin and cos by reduction to |s| <= π/4 and Taylor series.
pub fn sin_cos_kernel<R: Real>(a: &R, pi: &R) -> (R, R) {
    let x = a.to_f64();
    if !x.is_finite() {
        return (R::from_f64(f64::NAN), R::from_f64(f64::NAN));
    }
    let two_pi = pi.mul_pow2(1);
    let half_pi = pi.mul_pow2(-1);
    let j = (x / (2.0 * std::f64::consts::PI)).round();
    let r = a.clone() - two_pi * R::from_f64(j);
    let q = (r.to_f64() / std::f64::consts::FRAC_PI_2).round();
    let s = r - half_pi * R::from_f64(q);

    let s2 = s.sqr();
    let mut sin = s.clone();
    let mut cos = R::one();
    let mut term_s = s.clone();
    let mut term_c = R::one();
    let mut n = 0.0;
    loop {
        n += 2.0;
        term_c = -(term_c * &s2) / R::from_f64(n * (n - 1.0));
        term_s = -(term_s * &s2) / R::from_f64(n * (n + 1.0));
        cos += &term_c;
        sin += &term_s;
        if (negligible(&term_c, &R::one()) && negligible(&term_s, &R::one())) || n > 200.0 {
            break;
        }
    }
    match (q as i64).rem_euclid(4) {
        0 => (sin, cos),
        1 => (cos, -sin),
        2 => (-sin, -cos),
        _ => (-cos, sin),
    }
}

/// atan2 by Newton refinement of the f64 estimate.
pub fn atan2_kernel<R: Real>(y: &R, x: &R, newton_steps: usize) -> R {
    if x.is_zero() && y.is_zero() {
        return R::zero();
    }
    let r = x.hypot(y);
    let xx = x.clone() / &r;
    let yy = y.clone() / &r;
    let mut z = R::from_f64(y.to_f64().atan2(x.to_f64()));
    for _ in 0..newton_steps {
        let (s, c) = z.sin_cos();
        if xx.abs() > yy.abs() {
            z += (yy.clone() - s) / c;
        } else {
            z -= (xx.clone() - c) / s;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sum_is_exact() {
        let (s, e) = two_sum(1.0, 1e-20);
        assert_eq!(s, 1.0);
        assert_eq!(e, 1e-20);
    }

    #[test]
    fn two_prod_is_exact() {
        let a = 1.0 + f64::EPSILON;
        let (p, e) = two_prod(a, a);
        assert_eq!(p, 1.0 + 2.0 * f64::EPSILON);
        assert_eq!(e, f64::EPSILON * f64::EPSILON);
    }
}
