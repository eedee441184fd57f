//! Closed-form quartic roots (Ferrari) with simultaneous Newton polish, and the
//! z = λ + 1/λ inverse map.

use super::complex::Complex;
use super::real::Real;

/// Roots of z⁴ + c[1]z³ + c[2]z² + c[3]z + c[4] (c[0] must be 1).
pub fn solve_quartic<R: Real>(c: &[Complex<R>; 5]) -> [Complex<R>; 4] {
    debug_assert!((&c[0] - &Complex::one()).is_zero(), "quartic must be monic");
    let mut roots = ferrari(c);
    polish(c, &mut roots);
    roots
}

/// Both roots of λ² − zλ + 1 = 0, larger magnitude first; the second is the
/// reciprocal of the first.
pub fn z_to_lambda<R: Real>(z: &Complex<R>) -> (Complex<R>, Complex<R>) {
    let four = Complex::from_f64(4.0, 0.0);
    let mut s = (&(z * z) - &four).sqrt();
    // Choose the branch with |z + s| ≥ |z − s|.
    let dot = z.re.clone() * &s.re + z.im.clone() * &s.im;
    if dot.is_sign_negative() && !dot.is_zero() {
        s = -s;
    }
    let big = (z + &s).mul_pow2(-1);
    if big.is_zero() {
        // z = s = 0 is impossible; only reached through rounding of z = ±2i·∞.
        return (big.clone(), big);
    }
    let small = big.inv();
    (big, small)
}

fn cbrt<R: Real>(z: &Complex<R>) -> Complex<R> {
    if z.is_zero() {
        return Complex::zero();
    }
    z.ln().scale(&(R::one() / R::from_f64(3.0))).exp()
}

/// Roots of the monic cubic t³ + a t² + b t + c.
fn cubic<R: Real>(a: &Complex<R>, b: &Complex<R>, c: &Complex<R>) -> [Complex<R>; 3] {
    let third = R::one() / R::from_f64(3.0);
    let shift = a.scale(&third);
    let a2 = a * a;
    let p = b - &a2.scale(&third);
    let q = &(&(&a2 * a).scale(&(R::from_f64(2.0) / R::from_f64(27.0))) - &(a * b).scale(&third)) + c;
    // u³ = −q/2 ± √(q²/4 + p³/27)
    let disc = (&(&q * &q).mul_pow2(-2) + &(&(&p * &p) * &p).scale(&(R::one() / R::from_f64(27.0)))).sqrt();
    let half_q = q.mul_pow2(-1);
    let u1 = &(-half_q.clone()) + &disc;
    let u2 = &(-half_q) - &disc;
    let u3 = if u1.abs1() >= u2.abs1() { u1 } else { u2 };
    let u = cbrt(&u3);
    let half = R::from_f64(0.5);
    let r3 = R::from_f64(3.0).sqrt().mul_pow2(-1);
    let w1 = Complex::new(-half.clone(), r3.clone());
    let w2 = Complex::new(-half, -r3);
    let mut out = [Complex::zero(), Complex::zero(), Complex::zero()];
    for (k, w) in [Complex::one(), w1, w2].iter().enumerate() {
        let uk = &u * w;
        let t = if uk.is_zero() { Complex::zero() } else { &uk - &(&p.scale(&third) / &uk) };
        out[k] = &t - &shift;
    }
    out
}

fn ferrari<R: Real>(c: &[Complex<R>; 5]) -> [Complex<R>; 4] {
    let a = &c[1];
    let shift = a.mul_pow2(-2);
    // Depressed quartic y⁴ + p y² + q y + r with z = y − a/4.
    let a2 = a * a;
    let p = &c[2] - &a2.scale(&R::from_f64(0.375));
    let q = &(&(&a2 * a).mul_pow2(-3) - &(a * &c[2]).mul_pow2(-1)) + &c[3];
    let r4 = (&a2 * &a2).scale(&R::from_f64(-3.0 / 256.0));
    let r2 = (&a2 * &c[2]).mul_pow2(-4);
    let r1 = (a * &c[3]).mul_pow2(-2);
    let r = &(&(&r4 + &r2) - &r1) + &c[4];

    let mut ys: [Complex<R>; 4] = [Complex::zero(), Complex::zero(), Complex::zero(), Complex::zero()];
    // Resolvent m³ + p m² + (p²/4 − r) m − q²/8 = 0; take the root of largest modulus.
    let ms = cubic(&p, &(&(&p * &p).mul_pow2(-2) - &r), &(-(&q * &q).mul_pow2(-3)));
    let m = ms.iter().max_by(|x, y| x.log2_abs().total_cmp(&y.log2_abs())).cloned().unwrap();
    if m.is_zero() || !m.is_finite() {
        // Biquadratic: y² = (−p ± √(p² − 4r)) / 2.
        let d = (&(&p * &p) - &r.mul_pow2(2)).sqrt();
        let y2a = (&(-p.clone()) + &d).mul_pow2(-1);
        let y2b = (&(-p) - &d).mul_pow2(-1);
        let (sa, sb) = (y2a.sqrt(), y2b.sqrt());
        ys = [sa.clone(), -sa, sb.clone(), -sb];
    } else {
        let w = m.mul_pow2(1).sqrt();
        let mut k = 0;
        for s1 in [1.0, -1.0] {
            let s1c = R::from_f64(s1);
            let ws = w.scale(&s1c);
            let inner = -(&(&p.mul_pow2(1) + &m.mul_pow2(1)) + &(&q / &w).scale(&s1c).mul_pow2(1));
            let root = inner.sqrt();
            ys[k] = (&ws + &root).mul_pow2(-1);
            ys[k + 1] = (&ws - &root).mul_pow2(-1);
            k += 2;
        }
    }
    ys.map(|y| &y - &shift)
}

fn eval_with_derivative<R: Real>(c: &[Complex<R>; 5], z: &Complex<R>) -> (Complex<R>, Complex<R>) {
    let mut p = Complex::zero();
    let mut dp = Complex::zero();
    for ck in c.iter() {
        dp = &(&dp * z) + &p;
        p = &(&p * z) + ck;
    }
    (p, dp)
}

/// Aberth–Ehrlich iterations; a step is kept only if it lowers |p|.
fn polish<R: Real>(c: &[Complex<R>; 5], roots: &mut [Complex<R>; 4]) {
    let log2_tol = -(R::precision_bits() as f64) + 3.0;
    for _ in 0..80 {
        let mut moved = false;
        for k in 0..4 {
            if !roots[k].is_finite() {
                continue;
            }
            let (p, dp) = eval_with_derivative(c, &roots[k]);
            if p.is_zero() || dp.is_zero() {
                continue;
            }
            let ratio = &p / &dp;
            let mut sum = Complex::zero();
            for j in 0..4 {
                if j != k {
                    let d = &roots[k] - &roots[j];
                    if !d.is_zero() {
                        sum += &d.inv();
                    }
                }
            }
            let denom = &Complex::one() - &(&ratio * &sum);
            let step = if denom.is_zero() || !denom.is_finite() { ratio } else { &ratio / &denom };
            let cand = &roots[k] - &step;
            if !cand.is_finite() {
                continue;
            }
            let (pc, _) = eval_with_derivative(c, &cand);
            if pc.log2_abs() < p.log2_abs() {
                if step.log2_abs() > roots[k].log2_abs() + log2_tol {
                    moved = true;
                }
                roots[k] = cand;
            }
        }
        if !moved {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dd::DoubleDouble as Dd;

    fn cx(re: f64, im: f64) -> Complex<Dd> {
        Complex::from_f64(re, im)
    }

    fn poly_from_roots(r: &[Complex<Dd>; 4]) -> [Complex<Dd>; 5] {
        let mut c = vec![Complex::<Dd>::one()];
        for x in r {
            let mut next = vec![Complex::zero(); c.len() + 1];
            for (k, ck) in c.iter().enumerate() {
                next[k] += ck;
                next[k + 1] -= &(ck * x);
            }
            c = next;
        }
        [c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone(), c[4].clone()]
    }

    fn matches(found: &[Complex<Dd>; 4], want: &[Complex<Dd>; 4], tol: f64) {
        for w in want {
            let best = found.iter().map(|f| (f - w).abs().to_f64() / w.abs().to_f64().max(1e-300)).fold(f64::INFINITY, f64::min);
            assert!(best < tol, "missing root {w}: best {best:e}");
        }
    }

    #[test]
    fn quadruple_root_at_two() {
        let r = solve_quartic(&[cx(1.0, 0.0), cx(-8.0, 0.0), cx(24.0, 0.0), cx(-32.0, 0.0), cx(16.0, 0.0)]);
        for z in &r {
            assert!((z - &cx(2.0, 0.0)).abs().to_f64() < 1e-7);
            let (a, b) = z_to_lambda(z);
            assert!((&a - &Complex::one()).abs().to_f64() < 1e-3);
            assert!((&b - &Complex::one()).abs().to_f64() < 1e-3);
        }
    }

    #[test]
    fn z_to_lambda_examples() {
        let (a, b) = z_to_lambda(&cx(0.0, 0.0));
        assert!((&(&a * &b) - &Complex::one()).abs().to_f64() < 1e-31);
        assert!((a.im.to_f64().abs() - 1.0).abs() < 1e-31 && a.re.to_f64().abs() < 1e-31);
        let (a, b) = z_to_lambda(&cx(2.5, 0.0));
        assert!((&a - &cx(2.0, 0.0)).abs().to_f64() < 1e-31);
        assert!((&b - &cx(0.5, 0.0)).abs().to_f64() < 1e-31);
    }

    #[test]
    fn distinct_complex_roots() {
        let want = [cx(1.0, 2.0), cx(-3.0, 0.5), cx(0.25, -1.0), cx(7.0, 0.0)];
        matches(&solve_quartic(&poly_from_roots(&want)), &want, 1e-28);
    }

    #[test]
    fn widely_separated_roots() {
        let want = [cx(1e12, 3e11), cx(-2e6, 1.0), cx(3.0, -0.5), cx(1e-3, 2e-3)];
        matches(&solve_quartic(&poly_from_roots(&want)), &want, 1e-24);
    }

    #[test]
    fn biquadratic() {
        let want = [cx(1.0, 0.0), cx(-1.0, 0.0), cx(0.0, 2.0), cx(0.0, -2.0)];
        matches(&solve_quartic(&poly_from_roots(&want)), &want, 1e-30);
    }
}
