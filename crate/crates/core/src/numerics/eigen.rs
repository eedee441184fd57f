//! Dense complex eigensolver: balancing, Householder Hessenberg reduction,
//! implicitly shifted QR to Schur form, and triangular back-substitution for
//! eigenvectors.

use super::complex::Complex;
use super::error::NumericsError;
use super::matrix::{balance, CMatrix};
use super::mp::{with_precision, MpFloat};
use super::precision::Precision;
use super::real::Real;

/// Eigenvalues with unit-2-norm eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct EigenSolution<R: Real> {
    pub values: Vec<Complex<R>>,
    pub vectors: CMatrix<R>,
    /// log2 of ‖Γ‖₁‖Γ⁻¹‖₁; +inf when Γ is numerically singular.
    pub log2_cond: f64,
    /// log2 of max_i ‖Aγᵢ − λᵢγᵢ‖ / ‖A‖.
    pub log2_residual: f64,
    pub vectors_inverse: Option<CMatrix<R>>,
}

struct Givens<R> {
    c: R,
    s: Complex<R>,
}

impl<R: Real> Givens<R> {
    /// Rotation with [c s; -s̄ c]·[f; g] = [r; 0]; returns it with r.
    fn new(f: &Complex<R>, g: &Complex<R>) -> (Self, Complex<R>) {
        if g.is_zero() {
            return (Self { c: R::one(), s: Complex::zero() }, f.clone());
        }
        if f.is_zero() {
            let ga = g.abs();
            return (Self { c: R::zero(), s: g.conj().scale(&(R::one() / &ga)) }, Complex::from_real(ga));
        }
        let fa = f.abs();
        let ga = g.abs();
        let norm = fa.hypot(&ga);
        let c = fa.clone() / &norm;
        let phase = f.scale(&(R::one() / &fa));
        // s = phase · conj(g) / norm ; r = phase · norm
        let s = (&phase * &g.conj()).scale(&(R::one() / &norm));
        let r = phase.scale(&norm);
        (Self { c, s }, r)
    }

    fn rows(&self, h: &mut CMatrix<R>, p: usize, q: usize, cols: std::ops::Range<usize>) {
        let sc = self.s.conj();
        for j in cols {
            let x = h[(p, j)].clone();
            let y = h[(q, j)].clone();
            h[(p, j)] = &x.scale(&self.c) + &(&self.s * &y);
            h[(q, j)] = &y.scale(&self.c) - &(&sc * &x);
        }
    }

    fn cols(&self, h: &mut CMatrix<R>, p: usize, q: usize, rows: std::ops::Range<usize>) {
        let sc = self.s.conj();
        for i in rows {
            let x = h[(i, p)].clone();
            let y = h[(i, q)].clone();
            h[(i, p)] = &x.scale(&self.c) + &(&sc * &y);
            h[(i, q)] = &y.scale(&self.c) - &(&self.s * &x);
        }
    }
}

/// Reduces `a` to upper Hessenberg form H = Qᴴ A Q; returns (H, Q).
pub fn hessenberg<R: Real>(a: &CMatrix<R>) -> (CMatrix<R>, CMatrix<R>) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let scale = (k + 1..n).fold(R::zero(), |m, i| R::max_of(m, h[(i, k)].abs1()));
        if scale.is_zero() {
            continue;
        }
        let inv_scale = R::one() / &scale;
        let mut v: Vec<Complex<R>> = (k + 1..n).map(|i| h[(i, k)].scale(&inv_scale)).collect();
        let xnorm = v.iter().fold(R::zero(), |s, z| s + z.norm_sqr()).sqrt();
        let x0abs = v[0].abs();
        let phase = if x0abs.is_zero() { Complex::one() } else { v[0].scale(&(R::one() / &x0abs)) };
        let alpha = -phase.scale(&xnorm);
        v[0] -= &alpha;
        let vnorm = v.iter().fold(R::zero(), |s, z| s + z.norm_sqr()).sqrt();
        if vnorm.is_zero() {
            continue;
        }
        let inv = R::one() / &vnorm;
        for z in v.iter_mut() {
            *z = z.scale(&inv);
        }
        let two = R::from_f64(2.0);
        // Left: H ← (I − 2vvᴴ) H on rows k+1.., columns k..
        for j in k..n {
            let mut w = Complex::zero();
            for (m, vm) in v.iter().enumerate() {
                w.mul_add_assign(&vm.conj(), &h[(k + 1 + m, j)]);
            }
            let w = w.scale(&two);
            for (m, vm) in v.iter().enumerate() {
                let t = vm * &w;
                h[(k + 1 + m, j)] -= &t;
            }
        }
        // Right: H ← H (I − 2vvᴴ), and Q likewise.
        for mat in [&mut h, &mut q] {
            for i in 0..n {
                let mut w = Complex::zero();
                for (m, vm) in v.iter().enumerate() {
                    w.mul_add_assign(&mat[(i, k + 1 + m)], vm);
                }
                let w = w.scale(&two);
                for (m, vm) in v.iter().enumerate() {
                    let t = &w * &vm.conj();
                    mat[(i, k + 1 + m)] -= &t;
                }
            }
        }
        h[(k + 1, k)] = alpha.scale(&scale);
        for i in k + 2..n {
            h[(i, k)] = Complex::zero();
        }
    }
    (h, q)
}

fn wilkinson_shift<R: Real>(a: &Complex<R>, b: &Complex<R>, c: &Complex<R>, d: &Complex<R>) -> Complex<R> {
    let half = R::from_f64(0.5);
    let delta = (a - d).scale(&half);
    let bc = b * c;
    if bc.is_zero() {
        return d.clone();
    }
    let root = (&(&delta * &delta) + &bc).sqrt();
    let plus = &delta + &root;
    let minus = &delta - &root;
    let den = if plus.abs1() >= minus.abs1() { plus } else { minus };
    if den.is_zero() {
        return d.clone();
    }
    d - &(&bc / &den)
}

/// Schur decomposition A = Z T Zᴴ of an upper Hessenberg matrix in place.
/// On return `h` is upper triangular and `z` holds the accumulated rotations.
/// An empty `z` requests eigenvalues only: the diagonal of `h` is then exact
/// but its strict upper triangle is left stale.
pub fn schur_in_place<R: Real>(h: &mut CMatrix<R>, z: &mut CMatrix<R>) -> Result<(), NumericsError> {
    let n = h.rows();
    let want_z = z.rows() > 0;
    if n == 0 {
        return Ok(());
    }
    let eps = R::unit_roundoff();
    let max_iter = 60 * n;
    let mut hi = n - 1;
    let mut its = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        // Locate the start of the active unreduced block.
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].abs1();
            let diag = h[(l - 1, l - 1)].abs1() + h[(l, l)].abs1();
            let tiny = if diag.is_zero() { h.max_abs() * &eps } else { diag * &eps };
            if sub <= tiny {
                h[(l, l - 1)] = Complex::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if its > max_iter {
            return Err(NumericsError::NoConvergence { iterations: total, active: hi + 1 - l });
        }
        let mu = if its % 11 == 0 {
            // Exceptional shift breaks cycles.
            &h[(hi, hi)] + &Complex::from_real(h[(hi, hi - 1)].abs1() * R::from_f64(0.75))
        } else {
            wilkinson_shift(&h[(hi - 1, hi - 1)], &h[(hi - 1, hi)], &h[(hi, hi - 1)], &h[(hi, hi)])
        };
        let mut x = &h[(l, l)] - &mu;
        let mut y = h[(l + 1, l)].clone();
        for k in l..hi {
            if k > l {
                x = h[(k, k - 1)].clone();
                y = h[(k + 1, k - 1)].clone();
            }
            let (g, r) = Givens::new(&x, &y);
            let col_start = if k > l {
                h[(k, k - 1)] = r;
                h[(k + 1, k - 1)] = Complex::zero();
                k
            } else {
                k
            };
            // Without Schur vectors only the active block needs updating.
            let (col_end, row_start) = if want_z { (n, 0) } else { (hi + 1, l) };
            g.rows(h, k, k + 1, col_start..col_end);
            let row_end = (k + 2).min(hi) + 1;
            g.cols(h, k, k + 1, row_start..row_end);
            if want_z {
                g.cols(z, k, k + 1, 0..n);
            }
        }
    }
    Ok(())
}

/// Eigenvalues only (balanced Hessenberg-QR).
pub fn eigenvalues<R: Real>(a: &CMatrix<R>) -> Result<Vec<Complex<R>>, NumericsError> {
    if !a.is_finite() {
        return Err(NumericsError::NonFinite("eigenvalue input"));
    }
    let (b, _) = balance(a);
    let (mut h, _) = hessenberg(&b);
    schur_in_place(&mut h, &mut CMatrix::zeros(0, 0))?;
    Ok((0..h.rows()).map(|i| h[(i, i)].clone()).collect())
}

/// Full eigendecomposition with unit eigenvectors, their inverse and diagnostics.
pub fn eigen<R: Real>(a: &CMatrix<R>) -> Result<EigenSolution<R>, NumericsError> {
    if !a.is_finite() {
        return Err(NumericsError::NonFinite("eigen input"));
    }
    let n = a.rows();
    let (b, exps) = balance(a);
    let (mut t, mut z) = hessenberg(&b);
    schur_in_place(&mut t, &mut z)?;
    let values: Vec<Complex<R>> = (0..n).map(|i| t[(i, i)].clone()).collect();

    let eps = R::unit_roundoff();
    let small = t.max_abs() * &eps;
    let mut vectors = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = &values[k];
        let mut x = vec![Complex::<R>::zero(); n];
        x[k] = Complex::one();
        for j in (0..k).rev() {
            let mut acc = Complex::zero();
            for m in j + 1..=k {
                acc.mul_add_assign(&t[(j, m)], &x[m]);
            }
            let mut den = &t[(j, j)] - lambda;
            if den.abs1() < small {
                den = Complex::from_real(small.clone());
            }
            x[j] = -(&acc / &den);
        }
        // Back to the balanced basis, then undo the balancing scale.
        let mut v = z.mul_vec(&x);
        for (vi, &e) in v.iter_mut().zip(&exps) {
            *vi = vi.mul_pow2(e);
        }
        normalize(&mut v);
        vectors.set_column(k, &v);
    }

    Ok(with_diagnostics(a, values, vectors))
}

/// Attaches Γ⁻¹, the condition estimate and the residual to eigenpairs of `a`.
pub fn with_diagnostics<R: Real>(a: &CMatrix<R>, values: Vec<Complex<R>>, vectors: CMatrix<R>) -> EigenSolution<R> {
    let n = a.rows();
    let (vectors_inverse, log2_cond) = match vectors.inverse() {
        Ok(inv) => {
            let c = vectors.norm1().log2_abs() + inv.norm1().log2_abs();
            (Some(inv), c)
        }
        Err(_) => (None, f64::INFINITY),
    };

    let log2_norm = a.norm1().log2_abs();
    let mut log2_residual = f64::NEG_INFINITY;
    for k in 0..n {
        let v = vectors.column(k);
        let av = a.mul_vec(&v);
        let r = av.iter().zip(&v).map(|(p, q)| (p - &(&values[k] * q)).log2_abs()).fold(f64::NEG_INFINITY, f64::max);
        log2_residual = log2_residual.max(r - log2_norm);
    }

    EigenSolution { values, vectors, log2_cond, log2_residual, vectors_inverse }
}

/// Newton refinement of approximate eigenpairs on the bordered system
/// [[A − σI, −x], [e_kᵀ, 0]]·[dx; dσ] = [−(Ax − σx); 0], with x_k = 1 fixed at
/// the largest component of the starting vector.
///
/// In multiprecision the iterations run at roughly doubling precisions so that
/// only the last one pays for the full significand.
pub fn refine_eigen<R: Real>(a: &CMatrix<R>, approx: &EigenSolution<f64>) -> Result<EigenSolution<R>, NumericsError> {
    let n = a.rows();
    let mut pivots = Vec::with_capacity(n);
    let mut start_vals = Vec::with_capacity(n);
    let mut start_vecs = Vec::with_capacity(n);
    for col in 0..n {
        let v0 = approx.vectors.column(col);
        let k = (0..n).max_by(|&i, &j| v0[i].abs().total_cmp(&v0[j].abs())).unwrap();
        let pivot = v0[k].inv();
        let mut x: Vec<Complex<f64>> = v0.iter().map(|z| z * &pivot).collect();
        x[k] = Complex::one();
        pivots.push(k);
        start_vals.push(approx.values[col].clone());
        start_vecs.push(x);
    }

    let bits = R::precision_bits();
    let staged = matches!(a[(0, 0)].re.precision(), Precision::Multi(_)) && bits > 256;
    let (values, xs) = if staged {
        // Each stage carries a little over half the bits of the next one.
        let mut stages = vec![];
        let mut b = bits;
        while b > 192 {
            b = b / 2 + 64;
            stages.push(b);
        }
        stages.reverse();
        let (mut vals, mut vecs) = with_precision(stages[0], || {
            let am: CMatrix<MpFloat> = a.convert();
            newton_pairs(&am, &pivots, lift(&start_vals), start_vecs.iter().map(|v| lift(v)).collect(), false)
        })?;
        for &stage in &stages[1..] {
            let (v, x) = with_precision(stage, || {
                let am: CMatrix<MpFloat> = a.convert();
                newton_pairs(&am, &pivots, lift(&vals), vecs.iter().map(|v| lift(v)).collect(), false)
            })?;
            vals = v;
            vecs = x;
        }
        newton_pairs(a, &pivots, lift(&vals), vecs.iter().map(|v| lift(v)).collect(), true)?
    } else {
        newton_pairs(a, &pivots, lift(&start_vals), start_vecs.iter().map(|v| lift(v)).collect(), true)?
    };

    let mut vectors = CMatrix::zeros(n, n);
    for (col, mut x) in xs.into_iter().enumerate() {
        normalize(&mut x);
        vectors.set_column(col, &x);
    }
    Ok(with_diagnostics(a, values, vectors))
}

fn lift<S: Real, T: Real>(v: &[Complex<S>]) -> Vec<Complex<T>> {
    v.iter().map(|z| Complex::new(z.re.convert(), z.im.convert())).collect()
}

type Pairs<R> = (Vec<Complex<R>>, Vec<Vec<Complex<R>>>);

/// Newton iterations for every pair at the current precision. Intermediate
/// stages (`strict` false) stop after reaching their own precision or five
/// iterations; the final stage must converge.
fn newton_pairs<R: Real>(
    a: &CMatrix<R>,
    pivots: &[usize],
    mut values: Vec<Complex<R>>,
    mut vectors: Vec<Vec<Complex<R>>>,
    strict: bool,
) -> Result<Pairs<R>, NumericsError> {
    let n = a.rows();
    let log2_norm = a.norm1().log2_abs();
    let log2_tol = -(R::precision_bits() as f64) + 6.0;
    let max_iter = if strict { 60 } else { 5 };
    for col in 0..n {
        let k = pivots[col];
        let (sigma, x) = (&mut values[col], &mut vectors[col]);
        let mut converged = false;
        let mut prev_step = f64::INFINITY;
        for _ in 0..max_iter {
            let ax = a.mul_vec(x);
            let resid: Vec<Complex<R>> = ax.iter().zip(x.iter()).map(|(p, q)| p - &(&*sigma * q)).collect();
            let mut bordered = CMatrix::zeros(n + 1, n + 1);
            for i in 0..n {
                for j in 0..n {
                    bordered[(i, j)] = a[(i, j)].clone();
                }
                bordered[(i, i)] -= &*sigma;
                bordered[(i, n)] = -x[i].clone();
            }
            bordered[(n, k)] = Complex::one();
            let mut rhs: Vec<Complex<R>> = resid.iter().map(|z| -z.clone()).collect();
            rhs.push(Complex::zero());
            let delta = bordered.solve(&rhs)?;
            let step_x = delta[..n].iter().map(Complex::log2_abs).fold(f64::NEG_INFINITY, f64::max);
            let step_s = delta[n].log2_abs() - log2_norm;
            *sigma += &delta[n];
            for (xi, di) in x.iter_mut().zip(&delta[..n]) {
                *xi += di;
            }
            if !sigma.is_finite() {
                return Err(NumericsError::NonFinite("eigenpair refinement"));
            }
            let step = step_x.max(step_s);
            // Quadratic convergence: the error left after this step is about
            // the square of the step.
            if step <= log2_tol || 2.0 * step + 16.0 <= log2_tol {
                converged = true;
                break;
            }
            // Rounding floor: the step has stopped shrinking and is already far
            // below the starting error.
            if step > prev_step - 1.0 && step < -0.5 * R::precision_bits() as f64 {
                converged = true;
                break;
            }
            prev_step = step;
        }
        if strict && !converged {
            return Err(NumericsError::NoConvergence { iterations: max_iter, active: col });
        }
    }
    Ok((values, vectors))
}

/// Scales to unit 2-norm (no-op on the zero vector).
pub fn normalize<R: Real>(v: &mut [Complex<R>]) {
    let scale = v.iter().fold(R::zero(), |m, z| R::max_of(m, z.abs1()));
    if scale.is_zero() {
        return;
    }
    let inv = R::one() / &scale;
    for z in v.iter_mut() {
        *z = z.scale(&inv);
    }
    let norm = v.iter().fold(R::zero(), |s, z| s + z.norm_sqr()).sqrt();
    let inv = R::one() / &norm;
    for z in v.iter_mut() {
        *z = z.scale(&inv);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dd::DoubleDouble as Dd;
    use crate::numerics::mp::{with_precision, MpFloat};

    fn c(re: f64, im: f64) -> Complex<Dd> {
        Complex::from_f64(re, im)
    }

    fn sorted_c64(v: &[Complex<Dd>]) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = v.iter().map(|z| (z.re.to_f64(), z.im.to_f64())).collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let vals = eigenvalues(&CMatrix::<Dd>::identity(8)).unwrap();
        assert!(vals.iter().all(|z| *z == Complex::one()));
    }

    #[test]
    fn diagonal_reciprocal_pairs_exact() {
        let d = [
            c(2.0, 0.0),
            c(0.5, 0.0),
            c(3.0, 0.0),
            Complex::one() / c(3.0, 0.0),
            c(0.0, 1.0),
            c(0.0, -1.0),
            c(1.0, 0.0),
            c(1.0, 0.0),
        ];
        let sol = eigen(&CMatrix::from_diagonal(&d)).unwrap();
        assert_eq!(sorted_c64(&sol.values), sorted_c64(&d));
        for k in 0..8 {
            assert!((&sol.values[k] - &d[k]).abs().to_f64() < 1e-31);
        }
    }

    #[test]
    fn companion_matrix_roots() {
        // Companion of (x-1)(x-2)(x-3)(x-4) = x⁴ − 10x³ + 35x² − 50x + 24.
        let mut a = CMatrix::<Dd>::zeros(4, 4);
        let coeffs = [24.0, -50.0, 35.0, -10.0];
        for i in 1..4 {
            a[(i, i - 1)] = Complex::one();
        }
        for (i, &cf) in coeffs.iter().enumerate() {
            a[(i, 3)] = c(-cf, 0.0);
        }
        let sol = eigen(&a).unwrap();
        let mut re: Vec<f64> = sol.values.iter().map(|z| z.re.to_f64()).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, r) in re.iter().enumerate() {
            assert!((r - (k + 1) as f64).abs() < 1e-25, "{re:?}");
        }
        assert!(sol.log2_residual < -95.0);
    }

    #[test]
    fn eigenvectors_diagonalize_random_matrix() {
        let a = CMatrix::<Dd>::from_fn(8, 8, |i, j| {
            let s = ((i * 31 + j * 17 + 7) % 23) as f64 / 23.0 - 0.5;
            let t = ((i * 13 + j * 29 + 3) % 19) as f64 / 19.0 - 0.5;
            c(s, t)
        });
        let sol = eigen(&a).unwrap();
        let inv = sol.vectors_inverse.clone().unwrap();
        let recon = sol.vectors.matmul(&CMatrix::from_diagonal(&sol.values)).matmul(&inv);
        assert!(recon.rel_diff(&a) < 1e-28);
    }

    #[test]
    fn multiprecision_handles_wide_dynamic_range() {
        with_precision(800, || {
            let big = Complex::<MpFloat>::from_f64(2.0, 0.0).powi(300);
            let small = Complex::one() / &big;
            let mut a = CMatrix::from_diagonal(&[big.clone(), small.clone(), Complex::from_f64(0.5, 0.5)]);
            // Similarity with an upper triangular mixer keeps the spectrum.
            let mut s = CMatrix::<MpFloat>::identity(3);
            s[(0, 1)] = Complex::from_f64(1.0, 0.0);
            s[(1, 2)] = Complex::from_f64(0.0, 1.0);
            a = s.matmul(&a).matmul(&s.inverse().unwrap());
            let vals = eigenvalues(&a).unwrap();
            let found_small = vals.iter().any(|z| ((z - &small).log2_abs() - small.log2_abs()) < -50.0);
            assert!(found_small, "{vals:?}");
        });
    }
}
