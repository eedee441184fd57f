//! Characteristic polynomial by the Faddeev–LeVerrier trace recursion, and the
//! reduction of a palindromic octic to a quartic in z = λ + 1/λ.

use super::complex::Complex;
use super::error::NumericsError;
use super::matrix::CMatrix;
use super::real::Real;

/// Monic characteristic polynomial det(λI − A) = Σ C_k λ^k, C_n = 1.
#[derive(Clone, Debug)]
pub struct CharPoly<R: Real> {
    /// C_0..C_n (index = power of λ).
    pub coeffs: Vec<Complex<R>>,
    /// Auxiliary matrices M_1..M_n of the recursion, when requested.
    pub aux: Vec<CMatrix<R>>,
}

impl<R: Real> CharPoly<R> {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: &Complex<R>) -> Complex<R> {
        let mut acc = Complex::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    /// log2 of max_k |C_k|.
    pub fn log2_max_coeff(&self) -> f64 {
        self.coeffs.iter().map(Complex::log2_abs).fold(f64::NEG_INFINITY, f64::max)
    }

    /// max_j |C_{n−j} − C_j| / max_k |C_k|; the n = 8 case covers
    /// |C₈−C₀|, |C₇−C₁|, |C₆−C₂|, |C₅−C₃|.
    pub fn palindromic_residual(&self) -> f64 {
        let n = self.degree();
        let scale = self.log2_max_coeff();
        let mut worst = f64::NEG_INFINITY;
        for j in 0..n / 2 {
            worst = worst.max((&self.coeffs[n - j] - &self.coeffs[j]).log2_abs());
        }
        (worst - scale).exp2()
    }
}

/// Runs the recursion M_k = A·M_{k−1} + C_{n−k+1}·I, C_{n−k} = −tr(A·M_k)/k.
pub fn faddeev_leverrier<R: Real>(a: &CMatrix<R>, keep_aux: bool) -> CharPoly<R> {
    fl_steps(a, a.rows(), keep_aux)
}

/// Only the leading coefficients C_{n−1}..C_{n−steps}; the rest are left zero.
///
/// Each step costs one matrix product and multiplies the rounding error by
/// roughly ‖A‖, so the leading coefficients are the well-determined ones.
pub fn faddeev_leverrier_leading<R: Real>(a: &CMatrix<R>, steps: usize) -> CharPoly<R> {
    fl_steps(a, steps.min(a.rows()), false)
}

fn fl_steps<R: Real>(a: &CMatrix<R>, steps: usize, keep_aux: bool) -> CharPoly<R> {
    assert!(a.is_square(), "faddeev_leverrier: square input required");
    let n = a.rows();
    let mut coeffs = vec![Complex::zero(); n + 1];
    coeffs[n] = Complex::one();
    let mut aux = Vec::new();
    let mut m = CMatrix::identity(n);
    for k in 1..=steps {
        if k > 1 {
            m = a.matmul(&m);
            m.add_diagonal(&coeffs[n - k + 1]);
        }
        let t = a.trace_of_product(&m);
        coeffs[n - k] = -(t.scale(&(R::one() / R::from_i64(k as i64))));
        if keep_aux {
            aux.push(m.clone());
        }
    }
    CharPoly { coeffs, aux }
}

/// Quartic coefficients [1, c₃, c₂, c₁, c₀] (descending powers of z) of the
/// palindromic octic in z = λ + 1/λ, built from C₇, C₆, C₅, C₄:
/// z⁴ + C₇z³ + (C₆−4)z² + (C₅−3C₇)z + (C₄−2C₆+2).
pub fn palindromic_quartic<R: Real>(p: &CharPoly<R>) -> [Complex<R>; 5] {
    assert_eq!(p.degree(), 8, "palindromic reduction is defined for degree 8");
    let c = &p.coeffs;
    let two = Complex::from_f64(2.0, 0.0);
    let three = R::from_f64(3.0);
    [
        Complex::one(),
        c[7].clone(),
        &c[6] - &Complex::from_f64(4.0, 0.0),
        &c[5] - &c[7].scale(&three),
        &(&c[4] - &c[6].mul_pow2(1)) + &two,
    ]
}

/// Checks palindromicity against `tolerance` and returns the quartic.
pub fn palindromic_reduce<R: Real>(p: &CharPoly<R>, tolerance: f64) -> Result<[Complex<R>; 5], NumericsError> {
    let residual = p.palindromic_residual();
    if !(residual <= tolerance) {
        return Err(NumericsError::NotPalindromic { residual, tolerance });
    }
    Ok(palindromic_quartic(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dd::DoubleDouble as Dd;

    fn re(c: &Complex<Dd>) -> f64 {
        c.re.to_f64()
    }

    #[test]
    fn identity_gives_binomials() {
        let p = faddeev_leverrier(&CMatrix::<Dd>::identity(8), false);
        let want = [1.0, -8.0, 28.0, -56.0, 70.0, -56.0, 28.0, -8.0, 1.0];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(re(&p.coeffs[k]), *w, "C{k}");
        }
    }

    #[test]
    fn zero_matrix() {
        let p = faddeev_leverrier(&CMatrix::<Dd>::zeros(8, 8), true);
        assert!(p.coeffs[..8].iter().all(Complex::is_zero));
        assert_eq!(p.aux.len(), 8);
    }

    #[test]
    fn similarity_transform_of_known_spectrum() {
        // A = S·diag(1,2,3,4)·S⁻¹ with a fixed unimodular S.
        let s = CMatrix::<Dd>::from_fn(4, 4, |i, j| {
            if i == j {
                Complex::one()
            } else if j > i {
                Complex::from_f64((i + 2 * j) as f64, 1.0)
            } else {
                Complex::zero()
            }
        });
        let d = CMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0].map(|x| Complex::from_f64(x, 0.0)));
        let a = s.matmul(&d).matmul(&s.inverse().unwrap());
        let p = faddeev_leverrier(&a, false);
        // (λ−1)(λ−2)(λ−3)(λ−4) = λ⁴ − 10λ³ + 35λ² − 50λ + 24
        let want = [24.0, -50.0, 35.0, -10.0, 1.0];
        for (k, w) in want.iter().enumerate() {
            assert!((&p.coeffs[k] - &Complex::from_f64(*w, 0.0)).abs().to_f64() < 1e-24, "C{k}");
        }
    }

    #[test]
    fn quartic_of_all_ones() {
        let p = faddeev_leverrier(&CMatrix::<Dd>::identity(8), false);
        let q = palindromic_reduce(&p, 1e-20).unwrap();
        let want = [1.0, -8.0, 24.0, -32.0, 16.0];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(re(&q[k]), *w);
        }
    }

    #[test]
    fn quartic_direct_substitution() {
        let mut coeffs = vec![Complex::<Dd>::zero(); 9];
        coeffs[0] = Complex::one();
        coeffs[8] = Complex::one();
        coeffs[4] = Complex::from_f64(2.0, 0.0);
        let q = palindromic_reduce(&CharPoly { coeffs, aux: vec![] }, 0.0).unwrap();
        let want = [1.0, 0.0, -4.0, 0.0, 4.0];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(re(&q[k]), *w);
        }
    }

    #[test]
    fn non_palindromic_is_rejected() {
        let d = CMatrix::from_diagonal(&[2.0, 3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0].map(|x| Complex::<Dd>::from_f64(x, 0.0)));
        let p = faddeev_leverrier(&d, false);
        assert!(matches!(palindromic_reduce(&p, 1e-12), Err(NumericsError::NotPalindromic { .. })));
    }

    #[test]
    fn leading_steps_match_full_run() {
        let a = CMatrix::<Dd>::from_fn(8, 8, |i, j| {
            Complex::from_f64(((i * 7 + j * 3) % 5) as f64 - 2.0, (i as f64 - j as f64) * 0.1)
        });
        let full = faddeev_leverrier(&a, false);
        let lead = faddeev_leverrier_leading(&a, 4);
        for k in 4..=8 {
            assert_eq!(full.coeffs[k], lead.coeffs[k]);
        }
        assert!(lead.coeffs[3].is_zero());
    }
}
