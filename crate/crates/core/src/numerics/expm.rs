//! Matrix exponential by eigendecomposition and by scaling-and-squaring.

use super::complex::Complex;
use super::eigen::{eigen, EigenSolution};
use super::error::NumericsError;
use super::matrix::CMatrix;
use super::real::Real;

/// Relative eigenvalue gap below which the eigendecomposition route is refused.
pub const DEGENERACY_GAP: f64 = 1e-8;

/// Default cap on log2 of the eigenvector condition number, as a fraction of the
/// working precision bits.
pub const COND_CAP_FRACTION: f64 = 0.5;

/// exp(F) = Γ·diag(e^ς)·Γ⁻¹.
///
/// Fails with [`NumericsError::NearDegenerate`] when two eigenvalues are closer
/// than `DEGENERACY_GAP` times the spectral radius, and with
/// [`NumericsError::IllConditioned`] when log2 cond(Γ) exceeds `log2_cond_cap`.
pub fn mat_exp_eig<R: Real>(f: &CMatrix<R>, log2_cond_cap: f64) -> Result<CMatrix<R>, NumericsError> {
    let sol = eigen(f)?;
    exp_from_eigen(&sol, log2_cond_cap)
}

/// Checks the spectrum of `sol` for near-degeneracy.
pub fn check_degeneracy<R: Real>(values: &[Complex<R>]) -> Result<(), NumericsError> {
    let log2_radius = values.iter().map(Complex::log2_abs).fold(f64::NEG_INFINITY, f64::max);
    let mut log2_gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            log2_gap = log2_gap.min((&values[i] - &values[j]).log2_abs());
        }
    }
    if log2_radius == f64::NEG_INFINITY || log2_gap < log2_radius + DEGENERACY_GAP.log2() {
        return Err(NumericsError::NearDegenerate { log2_gap, log2_radius });
    }
    Ok(())
}

/// Builds exp(F) from an already computed eigendecomposition of F.
pub fn exp_from_eigen<R: Real>(sol: &EigenSolution<R>, log2_cond_cap: f64) -> Result<CMatrix<R>, NumericsError> {
    check_degeneracy(&sol.values)?;
    let inv = match &sol.vectors_inverse {
        Some(inv) if sol.log2_cond <= log2_cond_cap => inv,
        _ => return Err(NumericsError::IllConditioned { log2_cond: sol.log2_cond, log2_cap: log2_cond_cap }),
    };
    let n = sol.values.len();
    let e: Vec<Complex<R>> = sol.values.iter().map(Complex::exp).collect();
    let mut ge = sol.vectors.clone();
    for i in 0..n {
        for j in 0..n {
            ge[(i, j)] *= &e[j];
        }
    }
    Ok(ge.matmul(inv))
}

/// Scaling and squaring with a truncated Taylor series on F/2^s.
///
/// The scaled norm target 2^-r with r ≈ √bits balances series length against the
/// number of squarings; the series stops once a term drops below the unit
/// roundoff relative to the partial sum.
pub fn mat_exp_series<R: Real>(f: &CMatrix<R>) -> CMatrix<R> {
    assert!(f.is_square(), "mat_exp_series: square input required");
    let n = f.rows();
    let log2_norm = f.norm1().log2_abs();
    if log2_norm == f64::NEG_INFINITY {
        return CMatrix::identity(n);
    }
    let bits = R::precision_bits() as f64;
    let r = bits.sqrt().ceil().clamp(4.0, 64.0);
    let s = (log2_norm + r).ceil().max(0.0) as i32;
    let x = f.map(|z| z.mul_pow2(-s));
    let log2_u = -bits - 2.0;

    let mut sum = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..=400 {
        term = term.matmul(&x).scale_real(&(R::one() / R::from_i64(k)));
        sum = sum.add(&term);
        if term.log2_max_abs() < sum.log2_max_abs() + log2_u {
            break;
        }
    }
    for _ in 0..s {
        sum = sum.matmul(&sum);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dd::DoubleDouble as Dd;

    fn c(re: f64, im: f64) -> Complex<Dd> {
        Complex::from_f64(re, im)
    }

    fn random(n: usize, seed: u64, scale: f64) -> CMatrix<Dd> {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * scale
        };
        CMatrix::from_fn(n, n, |_, _| c(next(), next()))
    }

    #[test]
    fn zero_gives_identity() {
        let z = CMatrix::<Dd>::zeros(8, 8);
        assert_eq!(mat_exp_series(&z), CMatrix::identity(8));
    }

    #[test]
    fn diagonal_exponentiates_entrywise() {
        let d: Vec<_> = (0..8).map(|i| c(i as f64 - 3.5, 0.3 * i as f64)).collect();
        let f = CMatrix::from_diagonal(&d);
        let e = mat_exp_eig(&f, 50.0).unwrap();
        let s = mat_exp_series(&f);
        for i in 0..8 {
            let want = d[i].exp();
            assert!((&e[(i, i)] - &want).abs().to_f64() < 1e-28 * want.abs().to_f64());
            assert!((&s[(i, i)] - &want).abs().to_f64() < 1e-28 * want.abs().to_f64());
        }
    }

    #[test]
    fn nilpotent_series_terminates() {
        let mut f = CMatrix::<Dd>::zeros(2, 2);
        f[(0, 1)] = c(3.0, -2.0);
        let e = mat_exp_series(&f);
        assert_eq!(e[(0, 0)], Complex::one());
        assert_eq!(e[(1, 1)], Complex::one());
        assert!((&e[(0, 1)] - &c(3.0, -2.0)).abs().to_f64() < 1e-30);
    }

    #[test]
    fn series_group_inverse() {
        let f = random(8, 11, 3.0);
        let (a, b) = (mat_exp_series(&f), mat_exp_series(&f.scale_real(&Dd::from_f64(-1.0))));
        let bound = 1e-29 * a.norm1().to_f64() * b.norm1().to_f64();
        assert!(a.matmul(&b).sub(&CMatrix::identity(8)).max_abs().to_f64() < bound);
    }

    #[test]
    fn eig_and_series_agree_on_random_matrices() {
        for seed in 0..5 {
            let f = random(8, seed, 2.0);
            let a = mat_exp_eig(&f, 50.0).unwrap();
            let b = mat_exp_series(&f);
            assert!(a.rel_diff(&b) < 1e-25, "seed {seed}: {}", a.rel_diff(&b));
        }
    }

    #[test]
    fn degenerate_spectrum_is_refused() {
        let f = CMatrix::<Dd>::identity(4);
        assert!(matches!(mat_exp_eig(&f, 50.0), Err(NumericsError::NearDegenerate { .. })));
    }
}
