//! Single-layer operator matrices: the second-order triple (A, B, C), the
//! first-order pair (M, N) and the boundary map built from (R, S).
//!
//! Field order is (u₁, u₂, θ, η); x₂ is the stacking direction. Derivatives
//! act on amplitudes through ∂₁ → ik₁ and ∂₂ → d/dx₂ + ik₂, with time
//! dependence e^{−iωt}.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::materials::PhaseCoefficients;
use crate::numerics::{CMatrix, Complex, Real, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("matrix A is singular ({0}); conducting and diffusing fields need nonzero K and D")]
    SingularA(String),
    #[error("matrix R is singular: {0}")]
    SingularR(String),
    #[error("{0} lacks the required symmetry")]
    Asymmetric(&'static str),
    #[error("boundary map inverse residual 2^{log2_residual:.1} exceeds 2^{log2_tolerance:.1}")]
    BoundaryResidual { log2_residual: f64, log2_tolerance: f64 },
    #[error("non-finite material constant in {0}")]
    NonFinite(&'static str),
}

/// Full anisotropic constants. Tensor indices 0, 1 stand for x₁, x₂.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnisotropicPhase {
    pub stiffness: [[[[f64; 2]; 2]; 2]; 2],
    pub alpha: [[f64; 2]; 2],
    pub beta: [[f64; 2]; 2],
    pub conductivity: [[f64; 2]; 2],
    pub diffusivity: [[f64; 2]; 2],
    pub rho: f64,
    pub p: f64,
    pub q: f64,
    pub psi: f64,
}

impl AnisotropicPhase {
    /// Isotropic tensors C_ijhk = λδ_ijδ_hk + G(δ_ihδ_jk + δ_ikδ_jh), α_ij = αδ_ij, ...
    pub fn from_isotropic(c: &PhaseCoefficients) -> Self {
        let lam = c.lame_lambda();
        let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let mut stiffness = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for h in 0..2 {
                    for k in 0..2 {
                        stiffness[i][j][h][k] = lam * d(i, j) * d(h, k) + c.g * (d(i, h) * d(j, k) + d(i, k) * d(j, h));
                    }
                }
            }
        }
        let iso = |x: f64| [[x, 0.0], [0.0, x]];
        Self {
            stiffness,
            alpha: iso(c.alpha),
            beta: iso(c.beta),
            conductivity: iso(c.k),
            diffusivity: iso(c.d),
            rho: c.rho,
            p: c.p,
            q: c.q,
            psi: c.psi,
        }
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        let c = &self.stiffness;
        let mut scale = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                for h in 0..2 {
                    for k in 0..2 {
                        if !c[i][j][h][k].is_finite() {
                            return Err(AssemblyError::NonFinite("stiffness"));
                        }
                        scale = scale.max(c[i][j][h][k].abs());
                    }
                }
            }
        }
        let close = |a: f64, b: f64, s: f64| (a - b).abs() <= 1e-12 * s;
        for i in 0..2 {
            for j in 0..2 {
                for h in 0..2 {
                    for k in 0..2 {
                        let v = c[i][j][h][k];
                        if !close(v, c[j][i][h][k], scale) || !close(v, c[i][j][k][h], scale) || !close(v, c[h][k][i][j], scale) {
                            return Err(AssemblyError::Asymmetric("stiffness tensor"));
                        }
                    }
                }
            }
        }
        for (name, m) in [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("conductivity", &self.conductivity),
            ("diffusivity", &self.diffusivity),
        ] {
            if m.iter().flatten().any(|x| !x.is_finite()) {
                return Err(AssemblyError::NonFinite(name));
            }
            let s = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
            if !close(m[0][1], m[1][0], s) {
                return Err(AssemblyError::Asymmetric(name));
            }
        }
        for (name, x) in [("rho", self.rho), ("p", self.p), ("q", self.q), ("psi", self.psi)] {
            if !x.is_finite() {
                return Err(AssemblyError::NonFinite(name));
            }
        }
        Ok(())
    }
}

/// Constitutive description of one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Medium {
    Isotropic(PhaseCoefficients),
    Anisotropic(AnisotropicPhase),
}

#[derive(Clone, Debug)]
pub struct ABCMatrices<R: Real> {
    pub a: CMatrix<R>,
    pub b: CMatrix<R>,
    pub c: CMatrix<R>,
    pub k1: C64,
    pub k2: C64,
    pub omega: C64,
}

#[derive(Clone, Debug)]
pub struct MNMatrices<R: Real> {
    pub m: CMatrix<R>,
    pub n: CMatrix<R>,
    pub m_inv: CMatrix<R>,
}

impl<R: Real> MNMatrices<R> {
    /// −M⁻¹N, the generator of y' = −M⁻¹N y.
    pub fn generator(&self) -> CMatrix<R> {
        let mut g = self.m_inv.matmul(&self.n);
        g = g.map(|z| -z.clone());
        g
    }
}

#[derive(Clone, Debug)]
pub struct RSMatrices<R: Real> {
    pub r: CMatrix<R>,
    pub s: CMatrix<R>,
}

#[derive(Clone, Debug)]
pub struct BoundaryMap<R: Real> {
    pub p: CMatrix<R>,
    pub p_inv: CMatrix<R>,
    /// log2 ‖P·P⁻¹ − I‖.
    pub log2_residual: f64,
}

fn re<R: Real>(x: f64) -> Complex<R> {
    Complex::from_real(R::from_f64(x))
}

fn im<R: Real>(x: &Complex<R>) -> Complex<R> {
    x.mul_i()
}

fn provenance<R: Real>(k1: &Complex<R>, k2: &Complex<R>, omega: &Complex<R>) -> (C64, C64, C64) {
    (k1.to_c64(), k2.to_c64(), omega.to_c64())
}

pub fn build_abc_isotropic<R: Real>(
    c: &PhaseCoefficients,
    k1: &Complex<R>,
    k2: &Complex<R>,
    omega: &Complex<R>,
) -> ABCMatrices<R> {
    let one = R::one();
    let nu = R::from_f64(c.nu);
    let g = R::from_f64(c.g);
    let two_nu = one.clone() - nu.mul_pow2(1);
    let gl = Complex::from_real(g.clone() / &two_nu);
    let modulus = Complex::from_real(g.mul_pow2(1) * (one - &nu) / &two_nu);
    let g = Complex::from_real(g);
    let (alpha, beta) = (re::<R>(c.alpha), re::<R>(c.beta));
    let (k, d) = (re::<R>(c.k), re::<R>(c.d));
    let (p, q, psi) = (re::<R>(c.p), re::<R>(c.q), re::<R>(c.psi));
    let rho_w2 = &(omega * omega) * &re::<R>(c.rho);
    let k1s = k1 * k1;
    let k2s = k2 * k2;
    let ksum = &k1s + &k2s;
    let ik1 = im(k1);
    let ik2 = im(k2);
    let iw = im(omega);

    let a = CMatrix::from_diagonal(&[g.clone(), modulus.clone(), k.clone(), d.clone()]);

    let mut b = CMatrix::zeros(4, 4);
    b[(0, 0)] = (&ik2 * &g).mul_pow2(1);
    b[(0, 1)] = &ik1 * &gl;
    b[(1, 0)] = b[(0, 1)].clone();
    b[(1, 1)] = (&ik2 * &modulus).mul_pow2(1);
    b[(1, 2)] = -alpha.clone();
    b[(1, 3)] = -beta.clone();
    b[(2, 1)] = &iw * &alpha;
    b[(2, 2)] = (&ik2 * &k).mul_pow2(1);
    b[(3, 1)] = &iw * &beta;
    b[(3, 3)] = (&ik2 * &d).mul_pow2(1);

    let mut cm = CMatrix::zeros(4, 4);
    cm[(0, 0)] = &(&rho_w2 - &(&k1s * &modulus)) - &(&g * &k2s);
    cm[(0, 1)] = -(&(k1 * k2) * &gl);
    cm[(1, 0)] = cm[(0, 1)].clone();
    cm[(0, 2)] = -(&ik1 * &alpha);
    cm[(0, 3)] = -(&ik1 * &beta);
    cm[(1, 1)] = &(&rho_w2 - &(&k1s * &g)) - &(&k2s * &modulus);
    cm[(1, 2)] = -(&ik2 * &alpha);
    cm[(1, 3)] = -(&ik2 * &beta);
    cm[(2, 0)] = -(&(omega * k1) * &alpha);
    cm[(2, 1)] = -(&(omega * k2) * &alpha);
    cm[(2, 2)] = &(&iw * &p) - &(&ksum * &k);
    cm[(2, 3)] = &iw * &psi;
    cm[(3, 2)] = cm[(2, 3)].clone();
    cm[(3, 0)] = -(&(omega * k1) * &beta);
    cm[(3, 1)] = -(&(omega * k2) * &beta);
    cm[(3, 3)] = &(&iw * &q) - &(&ksum * &d);

    let (k1, k2, omega) = provenance(k1, k2, omega);
    ABCMatrices { a, b, c: cm, k1, k2, omega }
}

pub fn build_abc_anisotropic<R: Real>(
    ph: &AnisotropicPhase,
    k1: &Complex<R>,
    k2: &Complex<R>,
    omega: &Complex<R>,
) -> Result<ABCMatrices<R>, AssemblyError> {
    ph.validate()?;
    let cc = |i: usize, j: usize, h: usize, k: usize| re::<R>(ph.stiffness[i][j][h][k]);
    let ik1 = im(k1);
    let ik2 = im(k2);
    let iw = im(omega);
    let k1s = k1 * k1;
    let k2s = k2 * k2;
    let k12 = k1 * k2;
    let rho_w2 = &(omega * omega) * &re::<R>(ph.rho);

    let mut a = CMatrix::zeros(4, 4);
    let mut b = CMatrix::zeros(4, 4);
    let mut c = CMatrix::zeros(4, 4);
    for i in 0..2 {
        for h in 0..2 {
            let c22 = cc(i, 1, h, 1);
            let cross = &cc(i, 0, h, 1) + &cc(i, 1, h, 0);
            a[(i, h)] = c22.clone();
            b[(i, h)] = &(&ik2 * &c22).mul_pow2(1) + &(&ik1 * &cross);
            let mut v = -(&(&(&k2s * &c22) + &(&k12 * &cross)) + &(&k1s * &cc(i, 0, h, 0)));
            if i == h {
                v += &rho_w2;
            }
            c[(i, h)] = v;
        }
        for (col, t) in [(2, &ph.alpha), (3, &ph.beta)] {
            b[(i, col)] = re::<R>(-t[i][1]);
            c[(i, col)] = -(&(&ik1 * &re::<R>(t[i][0])) + &(&ik2 * &re::<R>(t[i][1])));
            b[(col, i)] = &iw * &re::<R>(t[i][1]);
            c[(col, i)] = -(omega * &(&(k1 * &re::<R>(t[i][0])) + &(k2 * &re::<R>(t[i][1]))));
        }
    }
    for (idx, t, cap) in [(2, &ph.conductivity, ph.p), (3, &ph.diffusivity, ph.q)] {
        let t22 = re::<R>(t[1][1]);
        let cross = re::<R>(t[0][1] + t[1][0]);
        a[(idx, idx)] = t22.clone();
        b[(idx, idx)] = &(&ik2 * &t22).mul_pow2(1) + &(&ik1 * &cross);
        let lap = &(&(&k2s * &t22) + &(&k12 * &cross)) + &(&k1s * &re::<R>(t[0][0]));
        c[(idx, idx)] = &(&iw * &re::<R>(cap)) - &lap;
    }
    c[(2, 3)] = &iw * &re::<R>(ph.psi);
    c[(3, 2)] = c[(2, 3)].clone();

    if a.lu().is_err() {
        return Err(AssemblyError::SingularA("anisotropic phase".into()));
    }
    let (k1, k2, omega) = provenance(k1, k2, omega);
    Ok(ABCMatrices { a, b, c, k1, k2, omega })
}

pub fn build_abc<R: Real>(
    medium: &Medium,
    k1: &Complex<R>,
    k2: &Complex<R>,
    omega: &Complex<R>,
) -> Result<ABCMatrices<R>, AssemblyError> {
    match medium {
        Medium::Isotropic(c) => Ok(build_abc_isotropic(c, k1, k2, omega)),
        Medium::Anisotropic(ph) => build_abc_anisotropic(ph, k1, k2, omega),
    }
}

/// M = [[A, 0], [0, I]], N = [[B, C], [−I, 0]], with M⁻¹ cached.
pub fn build_mn<R: Real>(abc: &ABCMatrices<R>) -> Result<MNMatrices<R>, AssemblyError> {
    let a_inv = abc.a.inverse().map_err(|e| AssemblyError::SingularA(e.to_string()))?;
    let eye = CMatrix::identity(4);
    let mut m = CMatrix::zeros(8, 8);
    m.set_block(0, 0, &abc.a);
    m.set_block(4, 4, &eye);
    let mut m_inv = CMatrix::zeros(8, 8);
    m_inv.set_block(0, 0, &a_inv);
    m_inv.set_block(4, 4, &eye);
    let mut n = CMatrix::zeros(8, 8);
    n.set_block(0, 0, &abc.b);
    n.set_block(0, 4, &abc.c);
    n.set_block(4, 0, &eye.map(|z| -z.clone()));
    Ok(MNMatrices { m, n, m_inv })
}

/// Traction/flux map: R multiplies w', S multiplies w.
pub fn build_rs<R: Real>(medium: &Medium, k1: &Complex<R>) -> Result<RSMatrices<R>, AssemblyError> {
    let ph = match medium {
        Medium::Isotropic(c) => {
            let mut r = CMatrix::zeros(4, 4);
            let mut s = CMatrix::zeros(4, 4);
            let ik1 = im(k1);
            r[(0, 0)] = re(c.g);
            r[(1, 1)] = Complex::from_real(
                R::from_f64(c.g).mul_pow2(1) * (R::one() - R::from_f64(c.nu)) / (R::one() - R::from_f64(c.nu).mul_pow2(1)),
            );
            r[(2, 2)] = re(-c.k);
            r[(3, 3)] = re(-c.d);
            let lam =
                Complex::from_real(R::from_f64(c.g).mul_pow2(1) * R::from_f64(c.nu) / (R::one() - R::from_f64(c.nu).mul_pow2(1)));
            s[(0, 1)] = &ik1 * &re::<R>(c.g);
            s[(1, 0)] = &ik1 * &lam;
            s[(1, 2)] = re(-c.alpha);
            s[(1, 3)] = re(-c.beta);
            return Ok(RSMatrices { r, s });
        }
        Medium::Anisotropic(ph) => ph,
    };
    ph.validate()?;
    let ik1 = im(k1);
    let mut r = CMatrix::zeros(4, 4);
    let mut s = CMatrix::zeros(4, 4);
    for i in 0..2 {
        for h in 0..2 {
            r[(i, h)] = re(ph.stiffness[1][i][h][1]);
            s[(i, h)] = &ik1 * &re::<R>(ph.stiffness[1][i][h][0]);
        }
        s[(i, 2)] = re(-ph.alpha[1][i]);
        s[(i, 3)] = re(-ph.beta[1][i]);
    }
    r[(2, 2)] = re(-ph.conductivity[1][1]);
    r[(3, 3)] = re(-ph.diffusivity[1][1]);
    s[(2, 2)] = &ik1 * &re::<R>(-ph.conductivity[1][0]);
    s[(3, 3)] = &ik1 * &re::<R>(-ph.diffusivity[1][0]);
    Ok(RSMatrices { r, s })
}

/// P = [[0, I], [R, ik₂R + S]] and P⁻¹ = [[−R⁻¹(ik₂R + S), R⁻¹], [I, 0]].
pub fn build_boundary_map<R: Real>(medium: &Medium, k1: &Complex<R>, k2: &Complex<R>) -> Result<BoundaryMap<R>, AssemblyError> {
    let RSMatrices { r, s } = build_rs(medium, k1)?;
    let r_inv = r.inverse().map_err(|e| AssemblyError::SingularR(e.to_string()))?;
    let lower_right = r.scale(&im(k2)).add(&s);
    let eye = CMatrix::identity(4);
    let mut p = CMatrix::zeros(8, 8);
    p.set_block(0, 4, &eye);
    p.set_block(4, 0, &r);
    p.set_block(4, 4, &lower_right);
    let mut p_inv = CMatrix::zeros(8, 8);
    p_inv.set_block(0, 0, &r_inv.matmul(&lower_right).map(|z| -z.clone()));
    p_inv.set_block(0, 4, &r_inv);
    p_inv.set_block(4, 0, &eye);

    let mut check = p.matmul(&p_inv);
    check.add_diagonal(&Complex::from_f64(-1.0, 0.0));
    let log2_residual = check.log2_max_abs();
    let log2_tolerance = p.norm1().log2_abs() + p_inv.norm1().log2_abs() - R::precision_bits() as f64 + 8.0;
    if log2_residual > log2_tolerance {
        return Err(AssemblyError::BoundaryResidual { log2_residual, log2_tolerance });
    }
    Ok(BoundaryMap { p, p_inv, log2_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{apply_coupling, derive_coefficients, CouplingFactor, PhaseInput};
    use crate::numerics::DoubleDouble as Dd;

    fn phase1() -> PhaseCoefficients {
        derive_coefficients(&PhaseInput::sofc_phase1()).unwrap()
    }

    fn cx(re: f64, im: f64) -> Complex<Dd> {
        Complex::from_f64(re, im)
    }

    fn close(a: &Complex<Dd>, b: C64, tol: f64) -> bool {
        let d = (&a.to_c64() - &b).abs();
        d <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn static_limit() {
        let c = phase1();
        let z = cx(0.0, 0.0);
        let abc = build_abc_isotropic(&c, &z, &z, &z);
        for i in 0..4 {
            for j in 0..4 {
                assert!(abc.c[(i, j)].is_zero());
                // Only the stress–temperature and stress–concentration couplings survive.
                assert_eq!(abc.b[(i, j)].is_zero(), !matches!((i, j), (1, 2) | (1, 3)), "B[{i}][{j}]");
            }
        }
        assert!(close(&abc.a[(1, 1)], C64::from_f64(c.plane_strain_modulus(), 0.0), 1e-15));
        assert_eq!(abc.a[(2, 2)].to_c64(), C64::from_f64(c.k, 0.0));
    }

    #[test]
    fn unit_frequency_substitution() {
        let c = phase1();
        let z = cx(0.0, 0.0);
        let abc = build_abc_isotropic(&c, &z, &z, &cx(1.0, 0.0));
        assert_eq!(abc.c[(0, 0)].to_c64(), C64::from_f64(5532.0, 0.0));
        assert_eq!(abc.c[(2, 2)].to_c64(), C64::from_f64(0.0, c.p));
        assert_eq!(abc.c[(2, 3)].to_c64(), C64::from_f64(0.0, c.psi));
        assert_eq!(abc.c[(3, 2)].to_c64(), C64::from_f64(0.0, c.psi));
    }

    #[test]
    fn uncoupled_blocks_vanish() {
        let c = apply_coupling(&phase1(), CouplingFactor::new(0.0).unwrap());
        let abc = build_abc_isotropic(&c, &cx(3.0, 0.5), &cx(-2.0, 1.0), &cx(1e4, 0.0));
        for i in 0..2 {
            for j in 2..4 {
                for m in [&abc.b, &abc.c] {
                    assert!(m[(i, j)].is_zero() && m[(j, i)].is_zero());
                }
            }
        }
        assert!(abc.c[(2, 3)].is_zero());
    }

    #[test]
    fn anisotropic_lift_matches_closed_form() {
        let c = phase1();
        let lift = AnisotropicPhase::from_isotropic(&c);
        let (k1, k2, w) = (cx(12.0, -1.0), cx(-7.0, 2.0), cx(3e5, 1.0));
        let iso = build_abc_isotropic(&c, &k1, &k2, &w);
        let ani = build_abc_anisotropic(&lift, &k1, &k2, &w).unwrap();
        for (x, y) in [(&iso.a, &ani.a), (&iso.b, &ani.b), (&iso.c, &ani.c)] {
            let d = y.sub(x).max_abs().to_f64();
            // The lifted tensor is stored in f64, so agreement is to f64 rounding.
            assert!(d <= 1e-15 * x.max_abs().to_f64(), "{d:e} vs {:e}", x.max_abs().to_f64());
        }
        let rs_iso = build_rs::<Dd>(&Medium::Isotropic(c), &k1).unwrap();
        let rs_ani = build_rs::<Dd>(&Medium::Anisotropic(lift), &k1).unwrap();
        assert!(rs_iso.r.sub(&rs_ani.r).max_abs().to_f64() <= 1e-15 * rs_iso.r.max_abs().to_f64());
        assert!(rs_iso.s.sub(&rs_ani.s).max_abs().to_f64() <= 1e-15 * rs_iso.s.max_abs().to_f64());
    }

    #[test]
    fn anisotropic_error_paths() {
        let mut ph = AnisotropicPhase::from_isotropic(&phase1());
        ph.stiffness = [[[[0.0; 2]; 2]; 2]; 2];
        ph.alpha = [[0.0; 2]; 2];
        ph.beta = [[0.0; 2]; 2];
        ph.conductivity = [[0.0; 2]; 2];
        ph.diffusivity = [[0.0; 2]; 2];
        let z = cx(0.0, 0.0);
        assert!(matches!(build_abc_anisotropic(&ph, &z, &z, &cx(2.0, 0.0)), Err(AssemblyError::SingularA(_))));

        let mut ph = AnisotropicPhase::from_isotropic(&phase1());
        ph.alpha[0][1] = 1.0;
        assert_eq!(build_abc_anisotropic(&ph, &z, &z, &z).unwrap_err(), AssemblyError::Asymmetric("alpha"));
        ph.alpha[1][0] = 1.0;
        let abc = build_abc_anisotropic(&ph, &z, &z, &cx(2.0, 0.0)).unwrap();
        assert!(!abc.b[(2, 0)].is_zero());
        ph.stiffness[0][0][0][1] = 5.0;
        assert!(matches!(build_abc_anisotropic(&ph, &z, &z, &z), Err(AssemblyError::Asymmetric(_))));
    }

    #[test]
    fn first_order_pair() {
        let abc = ABCMatrices::<Dd> {
            a: CMatrix::identity(4),
            b: CMatrix::zeros(4, 4),
            c: CMatrix::zeros(4, 4),
            k1: C64::zero(),
            k2: C64::zero(),
            omega: C64::zero(),
        };
        let mn = build_mn(&abc).unwrap();
        assert_eq!(mn.m, CMatrix::identity(8));
        for i in 0..4 {
            assert_eq!(mn.n[(4 + i, i)].to_c64(), C64::from_f64(-1.0, 0.0));
        }

        let c = phase1();
        let z = cx(0.0, 0.0);
        let abc = build_abc_isotropic(&c, &z, &z, &cx(1e3, 0.0));
        let mn = build_mn(&abc).unwrap();
        assert_eq!(mn.n.block(0, 0, 4, 4), abc.b);
        let g = mn.m_inv.matmul(&mn.n);
        for j in 0..8 {
            for i in 0..4 {
                let want = &mn.n[(i, j)] / &abc.a[(i, i)];
                assert!((&g[(i, j)] - &want).abs().to_f64() <= 1e-30 * want.abs().to_f64().max(1e-300));
            }
        }
    }

    #[test]
    fn singular_conductivity_is_rejected() {
        let mut c = phase1();
        c.k = 0.0;
        let z = cx(0.0, 0.0);
        assert!(matches!(build_mn(&build_abc_isotropic(&c, &z, &z, &z)), Err(AssemblyError::SingularA(_))));
    }

    #[test]
    fn boundary_map_blocks() {
        let c = phase1();
        let l = 2e-3;
        let k2 = cx(std::f64::consts::PI / l, 0.0);
        let bm = build_boundary_map(&Medium::Isotropic(c), &cx(0.0, 0.0), &k2).unwrap();
        assert!(close(&bm.p[(4, 0)], C64::from_f64(c.g, 0.0), 1e-15));
        assert!(close(&bm.p[(5, 1)], C64::from_f64(c.plane_strain_modulus(), 0.0), 1e-15));
        assert_eq!(bm.p[(6, 2)].to_c64(), C64::from_f64(-c.k, 0.0));
        assert_eq!(bm.p[(7, 3)].to_c64(), C64::from_f64(-c.d, 0.0));
        assert_eq!(bm.p[(5, 6)].to_c64(), C64::from_f64(-c.alpha, 0.0));
        let mut check = bm.p.matmul(&bm.p_inv);
        check.add_diagonal(&cx(-1.0, 0.0));
        let scale = bm.p.norm1().to_f64() * bm.p_inv.norm1().to_f64();
        assert!(check.max_abs().to_f64() < 1e-28 * scale);

        let uncoupled = apply_coupling(&c, CouplingFactor::new(0.0).unwrap());
        let bm = build_boundary_map(&Medium::Isotropic(uncoupled), &cx(0.0, 0.0), &cx(0.0, 0.0)).unwrap();
        assert!(bm.p.block(4, 4, 4, 4).entries().iter().all(Complex::is_zero));
    }

    #[test]
    fn elastic_block_symmetric_for_real_arguments() {
        let c = apply_coupling(&phase1(), CouplingFactor::new(0.0).unwrap());
        let abc = build_abc_isotropic(&c, &cx(4.0, 0.0), &cx(-9.0, 0.0), &cx(2e5, 0.0));
        assert_eq!(abc.c[(0, 1)], abc.c[(1, 0)]);
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            assert!(abc.c[(i, j)].im.is_zero());
        }
    }

    #[test]
    fn coupling_scales_only_coupling_entries() {
        let c = phase1();
        let half = apply_coupling(&c, CouplingFactor::new(0.5).unwrap());
        let (k1, k2, w) = (cx(2.0, 0.0), cx(1.0, 0.0), cx(5e4, 0.0));
        let full = build_abc_isotropic(&c, &k1, &k2, &w);
        let part = build_abc_isotropic(&half, &k1, &k2, &w);
        for (mf, mp) in [(&full.b, &part.b), (&full.c, &part.c)] {
            for i in 0..4 {
                for j in 0..4 {
                    let coupling = (i < 2) != (j < 2) || (i, j) == (2, 3) || (i, j) == (3, 2);
                    if coupling {
                        let want = mf[(i, j)].to_c64().scale(&0.5);
                        assert!((&mp[(i, j)].to_c64() - &want).abs() <= 1e-15 * want.abs());
                    } else {
                        assert_eq!(mp[(i, j)], mf[(i, j)]);
                    }
                }
            }
        }
    }
}
