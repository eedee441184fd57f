//! Layer and unit-cell transfer matrices, their truncated power series in k₁
//! or ω, and the precision planner that sizes the arithmetic for a given cell
//! and frequency.
//!
//! A layer maps the state r = (w, t) (fields and tractions/fluxes) from its
//! lower to its upper face: T = P·exp(Fℓ)·P⁻¹·e^{ik₂ℓ} with F = −M⁻¹N.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{build_abc, build_boundary_map, build_mn, AnisotropicPhase, AssemblyError, Medium};
use crate::materials::{apply_coupling, CouplingFactor};
use crate::numerics::{
    check_degeneracy, eigen, exp_from_eigen, mat_exp_series, refine_eigen, CMatrix, Complex, EigenSolution, NumericsError,
    Precision, PrecisionMode, Real, C64, COND_CAP_FRACTION,
};

const LOG2_E: f64 = std::f64::consts::LOG2_E;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransferError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid cell: {0}")]
    InvalidCell(String),
    #[error("cell transfer matrix changes with k2: relative difference 2^{log2_diff:.1} exceeds 2^{log2_tolerance:.1}")]
    K2Dependence { log2_diff: f64, log2_tolerance: f64 },
    #[error("series order must be at least 1")]
    SeriesOrder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub medium: Medium,
    /// Thickness ℓ [m].
    pub thickness: f64,
}

/// Ordered stack of layers; layer 0 sits at the bottom of the cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    layers: Vec<LayerSpec>,
}

impl CellSpec {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self, TransferError> {
        if layers.is_empty() {
            return Err(TransferError::InvalidCell("a cell needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if !(l.thickness.is_finite() && l.thickness >= 0.0) {
                return Err(TransferError::InvalidCell(format!("layer {i}: thickness {} must be finite and >= 0", l.thickness)));
            }
            if let Medium::Anisotropic(ph) = &l.medium {
                ph.validate()?;
            }
        }
        let cell = Self { layers };
        if !(cell.period() > 0.0) {
            return Err(TransferError::InvalidCell("period must be positive".into()));
        }
        Ok(cell)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    /// L = Σ ℓ_m.
    pub fn period(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    /// Same geometry with α, β and ψ of every layer scaled by δ.
    pub fn with_coupling(&self, delta: CouplingFactor) -> Self {
        let d = delta.value();
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let medium = match &l.medium {
                    Medium::Isotropic(c) => Medium::Isotropic(apply_coupling(c, delta)),
                    Medium::Anisotropic(ph) => {
                        let scale = |m: [[f64; 2]; 2]| m.map(|row| row.map(|x| x * d));
                        Medium::Anisotropic(AnisotropicPhase {
                            alpha: scale(ph.alpha),
                            beta: scale(ph.beta),
                            psi: ph.psi * d,
                            ..ph.clone()
                        })
                    }
                };
                LayerSpec { medium, thickness: l.thickness }
            })
            .collect();
        Self { layers }
    }
}

/// Route taken for one layer exponential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpMethod {
    /// Zero thickness.
    Identity,
    /// f64 eigenpairs refined by Newton at working precision.
    RefinedEigen,
    /// Eigenpairs from QR at working precision.
    Eigen,
    /// Scaling and squaring.
    Series,
}

#[derive(Clone, Debug)]
pub struct TransferMatrix<R: Real> {
    pub t: CMatrix<R>,
    /// log2 |det T − 1|.
    pub log2_det_residual: f64,
    pub methods: Vec<ExpMethod>,
}

impl<R: Real> TransferMatrix<R> {
    pub fn det_residual(&self) -> f64 {
        self.log2_det_residual.exp2()
    }
}

/// Fℓ = −M⁻¹N·ℓ for one layer.
pub fn layer_generator<R: Real>(
    layer: &LayerSpec,
    k1: &Complex<R>,
    k2: &Complex<R>,
    omega: &Complex<R>,
) -> Result<CMatrix<R>, TransferError> {
    let abc = build_abc(&layer.medium, k1, k2, omega)?;
    let mn = build_mn(&abc)?;
    Ok(mn.generator().scale_real(&R::from_f64(layer.thickness)))
}

/// exp(F), choosing the eigendecomposition route when it is well posed.
///
/// Small norms go straight to the series. Otherwise f64 eigenpairs are refined
/// at working precision; if that fails (or the spectrum is nearly degenerate, or
/// the eigenvectors are too ill-conditioned) a full QR at working precision is
/// tried and the series is the final fallback.
pub fn layer_exponential<R: Real>(f: &CMatrix<R>) -> (CMatrix<R>, ExpMethod) {
    if f.norm1().log2_abs() <= 3.0 {
        return (mat_exp_series(f), ExpMethod::Series);
    }
    let cap = COND_CAP_FRACTION * R::precision_bits() as f64;
    let f64m = f.to_c64();
    if f64m.is_finite() {
        if let Ok(approx) = eigen(&f64m) {
            if check_degeneracy(&approx.values).is_ok() {
                if let Ok(e) = refine_eigen(f, &approx).and_then(|sol| exp_from_eigen(&sol, cap)) {
                    return (e, ExpMethod::RefinedEigen);
                }
                if let Ok(e) = eigen(f).and_then(|sol| exp_from_eigen(&sol, cap)) {
                    return (e, ExpMethod::Eigen);
                }
            }
        }
    }
    (mat_exp_series(f), ExpMethod::Series)
}

pub fn layer_transfer<R: Real>(
    layer: &LayerSpec,
    k1: &Complex<R>,
    k2: &Complex<R>,
    omega: &Complex<R>,
) -> Result<(CMatrix<R>, ExpMethod), TransferError> {
    if layer.thickness == 0.0 {
        return Ok((CMatrix::identity(8), ExpMethod::Identity));
    }
    let f = layer_generator(layer, k1, k2, omega)?;
    let (e, method) = layer_exponential(&f);
    let bm = build_boundary_map(&layer.medium, k1, k2)?;
    let phase = k2.scale(&R::from_f64(layer.thickness)).mul_i().exp();
    let t = bm.p.matmul(&e).matmul(&bm.p_inv).scale(&phase);
    if !t.is_finite() {
        return Err(NumericsError::NonFinite("layer transfer matrix").into());
    }
    Ok((t, method))
}

/// T = T_n ⋯ T_1.
pub fn cell_transfer<R: Real>(
    cell: &CellSpec,
    k1: &Complex<R>,
    k2: &Complex<R>,
    omega: &Complex<R>,
) -> Result<TransferMatrix<R>, TransferError> {
    let mut t = CMatrix::identity(8);
    let mut methods = Vec::with_capacity(cell.layers.len());
    for layer in &cell.layers {
        let (tl, m) = layer_transfer(layer, k1, k2, omega)?;
        t = tl.matmul(&t);
        methods.push(m);
    }
    let det = &t.det() - &Complex::one();
    Ok(TransferMatrix { t, log2_det_residual: det.log2_abs(), methods })
}

/// Upper bounds on the exponential growth of the cell transfer matrix, in
/// nats over one period: `rates[j]` sums, over layers, the (j+1)-th largest
/// positive real part of the layer exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub rates: [f64; 4],
}

/// Bits of margin kept above every growth-derived requirement.
const GUARD_BITS: f64 = 64.0;

impl GrowthEstimate {
    /// Significand needed for det T to carry the requested accuracy: the LU
    /// backward error u·‖T‖ is amplified by ‖T⁻¹‖ ≈ ‖T‖.
    pub fn bits_for_det(&self) -> u32 {
        (2.0 * LOG2_E * self.rates[0] + GUARD_BITS).ceil() as u32
    }

    /// Significand needed for the four Floquet pairs obtained from the leading
    /// characteristic coefficients: the error in C₄ (≈ u·e^{4g₀}) divided by the
    /// size of the smallest outgoing multiplier product.
    pub fn bits_for_quartic(&self) -> u32 {
        let [g0, g1, g2, g3] = self.rates;
        (LOG2_E * (3.0 * g0 - g1 - g2 - g3) + GUARD_BITS).ceil() as u32
    }

    /// Significand needed for a full characteristic polynomial (down to C₀)
    /// to remain palindromic to working accuracy.
    pub fn bits_for_full_charpoly(&self) -> u32 {
        let [g0, g1, g2, g3] = self.rates;
        (LOG2_E * (7.0 * g0 - g1 - g2 - g3) + GUARD_BITS).ceil() as u32
    }

    /// log2 of the largest magnitude met while forming the characteristic
    /// coefficients.
    pub fn log2_range(&self) -> f64 {
        4.0 * LOG2_E * self.rates[0] + 64.0
    }

    /// Precision chosen by `Auto`.
    pub fn plan(&self) -> Precision {
        let bits = self.bits_for_det().max(self.bits_for_quartic());
        Precision::at_least(bits, self.log2_range())
    }
}

/// Growth rates from f64 eigenvalues of each layer generator (k₂ = 0).
pub fn growth_estimate(cell: &CellSpec, k1: C64, omega: C64) -> Result<GrowthEstimate, TransferError> {
    let (k1, k2, w) = (Complex::<f64>::from_c64(k1), Complex::<f64>::zero(), Complex::<f64>::from_c64(omega));
    let mut rates = [0.0; 4];
    for layer in &cell.layers {
        if layer.thickness == 0.0 {
            continue;
        }
        let f = layer_generator(layer, &k1, &k2, &w)?;
        let mut re: Vec<f64> = eigen(&f)?.values.iter().map(|z| z.re.max(0.0)).collect();
        re.sort_by(|a, b| b.total_cmp(a));
        for j in 0..4 {
            rates[j] += re[j];
        }
    }
    Ok(GrowthEstimate { rates })
}

/// Resolves a precision mode to a concrete level for one (k₁, ω) point.
pub fn plan_precision(mode: PrecisionMode, cell: &CellSpec, k1: C64, omega: C64) -> Result<Precision, TransferError> {
    match mode {
        PrecisionMode::Fixed(p) => Ok(p),
        PrecisionMode::Auto => Ok(growth_estimate(cell, k1, omega)?.plan()),
    }
}

/// Wavenumbers at which [`check_k2_independence`] evaluates the cell.
pub fn k2_probe_points(period: f64) -> [f64; 3] {
    [0.0, 1.0 / period, std::f64::consts::PI / period]
}

/// Tolerance on the relative normwise spread of T over k₂: the exponential
/// is accurate to roughly u·cond(Γ)·‖e^F‖‖e^{−F}‖ on each layer, which the
/// growth estimate bounds by e^{2g₀}.
pub fn k2_tolerance_log2(bits: u32, growth: &GrowthEstimate) -> f64 {
    -(bits as f64) + 2.0 * LOG2_E * growth.rates[0] + COND_CAP_FRACTION * bits as f64 + 16.0
}

/// Evaluates T at the probe wavenumbers and returns log2 of the largest
/// relative difference to the k₂ = 0 matrix.
pub fn k2_spread<R: Real>(cell: &CellSpec, k1: &Complex<R>, omega: &Complex<R>) -> Result<f64, TransferError> {
    let probes = k2_probe_points(cell.period());
    let base = cell_transfer(cell, k1, &Complex::from_f64(probes[0], 0.0), omega)?.t;
    let mut worst = f64::NEG_INFINITY;
    for &k2 in &probes[1..] {
        let t = cell_transfer(cell, k1, &Complex::from_f64(k2, 0.0), omega)?.t;
        worst = worst.max(t.log2_rel_diff(&base));
    }
    Ok(worst)
}

/// Fails with [`TransferError::K2Dependence`] when T changes with k₂ beyond
/// rounding. Returns the measured spread.
pub fn check_k2_independence<R: Real>(cell: &CellSpec, k1: &Complex<R>, omega: &Complex<R>) -> Result<f64, TransferError> {
    let spread = k2_spread(cell, k1, omega)?;
    let growth = growth_estimate(cell, k1.to_c64(), omega.to_c64())?;
    let tol = k2_tolerance_log2(R::precision_bits(), &growth);
    if spread > tol {
        return Err(TransferError::K2Dependence { log2_diff: spread, log2_tolerance: tol });
    }
    Ok(spread)
}

/// Independent single-layer check: builds the modal traction matrix Ω from the
/// constitutive tensors, propagates a random state with the modal exponents and
/// compares against T·r. Returns max_i |(Ω e^{Λ} Ω⁻¹ r − T r)_i| / (|T||r|)_i.
pub fn modal_route_residual<R: Real>(
    layer: &LayerSpec,
    k1: &Complex<R>,
    k2: &Complex<R>,
    omega: &Complex<R>,
    seed: u64,
) -> Result<f64, TransferError> {
    let ell = R::from_f64(layer.thickness);
    let abc = build_abc(&layer.medium, k1, k2, omega)?;
    let generator = build_mn(&abc)?.generator();
    let approx = eigen(&generator.to_c64())?;
    let sol: EigenSolution<R> = refine_eigen(&generator, &approx).or_else(|_| eigen(&generator))?;

    let tensors = match &layer.medium {
        Medium::Isotropic(c) => AnisotropicPhase::from_isotropic(c),
        Medium::Anisotropic(ph) => ph.clone(),
    };
    let re = |x: f64| Complex::<R>::from_real(R::from_f64(x));
    // Thermal and diffusive modes carry almost no net traction, so the
    // stiffness must be formed at working precision rather than read from the
    // f64 tensor.
    let stiffness = |i: usize, j: usize, h: usize, k: usize| -> Complex<R> {
        match &layer.medium {
            Medium::Isotropic(c) => {
                let d = |a: usize, b: usize| if a == b { R::one() } else { R::zero() };
                let (g, nu) = (R::from_f64(c.g), R::from_f64(c.nu));
                let lam = g.clone().mul_pow2(1) * &nu / &(R::one() - nu.clone().mul_pow2(1));
                let v = lam * &(d(i, j) * &d(h, k)) + g * &(d(i, h) * &d(j, k) + d(i, k) * &d(j, h));
                Complex::from_real(v)
            }
            Medium::Anisotropic(ph) => re(ph.stiffness[i][j][h][k]),
        }
    };
    let ik1 = k1.mul_i();
    let mut omega_mat = CMatrix::zeros(8, 8);
    let mut growth = Vec::with_capacity(8);
    for j in 0..8 {
        let kappa = &sol.values[j];
        let d2 = kappa + &k2.mul_i();
        let gamma: Vec<Complex<R>> = (4..8).map(|i| sol.vectors[(i, j)].clone()).collect();
        for i in 0..2 {
            let mut t = Complex::zero();
            for h in 0..2 {
                let coeff = &(&d2 * &stiffness(1, i, h, 1)) + &(&ik1 * &stiffness(1, i, h, 0));
                t += &(&coeff * &gamma[h]);
            }
            t -= &(&re(tensors.alpha[1][i]) * &gamma[2]);
            t -= &(&re(tensors.beta[1][i]) * &gamma[3]);
            omega_mat[(4 + i, j)] = t;
        }
        for (row, m) in [(2, &tensors.conductivity), (3, &tensors.diffusivity)] {
            let coeff = &(&d2 * &re(m[1][1])) + &(&ik1 * &re(m[1][0]));
            omega_mat[(4 + row, j)] = -(&coeff * &gamma[row]);
        }
        for (i, g) in gamma.iter().enumerate() {
            omega_mat[(i, j)] = g.clone();
        }
        growth.push(d2.scale(&ell).exp());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: Vec<Complex<R>> = (0..8).map(|_| Complex::from_f64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let mut a = omega_mat.solve(&r)?;
    for (aj, gj) in a.iter_mut().zip(&growth) {
        *aj *= gj;
    }
    let modal = omega_mat.mul_vec(&a);

    let (t, _) = layer_transfer(layer, k1, k2, omega)?;
    let direct = t.mul_vec(&r);
    // Row i is compared against Σ_j |T_ij||r_j|, which makes the measure
    // independent of the units of each state component.
    let mut worst = f64::NEG_INFINITY;
    for i in 0..8 {
        let scale = (0..8).map(|j| (t[(i, j)].log2_abs() + r[j].log2_abs()).exp2()).sum::<f64>().log2();
        worst = worst.max((&modal[i] - &direct[i]).log2_abs() - scale);
    }
    Ok(worst.exp2())
}

/// Expansion variable of a [`PolyMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesVariable {
    K1,
    Omega,
}

/// Matrix polynomial Σ_m c_m x^m about x = 0, truncated at `order`.
#[derive(Clone, Debug)]
pub struct PolyMatrix<R: Real> {
    pub variable: SeriesVariable,
    pub coeffs: Vec<CMatrix<R>>,
    /// Radius the series was built for.
    pub radius: f64,
    /// ‖c_{order+1}‖ρ^{order+1} / Σ_m ‖c_m‖ρ^m: size of the first dropped term
    /// relative to the kept ones, at the radius.
    pub tail_bound: f64,
}

impl<R: Real> PolyMatrix<R> {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &Complex<R>) -> CMatrix<R> {
        let mut acc = self.coeffs.last().unwrap().clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc.scale(x).add(c);
        }
        acc
    }
}

/// Product of two matrix polynomials, dropping powers above `order`.
pub fn poly_multiply_truncate<R: Real>(a: &[CMatrix<R>], b: &[CMatrix<R>], order: usize) -> Vec<CMatrix<R>> {
    let n = a[0].rows();
    let mut out = vec![CMatrix::zeros(n, a[0].cols().min(b[0].cols()).max(b[0].cols())); order + 1];
    for (i, ai) in a.iter().enumerate().take(order + 1) {
        for (j, bj) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] = out[i + j].add(&ai.matmul(bj));
        }
    }
    out
}

fn poly_norm<R: Real>(p: &[CMatrix<R>]) -> f64 {
    // Sum of ‖c_m‖₁ in log2, computed in f64 from the per-term logs.
    let logs: Vec<f64> = p.iter().map(|c| c.norm1().log2_abs()).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + logs.iter().map(|l| (l - top).exp2()).sum::<f64>().log2()
}

fn rescale<R: Real>(p: &mut [CMatrix<R>], factor: f64) {
    let f = R::from_f64(factor);
    let mut s = R::one();
    for c in p.iter_mut().skip(1) {
        s *= &f;
        *c = c.scale_real(&s);
    }
}

/// exp of a matrix polynomial in the ring truncated at `order`.
///
/// The variable is first rescaled by `radius` so that the coefficients are
/// comparable, then the usual scaling and squaring runs with ring products.
pub fn poly_exp<R: Real>(f: &[CMatrix<R>], order: usize, radius: f64) -> Vec<CMatrix<R>> {
    let n = f[0].rows();
    let mut x: Vec<CMatrix<R>> = f.iter().take(order + 1).cloned().collect();
    rescale(&mut x, radius);
    let log2_norm = poly_norm(&x);
    let mut identity = vec![CMatrix::zeros(n, n); order + 1];
    identity[0] = CMatrix::identity(n);
    if log2_norm == f64::NEG_INFINITY {
        return identity;
    }
    let bits = R::precision_bits() as f64;
    let r = bits.sqrt().ceil().clamp(4.0, 64.0);
    let s = (log2_norm + r).ceil().max(0.0) as i32;
    for c in x.iter_mut() {
        *c = c.map(|z| z.mul_pow2(-s));
    }
    let mut sum = identity.clone();
    let mut term = identity;
    for k in 1..=400 {
        term = poly_multiply_truncate(&term, &x, order);
        let inv_k = R::one() / R::from_i64(k);
        for c in term.iter_mut() {
            *c = c.scale_real(&inv_k);
        }
        for (sc, tc) in sum.iter_mut().zip(&term) {
            *sc = sc.add(tc);
        }
        if poly_norm(&term) < poly_norm(&sum) - bits - 2.0 {
            break;
        }
    }
    for _ in 0..s {
        sum = poly_multiply_truncate(&sum, &sum, order);
    }
    rescale(&mut sum, 1.0 / radius);
    sum
}

/// Coefficients of a matrix function that is at most quadratic in x, from
/// values at x = 0 and x = ±h.
fn quadratic_coeffs<R: Real>(
    eval: impl Fn(&Complex<R>) -> Result<CMatrix<R>, TransferError>,
    h: f64,
) -> Result<[CMatrix<R>; 3], TransferError> {
    let f0 = eval(&Complex::zero())?;
    let fp = eval(&Complex::from_f64(h, 0.0))?;
    let fm = eval(&Complex::from_f64(-h, 0.0))?;
    let inv_2h = R::from_f64(0.5 / h);
    let inv_2h2 = R::from_f64(0.5 / (h * h));
    let f1 = fp.sub(&fm).scale_real(&inv_2h);
    let f2 = fp.add(&fm).sub(&f0.scale_real(&R::from_f64(2.0))).scale_real(&inv_2h2);
    Ok([f0, f1, f2])
}

/// Linear part of a matrix function that is affine in x.
fn linear_coeffs<R: Real>(
    eval: impl Fn(&Complex<R>) -> Result<CMatrix<R>, TransferError>,
    h: f64,
) -> Result<[CMatrix<R>; 2], TransferError> {
    let f0 = eval(&Complex::zero())?;
    let fp = eval(&Complex::from_f64(h, 0.0))?;
    let fm = eval(&Complex::from_f64(-h, 0.0))?;
    Ok([f0, fp.sub(&fm).scale_real(&R::from_f64(0.5 / h))])
}

fn layer_series_raw<R: Real>(
    layer: &LayerSpec,
    variable: SeriesVariable,
    fixed: (&Complex<R>, &Complex<R>),
    order: usize,
    radius: f64,
) -> Result<Vec<CMatrix<R>>, TransferError> {
    let mut identity = vec![CMatrix::zeros(8, 8); order + 1];
    identity[0] = CMatrix::identity(8);
    if layer.thickness == 0.0 {
        return Ok(identity);
    }
    // `fixed` is (k2, ω) for the k₁ series and (k1, k2) for the ω series.
    let (f, p, q) = match variable {
        SeriesVariable::K1 => {
            let (k2, w) = fixed;
            let f = quadratic_coeffs(|x| layer_generator(layer, x, k2, w), radius)?;
            let p = linear_coeffs(|x| Ok(build_boundary_map(&layer.medium, x, k2)?.p), radius)?;
            let q = linear_coeffs(|x| Ok(build_boundary_map(&layer.medium, x, k2)?.p_inv), radius)?;
            (f.to_vec(), p.to_vec(), q.to_vec())
        }
        SeriesVariable::Omega => {
            let (k1, k2) = fixed;
            let f = quadratic_coeffs(|x| layer_generator(layer, k1, k2, x), radius)?;
            let bm = build_boundary_map(&layer.medium, k1, k2)?;
            (f.to_vec(), vec![bm.p], vec![bm.p_inv])
        }
    };
    let k2 = match variable {
        SeriesVariable::K1 => fixed.0,
        SeriesVariable::Omega => fixed.1,
    };
    let e = poly_exp(&f, order, radius);
    let phase = k2.scale(&R::from_f64(layer.thickness)).mul_i().exp();
    let mut t = poly_multiply_truncate(&poly_multiply_truncate(&p, &e, order), &q, order);
    for c in t.iter_mut() {
        *c = c.scale(&phase);
    }
    Ok(t)
}

fn finish_series<R: Real>(variable: SeriesVariable, mut raw: Vec<CMatrix<R>>, radius: f64) -> PolyMatrix<R> {
    let order = raw.len() - 2;
    let log2_rho = radius.log2();
    let weighted = |m: usize, c: &CMatrix<R>| c.norm1().log2_abs() + m as f64 * log2_rho;
    let tail = weighted(order + 1, &raw[order + 1]);
    let kept: Vec<f64> = raw[..=order].iter().enumerate().map(|(m, c)| weighted(m, c)).collect();
    let top = kept.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log2_kept = top + kept.iter().map(|l| (l - top).exp2()).sum::<f64>().log2();
    raw.truncate(order + 1);
    PolyMatrix { variable, coeffs: raw, radius, tail_bound: (tail - log2_kept).exp2() }
}

fn cell_series<R: Real>(
    cell: &CellSpec,
    variable: SeriesVariable,
    fixed: (&Complex<R>, &Complex<R>),
    order: usize,
    radius: f64,
) -> Result<PolyMatrix<R>, TransferError> {
    if order == 0 {
        return Err(TransferError::SeriesOrder);
    }
    let mut acc: Vec<CMatrix<R>> = vec![CMatrix::zeros(8, 8); order + 2];
    acc[0] = CMatrix::identity(8);
    for layer in &cell.layers {
        let t = layer_series_raw(layer, variable, fixed, order + 1, radius)?;
        acc = poly_multiply_truncate(&t, &acc, order + 1);
    }
    Ok(finish_series(variable, acc, radius))
}

/// T(k₁) about k₁ = 0 at fixed (k₂, ω), valid for |k₁| ≤ `radius`.
pub fn series_transfer_k1<R: Real>(
    cell: &CellSpec,
    k2: &Complex<R>,
    omega: &Complex<R>,
    order: usize,
    radius: f64,
) -> Result<PolyMatrix<R>, TransferError> {
    cell_series(cell, SeriesVariable::K1, (k2, omega), order, radius)
}

/// T(ω) about ω = 0 at fixed (k₁, k₂), valid for |ω| ≤ `radius`.
pub fn series_transfer_omega<R: Real>(
    cell: &CellSpec,
    k1: &Complex<R>,
    k2: &Complex<R>,
    order: usize,
    radius: f64,
) -> Result<PolyMatrix<R>, TransferError> {
    cell_series(cell, SeriesVariable::Omega, (k1, k2), order, radius)
}
