//! Floquet multipliers and Bloch wavenumbers over frequency sweeps: the
//! palindromic eigen-solve of the cell transfer matrix, branch
//! classification and tracking, pass-band/band-gap reports, and the
//! temporal-damping roots of the ω-series.
//!
//! Multipliers are λ = e^{ik₂L}; the dimensionless wavenumbers are
//! k2r* = Arg λ ∈ (−π, π] and k2i* = −ln|λ|.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::materials::CouplingFactor;
use crate::numerics::{
    eigenvalues, faddeev_leverrier, faddeev_leverrier_leading, palindromic_quartic, solve_quartic, with_precision, z_to_lambda,
    CMatrix, Complex, MpFloat, NumericsError, Precision, PrecisionMode, PrecisionTask, Real, C64,
};
use crate::transfer::{cell_transfer, plan_precision, series_transfer_omega, CellSpec, TransferError};

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),
    #[error("Floquet multiplier is zero")]
    ZeroMultiplier,
    #[error("|det T - 1| = 2^{log2_residual:.1} exceeds 2^{log2_tolerance:.1} at {precision}")]
    Symplecticity { log2_residual: f64, log2_tolerance: f64, precision: Precision },
    #[error("multiplier {index}: eigenpair residual 2^{log2_residual:.1} exceeds 2^{log2_tolerance:.1} at {precision}")]
    EigenResidual { index: usize, log2_residual: f64, log2_tolerance: f64, precision: Precision },
}

impl SpectrumError {
    /// Failures that more significand bits can cure.
    fn is_precision_limited(&self) -> bool {
        matches!(
            self,
            SpectrumError::Symplecticity { .. }
                | SpectrumError::EigenResidual { .. }
                | SpectrumError::Numerics(_)
                | SpectrumError::Transfer(TransferError::Numerics(_))
        )
    }
}

// ---------------------------------------------------------------------------
// Wide-range scalars

/// mant·2^exp2 with 0.5 ≤ |mant| < 1 (or mant = 0, exp2 = 0). Multipliers of
/// strongly damped branches lie far outside the f64 exponent range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WideReal {
    mant: f64,
    exp2: i64,
}

impl WideReal {
    pub const ZERO: WideReal = WideReal { mant: 0.0, exp2: 0 };

    fn normalized(mant: f64, exp2: i64) -> Self {
        if mant == 0.0 || !mant.is_finite() {
            return if mant == 0.0 { Self::ZERO } else { Self { mant, exp2: 0 } };
        }
        let (m, e) = frexp(mant);
        Self { mant: m, exp2: exp2 + e }
    }

    pub fn from_f64(x: f64) -> Self {
        Self::normalized(x, 0)
    }

    pub fn from_real<R: Real>(x: &R) -> Self {
        if x.is_zero() {
            return Self::ZERO;
        }
        let e = x.log2_abs().floor() as i64 + 1;
        Self::normalized(x.mul_pow2(-(e as i32)).to_f64(), e)
    }

    pub fn mantissa(self) -> f64 {
        self.mant
    }

    pub fn exponent(self) -> i64 {
        self.exp2
    }

    pub fn is_zero(self) -> bool {
        self.mant == 0.0
    }

    /// Nearest f64; saturates to ±inf or 0 outside the f64 range.
    pub fn to_f64(self) -> f64 {
        let half = self.exp2 / 2;
        self.mant * (half as f64).exp2() * ((self.exp2 - half) as f64).exp2()
    }

    /// log2|x|.
    pub fn log2_abs(self) -> f64 {
        if self.mant == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.mant.abs().log2() + self.exp2 as f64
        }
    }

    fn to_float(self) -> Float {
        let mut f = Float::with_val(53, self.mant);
        f <<= self.exp2 as i32;
        f
    }
}

impl fmt::Display for WideReal {
    /// 17 significant digits, `d.dddddddddddddddde<exp>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mant == 0.0 {
            return f.write_str("0.0000000000000000e0");
        }
        let (neg, digits, exp) = self.to_float().to_sign_string_exp(10, Some(17));
        let exp = exp.unwrap_or(0) - 1;
        let sign = if neg { "-" } else { "" };
        write!(f, "{sign}{}.{}e{exp}", &digits[..1], &digits[1..])
    }
}

impl FromStr for WideReal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parsed = Float::parse(s.trim()).map_err(|e| format!("`{s}`: {e}"))?;
        let f = Float::with_val(53, parsed);
        if !f.is_finite() {
            return Err(format!("`{s}` is not finite"));
        }
        let (mant, exp) = f.to_f64_exp();
        Ok(if mant == 0.0 { Self::ZERO } else { Self { mant, exp2: exp as i64 } })
    }
}

/// x = m·2^e with 0.5 ≤ |m| < 1, for finite nonzero x (subnormals included).
fn frexp(x: f64) -> (f64, i64) {
    let (x, adjust) = if x.abs() < f64::MIN_POSITIVE { (x * 2f64.powi(64), -64) } else { (x, 0) };
    let bits = x.to_bits();
    let e = ((bits >> 52) & 0x7ff) as i64 - 1022;
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (m, e + adjust)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WideComplex {
    pub re: WideReal,
    pub im: WideReal,
}

impl WideComplex {
    pub fn from_complex<R: Real>(z: &Complex<R>) -> Self {
        Self { re: WideReal::from_real(&z.re), im: WideReal::from_real(&z.im) }
    }

    pub fn from_c64(z: C64) -> Self {
        Self { re: WideReal::from_f64(z.re), im: WideReal::from_f64(z.im) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn to_c64(&self) -> C64 {
        Complex::new(self.re.to_f64(), self.im.to_f64())
    }

    /// Both parts scaled by a common power of two, and that power.
    fn aligned(&self) -> (f64, f64, i64) {
        let e = match (self.re.is_zero(), self.im.is_zero()) {
            (true, true) => 0,
            (false, true) => self.re.exp2,
            (true, false) => self.im.exp2,
            (false, false) => self.re.exp2.max(self.im.exp2),
        };
        let scale = |w: WideReal| WideReal { mant: w.mant, exp2: w.exp2 - e }.to_f64();
        (scale(self.re), scale(self.im), e)
    }

    /// ln z = ln|z| + i Arg z.
    pub fn ln(&self) -> C64 {
        let (a, b, e) = self.aligned();
        Complex::new(a.hypot(b).ln() + e as f64 * LN_2, b.atan2(a))
    }
}

/// (k2r*, k2i*) of a multiplier: Arg λ folded into (−π, π], and −ln|λ|.
pub fn lambda_to_k2(lambda: &WideComplex) -> Result<(f64, f64), SpectrumError> {
    if lambda.is_zero() {
        return Err(SpectrumError::ZeroMultiplier);
    }
    let l = lambda.ln();
    Ok((fold_zone(l.im), -l.re))
}

fn lambda_to_k2_at<R: Real>(lambda: &Complex<R>) -> Result<(f64, f64), SpectrumError> {
    if lambda.is_zero() {
        return Err(SpectrumError::ZeroMultiplier);
    }
    let k2r = lambda.im.atan2(&lambda.re).to_f64();
    let k2i = -lambda.abs().ln().to_f64();
    Ok((fold_zone(k2r), k2i))
}

/// Reduces a phase to the first Brillouin zone (−π, π].
pub fn fold_zone(phase: f64) -> f64 {
    use std::f64::consts::PI;
    let mut x = phase.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

// ---------------------------------------------------------------------------
// Floquet solve

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Bound on |det T − 1|; above it the point is retried once at higher
    /// precision and then rejected.
    pub det_tolerance: f64,
    /// Bound on ‖Tx − λx‖ / (max(‖T‖, |λ|)‖x‖) for the inverse-iteration vectors.
    pub eigen_residual_tolerance: f64,
    /// Also compute the multipliers by Hessenberg QR and compare.
    pub qr_cross_check: bool,
    /// Also run the full Faddeev–LeVerrier recursion and report palindromy.
    pub full_charpoly: bool,
    /// Seed of the inverse-iteration right-hand sides.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { det_tolerance: 1e-18, eigen_residual_tolerance: 1e-12, qr_cross_check: true, full_charpoly: false, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Multiplier {
    pub lambda: WideComplex,
    pub k2r: f64,
    pub k2i: f64,
    /// State (u₁, u₂, θ, η, σ₂₁, σ₂₂, −Kθ', −Dη'), unit 2-norm, largest
    /// component real and positive.
    pub vector: [C64; 8],
    /// Index of the reciprocal partner in the same solution.
    pub partner: usize,
    /// The inverse-iteration shift had to be moved off an exactly singular
    /// T − λI.
    pub shifted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossCheck {
    pub qr: Vec<WideComplex>,
    /// log2 of max |λᵢλⱼ − 1| over the best pairing of the QR multipliers.
    pub log2_reciprocity: f64,
    /// log2 of the relative Hausdorff distance between the palindromic and QR
    /// multiplier sets.
    pub log2_hausdorff: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FloquetSolution {
    pub precision: Precision,
    pub escalated: bool,
    pub multipliers: Vec<Multiplier>,
    pub log2_det_residual: f64,
    pub log2_eigen_residual: f64,
    pub cross_check: Option<CrossCheck>,
    /// |C₀−1|, |C₈−1|, |C₇−C₁|, |C₆−C₂|, |C₅−C₃| over max|Cᵢ|, as log2.
    pub palindromic: Option<[f64; 5]>,
}

impl FloquetSolution {
    pub fn log2_palindromic_residual(&self) -> Option<f64> {
        self.palindromic.map(|r| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }
}

struct FloquetTask<'a> {
    cell: &'a CellSpec,
    k1: f64,
    omega: f64,
    opts: &'a SolveOptions,
}

impl PrecisionTask for FloquetTask<'_> {
    type Output = Result<FloquetSolution, SpectrumError>;

    fn run<R: Real>(self) -> Self::Output {
        solve_at::<R>(self.cell, self.k1, self.omega, self.opts)
    }
}

/// Next level tried after a precision-limited failure.
pub fn escalate(p: Precision) -> Precision {
    match p {
        Precision::Double => Precision::DoubleDouble,
        Precision::DoubleDouble => Precision::QuadDouble,
        Precision::QuadDouble => Precision::Multi(448),
        Precision::Multi(b) => Precision::Multi(2 * b),
    }
}

/// The eight Floquet multipliers of the cell at real (k₁, ω) with k₂ = 0.
///
/// Multipliers come from the palindromic quartic in z = λ + 1/λ built from the
/// four leading characteristic coefficients, so they pair exactly as
/// (λ, 1/λ). Eigenvectors come from inverse iteration on T − λI.
pub fn solve_floquet(
    cell: &CellSpec,
    k1: f64,
    omega: f64,
    mode: PrecisionMode,
    opts: &SolveOptions,
) -> Result<FloquetSolution, SpectrumError> {
    let p = plan_precision(mode, cell, Complex::from_f64(k1, 0.0), Complex::from_f64(omega, 0.0))?;
    match p.dispatch(FloquetTask { cell, k1, omega, opts }) {
        Err(e) if e.is_precision_limited() => {
            let mut s = escalate(p).dispatch(FloquetTask { cell, k1, omega, opts })?;
            s.escalated = true;
            Ok(s)
        }
        other => other,
    }
}

/// Quartic-path multipliers, ordered (big₀, small₀, big₁, small₁, …).
pub fn palindromic_multipliers<R: Real>(t: &CMatrix<R>) -> Vec<Complex<R>> {
    let fl = faddeev_leverrier_leading(t, 4);
    let zs = solve_quartic(&palindromic_quartic(&fl));
    let mut out = Vec::with_capacity(8);
    for z in &zs {
        let (big, small) = z_to_lambda(z);
        out.push(big);
        out.push(small);
    }
    out
}

fn solve_at<R: Real>(cell: &CellSpec, k1: f64, omega: f64, opts: &SolveOptions) -> Result<FloquetSolution, SpectrumError> {
    let k1c = Complex::<R>::from_f64(k1, 0.0);
    let w = Complex::<R>::from_f64(omega, 0.0);
    let tm = cell_transfer(cell, &k1c, &Complex::zero(), &w)?;
    let t = tm.t;
    let precision = R::zero().precision();
    let log2_tol = opts.det_tolerance.log2();
    if !(tm.log2_det_residual <= log2_tol) {
        return Err(SpectrumError::Symplecticity { log2_residual: tm.log2_det_residual, log2_tolerance: log2_tol, precision });
    }

    let lambdas = refine_pairs(&t, palindromic_multipliers(&t));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let log2_res_tol = opts.eigen_residual_tolerance.log2();
    let mut multipliers = Vec::with_capacity(8);
    let mut worst = f64::NEG_INFINITY;
    for (i, lambda) in lambdas.iter().enumerate() {
        let (x, shifted, log2_res) = inverse_iteration(&t, lambda, &mut rng)?;
        if !(log2_res <= log2_res_tol) {
            return Err(SpectrumError::EigenResidual {
                index: i,
                log2_residual: log2_res,
                log2_tolerance: log2_res_tol,
                precision,
            });
        }
        worst = worst.max(log2_res);
        let (k2r, k2i) = lambda_to_k2_at(lambda)?;
        multipliers.push(Multiplier {
            lambda: WideComplex::from_complex(lambda),
            k2r,
            k2i,
            vector: snapshot(&x),
            partner: i ^ 1,
            shifted,
        });
    }

    let cross_check = if opts.qr_cross_check {
        let qr = eigenvalues(&t)?;
        Some(CrossCheck {
            log2_reciprocity: best_pairing(&qr),
            log2_hausdorff: log2_hausdorff(&lambdas, &qr),
            qr: qr.iter().map(WideComplex::from_complex).collect(),
        })
    } else {
        None
    };
    let palindromic = opts.full_charpoly.then(|| palindromic_residuals(&t, &lambdas));

    Ok(FloquetSolution {
        precision,
        escalated: false,
        multipliers,
        log2_det_residual: tm.log2_det_residual,
        log2_eigen_residual: worst,
        cross_check,
        palindromic,
    })
}

/// Newton on det(T − λI) for the larger member of each pair, the smaller
/// reset to its reciprocal.
///
/// The quartic coefficients carry an absolute error near u·‖T‖⁴, so two
/// close roots z (both mechanical pairs near λ = 1 at low ω) come out with
/// only about half the working digits. Newton on T itself is limited by
/// u·‖T‖ instead. Steps longer than a quarter of the distance to the nearest
/// other multiplier are refused, so a step never jumps to another root.
fn refine_pairs<R: Real>(t: &CMatrix<R>, mut lambdas: Vec<Complex<R>>) -> Vec<Complex<R>> {
    let n = t.rows();
    for i in (0..lambdas.len()).step_by(2) {
        let sep = lambdas
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, l)| (l - &lambdas[i]).log2_abs())
            .fold(f64::INFINITY, f64::min);
        if !sep.is_finite() {
            continue;
        }
        let mut lambda = lambdas[i].clone();
        let mut moved = false;
        for _ in 0..3 {
            let mut a = t.clone();
            a.add_diagonal(&-lambda.clone());
            let Ok(lu) = a.lu() else { break };
            let mut trace = Complex::zero();
            for j in 0..n {
                let mut e = vec![Complex::zero(); n];
                e[j] = Complex::one();
                trace = &trace + &lu.solve(&e)[j];
            }
            if trace.is_zero() {
                break;
            }
            let step = &Complex::one() / &trace;
            let log2_step = step.log2_abs();
            if !(log2_step <= sep - 2.0) {
                break;
            }
            lambda = &lambda + &step;
            moved = true;
            if log2_step <= lambda.log2_abs() - R::precision_bits() as f64 {
                break;
            }
        }
        if moved && lambda.is_finite() {
            lambdas[i + 1] = &Complex::one() / &lambda;
            lambdas[i] = lambda;
        }
    }
    lambdas
}

/// Inverse iteration from a random start. Returns the unit
/// vector, whether the shift was perturbed, and the log2 relative residual.
fn inverse_iteration<R: Real>(
    t: &CMatrix<R>,
    lambda: &Complex<R>,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Complex<R>>, bool, f64), SpectrumError> {
    let n = t.rows();
    let b: Vec<Complex<R>> = (0..n).map(|_| Complex::from_f64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let mut shift = lambda.clone();
    let mut shifted = false;
    let nudge = Complex::from_f64(1.0, 0.5).scale(&R::max_of(lambda.abs(), R::one()).mul_pow2(-(R::precision_bits() as i32) / 2));
    let lu = loop {
        let mut a = t.clone();
        a.add_diagonal(&-shift.clone());
        match a.lu() {
            Ok(lu) => break lu,
            Err(e) if shifted => return Err(e.into()),
            Err(_) => {
                shift = &shift + &nudge;
                shifted = true;
            }
        }
    };
    let scale = t.norm1().log2_abs().max(lambda.log2_abs());
    let residual = |x: &[Complex<R>]| {
        let tx = t.mul_vec(x);
        let log2_r = tx.iter().zip(x).map(|(a, b)| (a - &(lambda * b)).log2_abs()).fold(f64::NEG_INFINITY, f64::max);
        let log2_x = x.iter().map(Complex::log2_abs).fold(f64::NEG_INFINITY, f64::max);
        log2_r - scale - log2_x
    };
    let mut x = lu.solve(&b);
    crate::numerics::normalize(&mut x);
    let mut r = residual(&x);
    // One step normally suffices; a start nearly orthogonal to the
    // eigenvector gets a second.
    if r > -(R::precision_bits() as f64) / 2.0 {
        x = lu.solve(&x);
        crate::numerics::normalize(&mut x);
        r = residual(&x);
    }
    Ok((x, shifted, r))
}

/// f64 copy of a unit vector with its largest component rotated to the
/// positive real axis.
fn snapshot<R: Real>(x: &[Complex<R>]) -> [C64; 8] {
    let big = x.iter().enumerate().fold(0, |b, (i, z)| if z.abs1() > x[b].abs1() { i } else { b });
    let phase = if x[big].is_zero() { Complex::one() } else { x[big].conj().scale(&(R::one() / x[big].abs())) };
    std::array::from_fn(|i| (&x[i] * &phase).to_c64())
}

/// log2 of min over perfect matchings of max |λᵢλⱼ − 1|.
fn best_pairing<R: Real>(values: &[Complex<R>]) -> f64 {
    let n = values.len();
    let mut cost = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let c = (&(&values[i] * &values[j]) - &Complex::one()).log2_abs();
            cost[i][j] = c;
            cost[j][i] = c;
        }
    }
    fn search(cost: &[Vec<f64>], used: &mut Vec<bool>, current: f64, best: &mut f64) {
        let Some(i) = used.iter().position(|u| !u) else {
            *best = best.min(current);
            return;
        };
        used[i] = true;
        for j in i + 1..used.len() {
            if !used[j] && cost[i][j].max(current) < *best {
                used[j] = true;
                search(cost, used, current.max(cost[i][j]), best);
                used[j] = false;
            }
        }
        used[i] = false;
    }
    let mut best = f64::INFINITY;
    search(&cost, &mut vec![false; n], f64::NEG_INFINITY, &mut best);
    best
}

/// log2 of the Hausdorff distance between two point sets under the relative
/// metric |a − b| / max(|a|, |b|).
fn log2_hausdorff<R: Real>(a: &[Complex<R>], b: &[Complex<R>]) -> f64 {
    let d = |x: &Complex<R>, y: &Complex<R>| (x - y).log2_abs() - x.log2_abs().max(y.log2_abs());
    let directed = |p: &[Complex<R>], q: &[Complex<R>]| {
        p.iter().map(|x| q.iter().map(|y| d(x, y)).fold(f64::INFINITY, f64::min)).fold(f64::NEG_INFINITY, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Palindromy residuals of the characteristic coefficients of T.
///
/// The recursion forms traces of T^j, which reach ‖T‖^8 while the largest
/// coefficient is only the product of the four largest |λ|; the recursion
/// therefore runs with that many extra bits. T itself is not recomputed.
fn palindromic_residuals<R: Real>(t: &CMatrix<R>, lambdas: &[Complex<R>]) -> [f64; 5] {
    let big: f64 = lambdas.iter().map(|l| l.log2_abs().max(0.0)).sum::<f64>() / 2.0;
    let bits = (8.0 * t.norm1().log2_abs().max(0.0) - big).max(0.0) as u32 + R::precision_bits() + 64;
    with_precision(bits, || {
        let tm: CMatrix<MpFloat> = t.convert();
        let c = faddeev_leverrier(&tm, false).coeffs;
        let scale = c.iter().map(Complex::log2_abs).fold(f64::NEG_INFINITY, f64::max);
        let one = Complex::<MpFloat>::one();
        let r = |x: &Complex<MpFloat>, y: &Complex<MpFloat>| (x - y).log2_abs() - scale;
        [r(&c[0], &one), r(&c[8], &one), r(&c[7], &c[1]), r(&c[6], &c[2]), r(&c[5], &c[3])]
    })
}

// ---------------------------------------------------------------------------
// Classification

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Shear,
    Compressional,
    Thermal,
    Diffusive,
    Mixed,
}

impl Family {
    pub const WAVES: [Family; 4] = [Family::Shear, Family::Compressional, Family::Thermal, Family::Diffusive];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Shear => "shear",
            Family::Compressional => "compressional",
            Family::Thermal => "thermal",
            Family::Diffusive => "diffusive",
            Family::Mixed => "mixed",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Family::Shear, Family::Compressional, Family::Thermal, Family::Diffusive, Family::Mixed]
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown family `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    ShearPropagating,
    ShearEvanescent,
    CompressionalPropagating,
    CompressionalEvanescent,
    ThermalDamping,
    DiffusiveDamping,
    Mixed,
}

const CLASSIFICATIONS: [Classification; 7] = [
    Classification::ShearPropagating,
    Classification::ShearEvanescent,
    Classification::CompressionalPropagating,
    Classification::CompressionalEvanescent,
    Classification::ThermalDamping,
    Classification::DiffusiveDamping,
    Classification::Mixed,
];

impl Classification {
    pub fn family(self) -> Family {
        match self {
            Classification::ShearPropagating | Classification::ShearEvanescent => Family::Shear,
            Classification::CompressionalPropagating | Classification::CompressionalEvanescent => Family::Compressional,
            Classification::ThermalDamping => Family::Thermal,
            Classification::DiffusiveDamping => Family::Diffusive,
            Classification::Mixed => Family::Mixed,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::ShearPropagating => "shear-propagating",
            Classification::ShearEvanescent => "shear-evanescent",
            Classification::CompressionalPropagating => "compressional-propagating",
            Classification::CompressionalEvanescent => "compressional-evanescent",
            Classification::ThermalDamping => "thermal-damping",
            Classification::DiffusiveDamping => "diffusive-damping",
            Classification::Mixed => "mixed",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Classification {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CLASSIFICATIONS.into_iter().find(|c| c.as_str() == s).ok_or_else(|| format!("unknown classification `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// |k2i*| below which a point propagates.
    pub eps_band: f64,
    /// Share a family must exceed to claim the point.
    pub dominance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { eps_band: 1e-6, dominance: 0.6 }
    }
}

/// Shares of (shear, compressional, thermal, diffusive) in an eigenvector.
///
/// Each field is weighed by the magnitude of its flux product (ω|u₁||σ₂₁|,
/// ω|u₂||σ₂₂|, |θ||Kθ'|, |η||Dη'|), which puts displacements, temperature and
/// chemical potential on a common power-per-area footing. Vectors with no flux
/// (static or degenerate) fall back to squared field amplitudes.
pub fn family_shares(vector: &[C64; 8], omega: f64) -> [f64; 4] {
    let a = |i: usize| vector[i].abs();
    let mut w = [omega * a(0) * a(4), omega * a(1) * a(5), a(2) * a(6), a(3) * a(7)];
    let mut total: f64 = w.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        w = [a(0).powi(2), a(1).powi(2), a(2).powi(2), a(3).powi(2)];
        total = w.iter().sum();
    }
    if !(total > 0.0 && total.is_finite()) {
        return [0.25; 4];
    }
    w.map(|x| x / total)
}

pub fn classify(vector: &[C64; 8], omega: f64, k2i: f64, thresholds: &Thresholds) -> Classification {
    let shares = family_shares(vector, omega);
    let (best, share) = shares.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &s)| if s > b.1 { (i, s) } else { b });
    if !(share > thresholds.dominance) {
        return Classification::Mixed;
    }
    let propagating = k2i.abs() < thresholds.eps_band;
    match (best, propagating) {
        (0, true) => Classification::ShearPropagating,
        (0, false) => Classification::ShearEvanescent,
        (1, true) => Classification::CompressionalPropagating,
        (1, false) => Classification::CompressionalEvanescent,
        (2, _) => Classification::ThermalDamping,
        _ => Classification::DiffusiveDamping,
    }
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// ω* = ω / (1 rad/s), strictly increasing, ≥ 0.
    pub omegas: Vec<f64>,
    /// k₁* = k₁L.
    pub k1_star: f64,
    pub deltas: Vec<f64>,
    pub precision: PrecisionMode,
    pub thresholds: Thresholds,
    pub qr_cross_check: bool,
    /// Bound on the reciprocity residual of the QR multipliers.
    pub reciprocity_tolerance: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            omegas: Vec::new(),
            k1_star: 0.0,
            deltas: vec![1.0],
            precision: PrecisionMode::Auto,
            thresholds: Thresholds::default(),
            qr_cross_check: true,
            reciprocity_tolerance: 1e-12,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SpectrumError> {
        let bad = |m: String| Err(SpectrumError::InvalidConfig(m));
        if self.omegas.is_empty() {
            return bad("omega grid is empty".into());
        }
        if let Some(w) = self.omegas.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return bad(format!("omega {w} must be finite and >= 0"));
        }
        if self.omegas.windows(2).any(|p| !(p[1] > p[0])) {
            return bad("omega grid must be strictly increasing".into());
        }
        if !self.k1_star.is_finite() {
            return bad("k1_star must be finite".into());
        }
        if self.deltas.is_empty() {
            return bad("delta list is empty".into());
        }
        for &d in &self.deltas {
            CouplingFactor::new(d).map_err(|e| SpectrumError::InvalidConfig(e.to_string()))?;
        }
        if !(self.thresholds.eps_band > 0.0 && self.thresholds.eps_band.is_finite()) {
            return bad(format!("eps_band {} must be positive", self.thresholds.eps_band));
        }
        if !(self.thresholds.dominance > 0.0 && self.thresholds.dominance < 1.0) {
            return bad(format!("dominance {} must lie in (0, 1)", self.thresholds.dominance));
        }
        Ok(())
    }

    fn solve_options(&self, delta_index: usize, omega_index: usize) -> SolveOptions {
        SolveOptions {
            qr_cross_check: self.qr_cross_check,
            seed: point_seed(self.seed, delta_index, omega_index),
            ..Default::default()
        }
    }
}

/// Seed of one sweep point, independent of evaluation order.
fn point_seed(seed: u64, delta_index: usize, omega_index: usize) -> u64 {
    let mut x = seed ^ ((delta_index as u64) << 40) ^ omega_index as u64;
    // splitmix64 finalizer
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Per-point flags, written `|`-separated in the CSV.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PointFlags(u8);

impl PointFlags {
    /// Real k₁ ≠ 0 with k₂ complex: constant-phase and constant-amplitude
    /// planes differ (k₁r·k₂i ≠ k₂r·k₁i).
    pub const INHOMOGENEOUS: PointFlags = PointFlags(1);
    /// Solved only after a precision escalation.
    pub const ESCALATED: PointFlags = PointFlags(2);
    /// T − λI was exactly singular and the inverse-iteration shift was moved.
    pub const SHIFTED: PointFlags = PointFlags(4);
    /// The QR multipliers of this point failed the reciprocity bound.
    pub const RECIPROCITY: PointFlags = PointFlags(8);

    const NAMES: [(PointFlags, &'static str); 4] = [
        (Self::INHOMOGENEOUS, "inhomogeneous"),
        (Self::ESCALATED, "escalated"),
        (Self::SHIFTED, "shifted"),
        (Self::RECIPROCITY, "reciprocity"),
    ];

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn contains(self, other: PointFlags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: PointFlags) {
        self.0 |= other.0;
    }
}

impl fmt::Display for PointFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = Self::NAMES.iter().filter(|(fl, _)| self.contains(*fl)).map(|(_, n)| *n).collect();
        f.write_str(&names.join("|"))
    }
}

impl FromStr for PointFlags {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Self::empty();
        for part in s.split('|').filter(|p| !p.is_empty()) {
            let (fl, _) = Self::NAMES.iter().find(|(_, n)| *n == part).ok_or_else(|| format!("unknown flag `{part}`"))?;
            out.insert(*fl);
        }
        Ok(out)
    }
}

/// One row of the spectrum table.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumPoint {
    pub omega_star: f64,
    pub delta: f64,
    pub k1_star: f64,
    /// Tracked branch, 1..=8.
    pub branch: u8,
    pub lambda: WideComplex,
    pub k2r_star: f64,
    pub k2i_star: f64,
    pub classification: Classification,
    pub flags: PointFlags,
    pub vector: [C64; 8],
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointFailure {
    pub omega_star: f64,
    pub delta: f64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointDiagnostics {
    pub omega_star: f64,
    pub delta: f64,
    pub precision: Precision,
    pub escalated: bool,
    pub log2_det_residual: f64,
    pub log2_reciprocity: Option<f64>,
    pub log2_hausdorff: Option<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpectrumTable {
    /// Ordered by δ (config order), then ω, then k2i*, then k2r*.
    pub points: Vec<SpectrumPoint>,
    pub failures: Vec<PointFailure>,
    pub diagnostics: Vec<PointDiagnostics>,
}

impl SpectrumTable {
    pub fn for_delta(&self, delta: f64) -> impl Iterator<Item = &SpectrumPoint> {
        self.points.iter().filter(move |p| p.delta == delta)
    }

    /// Points whose QR cross-check failed the reciprocity bound.
    pub fn reciprocity_violations(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.log2_reciprocity.is_some_and(|r| r > RECIPROCITY_FLAG_LOG2)).count()
    }
}

const RECIPROCITY_FLAG_LOG2: f64 = -39.863_137_138_648_35; // log2(1e-12)

fn row_order(a: &SpectrumPoint, b: &SpectrumPoint) -> Ordering {
    a.omega_star.total_cmp(&b.omega_star).then(a.k2i_star.total_cmp(&b.k2i_star)).then(a.k2r_star.total_cmp(&b.k2r_star))
}

/// Solves every (δ, ω) grid point; failed points are logged and skipped.
pub fn sweep(cell: &CellSpec, cfg: &SweepConfig) -> Result<SpectrumTable, SpectrumError> {
    cfg.validate()?;
    let k1 = cfg.k1_star / cell.period();
    let log2_recip_tol = cfg.reciprocity_tolerance.log2();
    let mut table = SpectrumTable::default();
    for (di, &delta) in cfg.deltas.iter().enumerate() {
        let coupled = cell.with_coupling(CouplingFactor::new(delta).map_err(|e| SpectrumError::InvalidConfig(e.to_string()))?);
        let results: Vec<(Result<FloquetSolution, SpectrumError>, f64)> = cfg
            .omegas
            .par_iter()
            .enumerate()
            .map(|(wi, &w)| {
                let start = Instant::now();
                let r = solve_floquet(&coupled, k1, w, cfg.precision, &cfg.solve_options(di, wi));
                (r, start.elapsed().as_secs_f64())
            })
            .collect();

        let mut rows: Vec<Vec<SpectrumPoint>> = Vec::new();
        for (&w, (result, seconds)) in cfg.omegas.iter().zip(results) {
            match result {
                Ok(sol) => {
                    let recip = sol.cross_check.as_ref().map(|c| c.log2_reciprocity);
                    table.diagnostics.push(PointDiagnostics {
                        omega_star: w,
                        delta,
                        precision: sol.precision,
                        escalated: sol.escalated,
                        log2_det_residual: sol.log2_det_residual,
                        log2_reciprocity: recip,
                        log2_hausdorff: sol.cross_check.as_ref().map(|c| c.log2_hausdorff),
                        seconds,
                    });
                    let mut flags = PointFlags::empty();
                    if sol.escalated {
                        flags.insert(PointFlags::ESCALATED);
                    }
                    if recip.is_some_and(|r| !(r <= log2_recip_tol)) {
                        flags.insert(PointFlags::RECIPROCITY);
                    }
                    rows.push(points_of(&sol, w, delta, cfg, flags));
                }
                Err(e) => table.failures.push(PointFailure { omega_star: w, delta, message: e.to_string() }),
            }
        }
        track_branches(&mut rows, w_shares);
        for mut r in rows {
            r.sort_by(row_order);
            table.points.extend(r);
        }
    }
    Ok(table)
}

fn w_shares(p: &SpectrumPoint) -> [f64; 4] {
    family_shares(&p.vector, p.omega_star)
}

fn points_of(sol: &FloquetSolution, omega: f64, delta: f64, cfg: &SweepConfig, base: PointFlags) -> Vec<SpectrumPoint> {
    let mut out: Vec<SpectrumPoint> = sol
        .multipliers
        .iter()
        .map(|m| {
            let mut flags = base;
            if m.shifted {
                flags.insert(PointFlags::SHIFTED);
            }
            if cfg.k1_star != 0.0 && m.k2i.abs() >= cfg.thresholds.eps_band {
                flags.insert(PointFlags::INHOMOGENEOUS);
            }
            SpectrumPoint {
                omega_star: omega,
                delta,
                k1_star: cfg.k1_star,
                branch: 0,
                lambda: m.lambda,
                k2r_star: m.k2r,
                k2i_star: m.k2i,
                classification: classify(&m.vector, omega, m.k2i, &cfg.thresholds),
                flags,
                vector: m.vector.clone(),
            }
        })
        .collect();
    out.sort_by(row_order);
    out
}

/// Assigns branch numbers along consecutive frequencies by greedy
/// minimum-cost matching on wavenumber continuity and family overlap.
fn track_branches(rows: &mut [Vec<SpectrumPoint>], shares: fn(&SpectrumPoint) -> [f64; 4]) {
    use std::f64::consts::PI;
    let Some(first) = rows.first_mut() else { return };
    for (i, p) in first.iter_mut().enumerate() {
        p.branch = i as u8 + 1;
    }
    for k in 1..rows.len() {
        let (done, rest) = rows.split_at_mut(k);
        let prev = &done[k - 1];
        let cur = &mut rest[0];
        let mut pairs = Vec::with_capacity(prev.len() * cur.len());
        for (i, p) in prev.iter().enumerate() {
            let sp = shares(p);
            for (j, c) in cur.iter().enumerate() {
                let dr = (c.k2r_star - p.k2r_star).abs();
                let dr = dr.min(2.0 * PI - dr);
                let di = (c.k2i_star - p.k2i_star).abs() / (1.0 + p.k2i_star.abs());
                let sc = shares(c);
                let overlap: f64 = sp.iter().zip(&sc).map(|(a, b)| (a * b).sqrt()).sum();
                pairs.push((dr + di + (1.0 - overlap).max(0.0), i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let (mut used_p, mut used_c) = (vec![false; prev.len()], vec![false; cur.len()]);
        let labels: Vec<u8> = prev.iter().map(|p| p.branch).collect();
        for (_, i, j) in pairs {
            if !used_p[i] && !used_c[j] {
                used_p[i] = true;
                used_c[j] = true;
                cur[j].branch = labels[i];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Band reports

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandKind {
    Pass,
    Gap,
}

impl BandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BandKind::Pass => "pass",
            BandKind::Gap => "gap",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandInterval {
    pub kind: BandKind,
    /// 1-based within its kind.
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    /// Fewer than three grid samples fall inside.
    pub under_resolved: bool,
    /// The upper edge is the end of the grid, not a band edge.
    pub open_end: bool,
}

impl BandInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandReport {
    pub family: Family,
    pub delta: f64,
    /// Alternating pass and gap intervals in ascending ω.
    pub intervals: Vec<BandInterval>,
}

impl BandReport {
    fn nth(&self, kind: BandKind, index: usize) -> Option<&BandInterval> {
        self.intervals.iter().find(|b| b.kind == kind && b.index == index)
    }

    pub fn pass_bands(&self) -> impl Iterator<Item = &BandInterval> {
        self.intervals.iter().filter(|b| b.kind == BandKind::Pass)
    }

    pub fn gaps(&self) -> impl Iterator<Item = &BandInterval> {
        self.intervals.iter().filter(|b| b.kind == BandKind::Gap)
    }

    /// A*_p.
    pub fn first_pass_width(&self) -> Option<f64> {
        self.nth(BandKind::Pass, 1).map(BandInterval::width)
    }

    /// A*_b.
    pub fn first_gap_width(&self) -> Option<f64> {
        self.nth(BandKind::Gap, 1).map(BandInterval::width)
    }

    /// ω̄*_p.
    pub fn first_pass_mean(&self) -> Option<f64> {
        self.nth(BandKind::Pass, 1).map(BandInterval::mean)
    }

    /// ω̄*_b.
    pub fn first_gap_mean(&self) -> Option<f64> {
        self.nth(BandKind::Gap, 1).map(BandInterval::mean)
    }

    pub fn under_resolved(&self) -> bool {
        self.intervals.iter().any(|b| b.under_resolved)
    }
}

/// Relative width at which edge bisection stops.
pub const EDGE_TOLERANCE: f64 = 1e-6;

/// True when `family` has a propagating multiplier at ω.
pub fn family_propagates(
    cell: &CellSpec,
    cfg: &SweepConfig,
    delta: f64,
    omega: f64,
    family: Family,
) -> Result<bool, SpectrumError> {
    let coupled = cell.with_coupling(CouplingFactor::new(delta).map_err(|e| SpectrumError::InvalidConfig(e.to_string()))?);
    let opts = SolveOptions {
        qr_cross_check: false,
        seed: point_seed(cfg.seed, usize::MAX, omega.to_bits() as usize),
        ..Default::default()
    };
    let sol = solve_floquet(&coupled, cfg.k1_star / cell.period(), omega, cfg.precision, &opts)?;
    Ok(sol
        .multipliers
        .iter()
        .any(|m| m.k2i.abs() < cfg.thresholds.eps_band && classify(&m.vector, omega, m.k2i, &cfg.thresholds).family() == family))
}

/// Pass bands and gaps of one family at one δ. Sample classification comes
/// from the table; every edge between a passing and a non-passing sample is
/// refined by bisection to [`EDGE_TOLERANCE`].
pub fn band_report(
    cell: &CellSpec,
    cfg: &SweepConfig,
    table: &SpectrumTable,
    delta: f64,
    family: Family,
) -> Result<BandReport, SpectrumError> {
    let eps = cfg.thresholds.eps_band;
    let mut samples: Vec<(f64, bool)> = Vec::new();
    // ω = 0 is the static limit, not a wave.
    for p in table.for_delta(delta).filter(|p| p.omega_star > 0.0) {
        let pass = p.k2i_star.abs() < eps && p.classification.family() == family;
        match samples.last_mut() {
            Some((w, any)) if *w == p.omega_star => *any |= pass,
            _ => samples.push((p.omega_star, pass)),
        }
    }
    // Runs of equal state: (first sample index, last sample index, pass).
    let mut runs: Vec<(usize, usize, bool)> = Vec::new();
    for (i, &(_, pass)) in samples.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if r.2 == pass => r.1 = i,
            _ => runs.push((i, i, pass)),
        }
    }
    // Edges between consecutive runs, refined in parallel.
    let edges: Vec<Result<f64, SpectrumError>> = runs
        .windows(2)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|w| {
            let (lo, hi) = (samples[w[0].1].0, samples[w[1].0].0);
            bisect_edge(cell, cfg, delta, family, lo, hi, w[0].2)
        })
        .collect();
    let edges: Vec<f64> = edges.into_iter().collect::<Result<_, _>>()?;

    let last = samples.len().saturating_sub(1);
    let mut intervals = Vec::new();
    let (mut passes, mut gaps) = (0, 0);
    for (r, &(first, end, pass)) in runs.iter().enumerate() {
        let lo = if r == 0 { samples[first].0 } else { edges[r - 1] };
        let hi = if r + 1 < runs.len() { edges[r] } else { samples[end].0 };
        let interval = |kind, index| BandInterval {
            kind,
            index,
            lo,
            hi,
            under_resolved: end + 1 - first < 3,
            open_end: r + 1 == runs.len() && end == last,
        };
        if pass {
            passes += 1;
            intervals.push(interval(BandKind::Pass, passes));
        } else if passes > 0 && r + 1 < runs.len() {
            gaps += 1;
            intervals.push(interval(BandKind::Gap, gaps));
        }
    }
    Ok(BandReport { family, delta, intervals })
}

fn bisect_edge(
    cell: &CellSpec,
    cfg: &SweepConfig,
    delta: f64,
    family: Family,
    mut lo: f64,
    mut hi: f64,
    lo_pass: bool,
) -> Result<f64, SpectrumError> {
    while hi - lo > EDGE_TOLERANCE * lo.abs().max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if family_propagates(cell, cfg, delta, mid, family)? == lo_pass {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// Dispersion relation and temporal damping

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionValue {
    /// D(k, ω) = det(T − e^{ik₂L} I).
    pub value: WideComplex,
    /// log2 of max(‖T‖₁, 1)⁸, the natural scale of D.
    pub log2_scale: f64,
}

impl DispersionValue {
    /// log2 |D| / max(‖T‖₁, 1)⁸.
    pub fn log2_scaled(&self) -> f64 {
        let l = self.value.ln().re / LN_2;
        l - self.log2_scale
    }
}

struct DispersionTask<'a> {
    cell: &'a CellSpec,
    k1: C64,
    k2: C64,
    omega: C64,
}

impl PrecisionTask for DispersionTask<'_> {
    type Output = Result<DispersionValue, SpectrumError>;

    fn run<R: Real>(self) -> Self::Output {
        let (k1, k2, w) = (Complex::<R>::from_c64(self.k1), Complex::<R>::from_c64(self.k2), Complex::<R>::from_c64(self.omega));
        let t = cell_transfer(self.cell, &k1, &k2, &w)?.t;
        let d = det_shifted(&t, &k2, self.cell.period());
        Ok(DispersionValue { value: WideComplex::from_complex(&d), log2_scale: 8.0 * t.norm1().log2_abs().max(0.0) })
    }
}

fn det_shifted<R: Real>(t: &CMatrix<R>, k2: &Complex<R>, period: f64) -> Complex<R> {
    let lambda = k2.scale(&R::from_f64(period)).mul_i().exp();
    let mut a = t.clone();
    a.add_diagonal(&-lambda);
    a.det()
}

/// D(k, ω) = det(T(k₁, ω) − e^{ik₂L} I) at the given precision.
pub fn dispersion_residual(
    cell: &CellSpec,
    k1: C64,
    k2: C64,
    omega: C64,
    precision: Precision,
) -> Result<DispersionValue, SpectrumError> {
    precision.dispatch(DispersionTask { cell, k1, k2, omega })
}

/// k₁r·k₂i = k₂r·k₁i to relative tolerance: constant-phase and
/// constant-amplitude planes coincide.
pub fn is_homogeneous(k1: C64, k2: C64, rel_tol: f64) -> bool {
    let lhs = k1.re * k2.im;
    let rhs = k2.re * k1.im;
    let scale = (k1.re.abs() + k1.im.abs()) * (k2.re.abs() + k2.im.abs());
    (lhs - rhs).abs() <= rel_tol * scale
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalOptions {
    /// Truncation order of the ω-series.
    pub order: usize,
    /// Series trust radius in rad/s.
    pub radius: f64,
    pub precision: Precision,
    /// Newton steps on the exact determinant per root.
    pub newton_steps: usize,
}

impl Default for TemporalOptions {
    fn default() -> Self {
        Self { order: 12, radius: 20.0, precision: Precision::DoubleDouble, newton_steps: 4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalRoot {
    pub omega: C64,
    /// log2 |det(T(ω) − λI)| / max(‖T‖₁, 1)⁸ on the exact transfer matrix.
    pub log2_residual: f64,
    /// |ω| inside the series trust radius; untrusted roots are not polished.
    pub trusted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemporalSpectrum {
    pub k1: f64,
    pub k2: f64,
    pub order: usize,
    pub radius: f64,
    /// Relative size of the first dropped series term at the radius.
    pub tail_bound: f64,
    /// Sorted by |ω|, then Arg ω.
    pub roots: Vec<TemporalRoot>,
}

struct TemporalTask<'a> {
    cell: &'a CellSpec,
    k1: f64,
    k2: f64,
    opts: &'a TemporalOptions,
}

impl PrecisionTask for TemporalTask<'_> {
    type Output = Result<TemporalSpectrum, SpectrumError>;

    fn run<R: Real>(self) -> Self::Output {
        temporal_at::<R>(self.cell, self.k1, self.k2, self.opts)
    }
}

/// Complex frequencies at which e^{ik₂L} is a Floquet multiplier, for real
/// (k₁, k₂): roots of det(T_N(ω) − e^{ik₂L}I) with T_N the order-N ω-series,
/// polished by Newton on the exact transfer matrix.
///
/// The polynomial eigenproblem is shifted to ω = s + 1/μ so that its
/// leading coefficient P(s) is invertible, then linearised as an 8N block
/// companion matrix.
pub fn temporal_spectrum(cell: &CellSpec, k1: f64, k2: f64, opts: &TemporalOptions) -> Result<TemporalSpectrum, SpectrumError> {
    if opts.order == 0 || !(opts.radius > 0.0) {
        return Err(SpectrumError::InvalidConfig("temporal spectrum needs order >= 1 and a positive radius".into()));
    }
    opts.precision.dispatch(TemporalTask { cell, k1, k2, opts })
}

fn temporal_at<R: Real>(cell: &CellSpec, k1: f64, k2: f64, opts: &TemporalOptions) -> Result<TemporalSpectrum, SpectrumError> {
    let (k1c, k2c) = (Complex::<R>::from_f64(k1, 0.0), Complex::<R>::from_f64(k2, 0.0));
    let series = series_transfer_omega(cell, &k1c, &k2c, opts.order, opts.radius)?;
    let n = opts.order;
    let lambda = k2c.scale(&R::from_f64(cell.period())).mul_i().exp();
    let mut p = series.coeffs.clone();
    p[0].add_diagonal(&-lambda.clone());

    // Taylor shift to s: d_j = Σ_{m ≥ j} C(m, j) s^{m−j} P_m.
    let s = Complex::<R>::from_f64(0.37 * opts.radius, 0.23 * opts.radius);
    let mut d = p.clone();
    for j in 0..n {
        for m in (j..n).rev() {
            let shifted = d[m + 1].scale(&s);
            d[m] = d[m].add(&shifted);
        }
    }
    let d0_inv = d[0].inverse()?;
    let size = 8 * n;
    let mut comp = CMatrix::zeros(size, size);
    for j in 1..=n {
        let e = d0_inv.matmul(&d[j]).map(|z| -z.clone());
        comp.set_block(0, 8 * (j - 1), &e);
    }
    for b in 1..n {
        comp.set_block(8 * b, 8 * (b - 1), &CMatrix::identity(8));
    }
    let mus = eigenvalues(&comp)?;

    let mut roots = Vec::new();
    for mu in &mus {
        if mu.log2_abs() < -(R::precision_bits() as f64) / 2.0 - opts.radius.log2() {
            continue;
        }
        let mut w = &s + &mu.inv();
        let trusted = w.abs().to_f64() <= opts.radius;
        if trusted {
            w = newton_polish(cell, &k2c, &k1c, w, opts.newton_steps)?;
        }
        // Far-off spurious roots can overflow the exact transfer matrix.
        let log2_residual = match cell_transfer(cell, &k1c, &k2c, &w) {
            Ok(tm) => det_shifted(&tm.t, &k2c, cell.period()).log2_abs() - 8.0 * tm.t.norm1().log2_abs().max(0.0),
            Err(_) if !trusted => f64::INFINITY,
            Err(e) => return Err(e.into()),
        };
        roots.push(TemporalRoot { omega: w.to_c64(), log2_residual, trusted });
    }
    roots.sort_by(|a, b| a.omega.abs().total_cmp(&b.omega.abs()).then(a.omega.arg().total_cmp(&b.omega.arg())));
    Ok(TemporalSpectrum { k1, k2, order: n, radius: opts.radius, tail_bound: series.tail_bound, roots })
}

fn newton_polish<R: Real>(
    cell: &CellSpec,
    k2: &Complex<R>,
    k1: &Complex<R>,
    mut w: Complex<R>,
    steps: usize,
) -> Result<Complex<R>, SpectrumError> {
    let period = cell.period();
    let f =
        |x: &Complex<R>| -> Result<Complex<R>, SpectrumError> { Ok(det_shifted(&cell_transfer(cell, k1, k2, x)?.t, k2, period)) };
    let log2_u = -(R::precision_bits() as f64);
    for _ in 0..steps {
        let h = Complex::from_real(R::max_of(w.abs(), R::one()).mul_pow2((log2_u / 3.0) as i32));
        let fw = f(&w)?;
        let deriv = (&f(&(&w + &h))? - &f(&(&w - &h))?) / &h.mul_pow2(1);
        if deriv.is_zero() || !deriv.is_finite() {
            break;
        }
        let step = &fw / &deriv;
        w = &w - &step;
        if step.log2_abs() <= w.log2_abs() + log2_u + 8.0 {
            break;
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Medium;
    use crate::materials::{derive_coefficients, PhaseCoefficients, PhaseInput, SOFC_THICKNESS};
    use crate::transfer::LayerSpec;
    use std::f64::consts::PI;

    fn phase1() -> PhaseCoefficients {
        derive_coefficients(&PhaseInput::sofc_phase1()).unwrap()
    }

    fn single(c: PhaseCoefficients, thickness: f64) -> CellSpec {
        CellSpec::new(vec![LayerSpec { medium: Medium::Isotropic(c), thickness }]).unwrap()
    }

    fn sofc() -> CellSpec {
        let layer =
            |p: PhaseInput| LayerSpec { medium: Medium::Isotropic(derive_coefficients(&p).unwrap()), thickness: SOFC_THICKNESS };
        CellSpec::new(vec![layer(PhaseInput::sofc_phase1()), layer(PhaseInput::sofc_phase2())]).unwrap()
    }

    #[test]
    fn lambda_map_examples() {
        let k = |re: f64, im: f64| lambda_to_k2(&WideComplex::from_c64(Complex::new(re, im))).unwrap();
        assert_eq!(k(1.0, 0.0), (0.0, 0.0));
        assert_eq!(k(-1.0, 0.0), (PI, 0.0));
        let (r, i) = k(2.0, 0.0);
        assert_eq!(r, 0.0);
        assert!((i + 2f64.ln()).abs() < 1e-15);
        assert_eq!(lambda_to_k2(&WideComplex::from_c64(Complex::new(0.0, 0.0))), Err(SpectrumError::ZeroMultiplier));
    }

    #[test]
    fn zone_folding_is_half_open() {
        assert_eq!(fold_zone(PI), PI);
        assert_eq!(fold_zone(-PI), PI);
        assert!((fold_zone(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((fold_zone(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn wide_real_round_trips_text() {
        for x in [0.0, 1.0, -0.1, 768.0, 1e-300, -1e-310, 5e-324, f64::MAX, 6.02e23] {
            let w = WideReal::from_f64(x);
            assert_eq!(w.to_f64(), x);
            assert_eq!(w.to_string().parse::<WideReal>().unwrap(), w, "{w}");
        }
        let huge = WideReal { mant: 0.9, exp2: 6000 };
        assert_eq!(huge.to_string(), "1.3621235240738134e1806");
        assert_eq!(huge.to_string().parse::<WideReal>().unwrap(), huge);
        assert_eq!(WideReal::from_f64(768.0).to_string(), "7.6800000000000000e2");
    }

    #[test]
    fn wide_complex_log_matches_f64() {
        let z = Complex::new(-3.0, 4.0);
        let l = WideComplex::from_c64(z).ln();
        assert!((l.re - 5f64.ln()).abs() < 1e-15);
        assert!((l.im - 4f64.atan2(-3.0)).abs() < 1e-15);
    }

    #[test]
    fn identity_transfer_gives_unit_multipliers() {
        let t = CMatrix::<crate::numerics::DoubleDouble>::identity(8);
        for l in palindromic_multipliers(&t) {
            assert!((&l - &Complex::one()).abs().to_f64() < 1e-15);
        }
    }

    #[test]
    fn single_phase_shear_multipliers() {
        let c = apply_zero(phase1());
        let cell = single(c, 1e-3);
        let w = 2e6;
        let sol = solve_floquet(&cell, 0.0, w, PrecisionMode::Auto, &SolveOptions::default()).unwrap();
        let want = fold_zone(w * 1e-3 / c.shear_speed());
        let shear: Vec<&Multiplier> = sol
            .multipliers
            .iter()
            .filter(|m| classify(&m.vector, w, m.k2i, &Thresholds::default()).family() == Family::Shear)
            .collect();
        assert_eq!(shear.len(), 2);
        for m in shear {
            assert!((m.k2r.abs() - want.abs()).abs() < 1e-10, "{} vs {want}", m.k2r);
            assert!(m.k2i.abs() < 1e-12);
        }
        let cc = sol.cross_check.unwrap();
        assert!(cc.log2_reciprocity < -40.0);
        assert!(cc.log2_hausdorff < -34.0);
    }

    fn apply_zero(c: PhaseCoefficients) -> PhaseCoefficients {
        crate::materials::apply_coupling(&c, CouplingFactor::new(0.0).unwrap())
    }

    #[test]
    fn sofc_multipliers_pair_across_unit_circle() {
        let opts = SolveOptions { full_charpoly: true, ..Default::default() };
        let sol = solve_floquet(&sofc(), 0.0, 1e6, PrecisionMode::Auto, &opts).unwrap();
        assert!(sol.log2_palindromic_residual().unwrap() < (1e-12f64).log2());
        assert_eq!(sol.multipliers.len(), 8);
        let inside = sol.multipliers.iter().filter(|m| m.k2i >= -1e-9).count();
        assert!(inside >= 4);
        let small = sol.multipliers.iter().filter(|m| m.lambda.ln().re <= 1e-9).count();
        assert!(small >= 4);
        for (i, m) in sol.multipliers.iter().enumerate() {
            let p = &sol.multipliers[m.partner];
            assert_eq!(p.partner, i);
            assert!((m.k2i + p.k2i).abs() <= 1e-9 * (1.0 + m.k2i.abs()));
        }
        assert!(sol.cross_check.unwrap().log2_reciprocity < -40.0);
    }

    #[test]
    fn escalation_rescues_double() {
        let cell = sofc();
        let sol = solve_floquet(&cell, 0.0, 1e2, PrecisionMode::Fixed(Precision::Double), &SolveOptions::default()).unwrap();
        assert!(sol.escalated);
        assert_eq!(sol.precision, Precision::DoubleDouble);
        let err = solve_floquet(&cell, 0.0, 1e6, PrecisionMode::Fixed(Precision::DoubleDouble), &SolveOptions::default());
        assert!(err.is_err());
    }

    #[test]
    fn classification_examples() {
        let th = Thresholds::default();
        let mut v: [C64; 8] = std::array::from_fn(|_| Complex::new(0.0, 0.0));
        v[0] = Complex::new(1.0, 0.0);
        assert_eq!(classify(&v, 10.0, 0.0, &th), Classification::ShearPropagating);
        assert_eq!(classify(&v, 10.0, 0.3, &th), Classification::ShearEvanescent);
        let mut v: [C64; 8] = std::array::from_fn(|_| Complex::new(0.0, 0.0));
        v[2] = Complex::new(0.8, 0.0);
        v[6] = Complex::new(0.6, 0.0);
        assert_eq!(classify(&v, 10.0, 2.0, &th), Classification::ThermalDamping);
        let v: [C64; 8] = std::array::from_fn(|_| Complex::new(0.5, 0.0));
        assert_eq!(classify(&v, 1.0, 2.0, &th), Classification::Mixed);
    }

    #[test]
    fn uncoupled_thermal_branch_is_classified() {
        let c = apply_zero(phase1());
        let sol = solve_floquet(&single(c, 1e-3), 0.0, 100.0, PrecisionMode::Auto, &SolveOptions::default()).unwrap();
        let want = 1e-3 * (100.0 * c.p / (2.0 * c.k)).sqrt();
        let th: Vec<f64> = sol
            .multipliers
            .iter()
            .filter(|m| classify(&m.vector, 100.0, m.k2i, &Thresholds::default()) == Classification::ThermalDamping)
            .map(|m| m.k2i)
            .collect();
        assert_eq!(th.len(), 2);
        for k in th {
            assert!((k.abs() - want).abs() < 1e-9 * want, "{k} vs {want}");
        }
    }

    #[test]
    fn flags_round_trip() {
        let mut f = PointFlags::empty();
        assert_eq!(f.to_string(), "");
        f.insert(PointFlags::ESCALATED);
        f.insert(PointFlags::INHOMOGENEOUS);
        assert_eq!(f.to_string(), "inhomogeneous|escalated");
        assert_eq!(f.to_string().parse::<PointFlags>().unwrap(), f);
        assert!("bogus".parse::<PointFlags>().is_err());
    }

    #[test]
    fn sweep_config_validation() {
        let mut cfg = SweepConfig { omegas: vec![1.0, 2.0], ..Default::default() };
        assert!(cfg.validate().is_ok());
        cfg.omegas = vec![2.0, 1.0];
        assert!(cfg.validate().is_err());
        cfg.omegas = vec![-1.0];
        assert!(cfg.validate().is_err());
        cfg.omegas = vec![1.0];
        cfg.thresholds.eps_band = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sweep_orders_rows_and_tracks_branches() {
        let cfg = SweepConfig { omegas: vec![0.0, 10.0, 100.0, 1000.0], deltas: vec![0.0, 1.0], ..Default::default() };
        let table = sweep(&sofc(), &cfg).unwrap();
        assert!(table.failures.is_empty(), "{:?}", table.failures);
        assert_eq!(table.points.len(), 64);
        for chunk in table.points.chunks(8) {
            let mut branches: Vec<u8> = chunk.iter().map(|p| p.branch).collect();
            branches.sort();
            assert_eq!(branches, (1..=8).collect::<Vec<u8>>());
            assert!(chunk.windows(2).all(|w| row_order(&w[0], &w[1]) != Ordering::Greater));
            assert!(chunk.iter().all(|p| p.k2r_star > -PI && p.k2r_star <= PI));
        }
    }

    #[test]
    fn homogeneous_cell_has_no_gaps() {
        let cell = single(apply_zero(phase1()), 1e-3);
        let omegas: Vec<f64> = (0..12).map(|i| 1.0 + i as f64 * 1e6).collect();
        let cfg = SweepConfig { omegas, deltas: vec![0.0], qr_cross_check: false, ..Default::default() };
        let table = sweep(&cell, &cfg).unwrap();
        let rep = band_report(&cell, &cfg, &table, 0.0, Family::Shear).unwrap();
        assert_eq!(rep.gaps().count(), 0);
        assert_eq!(rep.pass_bands().count(), 1);
        assert!(rep.intervals[0].open_end);
    }

    #[test]
    fn dispersion_vanishes_on_multiplier() {
        let cell = sofc();
        let sol = solve_floquet(&cell, 0.0, 1e3, PrecisionMode::Auto, &SolveOptions::default()).unwrap();
        for m in &sol.multipliers {
            let k2 = Complex::new(m.k2r, m.k2i).scale(&(1.0 / cell.period()));
            let d =
                dispersion_residual(&cell, Complex::new(0.0, 0.0), k2.clone(), Complex::new(1e3, 0.0), sol.precision).unwrap();
            assert!(d.log2_scaled() < (1e-10f64).log2(), "{}", d.log2_scaled());
            assert!(is_homogeneous(Complex::new(0.0, 0.0), k2, 0.0));
        }
        let off =
            dispersion_residual(&cell, Complex::new(0.0, 0.0), Complex::new(0.3, 0.1), Complex::new(1e3, 0.0), sol.precision)
                .unwrap();
        assert!(!off.value.is_zero());
    }

    #[test]
    fn temporal_heat_conduction_root() {
        let c = apply_zero(phase1());
        let cell = single(c, 1e-3);
        let k2 = 1.0 / 1e-3;
        let ts = temporal_spectrum(&cell, 0.0, k2, &TemporalOptions::default()).unwrap();
        let want = Complex::new(0.0, -c.k * k2 * k2 / c.p);
        let best =
            ts.roots.iter().filter(|r| r.trusted).map(|r| (&r.omega - &want).abs() / want.abs()).fold(f64::INFINITY, f64::min);
        assert!(best < 1e-9, "{best}");
        let diff = Complex::new(0.0, -c.d * k2 * k2 / c.q);
        assert!(ts.roots.iter().any(|r| (&r.omega - &diff).abs() < 1e-9 * diff.abs()));
        for r in ts.roots.iter().filter(|r| r.trusted) {
            assert!(r.omega.im <= 1e-9 * r.omega.abs(), "{:?}", r.omega);
        }
    }
}
