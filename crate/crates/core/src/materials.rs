//! Engineering inputs to normalized field-equation coefficients.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialsError {
    #[error("{field} must be positive and finite (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("Poisson ratio {0} outside (-1, 0.5): the plane-strain modulus 2G(1-nu)/(1-2nu) is singular at nu = 0.5")]
    PoissonOutOfRange(f64),
    #[error("{field} must be finite (got {value})")]
    NonFinite { field: &'static str, value: f64 },
    #[error("coupling factor must be a finite number >= 0 (got {0})")]
    NegativeCoupling(f64),
}

/// Raw isotropic phase data in SI units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseInput {
    /// Young's modulus [Pa].
    #[serde(rename = "E")]
    pub e: f64,
    pub nu: f64,
    pub rho: f64,
    /// Thermal conductivity [W/(m K)].
    #[serde(rename = "Kt")]
    pub kt: f64,
    /// Specific heat [J/(kg K)].
    #[serde(rename = "C_spec")]
    pub c_spec: f64,
    pub alpha_t: f64,
    /// Diffusive dilatation; `None` means alpha_t / 10.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_t: Option<f64>,
    #[serde(rename = "D_over_q")]
    pub d_over_q: f64,
    #[serde(default = "default_q_over_p")]
    pub q_over_p: f64,
    #[serde(default = "default_psi_over_p")]
    pub psi_over_p: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
    /// Direct values that replace the ratio rules for q, psi and D.
    #[serde(default, skip_serializing_if = "Overrides::is_empty")]
    pub overrides: Overrides,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        self.q.is_none() && self.psi.is_none() && self.d.is_none()
    }
}

fn default_q_over_p() -> f64 {
    0.1
}

fn default_psi_over_p() -> f64 {
    1.0 / 3.0
}

/// Natural-state temperature of the SOFC study [K].
pub const SOFC_T0: f64 = 293.15;

/// Layer thickness of the SOFC bilayer [m].
pub const SOFC_THICKNESS: f64 = 1e-3;

impl PhaseInput {
    /// SOFC phase 1.
    pub fn sofc_phase1() -> Self {
        Self::with_ratio_rules(155e9, 0.3, 5532.0, 2.64, 400.0, 2.2205e-6, 0.9e-5)
    }

    /// SOFC phase 2.
    pub fn sofc_phase2() -> Self {
        Self::with_ratio_rules(50e9, 0.25, 6670.0, 9.96, 440.0, 3.8858e-6, 0.73e-5)
    }

    fn with_ratio_rules(e: f64, nu: f64, rho: f64, kt: f64, c_spec: f64, alpha_t: f64, d_over_q: f64) -> Self {
        Self {
            e,
            nu,
            rho,
            kt,
            c_spec,
            alpha_t,
            beta_t: None,
            d_over_q,
            q_over_p: default_q_over_p(),
            psi_over_p: default_psi_over_p(),
            t0: SOFC_T0,
            overrides: Overrides::default(),
        }
    }
}

/// Per-phase constants entering the field equations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCoefficients {
    pub rho: f64,
    /// Shear modulus.
    pub g: f64,
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Conductivity over T0.
    pub k: f64,
    /// Mass diffusivity.
    pub d: f64,
    pub p: f64,
    pub q: f64,
    pub psi: f64,
}

impl PhaseCoefficients {
    /// λ + 2G = 2G(1−ν)/(1−2ν).
    pub fn plane_strain_modulus(&self) -> f64 {
        2.0 * self.g * (1.0 - self.nu) / (1.0 - 2.0 * self.nu)
    }

    /// Lamé λ = 2Gν/(1−2ν).
    pub fn lame_lambda(&self) -> f64 {
        2.0 * self.g * self.nu / (1.0 - 2.0 * self.nu)
    }

    pub fn shear_speed(&self) -> f64 {
        (self.g / self.rho).sqrt()
    }

    pub fn compressional_speed(&self) -> f64 {
        (self.plane_strain_modulus() / self.rho).sqrt()
    }
}

fn positive(field: &'static str, value: f64) -> Result<f64, MaterialsError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(MaterialsError::NonPositive { field, value })
    }
}

fn finite(field: &'static str, value: f64) -> Result<f64, MaterialsError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(MaterialsError::NonFinite { field, value })
    }
}

pub fn derive_coefficients(input: &PhaseInput) -> Result<PhaseCoefficients, MaterialsError> {
    let e = positive("E", input.e)?;
    let rho = positive("rho", input.rho)?;
    let kt = positive("Kt", input.kt)?;
    let c_spec = positive("C_spec", input.c_spec)?;
    let t0 = positive("T0", input.t0)?;
    let d_over_q = positive("D_over_q", input.d_over_q)?;
    let nu = finite("nu", input.nu)?;
    if !(nu > -1.0 && nu < 0.5) {
        return Err(MaterialsError::PoissonOutOfRange(nu));
    }
    let alpha_t = finite("alpha_t", input.alpha_t)?;

    let g = e / (2.0 * (1.0 + nu));
    let alpha = e * alpha_t / (1.0 - 2.0 * nu);
    let beta = match input.beta_t {
        None => alpha / 10.0,
        Some(bt) => e * finite("beta_t", bt)? / (1.0 - 2.0 * nu),
    };
    let k = kt / t0;
    let p = rho * c_spec / t0;
    let q = match input.overrides.q {
        Some(q) => positive("overrides.q", q)?,
        None => positive("q_over_p", input.q_over_p)? * p,
    };
    let psi = match input.overrides.psi {
        Some(psi) => finite("overrides.psi", psi)?,
        None => finite("psi_over_p", input.psi_over_p)? * p,
    };
    let d = match input.overrides.d {
        Some(d) => positive("overrides.D", d)?,
        None => d_over_q * q,
    };
    Ok(PhaseCoefficients { rho, g, nu, alpha, beta, k, d, p, q, psi })
}

/// Scalar multiplying α, β and ψ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingFactor {
    delta: f64,
}

impl CouplingFactor {
    pub fn new(delta: f64) -> Result<Self, MaterialsError> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(MaterialsError::NegativeCoupling(delta));
        }
        Ok(Self { delta })
    }

    pub fn value(self) -> f64 {
        self.delta
    }

    /// Set for δ > 1, which lies outside the physical range and is extrapolation.
    pub fn exceeds_unit(self) -> bool {
        self.delta > 1.0
    }
}

pub fn apply_coupling(c: &PhaseCoefficients, delta: CouplingFactor) -> PhaseCoefficients {
    let d = delta.value();
    PhaseCoefficients { alpha: d * c.alpha, beta: d * c.beta, psi: d * c.psi, ..*c }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sofc_phase1_coefficients() {
        let c = derive_coefficients(&PhaseInput::sofc_phase1()).unwrap();
        assert_eq!(c.g, 155e9 / 2.6);
        assert_eq!(c.k, 2.64 / 293.15);
        assert_eq!(c.p, 5532.0 * 400.0 / 293.15);
        assert_eq!(c.q, 0.1 * c.p);
        assert_eq!(c.d, 0.9e-5 * c.q);
        assert_eq!(c.beta, c.alpha / 10.0);
        assert!((c.alpha - 155e9 * 2.2205e-6 / 0.4).abs() < 1e-9 * c.alpha);
    }

    #[test]
    fn sofc_phase2_coefficients() {
        let c = derive_coefficients(&PhaseInput::sofc_phase2()).unwrap();
        assert_eq!(c.g, 20e9);
        assert_eq!(c.p, 6670.0 * 440.0 / 293.15);
    }

    #[test]
    fn unit_shear_modulus() {
        for nu in [-0.5, 0.0, 0.1, 0.3, 0.49] {
            let mut input = PhaseInput::sofc_phase1();
            input.nu = nu;
            input.e = 2.0 * (1.0 + nu);
            assert_eq!(derive_coefficients(&input).unwrap().g, 1.0);
        }
    }

    #[test]
    fn rejects_incompressible_and_bad_inputs() {
        let mut input = PhaseInput::sofc_phase1();
        input.nu = 0.5;
        assert_eq!(derive_coefficients(&input), Err(MaterialsError::PoissonOutOfRange(0.5)));
        let mut input = PhaseInput::sofc_phase1();
        input.kt = 0.0;
        assert!(matches!(derive_coefficients(&input), Err(MaterialsError::NonPositive { field: "Kt", .. })));
        let mut input = PhaseInput::sofc_phase1();
        input.rho = -1.0;
        assert!(derive_coefficients(&input).is_err());
    }

    #[test]
    fn doubling_t0_halves_k_and_p() {
        let a = derive_coefficients(&PhaseInput::sofc_phase1()).unwrap();
        let mut input = PhaseInput::sofc_phase1();
        input.t0 *= 2.0;
        let b = derive_coefficients(&input).unwrap();
        assert_eq!(b.k, a.k / 2.0);
        assert_eq!(b.p, a.p / 2.0);
    }

    #[test]
    fn overrides_replace_ratio_rules() {
        let mut input = PhaseInput::sofc_phase1();
        input.overrides = Overrides { q: Some(3.0), psi: Some(-1.0), d: Some(2e-4) };
        let c = derive_coefficients(&input).unwrap();
        assert_eq!((c.q, c.psi, c.d), (3.0, -1.0, 2e-4));
    }

    #[test]
    fn coupling_limits() {
        let c = derive_coefficients(&PhaseInput::sofc_phase1()).unwrap();
        let zero = apply_coupling(&c, CouplingFactor::new(0.0).unwrap());
        assert_eq!((zero.alpha, zero.beta, zero.psi), (0.0, 0.0, 0.0));
        assert_eq!((zero.g, zero.k, zero.d, zero.p, zero.q), (c.g, c.k, c.d, c.p, c.q));
        assert_eq!(apply_coupling(&c, CouplingFactor::new(1.0).unwrap()), c);
        let half = apply_coupling(&c, CouplingFactor::new(0.5).unwrap());
        assert_eq!(half.alpha, c.alpha / 2.0);
        assert_eq!(half.p, c.p);
    }

    #[test]
    fn coupling_range() {
        assert!(CouplingFactor::new(-0.1).is_err());
        assert!(CouplingFactor::new(f64::NAN).is_err());
        assert!(CouplingFactor::new(1.5).unwrap().exceeds_unit());
        assert!(!CouplingFactor::new(1.0).unwrap().exceeds_unit());
    }
}
