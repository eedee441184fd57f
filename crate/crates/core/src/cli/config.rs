//! Run configuration: JSON document, schema in `schema/run_config.schema.json`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::Medium;
use crate::materials::{derive_coefficients, CouplingFactor, PhaseInput, SOFC_THICKNESS};
use crate::numerics::PrecisionMode;
use crate::spectrum::{Family, SweepConfig, Thresholds};
use crate::transfer::{CellSpec, LayerSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{path}: cannot read config: {message}")]
    Read { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema { path: path.into(), message: message.into() }
}

fn invalid(path: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid { path: path.into(), message: message.to_string() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    SofcPhase1,
    SofcPhase2,
}

impl Preset {
    pub fn input(self) -> PhaseInput {
        match self {
            Preset::SofcPhase1 => PhaseInput::sofc_phase1(),
            Preset::SofcPhase2 => PhaseInput::sofc_phase2(),
        }
    }
}

/// One layer: either a named preset or explicit phase data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<PhaseInput>,
    /// Thickness in meters.
    pub thickness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub layers: Vec<LayerConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Segment of the ω* grid; segments are merged, sorted and de-duplicated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSegment {
    pub spacing: Spacing,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl OmegaSegment {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.start];
        }
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if i == n - 1 {
                    return self.stop;
                }
                match self.spacing {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + t * (self.stop / self.start).ln()).exp(),
                }
            })
            .collect()
    }
}

fn default_omega() -> Vec<OmegaSegment> {
    vec![
        OmegaSegment { spacing: Spacing::Log, start: 1.0, stop: 1e3, points: 61 },
        OmegaSegment { spacing: Spacing::Linear, start: 0.0, stop: 2e7, points: 4000 },
    ]
}

fn default_deltas() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}

fn default_eps_band() -> f64 {
    1e-6
}

fn default_true() -> bool {
    true
}

fn default_reciprocity() -> f64 {
    1e-12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_omega")]
    pub omega: Vec<OmegaSegment>,
    #[serde(default)]
    pub k1_star: f64,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_eps_band")]
    pub eps_band: f64,
    #[serde(default = "default_true")]
    pub qr_cross_check: bool,
    #[serde(default = "default_reciprocity")]
    pub reciprocity_tolerance: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            omega: default_omega(),
            k1_star: 0.0,
            deltas: default_deltas(),
            eps_band: default_eps_band(),
            qr_cross_check: true,
            reciprocity_tolerance: default_reciprocity(),
        }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_families() -> Vec<Family> {
    vec![Family::Shear, Family::Compressional]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Relative paths resolve against the config file's directory.
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    #[serde(default)]
    pub plots: bool,
    /// Families that get pass-band/gap rows.
    #[serde(default = "default_families")]
    pub band_families: Vec<Family>,
    /// Half-height of the k2i* axis in `spectrum_k2i.svg`.
    #[serde(default = "default_k2i_range")]
    pub k2i_plot_range: f64,
}

fn default_k2i_range() -> f64 {
    5.0
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out(), plots: false, band_families: default_families(), k2i_plot_range: default_k2i_range() }
    }
}

fn default_precision() -> String {
    "auto".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cell: CellConfig,
    #[serde(default)]
    pub sweep: SweepSection,
    /// double, dd, qd, mp:<bits> or auto.
    #[serde(default = "default_precision")]
    pub precision: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: OutputSection,
}

/// Validated configuration with all defaults resolved.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub raw: RunConfig,
    pub cell: CellSpec,
    pub sweep: SweepConfig,
    pub out_dir: PathBuf,
}

impl ResolvedConfig {
    pub fn precision_mode(&self) -> PrecisionMode {
        self.sweep.precision
    }
}

/// Parses JSON text; `base` resolves a relative output directory.
pub fn parse_config_str(text: &str, base: &Path) -> Result<ResolvedConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            ConfigError::Parse { line: inner.line(), column: inner.column(), message: inner.to_string() }
        } else {
            schema(path, strip_position(&inner.to_string()))
        }
    })?;
    resolve(raw, base)
}

pub fn parse_config(path: &Path) -> Result<ResolvedConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.display().to_string(), message: e.to_string() })?;
    parse_config_str(&text, path.parent().unwrap_or(Path::new(".")))
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

pub fn resolve(raw: RunConfig, base: &Path) -> Result<ResolvedConfig, ConfigError> {
    if raw.cell.layers.is_empty() {
        return Err(schema("cell.layers", "at least one layer is required"));
    }
    let mut layers = Vec::with_capacity(raw.cell.layers.len());
    for (i, l) in raw.cell.layers.iter().enumerate() {
        let path = format!("cell.layers[{i}]");
        let input = match (&l.preset, &l.phase) {
            (Some(p), None) => p.input(),
            (None, Some(p)) => p.clone(),
            _ => return Err(schema(path, "exactly one of `preset` and `phase` is required")),
        };
        if !(l.thickness.is_finite() && l.thickness >= 0.0) {
            return Err(invalid(format!("{path}.thickness"), format!("thickness must be finite and >= 0 (got {})", l.thickness)));
        }
        let coeffs = derive_coefficients(&input).map_err(|e| invalid(format!("{path}.phase"), e))?;
        layers.push(LayerSpec { medium: Medium::Isotropic(coeffs), thickness: l.thickness });
    }
    let cell = CellSpec::new(layers).map_err(|e| invalid("cell", e))?;

    let s = &raw.sweep;
    if s.omega.is_empty() {
        return Err(schema("sweep.omega", "at least one segment is required"));
    }
    let mut omegas = Vec::new();
    for (i, seg) in s.omega.iter().enumerate() {
        let path = format!("sweep.omega[{i}]");
        if seg.points == 0 {
            return Err(schema(format!("{path}.points"), "at least one point is required"));
        }
        if !(seg.start.is_finite() && seg.stop.is_finite() && seg.start >= 0.0 && seg.stop >= seg.start) {
            return Err(invalid(path, "need finite 0 <= start <= stop"));
        }
        if seg.spacing == Spacing::Log && seg.start <= 0.0 {
            return Err(invalid(format!("{path}.start"), "log spacing needs start > 0"));
        }
        omegas.extend(seg.values());
    }
    omegas.sort_by(f64::total_cmp);
    omegas.dedup();

    let precision: PrecisionMode = raw.precision.parse().map_err(|e| invalid("precision", e))?;
    for (i, &d) in s.deltas.iter().enumerate() {
        CouplingFactor::new(d).map_err(|e| invalid(format!("sweep.deltas[{i}]"), e))?;
    }
    let mut deltas_sorted = s.deltas.clone();
    deltas_sorted.sort_by(f64::total_cmp);
    if deltas_sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("sweep.deltas", "duplicate coupling factor"));
    }
    if !(s.reciprocity_tolerance > 0.0) {
        return Err(invalid("sweep.reciprocity_tolerance", "must be positive"));
    }
    if !(raw.outputs.k2i_plot_range > 0.0 && raw.outputs.k2i_plot_range.is_finite()) {
        return Err(invalid("outputs.k2i_plot_range", "must be positive"));
    }
    let sweep = SweepConfig {
        omegas,
        k1_star: s.k1_star,
        deltas: s.deltas.clone(),
        precision,
        thresholds: Thresholds { eps_band: s.eps_band, ..Thresholds::default() },
        qr_cross_check: s.qr_cross_check,
        reciprocity_tolerance: s.reciprocity_tolerance,
        seed: raw.seed,
    };
    sweep.validate().map_err(|e| invalid("sweep", e))?;
    let out_dir = if raw.outputs.dir.is_absolute() { raw.outputs.dir.clone() } else { base.join(&raw.outputs.dir) };
    Ok(ResolvedConfig { raw, cell, sweep, out_dir })
}

/// The bundled SOFC bilayer run: two 1 mm layers, δ ∈ {0, 0.5, 1}, k₁* = 0,
/// on a grid coarse enough for a desk-side run.
pub const SOFC_BILAYER_JSON: &str = include_str!("../../configs/sofc_bilayer.json");

pub fn sofc_layers() -> Vec<LayerConfig> {
    [Preset::SofcPhase1, Preset::SofcPhase2]
        .into_iter()
        .map(|p| LayerConfig { preset: Some(p), phase: None, thickness: SOFC_THICKNESS })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ResolvedConfig, ConfigError> {
        parse_config_str(text, Path::new("/tmp"))
    }

    #[test]
    fn bundled_config_is_the_sofc_cell() {
        let cfg = parse(SOFC_BILAYER_JSON).unwrap();
        assert_eq!(cfg.cell.layers().len(), 2);
        assert_eq!(cfg.raw.cell.layers, sofc_layers());
        assert_eq!(cfg.sweep.deltas, vec![0.0, 0.5, 1.0]);
        assert_eq!(cfg.sweep.k1_star, 0.0);
        assert!(cfg.sweep.omegas.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn empty_layers_is_a_schema_error() {
        let err = parse(r#"{"cell": {"layers": []}}"#).unwrap_err();
        assert!(matches!(&err, ConfigError::Schema { path, .. } if path == "cell.layers"), "{err}");
        assert!(err.to_string().starts_with("cell.layers: at least one"));
    }

    #[test]
    fn poisson_half_cites_plane_strain() {
        let mut phase = serde_json::to_value(PhaseInput::sofc_phase1()).unwrap();
        phase["nu"] = serde_json::json!(0.5);
        let text = serde_json::json!({"cell": {"layers": [{"phase": phase, "thickness": 1e-3}]}}).to_string();
        let err = parse(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { .. }));
        assert!(err.to_string().contains("plane-strain"), "{err}");
        assert!(err.to_string().starts_with("cell.layers[0].phase"));
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let err = parse(r#"{"cell": {"layers": [{"preset": "sofc_phase1", "thickness": 1e-3, "colour": 1}]}}"#).unwrap_err();
        match err {
            ConfigError::Schema { path, message } => {
                assert!(path.starts_with("cell.layers[0]"), "{path}");
                assert!(message.contains("colour"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse("{\n  \"cell\": [,\n}").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn defaults_are_applied() {
        let cfg = parse(r#"{"cell": {"layers": [{"preset": "sofc_phase1", "thickness": 1e-3}]}}"#).unwrap();
        assert_eq!(cfg.sweep.precision, PrecisionMode::Auto);
        assert_eq!(cfg.sweep.thresholds.eps_band, 1e-6);
        assert_eq!(cfg.sweep.omegas.len(), 61 + 4000);
        assert_eq!(cfg.out_dir, Path::new("/tmp/out"));
    }

    #[test]
    fn grid_segments() {
        let seg = OmegaSegment { spacing: Spacing::Log, start: 1.0, stop: 1e3, points: 4 };
        let v = seg.values();
        assert_eq!(v[0], 1.0);
        assert_eq!(v[3], 1e3);
        assert!((v[1] - 10.0).abs() < 1e-12);
        let lin = OmegaSegment { spacing: Spacing::Linear, start: 0.0, stop: 1.0, points: 1 };
        assert_eq!(lin.values(), vec![0.0]);
    }

    #[test]
    fn bad_precision_and_delta() {
        let base = r#"{"cell": {"layers": [{"preset": "sofc_phase1", "thickness": 1e-3}]}, "#;
        assert!(
            matches!(parse(&format!(r#"{base}"precision": "fp8"}}"#)), Err(ConfigError::Invalid { path, .. }) if path == "precision")
        );
        assert!(
            matches!(parse(&format!(r#"{base}"sweep": {{"deltas": [-1]}}}}"#)), Err(ConfigError::Invalid { path, .. }) if path == "sweep.deltas[0]")
        );
    }
}
