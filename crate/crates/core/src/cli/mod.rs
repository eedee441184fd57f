//! Batch front end: `laminate-bloch run <config>`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure (a point
//! failed or an invariant check tripped), 4 I/O error.

pub mod config;
pub mod output;
pub mod svg;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::materials::CouplingFactor;
use crate::numerics::{faddeev_leverrier, CMatrix, Complex, Precision, PrecisionMode, PrecisionTask, QuadDouble, Real, C64};
use crate::spectrum::{band_report, solve_floquet, sweep, BandReport, SolveOptions, SpectrumError, SpectrumTable};
use crate::transfer::{check_k2_independence, plan_precision, CellSpec, TransferError};

pub use config::{parse_config, parse_config_str, ConfigError, ResolvedConfig, RunConfig};
pub use output::RunManifest;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Config = 2,
    Numeric = 3,
    Io = 4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

impl CliError {
    pub fn exit_status(&self) -> ExitStatus {
        match self {
            CliError::Config(_) => ExitStatus::Config,
            CliError::Io { .. } => ExitStatus::Io,
            CliError::Spectrum(SpectrumError::InvalidConfig(_)) => ExitStatus::Config,
            CliError::Spectrum(_) => ExitStatus::Numeric,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Parser)]
#[command(name = "laminate-bloch", version, about = "Complex Floquet-Bloch spectra of periodic thermodiffusive laminates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sweep, band reports and plots described by a JSON config.
    Run(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Path of the JSON run configuration.
    pub config: PathBuf,
    /// Working precision: double, dd, qd, mp:<bits> or auto. Overrides the config.
    #[arg(long)]
    pub precision: Option<String>,
    /// Output directory. Overrides the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the SVG plots.
    #[arg(long)]
    pub plots: bool,
    /// Run the invariant suite only, without the sweep.
    #[arg(long)]
    pub check: bool,
    /// Seed of the randomized self-tests and inverse-iteration starts.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::Config as i32 } else { ExitStatus::Success as i32 };
        }
    };
    match cli.command {
        Command::Run(args) => match execute(&args) {
            Ok(outcome) => {
                for line in &outcome.messages {
                    println!("{line}");
                }
                outcome.status as i32
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_status() as i32
            }
        },
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub status: ExitStatus,
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub messages: Vec<String>,
}

/// Loads the config, applies flag overrides, and runs the sweep or the check suite.
pub fn execute(args: &RunArgs) -> Result<Outcome, CliError> {
    let bytes = std::fs::read(&args.config)
        .map_err(|e| CliError::Config(ConfigError::Read { path: args.config.display().to_string(), message: e.to_string() }))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| CliError::Config(ConfigError::Read { path: args.config.display().to_string(), message: e.to_string() }))?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let mut cfg = parse_config_str(&text, base)?;
    apply_overrides(&mut cfg, args)?;
    let hash = output::sha256_hex(&bytes);
    if args.check {
        run_checks(&cfg, &hash)
    } else {
        run(&cfg, &hash)
    }
}

fn apply_overrides(cfg: &mut ResolvedConfig, args: &RunArgs) -> Result<(), CliError> {
    if let Some(p) = &args.precision {
        let mode: PrecisionMode =
            p.parse().map_err(|e| ConfigError::Invalid { path: "--precision".into(), message: format!("{e}") })?;
        cfg.sweep.precision = mode;
        cfg.raw.precision = mode.to_string();
    }
    if let Some(seed) = args.seed {
        cfg.sweep.seed = seed;
        cfg.raw.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
        cfg.raw.outputs.dir = out.clone();
    }
    if args.plots {
        cfg.raw.outputs.plots = true;
    }
    Ok(())
}

fn base_manifest(cfg: &ResolvedConfig, hash: &str) -> RunManifest {
    RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: hash.into(),
        config: serde_json::to_value(&cfg.raw).unwrap_or(serde_json::Value::Null),
        precision_mode: cfg.sweep.precision.to_string(),
        grid_points: cfg.sweep.omegas.len() * cfg.sweep.deltas.len(),
        ..Default::default()
    }
}

/// Creates the output directory and proves it writable before any compute.
fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let probe = dir.join(".laminate-bloch-write-probe");
    std::fs::write(&probe, b"").map_err(io_err(&probe))?;
    std::fs::remove_file(&probe).map_err(io_err(&probe))?;
    Ok(())
}

/// Writes every file or none: each goes to a temporary name first, and
/// already-renamed files are removed if a later one fails.
fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    let mut staged = Vec::new();
    let cleanup = |staged: &[PathBuf]| {
        for p in staged {
            let _ = std::fs::remove_file(p);
        }
    };
    for (name, bytes) in files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = std::fs::write(&tmp, bytes) {
            let _ = std::fs::remove_file(&tmp);
            cleanup(&staged);
            return Err(CliError::Io { path: tmp, source: e });
        }
        staged.push(tmp);
    }
    let mut done = Vec::new();
    for ((name, _), tmp) in files.iter().zip(&staged) {
        let dest = dir.join(name);
        if let Err(e) = std::fs::rename(tmp, &dest) {
            cleanup(&staged);
            cleanup(&done);
            return Err(CliError::Io { path: dest, source: e });
        }
        done.push(dest);
    }
    Ok(())
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(io_err(&path))
}

struct K2Probe<'a> {
    cell: &'a CellSpec,
    k1: f64,
    omega: f64,
}

impl PrecisionTask for K2Probe<'_> {
    type Output = Result<f64, TransferError>;

    fn run<R: Real>(self) -> Self::Output {
        check_k2_independence::<R>(self.cell, &Complex::from_f64(self.k1, 0.0), &Complex::from_f64(self.omega, 0.0))
    }
}

/// Up to `n` positive grid frequencies spread evenly in log scale.
fn sample_omegas(omegas: &[f64], n: usize) -> Vec<f64> {
    let pos: Vec<f64> = omegas.iter().copied().filter(|w| *w > 0.0).collect();
    if pos.len() <= n {
        return pos;
    }
    let mut out: Vec<f64> = (0..n).map(|i| pos[i * (pos.len() - 1) / (n - 1)]).collect();
    out.dedup();
    out
}

/// T must not depend on k₂; probed at a few grid frequencies per δ.
fn k2_probes(cfg: &ResolvedConfig, inv: &mut output::InvariantSummary) {
    let k1 = cfg.sweep.k1_star / cfg.cell.period();
    for &delta in &cfg.sweep.deltas {
        let Ok(c) = CouplingFactor::new(delta) else { continue };
        let cell = cfg.cell.with_coupling(c);
        for w in sample_omegas(&cfg.sweep.omegas, 3) {
            let result = plan_precision(cfg.sweep.precision, &cell, Complex::new(k1, 0.0), Complex::new(w, 0.0))
                .and_then(|p| p.dispatch(K2Probe { cell: &cell, k1, omega: w }));
            match result {
                Ok(spread) => {
                    inv.max_log2_k2_spread = Some(inv.max_log2_k2_spread.map_or(spread, |m: f64| m.max(spread)));
                }
                Err(e) => inv.k2_dependence_failures.push(format!("delta={delta} omega_star={w}: {e}")),
            }
        }
    }
}

pub fn run(cfg: &ResolvedConfig, hash: &str) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let dir = cfg.out_dir.clone();
    prepare_out_dir(&dir)?;
    let mut manifest = base_manifest(cfg, hash);
    let mut messages = Vec::new();

    k2_probes(cfg, &mut manifest.invariants);

    let t_sweep = Instant::now();
    let table = sweep(&cfg.cell, &cfg.sweep)?;
    manifest.timings.sweep_seconds = t_sweep.elapsed().as_secs_f64();
    summarize_table(&table, &mut manifest);

    let t_bands = Instant::now();
    let mut reports: Vec<BandReport> = Vec::new();
    for &delta in &cfg.sweep.deltas {
        for &family in &cfg.raw.outputs.band_families {
            match band_report(&cfg.cell, &cfg.sweep, &table, delta, family) {
                Ok(r) => {
                    if r.under_resolved() {
                        manifest.invariants.under_resolved_bands.push(format!("{family} delta={delta}"));
                    }
                    reports.push(r);
                }
                Err(e) => manifest.failures.push(output::FailureEntry {
                    omega_star: None,
                    delta: Some(delta),
                    message: format!("band report for {family}: {e}"),
                }),
            }
        }
    }
    manifest.timings.band_seconds = t_bands.elapsed().as_secs_f64();

    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for &delta in &cfg.sweep.deltas {
        files.push((output::spectrum_file_name(delta), output::spectrum_csv(table.for_delta(delta))));
    }
    let band_rows = output::band_rows(&reports);
    files.push(("bands.csv".into(), output::band_csv(&band_rows)));
    if cfg.raw.outputs.plots {
        // Plots are drawn from the re-parsed CSV so they show exactly what was written.
        let mut rows = Vec::new();
        for (_, bytes) in files.iter().filter(|(n, _)| n.starts_with("spectrum_")) {
            rows.extend(output::parse_spectrum_csv(bytes).expect("own CSV parses"));
        }
        let bands = output::parse_band_csv(&files.last().expect("bands.csv").1).expect("own CSV parses");
        let style = svg::SvgStyle { k2i_range: cfg.raw.outputs.k2i_plot_range, ..Default::default() };
        files.push(("spectrum_k2r.svg".into(), svg::spectrum_k2r_svg(&rows, &cfg.sweep.deltas, &style).into_bytes()));
        files.push(("spectrum_k2i.svg".into(), svg::spectrum_k2i_svg(&rows, &cfg.sweep.deltas, &style).into_bytes()));
        files.push(("bands_vs_delta.svg".into(), svg::bands_vs_delta_svg(&bands, &style).into_bytes()));
    }
    write_all(&dir, &files)?;
    manifest.outputs = files.iter().map(|(n, _)| n.clone()).collect();
    manifest.outputs.push("manifest.json".into());

    let numeric_trouble = !manifest.failures.is_empty()
        || manifest.invariants.reciprocity_violations > 0
        || !manifest.invariants.k2_dependence_failures.is_empty();
    let status = if numeric_trouble { ExitStatus::Numeric } else { ExitStatus::Success };
    manifest.exit_code = status as i32;
    manifest.timings.total_seconds = start.elapsed().as_secs_f64();
    write_manifest(&dir, &manifest)?;

    messages.push(format!(
        "{} rows, {} failed points, {} files in {}",
        manifest.rows_written,
        manifest.failures.len(),
        manifest.outputs.len(),
        dir.display()
    ));
    Ok(Outcome { status, out_dir: dir, manifest, messages })
}

fn summarize_table(table: &SpectrumTable, m: &mut RunManifest) {
    m.rows_written = table.points.len();
    for d in &table.diagnostics {
        let level = match d.precision {
            Precision::Multi(bits) => {
                let [lo, hi] = m.mp_bits_range.unwrap_or([bits, bits]);
                m.mp_bits_range = Some([lo.min(bits), hi.max(bits)]);
                "mp".to_string()
            }
            p => p.to_string(),
        };
        *m.precision_levels.entry(level).or_default() += 1;
        m.escalated_points += d.escalated as usize;
        let inv = &mut m.invariants;
        inv.max_log2_det_residual =
            Some(inv.max_log2_det_residual.map_or(d.log2_det_residual, |x: f64| x.max(d.log2_det_residual)));
        if let Some(r) = d.log2_reciprocity {
            inv.max_log2_reciprocity = Some(inv.max_log2_reciprocity.map_or(r, |x: f64| x.max(r)));
        }
        m.timings.point_seconds_max = m.timings.point_seconds_max.max(d.seconds);
    }
    m.invariants.reciprocity_violations = table.reciprocity_violations();
    m.failures.extend(table.failures.iter().map(|f| output::FailureEntry {
        omega_star: Some(f.omega_star),
        delta: Some(f.delta),
        message: f.message.clone(),
    }));
}

/// Result of one invariant in `--check` mode.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Invariant suite at a handful of grid frequencies per δ, plus a
/// randomized characteristic-polynomial self-test.
pub fn check_suite(cfg: &ResolvedConfig) -> Vec<CheckLine> {
    let mut lines = Vec::new();
    let k1 = cfg.sweep.k1_star / cfg.cell.period();
    let opts = SolveOptions { qr_cross_check: true, full_charpoly: true, seed: cfg.sweep.seed, ..Default::default() };
    let log2_recip = cfg.sweep.reciprocity_tolerance.log2();
    for &delta in &cfg.sweep.deltas {
        let Ok(c) = CouplingFactor::new(delta) else { continue };
        let cell = cfg.cell.with_coupling(c);
        for w in sample_omegas(&cfg.sweep.omegas, 5) {
            let name = format!("delta={delta} omega_star={w:e}");
            match solve_floquet(&cell, k1, w, cfg.sweep.precision, &opts) {
                Ok(s) => {
                    let cc = s.cross_check.as_ref().expect("cross-check requested");
                    let pal = s.log2_palindromic_residual().unwrap_or(f64::INFINITY);
                    let pass =
                        cc.log2_reciprocity <= log2_recip && pal <= (1e-12f64).log2() && cc.log2_hausdorff <= (1e-10f64).log2();
                    lines.push(CheckLine {
                        name,
                        pass,
                        detail: format!(
                            "{} det 2^{:.0}, reciprocity 2^{:.0}, palindromic 2^{:.0}, qr-vs-quartic 2^{:.0}",
                            s.precision, s.log2_det_residual, cc.log2_reciprocity, pal, cc.log2_hausdorff
                        ),
                    });
                }
                Err(e) => lines.push(CheckLine { name, pass: false, detail: e.to_string() }),
            }
        }
    }
    let mut inv = output::InvariantSummary::default();
    k2_probes(cfg, &mut inv);
    lines.push(CheckLine {
        name: "k2-independence".into(),
        pass: inv.k2_dependence_failures.is_empty(),
        detail: match inv.k2_dependence_failures.first() {
            Some(f) => f.clone(),
            None => format!("max spread 2^{:.0}", inv.max_log2_k2_spread.unwrap_or(f64::NEG_INFINITY)),
        },
    });
    let worst = charpoly_self_test(cfg.sweep.seed, 20);
    lines.push(CheckLine {
        name: "charpoly-self-test".into(),
        pass: worst <= 1e-10,
        detail: format!("20 random 8x8 matrices, worst relative coefficient error {worst:.2e}"),
    });
    lines
}

/// Largest relative coefficient error of the characteristic polynomial of
/// V·diag(λ)·V⁻¹ against the expanded product Π(x − λᵢ).
pub fn charpoly_self_test(seed: u64, count: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let lambdas: Vec<C64> = (0..8).map(|_| Complex::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
        let v = CMatrix::<QuadDouble>::from_fn(8, 8, |i, j| {
            let d = if i == j { 4.0 } else { 0.0 };
            Complex::from_f64(d + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let Ok(vi) = v.inverse() else { continue };
        let d = CMatrix::from_diagonal(&lambdas.iter().map(|l| Complex::from_c64(l.clone())).collect::<Vec<_>>());
        let a = v.matmul(&d).matmul(&vi);
        let got = faddeev_leverrier(&a, false).coeffs;
        // Π(x − λ) in f64 from the highest power down.
        let mut want = vec![Complex::new(1.0, 0.0)];
        for l in &lambdas {
            let mut next = vec![Complex::new(0.0, 0.0); want.len() + 1];
            for (k, c) in want.iter().enumerate() {
                next[k] = &next[k] + c;
                next[k + 1] = &next[k + 1] - &(c * l);
            }
            want = next;
        }
        // want[k] multiplies x^{8−k}; coefficient storage is C_0..C_8 ascending.
        let scale = want.iter().map(|c| c.abs()).fold(0.0, f64::max);
        for (k, w) in want.iter().enumerate() {
            let g = got[8 - k].to_c64();
            worst = worst.max((&g - w).abs() / scale);
        }
    }
    worst
}

pub fn run_checks(cfg: &ResolvedConfig, hash: &str) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let dir = cfg.out_dir.clone();
    prepare_out_dir(&dir)?;
    let mut manifest = base_manifest(cfg, hash);
    manifest.grid_points = 0;
    let lines = check_suite(cfg);
    let failed = lines.iter().filter(|l| !l.pass).count();
    for l in lines.iter().filter(|l| !l.pass) {
        manifest.failures.push(output::FailureEntry { omega_star: None, delta: None, message: l.to_string() });
    }
    let status = if failed == 0 { ExitStatus::Success } else { ExitStatus::Numeric };
    manifest.exit_code = status as i32;
    manifest.outputs = vec!["manifest.json".into()];
    manifest.timings.total_seconds = start.elapsed().as_secs_f64();
    write_manifest(&dir, &manifest)?;
    let mut messages: Vec<String> = lines.iter().map(ToString::to_string).collect();
    messages.push(format!("{} checks, {failed} failed", lines.len()));
    Ok(Outcome { status, out_dir: dir, manifest, messages })
}

/// Precision used at one frequency under `mode`, for reporting.
pub fn planned_precision(cell: &CellSpec, k1_star: f64, omega: f64, mode: PrecisionMode) -> Result<Precision, TransferError> {
    plan_precision(mode, cell, Complex::new(k1_star / cell.period(), 0.0), Complex::new(omega, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charpoly_self_test_passes() {
        assert!(charpoly_self_test(7, 5) < 1e-12);
    }

    #[test]
    fn log_samples() {
        let g = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(sample_omegas(&g, 3), vec![1.0, 3.0, 5.0]);
        assert_eq!(sample_omegas(&g[..3], 5), vec![1.0, 2.0]);
    }

    #[test]
    fn clap_usage_error_is_config_exit() {
        assert_eq!(main_with_args(["laminate-bloch", "run"]), 2);
        assert_eq!(main_with_args(["laminate-bloch", "--version"]), 0);
    }

    #[test]
    fn missing_config_is_config_exit() {
        assert_eq!(main_with_args(["laminate-bloch", "run", "/nonexistent/config.json"]), 2);
    }

    #[test]
    fn atomic_write_leaves_nothing_on_failure() {
        let dir = std::env::temp_dir().join(format!("lb-write-all-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        // A directory occupying the destination name makes the rename fail.
        std::fs::create_dir_all(dir.join("b.csv").join("x")).unwrap();
        let files = vec![("a.csv".to_string(), b"1".to_vec()), ("b.csv".to_string(), b"2".to_vec())];
        assert!(write_all(&dir, &files).is_err());
        assert!(!dir.join("a.csv").exists());
        assert!(!dir.join(".a.csv.tmp").exists());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
