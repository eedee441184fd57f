//! CSV tables and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::spectrum::{BandKind, BandReport, Classification, PointFlags, SpectrumPoint, WideComplex, WideReal};

pub const SPECTRUM_COLUMNS: [&str; 10] =
    ["omega_star", "delta", "k1_star", "branch", "lambda_re", "lambda_im", "k2r_star", "k2i_star", "family", "flags"];

pub const BAND_COLUMNS: [&str; 8] =
    ["family", "delta", "band_index", "kind", "omega_lo_star", "omega_hi_star", "width_star", "mean_star"];

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// The CSV projection of a [`SpectrumPoint`] (no eigenvector).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow {
    pub omega_star: f64,
    pub delta: f64,
    pub k1_star: f64,
    pub branch: u8,
    pub lambda: WideComplex,
    pub k2r_star: f64,
    pub k2i_star: f64,
    pub classification: Classification,
    pub flags: PointFlags,
}

impl From<&SpectrumPoint> for SpectrumRow {
    fn from(p: &SpectrumPoint) -> Self {
        Self {
            omega_star: p.omega_star,
            delta: p.delta,
            k1_star: p.k1_star,
            branch: p.branch,
            lambda: p.lambda,
            k2r_star: p.k2r_star,
            k2i_star: p.k2i_star,
            classification: p.classification,
            flags: p.flags,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("header mismatch: expected {expected:?}, got {got:?}")]
    Header { expected: Vec<String>, got: Vec<String> },
    #[error("row {row}, column {column}: {message}")]
    Field { row: usize, column: &'static str, message: String },
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().map_err(|e| io::Error::other(e.to_string())).expect("in-memory CSV writer")
}

pub fn spectrum_csv<'a>(rows: impl IntoIterator<Item = &'a SpectrumPoint>) -> Vec<u8> {
    let mut w = writer();
    w.write_record(SPECTRUM_COLUMNS).expect("in-memory CSV writer");
    for p in rows {
        let r = SpectrumRow::from(p);
        w.write_record([
            fmt_f64(r.omega_star),
            fmt_f64(r.delta),
            fmt_f64(r.k1_star),
            r.branch.to_string(),
            r.lambda.re.to_string(),
            r.lambda.im.to_string(),
            fmt_f64(r.k2r_star),
            fmt_f64(r.k2i_star),
            r.classification.to_string(),
            r.flags.to_string(),
        ])
        .expect("in-memory CSV writer");
    }
    finish(w)
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), CsvError> {
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(CsvError::Header { expected: expected.iter().map(|s| s.to_string()).collect(), got });
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, row: usize, idx: usize, columns: &[&'static str]) -> Result<T, CsvError>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(idx).unwrap_or("");
    raw.parse().map_err(|e: T::Err| CsvError::Field { row, column: columns[idx], message: format!("`{raw}`: {e}") })
}

pub fn parse_spectrum_csv(bytes: &[u8]) -> Result<Vec<SpectrumRow>, CsvError> {
    let mut rdr = csv::Reader::from_reader(bytes);
    check_header(&mut rdr, &SPECTRUM_COLUMNS)?;
    let c = &SPECTRUM_COLUMNS;
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            Ok(SpectrumRow {
                omega_star: field(&rec, i, 0, c)?,
                delta: field(&rec, i, 1, c)?,
                k1_star: field(&rec, i, 2, c)?,
                branch: field(&rec, i, 3, c)?,
                lambda: WideComplex { re: field::<WideReal>(&rec, i, 4, c)?, im: field::<WideReal>(&rec, i, 5, c)? },
                k2r_star: field(&rec, i, 6, c)?,
                k2i_star: field(&rec, i, 7, c)?,
                classification: field(&rec, i, 8, c)?,
                flags: field(&rec, i, 9, c)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandRow {
    pub family: String,
    pub delta: f64,
    pub band_index: usize,
    pub kind: String,
    pub omega_lo_star: f64,
    pub omega_hi_star: f64,
    pub width_star: f64,
    pub mean_star: f64,
}

pub fn band_rows(reports: &[BandReport]) -> Vec<BandRow> {
    reports
        .iter()
        .flat_map(|r| {
            r.intervals.iter().map(move |b| BandRow {
                family: r.family.to_string(),
                delta: r.delta,
                band_index: b.index,
                kind: b.kind.as_str().to_string(),
                omega_lo_star: b.lo,
                omega_hi_star: b.hi,
                width_star: b.width(),
                mean_star: b.mean(),
            })
        })
        .collect()
}

pub fn band_csv(rows: &[BandRow]) -> Vec<u8> {
    let mut w = writer();
    w.write_record(BAND_COLUMNS).expect("in-memory CSV writer");
    for r in rows {
        w.write_record([
            r.family.clone(),
            fmt_f64(r.delta),
            r.band_index.to_string(),
            r.kind.clone(),
            fmt_f64(r.omega_lo_star),
            fmt_f64(r.omega_hi_star),
            fmt_f64(r.width_star),
            fmt_f64(r.mean_star),
        ])
        .expect("in-memory CSV writer");
    }
    finish(w)
}

pub fn parse_band_csv(bytes: &[u8]) -> Result<Vec<BandRow>, CsvError> {
    let mut rdr = csv::Reader::from_reader(bytes);
    check_header(&mut rdr, &BAND_COLUMNS)?;
    let c = &BAND_COLUMNS;
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let kind: String = field(&rec, i, 3, c)?;
            if kind != BandKind::Pass.as_str() && kind != BandKind::Gap.as_str() {
                return Err(CsvError::Field { row: i, column: "kind", message: format!("`{kind}` is not pass|gap") });
            }
            Ok(BandRow {
                family: field(&rec, i, 0, c)?,
                delta: field(&rec, i, 1, c)?,
                band_index: field(&rec, i, 2, c)?,
                kind,
                omega_lo_star: field(&rec, i, 4, c)?,
                omega_hi_star: field(&rec, i, 5, c)?,
                width_star: field(&rec, i, 6, c)?,
                mean_star: field(&rec, i, 7, c)?,
            })
        })
        .collect()
}

/// File name of the spectrum table for one coupling factor.
pub fn spectrum_file_name(delta: f64) -> String {
    format!("spectrum_delta_{delta}.csv")
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FailureEntry {
    /// Absent for failures not tied to one grid point.
    pub omega_star: Option<f64>,
    pub delta: Option<f64>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantSummary {
    /// Worst log2 |det T − 1| over solved points.
    pub max_log2_det_residual: Option<f64>,
    /// Worst log2 reciprocity residual of the QR multipliers.
    pub max_log2_reciprocity: Option<f64>,
    pub reciprocity_violations: usize,
    /// log2 of the largest k₂-spread seen in the pre-sweep probes.
    pub max_log2_k2_spread: Option<f64>,
    pub k2_dependence_failures: Vec<String>,
    pub under_resolved_bands: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub sweep_seconds: f64,
    pub band_seconds: f64,
    pub point_seconds_max: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the config file bytes.
    pub config_sha256: String,
    /// Config with every default filled in.
    pub config: serde_json::Value,
    pub precision_mode: String,
    /// Number of points solved at each precision level (double, dd, qd, mp).
    pub precision_levels: BTreeMap<String, usize>,
    /// Smallest and largest MPFR significand used, in bits.
    pub mp_bits_range: Option<[u32; 2]>,
    pub escalated_points: usize,
    pub grid_points: usize,
    pub rows_written: usize,
    pub outputs: Vec<String>,
    pub failures: Vec<FailureEntry>,
    pub invariants: InvariantSummary,
    pub timings: Timings,
    pub exit_code: i32,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Complex;

    fn point(omega: f64, lambda: (f64, f64)) -> SpectrumPoint {
        let mut flags = PointFlags::empty();
        flags.insert(PointFlags::ESCALATED);
        SpectrumPoint {
            omega_star: omega,
            delta: 0.5,
            k1_star: 0.0,
            branch: 3,
            lambda: WideComplex::from_c64(Complex::new(lambda.0, lambda.1)),
            k2r_star: 0.1 + omega,
            k2i_star: -1.0 / 3.0,
            classification: Classification::CompressionalEvanescent,
            flags,
            vector: std::array::from_fn(|_| Complex::new(0.0, 0.0)),
        }
    }

    #[test]
    fn spectrum_csv_round_trips() {
        let pts = vec![point(1.0, (0.3, -1e-310)), point(2.5e6, (-1.0, 0.0))];
        let bytes = spectrum_csv(&pts);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("omega_star,delta,k1_star,branch,lambda_re,lambda_im,k2r_star,k2i_star,family,flags\n"));
        assert!(text.contains("compressional-evanescent,escalated"));
        let rows = parse_spectrum_csv(&bytes).unwrap();
        assert_eq!(rows, pts.iter().map(SpectrumRow::from).collect::<Vec<_>>());
    }

    #[test]
    fn header_is_checked() {
        assert!(matches!(parse_spectrum_csv(b"a,b\n1,2\n"), Err(CsvError::Header { .. })));
    }

    #[test]
    fn band_csv_round_trips() {
        let rows = vec![BandRow {
            family: "shear".into(),
            delta: 1.0,
            band_index: 2,
            kind: "gap".into(),
            omega_lo_star: 3.5e6,
            omega_hi_star: 3.9e6,
            width_star: 0.4e6,
            mean_star: 3.7e6,
        }];
        assert_eq!(parse_band_csv(&band_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn file_names() {
        assert_eq!(spectrum_file_name(0.0), "spectrum_delta_0.csv");
        assert_eq!(spectrum_file_name(0.5), "spectrum_delta_0.5.csv");
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
