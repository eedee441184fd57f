//! Band-diagram plots as hand-emitted SVG.
//!
//! Output depends only on the rows and the style, never on the clock or on
//! hash-map order, so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use super::output::{BandRow, SpectrumRow};
use crate::spectrum::Family;

/// Bumped whenever the emitted geometry changes.
pub const STYLE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct SvgStyle {
    pub width: f64,
    pub height: f64,
    pub margin_left: f64,
    pub margin_right: f64,
    pub margin_top: f64,
    pub margin_bottom: f64,
    pub marker: f64,
    /// Colors cycled over δ values.
    pub palette: Vec<&'static str>,
    /// Half-height of the k2i* panel.
    pub k2i_range: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self {
            width: 720.0,
            height: 540.0,
            margin_left: 90.0,
            margin_right: 190.0,
            margin_top: 40.0,
            margin_bottom: 60.0,
            marker: 2.2,
            palette: vec!["#d62728", "#2ca02c", "#1f77b4", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"],
            k2i_range: 5.0,
        }
    }
}

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if (1e-2..1e4).contains(&a) {
        let s = format!("{x:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        let s = format!("{x:.2e}");
        let (m, e) = s.split_once('e').unwrap_or((&s, "0"));
        format!("{}e{e}", m.trim_end_matches('0').trim_end_matches('.'))
    }
}

/// Round-number ticks covering [lo, hi].
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn new(style: &SvgStyle, x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let ((x0, x1), (y0, y1)) = (pad(x), pad(y));
        Self {
            x0,
            x1,
            y0,
            y1,
            left: style.margin_left,
            right: style.width - style.margin_right,
            top: style.margin_top,
            bottom: style.height - style.margin_bottom,
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * (self.right - self.left)
    }

    fn py(&self, y: f64) -> f64 {
        self.bottom - (y - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

struct Doc {
    out: String,
}

impl Doc {
    fn new(style: &SvgStyle, title: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = num(style.width),
            h = num(style.height)
        );
        let _ = writeln!(out, "<!-- laminate-bloch plot style v{STYLE_VERSION} -->");
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            num(style.width / 2.0),
            escape(title)
        );
        Self { out }
    }

    fn axes(&mut self, f: &Frame, xlabel: &str, ylabel: &str) {
        let o = &mut self.out;
        let _ = writeln!(
            o,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            num(f.left),
            num(f.top),
            num(f.right - f.left),
            num(f.bottom - f.top)
        );
        for t in ticks(f.x0, f.x1, 6) {
            let x = num(f.px(t));
            let _ =
                writeln!(o, r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black"/>"#, num(f.bottom), num(f.bottom + 5.0));
            let _ = writeln!(o, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, num(f.bottom + 18.0), tick_label(t));
        }
        for t in ticks(f.y0, f.y1, 6) {
            let y = num(f.py(t));
            let _ = writeln!(o, r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="black"/>"#, num(f.left - 5.0), num(f.left));
            let _ = writeln!(o, r#"<text x="{}" y="{y}" text-anchor="end" dy="4">{}</text>"#, num(f.left - 8.0), tick_label(t));
        }
        let _ = writeln!(
            o,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num((f.left + f.right) / 2.0),
            num(f.bottom + 42.0),
            escape(xlabel)
        );
        let (lx, ly) = (num(f.left - 70.0), num((f.top + f.bottom) / 2.0));
        let _ = writeln!(
            o,
            r#"<text x="{lx}" y="{ly}" text-anchor="middle" transform="rotate(-90 {lx} {ly})">{}</text>"#,
            escape(ylabel)
        );
    }

    fn vline(&mut self, f: &Frame, x: f64, label: &str) {
        let px = num(f.px(x));
        let _ = writeln!(
            self.out,
            r#"<line x1="{px}" y1="{}" x2="{px}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#,
            num(f.top),
            num(f.bottom)
        );
        let _ = writeln!(self.out, r#"<text x="{px}" y="{}" text-anchor="middle" fill="gray">{label}</text>"#, num(f.top - 4.0));
    }

    fn marker(&mut self, family: Family, x: f64, y: f64, r: f64, color: &str) {
        let (x, y) = (x, y);
        let o = &mut self.out;
        let _ = match family {
            Family::Shear => writeln!(o, r#"<circle cx="{}" cy="{}" r="{}" fill="{color}"/>"#, num(x), num(y), num(r)),
            Family::Compressional => writeln!(
                o,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{color}"/>"#,
                num(x - r),
                num(y - r),
                num(2.0 * r),
                num(2.0 * r)
            ),
            Family::Thermal => writeln!(
                o,
                r#"<polygon points="{},{} {},{} {},{}" fill="{color}"/>"#,
                num(x),
                num(y - r * 1.2),
                num(x - r * 1.1),
                num(y + r * 0.8),
                num(x + r * 1.1),
                num(y + r * 0.8)
            ),
            Family::Diffusive => writeln!(
                o,
                r#"<polygon points="{},{} {},{} {},{} {},{}" fill="{color}"/>"#,
                num(x),
                num(y - r * 1.3),
                num(x + r * 1.3),
                num(y),
                num(x),
                num(y + r * 1.3),
                num(x - r * 1.3),
                num(y)
            ),
            Family::Mixed => writeln!(
                o,
                r#"<path d="M{} {}L{} {}M{} {}L{} {}" stroke="{color}" stroke-width="1"/>"#,
                num(x - r),
                num(y - r),
                num(x + r),
                num(y + r),
                num(x - r),
                num(y + r),
                num(x + r),
                num(y - r)
            ),
        };
    }

    fn legend(&mut self, style: &SvgStyle, entries: &[(String, Family, &str)]) {
        let x = style.width - style.margin_right + 16.0;
        for (i, (label, family, color)) in entries.iter().enumerate() {
            let y = style.margin_top + 10.0 + 18.0 * i as f64;
            self.marker(*family, x, y, 4.0, color);
            let _ = writeln!(self.out, r#"<text x="{}" y="{}" dy="4">{}</text>"#, num(x + 10.0), num(y), escape(label));
        }
    }

    fn note(&mut self, f: &Frame, text: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{}" y="{}" text-anchor="middle" fill="gray" font-size="16">{}</text>"#,
            num((f.left + f.right) / 2.0),
            num((f.top + f.bottom) / 2.0),
            escape(text)
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// δ values in first-appearance order, mapped to palette colors.
fn delta_colors<'a>(rows: &[SpectrumRow], style: &'a SvgStyle, deltas: &[f64]) -> Vec<(f64, &'a str)> {
    let mut ds: Vec<f64> = deltas.to_vec();
    for r in rows {
        if !ds.contains(&r.delta) {
            ds.push(r.delta);
        }
    }
    ds.iter().enumerate().map(|(i, d)| (*d, style.palette[i % style.palette.len()])).collect()
}

fn scatter(
    rows: &[SpectrumRow],
    deltas: &[f64],
    style: &SvgStyle,
    title: &str,
    xlabel: &str,
    x_of: impl Fn(&SpectrumRow) -> f64,
    xrange: (f64, f64),
    zone_edges: bool,
) -> String {
    let kept: Vec<&SpectrumRow> = rows
        .iter()
        .filter(|r| {
            let x = x_of(r);
            x >= xrange.0 && x <= xrange.1 && r.omega_star.is_finite()
        })
        .collect();
    let ymax = kept.iter().map(|r| r.omega_star).fold(f64::NEG_INFINITY, f64::max);
    let ymin = kept.iter().map(|r| r.omega_star).fold(f64::INFINITY, f64::min);
    let yr = if kept.is_empty() { (0.0, 1.0) } else { (ymin.min(0.0), ymax) };
    let f = Frame::new(style, xrange, yr);
    let mut doc = Doc::new(style, title);
    doc.axes(&f, xlabel, "ω*");
    if zone_edges {
        doc.vline(&f, -PI, "−π");
        doc.vline(&f, PI, "π");
    }
    if kept.is_empty() {
        doc.note(&f, "no points");
        return doc.finish();
    }
    let colors = delta_colors(rows, style, deltas);
    // One group per (δ, family), in a fixed order.
    let mut series: BTreeMap<(usize, Family), Vec<&SpectrumRow>> = BTreeMap::new();
    for r in &kept {
        let di = colors.iter().position(|(d, _)| *d == r.delta).unwrap_or(0);
        series.entry((di, r.classification.family())).or_default().push(r);
    }
    let mut legend = Vec::new();
    for ((di, fam), pts) in &series {
        let (delta, color) = colors[*di];
        let _ = writeln!(doc.out, r#"<g id="delta-{delta}-{fam}">"#);
        for r in pts {
            let (x, y) = (x_of(r), r.omega_star);
            if f.contains(x, y) {
                doc.marker(*fam, f.px(x), f.py(y), style.marker, color);
            }
        }
        doc.out.push_str("</g>\n");
        legend.push((format!("δ={delta} {fam}"), *fam, color));
    }
    doc.legend(style, &legend);
    doc.finish()
}

/// k2r*–ω* plane for points with |k2i*| ≤ 1, zone edges ±π drawn.
pub fn spectrum_k2r_svg(rows: &[SpectrumRow], deltas: &[f64], style: &SvgStyle) -> String {
    let kept: Vec<SpectrumRow> = rows.iter().filter(|r| r.k2i_star.abs() <= 1.0).cloned().collect();
    scatter(&kept, deltas, style, "Real wavenumber, |k2i*| ≤ 1", "k2r*", |r| r.k2r_star, (-PI * 1.08, PI * 1.08), true)
}

/// k2i*–ω* plane, clipped to |k2i*| ≤ `style.k2i_range`.
pub fn spectrum_k2i_svg(rows: &[SpectrumRow], deltas: &[f64], style: &SvgStyle) -> String {
    let r = style.k2i_range;
    scatter(
        rows,
        deltas,
        style,
        &format!("Imaginary wavenumber, |k2i*| ≤ {}", tick_label(r)),
        "k2i*",
        |p| p.k2i_star,
        (-r, r),
        false,
    )
}

/// First pass-band and first band-gap widths against δ, one line per family.
pub fn bands_vs_delta_svg(rows: &[BandRow], style: &SvgStyle) -> String {
    // (family, kind) -> [(δ, width)] for band_index 1.
    let mut series: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.band_index == 1) {
        series.entry((r.family.clone(), r.kind.clone())).or_default().push((r.delta, r.width_star));
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let all: Vec<(f64, f64)> = series.values().flatten().copied().collect();
    let xr = (all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min), all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max));
    let ymax = all.iter().map(|p| p.1).fold(0.0, f64::max);
    let f = if all.is_empty() { Frame::new(style, (0.0, 1.0), (0.0, 1.0)) } else { Frame::new(style, xr, (0.0, ymax * 1.05)) };
    let mut doc = Doc::new(style, "First pass band A*p and first band gap A*b");
    doc.axes(&f, "δ", "width in ω*");
    if all.is_empty() {
        doc.note(&f, "no points");
        return doc.finish();
    }
    let mut legend = Vec::new();
    for (i, ((family, kind), pts)) in series.iter().enumerate() {
        let color = style.palette[i % style.palette.len()];
        let fam: Family = family.parse().unwrap_or(Family::Mixed);
        let dash = if kind == "gap" { r#" stroke-dasharray="6 3""# } else { "" };
        let path: Vec<String> = pts.iter().map(|(d, w)| format!("{},{}", num(f.px(*d)), num(f.py(*w)))).collect();
        let _ = writeln!(doc.out, r#"<g id="{family}-{kind}">"#);
        let _ =
            writeln!(doc.out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, path.join(" "));
        for (d, w) in pts {
            doc.marker(fam, f.px(*d), f.py(*w), 3.5, color);
        }
        doc.out.push_str("</g>\n");
        let label = if kind == "gap" { "A*b" } else { "A*p" };
        legend.push((format!("{family} {label}"), fam, color));
    }
    doc.legend(style, &legend);
    doc.finish()
}
