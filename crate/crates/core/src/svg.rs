//! Minimal deterministic SVG 1.1 output: line charts and limit-set plots.

use std::fmt::Write as _;

use rustc_hash::FxHashSet;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;

pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// A shaded band `(x, lo, hi)` drawn under the series.
pub struct Band<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let m = 0.05 * (hi - lo);
    (lo - m, hi + m)
}

pub fn line_chart(title: &str, x_label: &str, series: &[Series], band: Option<&Band>) -> String {
    let xs = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .chain(band.into_iter().flat_map(|b| b.points.iter().map(|p| p.0)));
    let (x0, x1) = extent(xs);
    let ys = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .chain(band.into_iter().flat_map(|b| b.points.iter().flat_map(|p| [p.1, p.2])));
    let (y0, y1) = extent(ys);
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<path d="M{PAD} {PAD} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{fx:.3}</text>"#,
            sx(fx),
            H - PAD + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{fy:.3}</text>"#,
            PAD - 6.0,
            sy(fy) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 14.0,
        escape(x_label)
    );
    if let Some(b) = band {
        if !b.points.is_empty() {
            let mut d = String::new();
            for (i, p) in b.points.iter().enumerate() {
                let _ = write!(d, "{}{:.2} {:.2} ", if i == 0 { "M" } else { "L" }, sx(p.0), sy(p.2));
            }
            for p in b.points.iter().rev() {
                let _ = write!(d, "L{:.2} {:.2} ", sx(p.0), sy(p.1));
            }
            d.push('Z');
            let _ = writeln!(
                out,
                r#"<path d="{d}" fill="{}" fill-opacity="0.25" stroke="none"><title>{}</title></path>"#,
                b.color,
                escape(b.name)
            );
        }
    }
    for (k, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"><title>{}</title></polyline>"#,
            pts.join(" "),
            s.color,
            escape(s.name)
        );
        let ly = PAD + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{ly:.1}" font-family="sans-serif" font-size="12" fill="{}">{}</text>"#,
            W - PAD - 150.0,
            s.color,
            escape(s.name)
        );
    }
    if let Some(b) = band {
        let ly = PAD + 16.0 * series.len() as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{ly:.1}" font-family="sans-serif" font-size="12" fill="{}">{}</text>"#,
            W - PAD - 150.0,
            b.color,
            escape(b.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Stereographic projection from the north pole; the equator goes to the
/// unit circle.
pub fn stereographic(p: &[f64; 3]) -> Option<(f64, f64)> {
    let den = 1.0 - p[2];
    (den > 1e-9).then(|| (p[0] / den, p[1] / den))
}

/// Limit-set points projected stereographically, with the unit circle for
/// reference. Points projecting outside radius 3 are dropped, as are points
/// landing on an already drawn half-pixel.
pub fn limit_set_plot(title: &str, points: &[[f64; 3]]) -> String {
    let size = 520.0;
    let half = size / 2.0;
    let scale = half / 1.6;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(out, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r##"<circle cx="{half}" cy="{half}" r="{scale:.2}" fill="none" stroke="#bbbbbb" stroke-dasharray="4 4"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{half}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        escape(title)
    );
    let mut d = String::new();
    let mut drawn = FxHashSet::default();
    for p in points {
        if let Some((x, y)) = stereographic(p) {
            let cell = ((2.0 * scale * x).round() as i64, (2.0 * scale * y).round() as i64);
            if x * x + y * y <= 9.0 && drawn.insert(cell) {
                let _ = write!(d, "M{:.2} {:.2}h0.6 ", half + scale * x, half - scale * y);
            }
        }
    }
    let _ = writeln!(
        out,
        r##"<path d="{}" stroke="#1f4e9c" stroke-width="1.2" stroke-linecap="round"/>"##,
        d.trim_end()
    );
    out.push_str("</svg>\n");
    out
}
