//! Minimal self-contained SVG line plots for run artifacts.

use std::io::Write;
use std::path::Path;

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    pub color: &'a str,
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 36.0;
const MB: f64 = 50.0;

/// Writes a line plot with linear axes, ticks and a small legend.
pub fn line_plot(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series<'_>],
) -> std::io::Result<()> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let (x0, x1) = pad_range(
        pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = pad_range(
        pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let sx = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )?;
    writeln!(f, r#"<rect width="{W}" height="{H}" fill="white"/>"#)?;
    writeln!(
        f,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        W / 2.0,
        xml_escape(title)
    )?;

    // frame and ticks
    writeln!(
        f,
        r##"<rect x="{ML}" y="{MT}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        W - ML - MR,
        H - MT - MB
    )?;
    for k in 0..=5 {
        let t = k as f64 / 5.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        writeln!(
            f,
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#444"/>"##,
            sx(xv),
            H - MB,
            H - MB + 5.0
        )?;
        writeln!(
            f,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            sx(xv),
            H - MB + 18.0,
            fmt_tick(xv)
        )?;
        writeln!(
            f,
            r##"<line x1="{1}" y1="{0}" x2="{2}" y2="{0}" stroke="#444"/>"##,
            sy(yv),
            ML - 5.0,
            ML
        )?;
        writeln!(
            f,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            ML - 8.0,
            sy(yv) + 4.0,
            fmt_tick(yv)
        )?;
    }
    writeln!(
        f,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        (W + ML - MR) / 2.0,
        H - 12.0,
        xml_escape(x_label)
    )?;
    writeln!(
        f,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (H + MT - MB) / 2.0,
        (H + MT - MB) / 2.0,
        xml_escape(y_label)
    )?;

    for (i, s) in series.iter().enumerate() {
        let d: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .enumerate()
            .map(|(k, (x, y))| {
                format!("{}{:.2},{:.2}", if k == 0 { "M" } else { "L" }, sx(*x), sy(*y))
            })
            .collect();
        if d.is_empty() {
            continue;
        }
        writeln!(
            f,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.6"/>"#,
            d.join(" "),
            s.color
        )?;
        writeln!(
            f,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{}">{}</text>"#,
            W - MR - 150.0,
            MT + 18.0 + 16.0 * i as f64,
            s.color,
            xml_escape(s.label)
        )?;
    }
    writeln!(f, "</svg>")?;
    Ok(())
}

fn pad_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
