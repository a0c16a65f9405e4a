//! CSV result tables, external-series overlays and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Result, SimError};
use crate::sweep::ResultRow;

pub const CSV_HEADER: [&str; 6] = ["axis", "mean_auc", "auc_stddev", "n_readers", "seed", "config_hash"];

/// Shortest exact form is not guaranteed to have a fixed width; this is
/// always 17 significant digits, enough to round-trip any double.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(SimError::Input("no result rows to write".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| SimError::Input(format!("CSV: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            format_f64(r.axis_value),
            format_f64(r.mean_auc),
            format_f64(r.auc_stddev),
            r.n_readers.to_string(),
            r.seed.to_string(),
            r.config_hash.clone(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| SimError::Input(format!("CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is ASCII"))
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    fs::write(path, csv_string(rows)?).map_err(|e| SimError::io(path, e))
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| SimError::Input(format!("CSV: {e}")))?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(SimError::Input(format!("CSV header must be `{}`", CSV_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| SimError::Input(format!("CSV: {e}")))?;
        let bad = |what: &str| SimError::Input(format!("CSV row {}: bad {what}", line + 1));
        let float = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(CSV_HEADER[i]));
        rows.push(ResultRow {
            axis_value: float(0)?,
            mean_auc: float(1)?,
            auc_stddev: float(2)?,
            n_readers: rec[3].parse().map_err(|_| bad("n_readers"))?,
            seed: rec[4].parse().map_err(|_| bad("seed"))?,
            config_hash: rec[5].to_owned(),
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_csv(&text)
}

/// A point of an externally published series, e.g. human-reader results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalPoint {
    pub axis: f64,
    pub value: f64,
    pub tolerance: f64,
}

/// Reads `axis,value,tolerance` rows.
pub fn read_overlay(path: &Path) -> Result<Vec<ExternalPoint>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| SimError::Input(format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| SimError::Input(format!("{}: {e}", path.display())))?;
        let field = |i: usize| -> Result<f64> {
            rec.get(i).and_then(|s| s.trim().parse().ok()).ok_or_else(|| {
                SimError::Input(format!("{}: row {} needs axis,value,tolerance", path.display(), line + 1))
            })
        };
        points.push(ExternalPoint { axis: field(0)?, value: field(1)?, tolerance: field(2)? });
    }
    Ok(points)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Affinely maps an external series so that, at the axis points it shares
/// with `anchor`, its mean and standard deviation equal the anchor's.
/// Tolerances are multiplied by the same scale factor
/// `std(anchor) / std(external)`.
pub fn overlay_rescale(external: &[ExternalPoint], anchor: &[(f64, f64)]) -> Result<Vec<ExternalPoint>> {
    if external.iter().any(|p| !(p.tolerance >= 0.0)) {
        return Err(SimError::Input("external tolerances must be non-negative".into()));
    }
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    let mut ext = Vec::new();
    let mut anc = Vec::new();
    for p in external {
        if let Some(&(_, v)) = anchor.iter().find(|(a, _)| same(*a, p.axis)) {
            ext.push(p.value);
            anc.push(v);
        }
    }
    if ext.len() < 2 {
        return Err(SimError::Input(format!("overlay shares {} axis points with the results, need 2", ext.len())));
    }
    let (me, se) = mean_std(&ext);
    let (ma, sa) = mean_std(&anc);
    let scale = if se > 0.0 {
        sa / se
    } else if sa == 0.0 {
        1.0
    } else {
        return Err(SimError::Input("external series is constant at the shared points".into()));
    };
    Ok(external
        .iter()
        .map(|p| ExternalPoint { axis: p.axis, value: ma + scale * (p.value - me), tolerance: p.tolerance * scale })
        .collect())
}

/// A named series drawn on top of the results.
#[derive(Debug, Clone, PartialEq)]
pub struct Overlay {
    pub name: String,
    pub points: Vec<ExternalPoint>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line plot of mean AUC against the axis with ±1 standard deviation bars;
/// every overlay adds one more polyline with its own bars.
pub fn svg_plot(rows: &[ResultRow], overlays: &[Overlay], axis_label: &str) -> Result<String> {
    if rows.is_empty() {
        return Err(SimError::Input("no result rows to plot".into()));
    }
    let mut series: Vec<(String, Vec<ExternalPoint>)> = vec![(
        "model".to_owned(),
        rows.iter().map(|r| ExternalPoint { axis: r.axis_value, value: r.mean_auc, tolerance: r.auc_stddev }).collect(),
    )];
    series.extend(overlays.iter().map(|o| (o.name.clone(), o.points.clone())));
    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        x0 = x0.min(p.axis);
        x1 = x1.max(p.axis);
        y0 = y0.min(p.value - p.tolerance);
        y1 = y1.max(p.value + p.tolerance);
    }
    if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) {
        return Err(SimError::Input("plot data must be finite".into()));
    }
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pad = if y1 > y0 { 0.05 * (y1 - y0) } else { 0.01 };
    y0 -= pad;
    y1 += pad;

    let (width, height) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 20.0, 20.0, 50.0);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * (width - left - right);
    let sy = |y: f64| height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom);
    let colors = ["#1f4e9c", "#c0392b", "#27ae60", "#8e44ad", "#d35400"];

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (ax, ay) = (sx(x0), sy(y0));
    let _ =
        writeln!(s, r#"<path d="M{left} {top} L{left} {ay:.2} L{:.2} {ay:.2}" fill="none" stroke="black"/>"#, sx(x1));
    for k in 0..=4 {
        let yv = y0 + (y1 - y0) * f64::from(k) / 4.0;
        let xv = x0 + (x1 - x0) * f64::from(k) / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{yv:.3}</text>"#,
            left - 6.0,
            sy(yv) + 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{xv:.3}</text>"#,
            sx(xv),
            ay + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        (ax + sx(x1)) / 2.0,
        height - 10.0,
        escape(axis_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">AUC</text>"#,
        (top + ay) / 2.0,
        (top + ay) / 2.0
    );
    for (i, (name, points)) in series.iter().enumerate() {
        let color = colors[i % colors.len()];
        let mut pts: Vec<&ExternalPoint> = points.iter().collect();
        pts.sort_by(|a, b| a.axis.total_cmp(&b.axis));
        let coords: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.axis), sy(p.value))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            coords.join(" "),
            escape(name)
        );
        for p in &pts {
            let x = sx(p.axis);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}"/>"#,
                sy(p.value - p.tolerance),
                sy(p.value + p.tolerance)
            );
        }
        let ly = top + 14.0 * i as f64 + 8.0;
        let lx = width - right - 120.0;
        let _ = writeln!(s, r#"<text x="{lx:.2}" y="{ly:.2}" font-size="11" fill="{color}">{}</text>"#, escape(name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg(rows: &[ResultRow], overlays: &[Overlay], axis_label: &str, path: &Path) -> Result<()> {
    fs::write(path, svg_plot(rows, overlays, axis_label)?).map_err(|e| SimError::io(path, e))
}
