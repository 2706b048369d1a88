//! Report files: JSON, per-image CSV, aggregate CSV, curve CSV and SVG plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::batch::{RunReport, Variant};
use crate::error::{Result, SeeError};
use crate::metrics::{EvalSummary, LEVELS};

pub const REPORT_JSON: &str = "report.json";
pub const TIMINGS_JSON: &str = "timings.json";
pub const PER_IMAGE_CSV: &str = "per_image.csv";
pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const CURVES_CSV: &str = "curves.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Formats {
    pub json: bool,
    pub csv: bool,
    pub curves_csv: bool,
    pub svg: bool,
}

impl Formats {
    pub fn all() -> Self {
        Self {
            json: true,
            csv: true,
            curves_csv: true,
            svg: true,
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| SeeError::io(path, e))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| SeeError::io("<csv buffer>", e.into_error()))
}

fn metric_cells(s: &EvalSummary) -> impl Iterator<Item = String> {
    s.as_array().into_iter().map(|v| v.to_string())
}

pub fn per_image_csv(report: &RunReport) -> Result<Vec<u8>> {
    let mut header = vec!["key", "method", "variant"];
    header.extend(EvalSummary::METRIC_NAMES);
    csv_bytes(
        &header,
        report.per_image.iter().map(|r| {
            let mut row = vec![r.key.clone(), r.method.clone(), r.variant.to_string()];
            row.extend(metric_cells(&r.summary));
            row
        }),
    )
}

pub fn aggregate_csv(report: &RunReport) -> Result<Vec<u8>> {
    let mut header = vec!["method", "variant", "images"];
    header.extend(EvalSummary::METRIC_NAMES);
    header.push("curve_f_measure");
    csv_bytes(
        &header,
        report.aggregate.iter().map(|a| {
            let mut row = vec![a.method.clone(), a.variant.to_string(), a.images.to_string()];
            row.extend(metric_cells(&a.mean));
            row.push(a.curve_f_measure.to_string());
            row
        }),
    )
}

pub fn curves_csv(report: &RunReport) -> Result<Vec<u8>> {
    let header = [
        "method",
        "variant",
        "level",
        "threshold",
        "precision",
        "recall",
        "false_positive",
    ];
    let rows = report.curves.iter().flat_map(|c| {
        (0..LEVELS).map(move |k| {
            vec![
                c.method.clone(),
                c.variant.to_string(),
                k.to_string(),
                c.curve.thresholds[k].to_string(),
                c.curve.precision[k].to_string(),
                c.curve.recall[k].to_string(),
                c.curve.false_positive[k].to_string(),
            ]
        })
    });
    csv_bytes(&header, rows)
}

fn color(variant: Variant) -> &'static str {
    match variant {
        Variant::Baseline => "#7f7f7f",
        Variant::Post => "#1f77b4",
        Variant::Full => "#d62728",
    }
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Precision (y) against recall (x) for every variant of one method.
pub fn pr_svg(report: &RunReport, method: &str) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 50.0;
    let span = SIZE - 2.0 * PAD;
    let px = |x: f64| PAD + x * span;
    let py = |y: f64| SIZE - PAD - y * span;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="30" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        SIZE / 2.0,
        escape_xml(method)
    );
    let _ = writeln!(
        svg,
        r#"<polyline points="{},{} {},{} {},{}" fill="none" stroke="black"/>"#,
        px(0.0),
        py(1.0),
        px(0.0),
        py(0.0),
        px(1.0),
        py(0.0)
    );
    for i in 0..=4 {
        let t = f64::from(i) / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{t}</text>"#,
            px(t),
            py(0.0) + 15.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{t}</text>"#,
            px(0.0) - 5.0,
            py(t) + 3.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">recall</text>"#,
        SIZE / 2.0,
        SIZE - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">precision</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );

    for (i, entry) in report.curves.iter().filter(|c| c.method == method).enumerate() {
        let points: Vec<String> = (0..LEVELS)
            .map(|k| format!("{:.2},{:.2}", px(entry.curve.recall[k]), py(entry.curve.precision[k])))
            .collect();
        let stroke = color(entry.variant);
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let ly = PAD + 15.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{stroke}" stroke-width="2"/>"#,
            px(0.7),
            px(0.78)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
            px(0.8),
            ly + 4.0,
            entry.variant
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn svg_name(method: &str) -> String {
    let safe: String = method
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("pr_{safe}.svg")
}

/// Writes the requested formats into `out` and returns the paths written.
/// Timings always go to their own file so the other outputs stay reproducible.
pub fn emit_report(report: &RunReport, out: &Path, formats: Formats) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| SeeError::io(out, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let path = out.join(name);
        write_file(&path, &bytes)?;
        written.push(path);
        Ok(())
    };
    if formats.json {
        let mut json = serde_json::to_vec_pretty(report)?;
        json.push(b'\n');
        put(REPORT_JSON.into(), json)?;
        let mut timings = serde_json::to_vec_pretty(&report.timings)?;
        timings.push(b'\n');
        put(TIMINGS_JSON.into(), timings)?;
    }
    if formats.csv {
        put(PER_IMAGE_CSV.into(), per_image_csv(report)?)?;
        put(AGGREGATE_CSV.into(), aggregate_csv(report)?)?;
    }
    if formats.curves_csv {
        put(CURVES_CSV.into(), curves_csv(report)?)?;
    }
    if formats.svg {
        for method in &report.methods {
            put(svg_name(method), pr_svg(report, method).into_bytes())?;
        }
    }
    Ok(written)
}
