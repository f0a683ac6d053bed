//! CSV and SVG rendering of benchmark results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchSuiteResult;
use crate::analysis::{Format, KernelReport, RooflinePlatform};
use crate::error::{Error, Result};
use crate::kernels::KernelId;

pub const CSV_COLUMNS: [&str; 14] = [
    "tensor",
    "kernel",
    "format",
    "time_s",
    "flops",
    "bytes_model",
    "oi",
    "gflops",
    "bound_gflops",
    "efficiency",
    "time_median_s",
    "time_min_s",
    "gflops_mode_avg",
    "error",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Svg,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(Error::Config(format!("unknown report format '{other}'"))),
        }
    }
}

/// Shortest round-trip text; NaN becomes an empty field.
fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

pub fn write_csv<W: Write>(reports: &[KernelReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in reports {
        let nums = [
            r.time_s,
            r.flops,
            r.bytes_model,
            r.oi,
            r.gflops,
            r.bound_gflops,
            r.efficiency,
            r.time_median_s,
            r.time_min_s,
            r.gflops_mode_avg,
        ];
        let mut row = vec![
            r.tensor.clone(),
            r.kernel.name().to_string(),
            r.format.name().to_string(),
        ];
        row.extend(nums.iter().map(|&v| num(v)));
        row.push(r.error.clone().unwrap_or_default());
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::Config(format!("csv: {e}")))
}

pub fn csv_string(reports: &[KernelReport]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(reports, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Config(format!("csv: {e}")))
}

const W: f64 = 960.0;
const BAR_H: f64 = 360.0;
const ROOF_H: f64 = 420.0;
const MARGIN: f64 = 70.0;
const PALETTE: [&str; 3] = ["#4c72b0", "#dd8452", "#55a868"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn format_color(f: Format) -> &'static str {
    PALETTE[Format::ALL.iter().position(|&g| g == f).unwrap_or(0)]
}

/// Grouped bars of measured GFLOPS per (tensor, kernel) with one bar per
/// format and the Roofline bound drawn as a tick above each bar, then a
/// log-log Roofline chart with one marker per kernel and format at the mean
/// operational intensity over tensors.
pub fn svg_string(reports: &[KernelReport], platform: &RooflinePlatform) -> String {
    let total_h = BAR_H + ROOF_H + 3.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{total_h}" viewBox="0 0 {W} {total_h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    bar_chart(&mut s, reports);
    roofline_chart(&mut s, reports, platform, BAR_H + 2.0 * MARGIN);
    s.push_str("</svg>\n");
    s
}

fn bar_chart(s: &mut String, reports: &[KernelReport]) {
    let mut groups: Vec<(String, KernelId)> = Vec::new();
    let mut formats: Vec<Format> = Vec::new();
    for r in reports {
        let key = (r.tensor.clone(), r.kernel);
        if !groups.contains(&key) {
            groups.push(key);
        }
        if !formats.contains(&r.format) {
            formats.push(r.format);
        }
    }
    let top = MARGIN;
    let left = MARGIN;
    let plot_w = W - 2.0 * MARGIN;
    let ymax = reports
        .iter()
        .flat_map(|r| [r.gflops, r.bound_gflops])
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.1;
    let y = |v: f64| top + BAR_H - BAR_H * (v / ymax);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">Measured GFLOPS with Roofline bound</text>"#,
        W / 2.0,
        top - 30.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        top + BAR_H,
        left + plot_w,
        top + BAR_H,
        top + BAR_H
    );
    for i in 0..=4 {
        let v = ymax * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
            left - 4.0,
            y(v) + 4.0,
            v
        );
    }
    if groups.is_empty() {
        return;
    }
    let gw = plot_w / groups.len() as f64;
    let bw = gw * 0.8 / formats.len().max(1) as f64;
    for (gi, (tensor, kernel)) in groups.iter().enumerate() {
        let gx = left + gi as f64 * gw + gw * 0.1;
        for (fi, &f) in formats.iter().enumerate() {
            let Some(r) = reports
                .iter()
                .find(|r| &r.tensor == tensor && r.kernel == *kernel && r.format == f)
            else {
                continue;
            };
            let x = gx + fi as f64 * bw;
            if r.gflops.is_finite() {
                let _ = writeln!(
                    s,
                    r#"<rect class="bar" x="{x:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{} {} {}: {} GFLOPS</title></rect>"#,
                    y(r.gflops),
                    bw * 0.9,
                    top + BAR_H - y(r.gflops),
                    format_color(f),
                    esc(tensor),
                    kernel,
                    f,
                    r.gflops
                );
            }
            if r.bound_gflops.is_finite() {
                let _ = writeln!(
                    s,
                    r#"<line class="bound-marker" x1="{x:.2}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="black" stroke-width="2"/>"#,
                    y(r.bound_gflops),
                    x + bw * 0.9
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}/{}</text>"#,
            gx + gw * 0.4,
            top + BAR_H + 14.0,
            esc(tensor),
            kernel
        );
    }
    for (fi, &f) in formats.iter().enumerate() {
        let lx = left + plot_w - 90.0;
        let ly = top + 12.0 * fi as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{f}</text>"#,
            ly - 9.0,
            format_color(f),
            lx + 14.0,
            ly
        );
    }
}

fn roofline_chart(s: &mut String, reports: &[KernelReport], p: &RooflinePlatform, top: f64) {
    // mean OI per kernel and format, over tensors that ran
    let mut oi: BTreeMap<(KernelId, Format), (f64, usize)> = BTreeMap::new();
    for r in reports {
        let e = oi.entry((r.kernel, r.format)).or_insert((0.0, 0));
        if r.oi.is_finite() && r.oi > 0.0 {
            e.0 += r.oi;
            e.1 += 1;
        }
    }
    let ridge = p.peak_gflops / p.mem_bw_gbs;
    let finite: Vec<f64> = oi
        .values()
        .filter(|(_, n)| *n > 0)
        .map(|(sum, n)| sum / *n as f64)
        .collect();
    let lo = finite.iter().copied().fold(ridge, f64::min) / 4.0;
    let hi = finite.iter().copied().fold(ridge, f64::max) * 4.0;
    let (xl0, xl1) = (lo.log10().floor(), hi.log10().ceil());
    let bound = |x: f64| (p.mem_bw_gbs * x).min(p.peak_gflops);
    let (yl0, yl1) = (
        bound(10f64.powf(xl0)).log10().floor(),
        p.peak_gflops.log10().ceil() + 0.2,
    );
    let left = MARGIN;
    let plot_w = W - 2.0 * MARGIN;
    let px = |x: f64| left + plot_w * (x.log10() - xl0) / (xl1 - xl0);
    let py = |y: f64| top + ROOF_H - ROOF_H * (y.log10() - yl0) / (yl1 - yl0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">Roofline: {} ({} GFLOPS, {} GB/s)</text>"#,
        W / 2.0,
        top - 20.0,
        esc(&p.name),
        p.peak_gflops,
        p.mem_bw_gbs
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{ROOF_H}" fill="none" stroke="black"/>"#
    );
    let mut e = xl0 as i32;
    while e as f64 <= xl1 {
        let x = px(10f64.powi(e));
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{e}</text>"#,
            top + ROOF_H + 14.0
        );
        e += 1;
    }
    let mut e = yl0 as i32;
    while (e as f64) < yl1 {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
            left - 4.0,
            py(10f64.powi(e)) + 4.0
        );
        e += 1;
    }
    let x0 = 10f64.powf(xl0);
    let x1 = 10f64.powf(xl1);
    let _ = writeln!(
        s,
        r#"<polyline class="roof" fill="none" stroke="black" stroke-width="2" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"/>"#,
        px(x0),
        py(bound(x0)),
        px(ridge),
        py(p.peak_gflops),
        px(x1),
        py(p.peak_gflops)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">operational intensity (flop/byte)</text>"#,
        W / 2.0,
        top + ROOF_H + 30.0
    );
    for (i, ((k, f), (sum, n))) in oi.iter().enumerate() {
        if *n == 0 {
            // keep one marker per pair; unmeasured pairs sit on the left edge
            let _ = writeln!(
                s,
                r#"<circle class="oi-marker missing" data-kernel="{k}" data-format="{f}" cx="{left}" cy="{}" r="4" fill="none" stroke="gray"/>"#,
                top + ROOF_H
            );
            continue;
        }
        let x = sum / *n as f64;
        let (cx, cy) = (px(x), py(bound(x)));
        let _ = writeln!(
            s,
            r#"<circle class="oi-marker" data-kernel="{k}" data-format="{f}" data-oi="{x}" cx="{cx:.2}" cy="{cy:.2}" r="5" fill="{}"><title>{k} {f}: OI {x}</title></circle>"#,
            format_color(*f)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{k}/{f}</text>"#,
            cx + 6.0,
            cy - 6.0 - 10.0 * (i % 3) as f64
        );
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes the result as CSV or SVG.
pub fn emit_report(result: &BenchSuiteResult, format: ReportFormat, path: &Path) -> Result<()> {
    if result.reports.is_empty() {
        return Err(Error::Config("no reports to emit".into()));
    }
    match format {
        ReportFormat::Csv => write_file(path, csv_string(&result.reports)?.as_bytes()),
        ReportFormat::Svg => write_file(
            path,
            svg_string(&result.reports, &result.environment.platform).as_bytes(),
        ),
    }
}
