//! Static charts and the metric table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::metrics::{ErrorRecord, MetricSummary, Stats};

pub const TABLE_HEADER: &str = "metric,y_err,phi_err";
pub const METRIC_NAMES: [&str; 6] = ["μ", "σ", "Q25", "Q50", "Q75", "Q95"];

const BINS: usize = 20;

fn rows(s: &Stats) -> [f64; 6] {
    [s.mu, s.sigma, s.q25, s.q50, s.q75, s.q95]
}

pub fn metric_table(summary: &MetricSummary) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for ((name, y), phi) in METRIC_NAMES
        .iter()
        .zip(rows(&summary.y_err))
        .zip(rows(&summary.phi_err))
    {
        let _ = writeln!(out, "{name},{y},{phi}");
    }
    out
}

/// Bin counts over `[0, max]`. All-equal input yields one bin.
pub fn histogram(values: &[f64]) -> (Vec<usize>, f64) {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    if values.is_empty() || max <= 0.0 || values.iter().all(|&v| v == values[0]) {
        return (vec![values.len()], max);
    }
    let width = max / BINS as f64;
    let mut counts = vec![0usize; BINS];
    for &v in values {
        counts[((v / width) as usize).min(BINS - 1)] += 1;
    }
    (counts, width)
}

pub fn histogram_svg(values: &[f64], title: &str, unit: &str) -> String {
    let (counts, bin_width) = histogram(values);
    let (w, h, margin) = (480.0, 300.0, 40.0);
    let plot_w = w - 2.0 * margin;
    let plot_h = h - 2.0 * margin;
    let peak = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let bar_w = plot_w / counts.len() as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>"#,
        w / 2.0
    );
    for (i, &c) in counts.iter().enumerate() {
        let bh = plot_h * c as f64 / peak;
        let x = margin + i as f64 * bar_w;
        let y = h - margin - bh;
        let _ = writeln!(
            svg,
            r##"<rect class="bar" x="{x:.2}" y="{y:.2}" width="{:.2}" height="{bh:.2}" fill="#4a78b0" stroke="white"/>"##,
            bar_w
        );
    }
    let axis_y = h - margin;
    let _ = writeln!(
        svg,
        r#"<line x1="{margin}" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="black"/>"#,
        w - margin
    );
    let upper = bin_width * counts.len() as f64;
    let _ = writeln!(
        svg,
        r#"<text x="{margin}" y="{}" font-family="sans-serif" font-size="11">0</text>"#,
        axis_y + 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{upper:.3} {unit}</text>"#,
        w - margin,
        axis_y + 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">n = {}, peak {}</text>"#,
        w / 2.0,
        h - 8.0,
        values.len(),
        peak
    );
    svg.push_str("</svg>\n");
    svg
}

/// Writes `<stem>_y_err.svg`, `<stem>_phi_err.svg` and `<stem>_metrics.csv`
/// into `dir`, returning the paths.
pub fn emit_plots(summary: &MetricSummary, errors: &[ErrorRecord], dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let y: Vec<f64> = errors.iter().map(|e| e.y_err).collect();
    let phi: Vec<f64> = errors.iter().map(|e| e.phi_err).collect();
    let files = [
        (
            format!("{stem}_y_err.svg"),
            histogram_svg(&y, &format!("{stem}: Y error"), "px"),
        ),
        (
            format!("{stem}_phi_err.svg"),
            histogram_svg(&phi, &format!("{stem}: φ error"), "deg"),
        ),
        (format!("{stem}_metrics.csv"), metric_table(summary)),
    ];
    let mut out = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::metrics::summarize;

    fn errors(n: usize, scale: f64) -> Vec<ErrorRecord> {
        (0..n)
            .map(|i| ErrorRecord {
                frame_index: i as u64,
                y_err: scale * i as f64,
                phi_err: scale * 0.01 * i as f64,
            })
            .collect()
    }

    #[test]
    fn manifest() {
        let dir = tempfile::tempdir().unwrap();
        let e = errors(100, 0.1);
        let files = emit_plots(&summarize(&e, &[]).unwrap(), &e, dir.path(), "vid").unwrap();
        assert_eq!(files.len(), 3);
        assert_eq!(files.iter().filter(|p| p.extension().unwrap() == "svg").count(), 2);
        assert!(files.iter().all(|p| p.exists()));
    }

    #[test]
    fn zero_errors_give_one_bar() {
        let e = errors(10, 0.0);
        let (counts, _) = histogram(&e.iter().map(|r| r.y_err).collect::<Vec<_>>());
        assert_eq!(counts, vec![10]);
        let svg = histogram_svg(&[0.0; 10], "t", "px");
        assert_eq!(svg.matches(r#"class="bar""#).count(), 1);
    }

    #[test]
    fn table_layout() {
        let e = errors(5, 1.0);
        let table = metric_table(&summarize(&e, &[]).unwrap());
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], TABLE_HEADER);
        let names: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(names, METRIC_NAMES);
        assert_eq!(lines[1], "μ,2,0.02");
    }
}
