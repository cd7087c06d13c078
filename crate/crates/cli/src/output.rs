//! Atomic file writes and the CSV, JSON and SVG emitters.

use std::io::Write;
use std::path::{Path, PathBuf};

use tfloc_core::{AuditReport, Table};

use crate::CliError;

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

/// 17 significant digits, '.' decimal, independent of locale.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn table_csv(table: &Table) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&v| fmt_f64(v))).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn scalars_csv(report: &AuditReport) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "value", "tolerance", "comparison", "pass"]).map_err(csv_err)?;
    for (name, s) in &report.scalars {
        let cmp = serde_json::to_value(s.comparison).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_record([
            name.clone(),
            fmt_f64(s.value),
            fmt_f64(s.tolerance),
            cmp.as_str().unwrap_or_default().to_string(),
            s.pass.to_string(),
        ])
        .map_err(csv_err)?;
    }
    for (name, v) in &report.empirical_constants {
        w.write_record([name.clone(), fmt_f64(*v), String::new(), "constant".into(), "true".into()])
            .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn report_json(report: &AuditReport) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn load_report(path: &Path) -> Result<AuditReport, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// File-name-safe form of a table name.
fn slug(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

/// `<stem>.json` plus the CSV files of [`write_csvs`]. Returns the paths written.
pub fn write_report(dir: &Path, stem: &str, report: &AuditReport) -> Result<Vec<PathBuf>, CliError> {
    let json = dir.join(format!("{stem}.json"));
    write_atomic(&json, &report_json(report)?)?;
    let mut written = vec![json];
    written.extend(write_csvs(dir, stem, report)?);
    Ok(written)
}

/// `<stem>_scalars.csv` and one `<stem>_<table>.csv` per table.
pub fn write_csvs(dir: &Path, stem: &str, report: &AuditReport) -> Result<Vec<PathBuf>, CliError> {
    let scalars = dir.join(format!("{stem}_scalars.csv"));
    write_atomic(&scalars, &scalars_csv(report)?)?;
    let mut written = vec![scalars];
    for t in &report.tables {
        let path = dir.join(format!("{stem}_{}.csv", slug(&t.name)));
        write_atomic(&path, &table_csv(t)?)?;
        written.push(path);
    }
    Ok(written)
}

/// Line plot of every table against its first column, one file per table.
pub fn write_table_plots(dir: &Path, stem: &str, report: &AuditReport) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for t in report.tables.iter().filter(|t| t.columns.len() >= 2 && !t.rows.is_empty()) {
        let series: Vec<Series> = (1..t.columns.len())
            .map(|c| Series {
                label: t.columns[c].clone(),
                points: t.rows.iter().map(|r| (r[0], r[c])).filter(|(x, y)| x.is_finite() && y.is_finite()).collect(),
            })
            .collect();
        let svg = line_chart(&t.name, &t.columns[0], &series);
        let path = dir.join(format!("{stem}_{}.svg", slug(&t.name)));
        write_atomic(&path, svg.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

// Static SVG plots.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

/// Padded data range; degenerate ranges are widened to unit length.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn axes(x: (f64, f64), y: (f64, f64), x_label: &str) -> String {
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN / 2.0, MARGIN / 1.5);
    let mut s = format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let px = x0 + f * (x1 - x0);
        let py = y0 - f * (y0 - y1);
        s += &format!(
            "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            y0 + 14.0,
            tick(x.0 + f * (x.1 - x.0)),
            x0 - 4.0,
            py + 4.0,
            tick(y.0 + f * (y.1 - y.0)),
        );
    }
    s
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn project(v: f64, (lo, hi): (f64, f64), a: f64, b: f64) -> f64 {
    a + (v - lo) / (hi - lo) * (b - a)
}

pub fn line_chart(title: &str, x_label: &str, series: &[Series]) -> String {
    let xr = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let yr = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN / 2.0, MARGIN / 1.5);
    let mut svg = header(title) + &axes(xr, yr, x_label);
    for (i, s) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", project(x, xr, x0, x1), project(y, yr, y0, y1)))
            .collect();
        svg += &format!("<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{}\"/>\n", pts.join(" "));
        svg += &format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{colour}\">{}</text>\n",
            x0 + 8.0,
            y1 + 14.0 * (i as f64 + 1.0),
            escape(&s.label)
        );
    }
    svg + "</svg>\n"
}

/// Vertical bars with an optional dashed reference level.
pub fn bar_chart(title: &str, x_label: &str, values: &[f64], reference: Option<f64>) -> String {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let top = finite.chain(reference).fold(0.0f64, f64::max).max(1e-300) * 1.05;
    let yr = (0.0, top);
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN / 2.0, MARGIN / 1.5);
    let n = values.len().max(1) as f64;
    let mut svg = header(title) + &axes((0.0, n), yr, x_label);
    let slot = (x1 - x0) / n;
    for (i, &v) in values.iter().enumerate() {
        let v = if v.is_finite() { v.max(0.0) } else { 0.0 };
        let top_px = project(v, yr, y0, y1);
        svg += &format!(
            "<rect x=\"{:.2}\" y=\"{top_px:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
            x0 + slot * (i as f64 + 0.1),
            slot * 0.8,
            y0 - top_px,
            COLOURS[0]
        );
    }
    if let Some(r) = reference {
        let py = project(r, yr, y0, y1);
        svg += &format!("<line x1=\"{x0}\" y1=\"{py:.2}\" x2=\"{x1}\" y2=\"{py:.2}\" stroke=\"{}\" stroke-dasharray=\"6 4\"/>\n", COLOURS[1]);
    }
    svg + "</svg>\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let v = 0.1f64 + 0.2;
        let s = fmt_f64(v);
        assert_eq!(s, "3.0000000000000004e-1");
        assert_eq!(s.parse::<f64>().unwrap(), v);
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn table_csv_has_header_and_rows() {
        let mut t = Table::new("t", &["k", "v"]);
        t.push(vec![0.0, 0.5]);
        let text = String::from_utf8(table_csv(&t).unwrap()).unwrap();
        assert_eq!(text, "k,v\n0.0000000000000000e0,5.0000000000000000e-1\n");
    }

    #[test]
    fn charts_are_well_formed() {
        let bars = bar_chart("q", "member", &[0.2, 0.9, f64::NAN], Some(1.0));
        assert!(bars.starts_with("<svg") && bars.ends_with("</svg>\n"));
        assert_eq!(bars.matches("<rect").count(), 4);
        let lines = line_chart("a & b", "x", &[Series { label: "y".into(), points: vec![(0.0, 1.0), (1.0, 1.0)] }]);
        assert!(lines.contains("a &amp; b") && lines.contains("<polyline"));
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/file.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
