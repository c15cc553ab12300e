//! Tables, frame dumps, plots and the run manifest.

use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sublev_core::grid::{Extension, GridFunction};
use sublev_core::semigroup::SemigroupTrajectory;

pub const MAGIC: &[u8; 5] = b"SLSG1";

/// In-memory table serialised as RFC-4180 CSV with LF line endings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| io::Error::other(e.to_string()))
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Shortest round-tripping decimal form.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Frame dump: magic, then `d, n, lo, hi, n_frames` and per frame the time
/// followed by the node values, all little-endian `f64`.
pub fn write_frames(w: &mut impl Write, times: &[f64], frames: &[GridFunction]) -> io::Result<()> {
    let first = frames.first().ok_or_else(|| io::Error::other("no frames"))?;
    w.write_all(MAGIC)?;
    for v in [first.dim() as f64, first.n() as f64, first.lo(), first.hi(), frames.len() as f64] {
        w.write_all(&v.to_le_bytes())?;
    }
    for (t, f) in times.iter().zip(frames) {
        w.write_all(&t.to_le_bytes())?;
        for v in f.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_frames(r: &mut impl Read) -> io::Result<(Vec<f64>, Vec<GridFunction>)> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let mut next = || -> io::Result<f64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    };
    let (d, n, lo, hi, count) = (next()? as usize, next()? as usize, next()?, next()?, next()? as usize);
    let len = n.pow(d as u32);
    let mut times = Vec::with_capacity(count);
    let mut frames = Vec::with_capacity(count);
    for _ in 0..count {
        times.push(next()?);
        let values = (0..len).map(|_| next()).collect::<io::Result<Vec<_>>>()?;
        frames.push(
            GridFunction::new(d, lo, hi, n, values, Extension::Constant)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?,
        );
    }
    Ok((times, frames))
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// Static line plot.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h, m) = (640.0, 400.0, 50.0);
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, w / 2.0, h - 10.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (v, anchor, x, y) in [(x0, "start", m, h - m + 15.0), (x1, "end", w - m, h - m + 15.0)] {
        let _ = writeln!(out, r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="10">{v:.3}</text>"#);
    }
    for (v, y) in [(y0, h - m), (y1, m)] {
        let _ = writeln!(out, r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{v:.3}</text>"#, m - 4.0);
    }
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="10" fill="{color}">{}</text>"#,
            w - m + 4.0,
            m + 12.0 * k as f64,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Value-vs-x per selected frame and value-vs-t per point.
pub fn trajectory_plots(traj: &SemigroupTrajectory, frames: &[usize], points: &[f64]) -> String {
    let by_x: Vec<Series> = frames
        .iter()
        .map(|&k| {
            let f = &traj.frames[k];
            Series {
                name: format!("t={}", traj.times[k]),
                points: (0..f.n()).map(|i| (f.coordinate(i), f.values()[i])).collect(),
            }
        })
        .collect();
    let by_t: Vec<Series> = points
        .iter()
        .map(|&x| Series {
            name: format!("x={x}"),
            points: traj
                .times
                .iter()
                .zip(&traj.frames)
                .filter_map(|(&t, f)| f.interpolate(&[x]).ok().map(|v| (t, v)))
                .collect(),
        })
        .collect();
    let a = svg_plot(&format!("{}: value vs x", traj.family), "x", "value", &by_x);
    let b = svg_plot(&format!("{}: value vs t", traj.family), "t", "value", &by_t);
    // Two panels stacked in one document.
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"800\">\n{a}<g transform=\"translate(0 400)\">\n{b}</g>\n</svg>\n"
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub exit_code: i32,
    pub checks: Vec<CheckRecord>,
    pub artifacts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Effective configuration after command-line overrides; absent when it did not parse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

pub fn write_manifest(dir: &Path, m: &RunManifest) -> io::Result<()> {
    let text = serde_json::to_string_pretty(m).map_err(io::Error::other)?;
    std::fs::write(dir.join("manifest.json"), text + "\n")
}
