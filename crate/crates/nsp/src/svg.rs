//! Minimal line plots written as plain SVG path elements.

use std::fmt::Write as _;
use std::path::Path;

use nsp_core::monitor::boundary_oracle;

use crate::error::{CliError, CliResult};
use crate::runner::RunOutcome;
use crate::sweep::SweepRecord;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            dashed: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        let pad = 0.5 * y0.abs().max(1.0);
        y0 -= pad;
        y1 += pad;
    }
    let pad = 0.05 * (y1 - y0);
    (x0, x1, y0 - pad, y1 + pad)
}

impl Plot {
    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = bounds(&self.series);
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
        let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<path d="M{m} {t} V{b} H{r}" fill="none" stroke="black"/>"#,
            m = MARGIN,
            t = MARGIN,
            b = H - MARGIN,
            r = W - MARGIN
        );
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                sx(fx),
                H - MARGIN + 16.0,
                tick(fx)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                MARGIN - 6.0,
                sy(fy) + 4.0,
                tick(fy)
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, escape(&self.xlabel));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(&self.ylabel)
        );
        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let mut d = String::new();
            let mut pen_up = true;
            for &(x, y) in &series.points {
                if !(x.is_finite() && y.is_finite()) {
                    pen_up = true;
                    continue;
                }
                let _ = write!(d, "{}{:.2} {:.2} ", if pen_up { 'M' } else { 'L' }, sx(x), sy(y));
                pen_up = false;
            }
            let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, d.trim_end());
            let ly = MARGIN + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" fill="{color}" text-anchor="end">{}</text>"#,
                W - MARGIN - 4.0,
                ly + 12.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.render()).map_err(|e| CliError::io(path, e))
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn oracle_series(out: &RunOutcome) -> Series {
    let rho0 = out.initial.boundary_density();
    let p = out.initial.params;
    let mut s = Series::new("oracle", out.boundary.iter().map(|&(t, _, _)| (t, boundary_oracle(rho0, t, &p))).collect());
    s.dashed = true;
    s
}

/// b(t) and boundary density against its oracle.
pub fn run_plots(dir: &Path, out: &RunOutcome) -> CliResult<()> {
    Plot {
        title: "outer radius".into(),
        xlabel: "t".into(),
        ylabel: "b(t)".into(),
        series: vec![Series::new("b(t)", out.boundary.iter().map(|&(t, b, _)| (t, b)).collect())],
    }
    .write(&dir.join("boundary_radius.svg"))?;
    Plot {
        title: "boundary density".into(),
        xlabel: "t".into(),
        ylabel: "rho(t, b(t))".into(),
        series: vec![
            Series::new("computed", out.boundary.iter().map(|&(t, _, r)| (t, r)).collect()),
            oracle_series(out),
        ],
    }
    .write(&dir.join("boundary_density.svg"))
}

pub fn sweep_plots(dir: &Path, record: &SweepRecord) -> CliResult<()> {
    let trajectories = record
        .runs
        .iter()
        .zip(&record.outcomes)
        .map(|(r, o)| Series::new(format!("eps={}", r.eps), o.boundary.iter().map(|&(t, b, _)| (t, b)).collect()))
        .collect();
    Plot {
        title: "outer radius across the ladder".into(),
        xlabel: "t".into(),
        ylabel: "b(t)".into(),
        series: trajectories,
    }
    .write(&dir.join("sweep_boundary_radius.svg"))?;
    let mut density = Vec::new();
    for (r, o) in record.runs.iter().zip(&record.outcomes) {
        density.push(Series::new(format!("eps={}", r.eps), o.boundary.iter().map(|&(t, _, d)| (t, d)).collect()));
        let mut s = oracle_series(o);
        s.label = format!("oracle eps={}", r.eps);
        density.push(s);
    }
    Plot {
        title: "boundary density".into(),
        xlabel: "t".into(),
        ylabel: "rho(t, b(t))".into(),
        series: density,
    }
    .write(&dir.join("sweep_boundary_density.svg"))?;
    let pts = |m: bool| {
        record
            .cauchy(m)
            .iter()
            .enumerate()
            .map(|(k, d)| (record.runs[k + 1].eps, d.unwrap_or(f64::NAN)))
            .collect()
    };
    Plot {
        title: "distance between consecutive runs".into(),
        xlabel: "eps".into(),
        ylabel: "d_p".into(),
        series: vec![Series::new("rho", pts(false)), Series::new("m", pts(true))],
    }
    .write(&dir.join("sweep_distances.svg"))
}
