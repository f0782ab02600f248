//! SVG line chart of the mean trajectories in a `runs.csv`: per coordinate,
//! the median across replications with an interquartile band.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::trajectory::{parse_runs_csv, TrajectoryRow};
use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

#[derive(Clone, Debug, PartialEq)]
pub struct BandPoint {
    pub t: u64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesBand {
    pub player: usize,
    pub dim: usize,
    pub points: Vec<BandPoint>,
}

/// Median and quartiles of `mu` across replications for every coordinate and `t`.
pub fn aggregate(rows: &[TrajectoryRow]) -> Vec<SeriesBand> {
    let mut grouped: BTreeMap<(usize, usize), BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        grouped
            .entry((r.player, r.dim))
            .or_default()
            .entry(r.t)
            .or_default()
            .push(r.mu);
    }
    grouped
        .into_iter()
        .map(|((player, dim), by_t)| SeriesBand {
            player,
            dim,
            points: by_t
                .into_iter()
                .map(|(t, mut v)| {
                    v.sort_by(f64::total_cmp);
                    BandPoint {
                        t,
                        q1: quantile_sorted(&v, 0.25),
                        median: quantile_sorted(&v, 0.5),
                        q3: quantile_sorted(&v, 0.75),
                    }
                })
                .collect(),
        })
        .collect()
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub fn render_svg(bands: &[SeriesBand]) -> Result<String> {
    let all = bands.iter().flat_map(|b| &b.points);
    let (mut t_min, mut t_max) = (u64::MAX, 0u64);
    let (mut y_min, mut y_max) = (0.0f64, 0.0f64);
    let mut any = false;
    for p in all {
        any = true;
        t_min = t_min.min(p.t);
        t_max = t_max.max(p.t);
        y_min = y_min.min(p.q1);
        y_max = y_max.max(p.q3);
    }
    if !any {
        return Err(Error::usage("no trajectory rows to plot"));
    }
    if t_max == t_min {
        t_max = t_min + 1;
    }
    let pad = ((y_max - y_min) * 0.05).max(1e-3);
    y_min -= pad;
    y_max += pad;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |t: u64| LEFT + (t - t_min) as f64 / (t_max - t_min) as f64 * plot_w;
    let sy = |y: f64| TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">Mean trajectories (median and interquartile range)</text>"#,
        LEFT + plot_w / 2.0
    );
    // axes
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let t = t_min + (t_max - t_min) * k / 5;
        let x = sx(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#888"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0
        );
        let yv = y_min + (y_max - y_min) * k as f64 / 5.0;
        let y = sy(yv);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#888"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    if y_min < 0.0 && y_max > 0.0 {
        let y0 = sy(0.0);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="#bbb" stroke-dasharray="4 3"/>"##,
            LEFT + plot_w
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration t</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );

    for (n, band) in bands.iter().enumerate() {
        let color = COLORS[n % COLORS.len()];
        let mut poly = String::new();
        for p in &band.points {
            let _ = write!(poly, "{:.2},{:.2} ", sx(p.t), sy(p.q3));
        }
        for p in band.points.iter().rev() {
            let _ = write!(poly, "{:.2},{:.2} ", sx(p.t), sy(p.q1));
        }
        let _ = writeln!(
            s,
            r#"<polygon class="iqr" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            poly.trim_end()
        );
        let mut line = String::new();
        for p in &band.points {
            let _ = write!(line, "{:.2},{:.2} ", sx(p.t), sy(p.median));
        }
        let _ = writeln!(
            s,
            r#"<polyline class="median" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            line.trim_end()
        );
        let ly = TOP + 20.0 * n as f64 + 10.0;
        let lx = WIDTH - RIGHT + 15.0;
        let label = if bands.iter().all(|b| b.dim == 0) {
            format!("mu{}", band.player + 1)
        } else {
            format!("mu{}[{}]", band.player + 1, band.dim)
        };
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{label}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Parses a trajectory CSV and renders it. Empty data is a usage error.
pub fn plot_csv(text: &str) -> Result<String> {
    let rows = parse_runs_csv(text)?;
    if rows.is_empty() {
        return Err(Error::MalformedCsv {
            line: 2,
            message: "no data rows".into(),
        });
    }
    render_svg(&aggregate(&rows))
}
