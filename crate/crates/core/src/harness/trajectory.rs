//! Trajectory and summary CSV files.
//!
//! `runs.csv` has one row per `(replication, t, player, dim)`:
//!
//! ```text
//! replication,t,player,dim,mu,x,payoff,gamma,sigma,epsilon,dist_ref
//! ```
//!
//! Floats are written in scientific notation with 17 significant digits so
//! every value parses back to the identical `f64`. An absent `dist_ref` is an
//! empty field. Lines end with `\n`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::learner::IterationRecord;

pub const RUNS_HEADER: &str = "replication,t,player,dim,mu,x,payoff,gamma,sigma,epsilon,dist_ref";
pub const SUMMARY_HEADER: &str = "replication,final_dist,first_hit_0p1,wall_ms";

/// Distance to the reference equilibrium counted as a "hit".
pub const HIT_RADIUS: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub replication: u64,
    pub t: u64,
    pub player: usize,
    pub dim: usize,
    pub mu: f64,
    pub x: f64,
    pub payoff: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub dist_ref: Option<f64>,
}

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

impl TrajectoryRow {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            self.replication,
            self.t,
            self.player,
            self.dim,
            fmt_float(self.mu),
            fmt_float(self.x),
            fmt_float(self.payoff),
            fmt_float(self.gamma),
            fmt_float(self.sigma),
            fmt_float(self.epsilon),
            fmt_opt(self.dist_ref),
        )
    }
}

/// Expands one record into its per-coordinate rows.
pub fn rows_for_record(
    replication: u64,
    dim: usize,
    rec: &IterationRecord,
) -> impl Iterator<Item = TrajectoryRow> + '_ {
    (0..rec.mu.len()).map(move |idx| TrajectoryRow {
        replication,
        t: rec.t,
        player: idx / dim,
        dim: idx % dim,
        mu: rec.mu[idx],
        x: rec.x[idx],
        payoff: rec.payoff[idx / dim],
        gamma: rec.gamma,
        sigma: rec.sigma,
        epsilon: rec.epsilon,
        dist_ref: rec.dist_to_ref,
    })
}

pub fn write_header<W: Write>(w: &mut W) -> Result<()> {
    writeln!(w, "{RUNS_HEADER}")?;
    Ok(())
}

pub fn write_records<W: Write>(
    w: &mut W,
    replication: u64,
    dim: usize,
    records: &[IterationRecord],
) -> Result<()> {
    for rec in records {
        for row in rows_for_record(replication, dim, rec) {
            w.write_all(row.to_line().as_bytes())?;
        }
    }
    Ok(())
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    idx: usize,
    name: &str,
    line: u64,
) -> Result<T> {
    let raw = rec.get(idx).unwrap_or("");
    raw.trim().parse().map_err(|_| Error::MalformedCsv {
        line,
        message: format!("bad {name} value '{raw}'"),
    })
}

/// Parses a `runs.csv` body. The header must match [`RUNS_HEADER`] exactly.
pub fn parse_runs_csv(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut saw_header = false;
    for result in reader.records() {
        let rec = result.map_err(|e| Error::MalformedCsv {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if !saw_header {
            let header: Vec<&str> = rec.iter().collect();
            if header.join(",") != RUNS_HEADER {
                return Err(Error::MalformedCsv {
                    line,
                    message: format!("expected header '{RUNS_HEADER}'"),
                });
            }
            saw_header = true;
            continue;
        }
        if rec.len() != 11 {
            return Err(Error::MalformedCsv {
                line,
                message: format!("expected 11 fields, found {}", rec.len()),
            });
        }
        let dist_raw = rec.get(10).unwrap_or("").trim();
        rows.push(TrajectoryRow {
            replication: field(&rec, 0, "replication", line)?,
            t: field(&rec, 1, "t", line)?,
            player: field(&rec, 2, "player", line)?,
            dim: field(&rec, 3, "dim", line)?,
            mu: field(&rec, 4, "mu", line)?,
            x: field(&rec, 5, "x", line)?,
            payoff: field(&rec, 6, "payoff", line)?,
            gamma: field(&rec, 7, "gamma", line)?,
            sigma: field(&rec, 8, "sigma", line)?,
            epsilon: field(&rec, 9, "epsilon", line)?,
            dist_ref: if dist_raw.is_empty() {
                None
            } else {
                Some(field(&rec, 10, "dist_ref", line)?)
            },
        });
    }
    if !saw_header {
        return Err(Error::MalformedCsv {
            line: 1,
            message: "missing header".into(),
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub replication: u64,
    pub final_dist: Option<f64>,
    /// First recorded iteration whose distance to the reference is at most
    /// [`HIT_RADIUS`]. Computed from the emitted (possibly thinned) records.
    pub first_hit_0p1: Option<u64>,
    pub wall_ms: f64,
}

impl RunSummary {
    pub fn from_records(replication: u64, records: &[IterationRecord], wall_ms: f64) -> Self {
        Self {
            replication,
            final_dist: records.last().and_then(|r| r.dist_to_ref),
            first_hit_0p1: first_hit(records.iter().map(|r| (r.t, r.dist_to_ref))),
            wall_ms,
        }
    }
}

/// First `t` whose distance is within [`HIT_RADIUS`].
pub fn first_hit(points: impl IntoIterator<Item = (u64, Option<f64>)>) -> Option<u64> {
    points
        .into_iter()
        .find(|(_, d)| d.is_some_and(|d| d <= HIT_RADIUS))
        .map(|(t, _)| t)
}

pub fn write_summary<W: Write>(w: &mut W, summaries: &[RunSummary]) -> Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for s in summaries {
        writeln!(
            w,
            "{},{},{},{:.3}",
            s.replication,
            fmt_opt(s.final_dist),
            s.first_hit_0p1.map(|t| t.to_string()).unwrap_or_default(),
            s.wall_ms
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(t: u64, d: Option<f64>) -> IterationRecord {
        IterationRecord {
            t,
            mu: vec![0.25, -1.0 / 3.0],
            x: vec![1e-300, -7.5],
            payoff: vec![0.1, -0.1],
            gamma: 1.0,
            sigma: 0.5,
            epsilon: 0.0,
            dist_to_ref: d,
        }
    }

    #[test]
    fn header_and_row_layout() {
        let mut buf = Vec::new();
        write_header(&mut buf).unwrap();
        write_records(&mut buf, 3, 1, &[record(7, Some(0.5))]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], RUNS_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(
            lines[1].starts_with("3,7,0,0,2.5000000000000000e-1,"),
            "{}",
            lines[1]
        );
        assert!(
            lines[2].starts_with("3,7,1,0,-3.3333333333333331e-1,"),
            "{}",
            lines[2]
        );
        assert!(!text.contains('\r'));
        let rows = parse_runs_csv(&text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].payoff, -0.1);
        assert_eq!(rows[0].x, 1e-300);
    }

    #[test]
    fn missing_distance_is_empty_field() {
        let mut buf = Vec::new();
        write_header(&mut buf).unwrap();
        write_records(&mut buf, 0, 2, &[record(1, None)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(','));
        let rows = parse_runs_csv(&text).unwrap();
        assert_eq!(rows[0].dist_ref, None);
        // dim 2: both coordinates belong to player 0
        assert_eq!((rows[1].player, rows[1].dim), (0, 1));
    }

    #[test]
    fn malformed_input_reports_line() {
        let bad = format!("{RUNS_HEADER}\n0,1,0,0,1,1,1,1,1,1,\n0,2,0,0,oops,1,1,1,1,1,\n");
        match parse_runs_csv(&bad) {
            Err(Error::MalformedCsv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_runs_csv("a,b\n"),
            Err(Error::MalformedCsv { line: 1, .. })
        ));
        assert!(parse_runs_csv("").is_err());
        let short = format!("{RUNS_HEADER}\n0,1,0\n");
        assert!(matches!(
            parse_runs_csv(&short),
            Err(Error::MalformedCsv { line: 2, .. })
        ));
    }

    #[test]
    fn first_hit_uses_radius() {
        let recs = [
            record(1, Some(0.5)),
            record(2, Some(0.1)),
            record(3, Some(0.01)),
        ];
        let s = RunSummary::from_records(0, &recs, 1.0);
        assert_eq!(s.first_hit_0p1, Some(2));
        assert_eq!(s.final_dist, Some(0.01));
        assert_eq!(first_hit([(1, None), (2, Some(0.2))]), None);
    }

    proptest! {
        #[test]
        fn rows_round_trip(
            rep in 0u64..1000,
            t in 1u64..1_000_000,
            mu in -1e6f64..1e6,
            x in prop::num::f64::NORMAL,
            payoff in prop::num::f64::NORMAL,
            sigma in 1e-9f64..1.0,
            dist in prop::option::of(0.0f64..10.0),
        ) {
            let row = TrajectoryRow {
                replication: rep, t, player: 1, dim: 0, mu, x, payoff,
                gamma: sigma * 0.5, sigma, epsilon: sigma.sqrt(), dist_ref: dist,
            };
            let text = format!("{RUNS_HEADER}\n{}", row.to_line());
            let parsed = parse_runs_csv(&text).unwrap();
            prop_assert_eq!(parsed.len(), 1);
            prop_assert_eq!(&parsed[0], &row);
        }
    }
}
