//! Episode metrics (ATT, AQL, NT) and multi-run summaries.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::sim::EpisodeResult;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("cannot aggregate an empty list of reports")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Average travel time in seconds; vehicles still inside at the horizon
    /// count up to the horizon.
    pub att: f64,
    /// Queued vehicles per signalized intersection, averaged over steps.
    pub aql: f64,
    /// Vehicles that entered and left the network.
    pub nt: usize,
    pub spawned: usize,
    pub completed: usize,
    pub residual: usize,
    /// No vehicle spawned; `att` is reported as zero.
    pub empty_flow: bool,
}

pub fn compute(episode: &EpisodeResult) -> MetricsReport {
    let spawned = episode.vehicles.len();
    let completed = episode.completed();
    let travel: u64 = episode
        .vehicles
        .iter()
        .map(|v| (v.exit_time.unwrap_or(episode.horizon) - v.enter_time) as u64)
        .sum();
    let att = if spawned == 0 { 0.0 } else { travel as f64 / spawned as f64 };
    let denom = episode.horizon as f64 * episode.signalized.max(1) as f64;
    let aql = if episode.horizon == 0 {
        0.0
    } else {
        episode.waiting_total as f64 / denom
    };
    MetricsReport {
        att,
        aql,
        nt: completed,
        spawned,
        completed,
        residual: spawned - completed,
        empty_flow: spawned == 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; zero for a single run.
    pub std: f64,
    pub best: f64,
}

impl Stat {
    fn of(values: &[f64], lower_is_better: bool) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        let best = if lower_is_better {
            values.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        Stat { mean, std, best }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub att: Stat,
    pub aql: Stat,
    pub nt: Stat,
}

pub fn aggregate(reports: &[MetricsReport]) -> Result<Summary, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::Empty);
    }
    let col = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    Ok(Summary {
        runs: reports.len(),
        att: Stat::of(&col(|r| r.att), true),
        aql: Stat::of(&col(|r| r.aql), true),
        nt: Stat::of(&col(|r| r.nt as f64), false),
    })
}

/// One labelled row of a metrics CSV.
#[derive(Debug, Clone)]
pub struct MetricsRow<'a> {
    pub label: &'a str,
    pub seed: u64,
    pub report: MetricsReport,
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow<'_>], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "seed", "att", "aql", "nt", "spawned", "completed", "residual", "empty_flow"])?;
    for r in rows {
        w.write_record([
            r.label.to_string(),
            r.seed.to_string(),
            format!("{:.3}", r.report.att),
            format!("{:.4}", r.report.aql),
            r.report.nt.to_string(),
            r.report.spawned.to_string(),
            r.report.completed.to_string(),
            r.report.residual.to_string(),
            r.report.empty_flow.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(rows: &[(&str, Summary)], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "label", "runs", "att_mean", "att_std", "att_best", "aql_mean", "aql_std", "aql_best", "nt_mean", "nt_std",
        "nt_best",
    ])?;
    for (label, s) in rows {
        w.write_record([
            label.to_string(),
            s.runs.to_string(),
            format!("{:.3}", s.att.mean),
            format!("{:.3}", s.att.std),
            format!("{:.3}", s.att.best),
            format!("{:.4}", s.aql.mean),
            format!("{:.4}", s.aql.std),
            format!("{:.4}", s.aql.best),
            format!("{:.2}", s.nt.mean),
            format!("{:.2}", s.nt.std),
            format!("{:.0}", s.nt.best),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text table of `mean ± std` per metric.
pub fn summary_table(rows: &[(&str, Summary)]) -> String {
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(6);
    let mut s = String::new();
    let _ = writeln!(s, "{:<width$}  {:>4}  {:>18}  {:>16}  {:>16}", "method", "runs", "ATT (s)", "AQL", "NT");
    for (label, m) in rows {
        let _ = writeln!(
            s,
            "{:<width$}  {:>4}  {:>18}  {:>16}  {:>16}",
            label,
            m.runs,
            format!("{:.2} ± {:.2}", m.att.mean, m.att.std),
            format!("{:.3} ± {:.3}", m.aql.mean, m.aql.std),
            format!("{:.1} ± {:.1}", m.nt.mean, m.nt.std),
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::VehicleRecord;

    fn episode(horizon: u32, signalized: usize, vehicles: Vec<VehicleRecord>, waiting: Vec<u32>) -> EpisodeResult {
        EpisodeResult {
            horizon,
            signalized,
            vehicles,
            waiting_total: waiting.iter().map(|&w| w as u64).sum(),
            waiting_series: waiting,
            phase_log: Vec::new(),
            trace: None,
        }
    }

    fn report(att: f64, nt: usize) -> MetricsReport {
        MetricsReport {
            att,
            aql: 0.0,
            nt,
            spawned: nt,
            completed: nt,
            residual: 0,
            empty_flow: false,
        }
    }

    #[test]
    fn single_vehicle() {
        let ep = episode(
            200,
            1,
            vec![VehicleRecord {
                enter_time: 10,
                exit_time: Some(110),
            }],
            vec![0; 200],
        );
        let m = compute(&ep);
        assert_eq!((m.att, m.nt, m.residual), (100.0, 1, 0));
    }

    #[test]
    fn constant_queue_aql() {
        let ep = episode(3600, 12, Vec::new(), vec![24; 3600]);
        let m = compute(&ep);
        assert_eq!(m.aql, 2.0);
        assert!(m.empty_flow);
        assert_eq!(m.att, 0.0);
    }

    #[test]
    fn residual_vehicles_count_to_horizon() {
        let v = |t| VehicleRecord {
            enter_time: t,
            exit_time: None,
        };
        let ep = episode(100, 1, vec![v(0), v(50), v(90)], vec![0; 100]);
        let m = compute(&ep);
        assert_eq!(m.nt, 0);
        assert_eq!(m.residual, 3);
        assert_eq!(m.att, (100.0 + 50.0 + 10.0) / 3.0);
    }

    #[test]
    fn aggregate_stats() {
        assert_eq!(aggregate(&[]), Err(MetricsError::Empty));
        let one = aggregate(&[report(300.0, 5)]).unwrap();
        assert_eq!(one.att.std, 0.0);
        let two = aggregate(&[report(300.0, 100), report(310.0, 90)]).unwrap();
        assert_eq!(two.att.mean, 305.0);
        assert_eq!(two.att.best, 300.0);
        assert_eq!(two.nt.best, 100.0);
        assert!((two.att.std - 50f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn csv_and_table() {
        let rows = [MetricsRow {
            label: "fixed",
            seed: 3,
            report: report(12.5, 4),
        }];
        let mut buf = Vec::new();
        write_metrics_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "label,seed,att,aql,nt,spawned,completed,residual,empty_flow\nfixed,3,12.500,0.0000,4,4,4,0,false\n"
        );
        let s = aggregate(&[rows[0].report]).unwrap();
        let table = summary_table(&[("fixed", s)]);
        assert!(table.contains("12.50 ± 0.00"));
    }
}
