//! Reports derived from run records: per-group quartiles, the pairwise
//! significance counting table and boxplot data.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use egp_core::stats::{self, DEFAULT_ALPHA};
use serde::{Deserialize, Serialize};

use crate::config::PlotExclude;
use crate::results::{self, LongRow, RunResult, PHASES};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            q1: stats::quantile(xs, 0.25),
            median: stats::median(xs),
            q3: stats::quantile(xs, 0.75),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub method: String,
    pub dataset: String,
    pub phase: String,
    pub runs: usize,
    pub accuracy_q1: f64,
    pub accuracy_median: f64,
    pub accuracy_q3: f64,
    pub nodes_q1: f64,
    pub nodes_median: f64,
    pub nodes_q3: f64,
    pub units_q1: f64,
    pub units_median: f64,
    pub units_q3: f64,
}

/// Number of significantly better pairwise results per method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub method: String,
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub groups: Vec<GroupSummary>,
    pub significance: Vec<SignificanceRow>,
    pub boxplot: Vec<LongRow>,
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_owned());
        }
    }
    out
}

/// Summarizes run records. Methods and datasets appear in first-seen order.
pub fn summarize(results: &[RunResult], excludes: &[PlotExclude], alpha: f64) -> Result<Report, CliError> {
    if results.is_empty() {
        return Err(CliError::Data("no results to summarize".into()));
    }
    let methods = first_seen(results.iter().map(|r| r.method.as_str()));
    let datasets = first_seen(results.iter().map(|r| r.dataset.as_str()));
    let as_f64 = |rows: &[&RunResult], f: fn(&RunResult) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();

    let mut groups = Vec::new();
    for d in &datasets {
        for m in &methods {
            let rows: Vec<&RunResult> = results.iter().filter(|r| &r.method == m && &r.dataset == d).collect();
            if rows.is_empty() {
                continue;
            }
            let nodes = Quartiles::of(&as_f64(&rows, |r| r.total_nodes as f64));
            let units = Quartiles::of(&as_f64(&rows, |r| r.n_units as f64));
            for phase in PHASES {
                let acc: Vec<f64> = rows.iter().map(|r| r.accuracy(phase)).collect();
                let a = Quartiles::of(&acc);
                groups.push(GroupSummary {
                    method: m.clone(),
                    dataset: d.clone(),
                    phase: phase.to_owned(),
                    runs: rows.len(),
                    accuracy_q1: a.q1,
                    accuracy_median: a.median,
                    accuracy_q3: a.q3,
                    nodes_q1: nodes.q1,
                    nodes_median: nodes.median,
                    nodes_q3: nodes.q3,
                    units_q1: units.q1,
                    units_median: units.median,
                    units_q3: units.q3,
                });
            }
        }
    }

    let mut counts = [vec![0; methods.len()], vec![0; methods.len()]];
    if methods.len() >= 2 {
        for (p, phase) in PHASES.iter().enumerate() {
            let table: Vec<Vec<Vec<f64>>> = datasets
                .iter()
                .map(|d| {
                    methods
                        .iter()
                        .map(|m| {
                            results
                                .iter()
                                .filter(|r| &r.method == m && &r.dataset == d)
                                .map(|r| r.accuracy(phase))
                                .collect()
                        })
                        .collect()
                })
                .collect();
            counts[p] = stats::pairwise_significance_counts(&table, alpha)?;
        }
    }
    let significance = methods
        .iter()
        .enumerate()
        .map(|(i, m)| SignificanceRow {
            method: m.clone(),
            train: counts[0][i],
            test: counts[1][i],
        })
        .collect();

    let boxplot = results::long_format(results)
        .into_iter()
        .filter(|row| !excludes.iter().any(|e| e.matches(&row.dataset, &row.phase, row.accuracy)))
        .collect();

    Ok(Report {
        groups,
        significance,
        boxplot,
    })
}

pub fn summarize_default(results: &[RunResult], excludes: &[PlotExclude]) -> Result<Report, CliError> {
    summarize(results, excludes, DEFAULT_ALPHA)
}

impl Report {
    /// The counting table as aligned text.
    pub fn significance_text(&self) -> String {
        let width = self.significance.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
        let mut s = format!("{:<width$}  {:>8}  {:>8}\n", "method", "train", "test");
        for r in &self.significance {
            let _ = writeln!(s, "{:<width$}  {:>8}  {:>8}", r.method, r.train, r.test);
        }
        s
    }

    /// Median accuracies (percent) and node counts as aligned text.
    pub fn summary_text(&self) -> String {
        let mw = self.groups.iter().map(|g| g.method.len()).max().unwrap_or(0).max(6);
        let dw = self.groups.iter().map(|g| g.dataset.len()).max().unwrap_or(0).max(7);
        let mut s = format!(
            "{:<dw$}  {:<mw$}  {:<5}  {:>9}  {:>9}  {:>9}  {:>7}  {:>6}\n",
            "dataset", "method", "phase", "acc_q1", "acc_med", "acc_q3", "nodes", "units"
        );
        for g in &self.groups {
            let _ = writeln!(
                s,
                "{:<dw$}  {:<mw$}  {:<5}  {:>9.2}  {:>9.2}  {:>9.2}  {:>7.1}  {:>6.1}",
                g.dataset,
                g.method,
                g.phase,
                100.0 * g.accuracy_q1,
                100.0 * g.accuracy_median,
                100.0 * g.accuracy_q3,
                g.nodes_median,
                g.units_median
            );
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let file = |name: &str| dir.join(name);
        results::write_csv_file(&file("summary.csv"), &[], &self.groups)?;
        results::write_csv_file(&file("significance.csv"), &["method", "train", "test"], &self.significance)?;
        results::write_csv_file(&file("boxplot.csv"), &results::LONG_COLUMNS, &self.boxplot)?;
        let text = format!("{}\n{}", self.summary_text(), self.significance_text());
        fs::write(file("report.txt"), text).map_err(|e| CliError::io(file("report.txt"), e))
    }
}
