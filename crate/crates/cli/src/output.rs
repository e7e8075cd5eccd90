//! CSV traces and run summaries.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentKind;

/// A trace: one row per step, `t` first.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Column names after `t`.
    pub columns: Vec<String>,
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, t: usize, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push((t, values));
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|(_, r)| r[k]).collect())
    }
}

/// Seventeen significant digits, enough to recover every `f64` exactly.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: io::Write>(table: &Table, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("t").chain(table.columns.iter().map(String::as_str)))?;
    for (t, row) in &table.rows {
        w.write_record(std::iter::once(t.to_string()).chain(row.iter().map(|v| format_value(*v))))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_csv(table, io::BufWriter::new(file)).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Table> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.get(0) != Some("t") {
        return Err(anyhow!("first column must be t"));
    }
    let mut table = Table::new(header.iter().skip(1).map(str::to_string).collect());
    for (k, record) in r.records().enumerate() {
        let record = record?;
        let line = k + 2;
        let t: usize = record[0].parse().map_err(|_| anyhow!("line {line}: bad step `{}`", &record[0]))?;
        let values = record
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|_| anyhow!("line {line}: bad value `{v}`")))
            .collect::<Result<Vec<_>>>()?;
        table.push(t, values);
    }
    Ok(table)
}

pub fn load_csv(path: &Path) -> Result<Table> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_csv(file).with_context(|| format!("in {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub seed: u64,
    pub horizon: usize,
    /// Final residuals, distances and regrets of this run.
    pub metrics: BTreeMap<String, f64>,
    pub violations: usize,
    pub error: Option<String>,
    pub wall_clock_secs: f64,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub errors: usize,
    pub violations: usize,
    /// Mean of every metric over the runs that report it.
    pub mean: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub kind: ExperimentKind,
    pub runs: Vec<RunSummary>,
    pub aggregate: Aggregate,
    pub wall_clock_secs: f64,
}

impl ExperimentSummary {
    pub fn new(kind: ExperimentKind, runs: Vec<RunSummary>, wall_clock_secs: f64) -> Self {
        let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for run in &runs {
            for (name, v) in &run.metrics {
                let e = sums.entry(name.clone()).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
        }
        let aggregate = Aggregate {
            runs: runs.len(),
            errors: runs.iter().filter(|r| r.error.is_some()).count(),
            violations: runs.iter().map(|r| r.violations).sum(),
            mean: sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
        };
        ExperimentSummary {
            kind,
            runs,
            aggregate,
            wall_clock_secs,
        }
    }

    pub fn success(&self) -> bool {
        self.aggregate.errors == 0 && self.aggregate.violations == 0
    }

    pub fn render(&self) -> String {
        let a = &self.aggregate;
        let mut out = format!(
            "{}: {} runs, {} errors, {} bound violations, {:.2}s\n",
            self.kind, a.runs, a.errors, a.violations, self.wall_clock_secs
        );
        for (name, v) in &a.mean {
            out.push_str(&format!("  mean {name} = {v:.6e}\n"));
        }
        for run in self.runs.iter().filter(|r| r.error.is_some()) {
            out.push_str(&format!("  error in {}: {}\n", run.label, run.error.as_deref().unwrap_or("")));
        }
        out
    }
}
