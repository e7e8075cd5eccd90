//! Plain-text market files.
//!
//! ```text
//! # buyers goods utility
//! 2 2 cobb-douglas
//! # budget, then one valuation per good
//! 1.0 0.5 0.5
//! 2.0 0.75 0.25
//! # supplies
//! 1.0 1.0
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Numbers are written
//! in shortest round-trip form, so `read(write(m)) == m` bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use stackelberg_core::fisher::{FisherMarket, UtilityKind};

pub fn write_market(market: &FisherMarket) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# buyers goods utility");
    let _ = writeln!(out, "{} {} {}", market.buyers(), market.goods(), market.kind().name());
    let _ = writeln!(out, "# budget, then one valuation per good");
    for (b, row) in market.budgets().iter().zip(market.valuations()) {
        let _ = write!(out, "{b:?}");
        for v in row {
            let _ = write!(out, " {v:?}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "# supplies");
    let supplies: Vec<String> = market.supplies().iter().map(|s| format!("{s:?}")).collect();
    let _ = writeln!(out, "{}", supplies.join(" "));
    out
}

fn numbers(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| tok.parse::<f64>().map_err(|_| anyhow!("line {lineno}: `{tok}` is not a number")))
        .collect()
}

pub fn parse_market(text: &str) -> Result<FisherMarket> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (lineno, header) = lines.next().ok_or_else(|| anyhow!("empty market file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [n, m, kind] = fields[..] else {
        bail!("line {lineno}: expected `buyers goods utility`");
    };
    let n: usize = n.parse().map_err(|_| anyhow!("line {lineno}: bad buyer count `{n}`"))?;
    let m: usize = m.parse().map_err(|_| anyhow!("line {lineno}: bad good count `{m}`"))?;
    let kind = UtilityKind::from_name(kind).ok_or_else(|| anyhow!("line {lineno}: unknown utility `{kind}`"))?;
    let mut budgets = Vec::with_capacity(n);
    let mut valuations = Vec::with_capacity(n);
    for i in 0..n {
        let (lineno, line) = lines.next().ok_or_else(|| anyhow!("missing row for buyer {i}"))?;
        let row = numbers(line, lineno)?;
        if row.len() != m + 1 {
            bail!("line {lineno}: expected a budget and {m} valuations, found {} numbers", row.len());
        }
        budgets.push(row[0]);
        valuations.push(row[1..].to_vec());
    }
    let (lineno, line) = lines.next().ok_or_else(|| anyhow!("missing supply row"))?;
    let supplies = numbers(line, lineno)?;
    if supplies.len() != m {
        bail!("line {lineno}: expected {m} supplies, found {}", supplies.len());
    }
    if let Some((lineno, _)) = lines.next() {
        bail!("line {lineno}: unexpected content after the supply row");
    }
    let normalized = kind != UtilityKind::CobbDouglas
        || valuations.iter().all(|r| (r.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    let market = if normalized {
        FisherMarket::with_normalized_valuations(kind, valuations, budgets, supplies)
    } else {
        FisherMarket::new(kind, valuations, budgets, supplies)
    };
    market.map_err(|e| anyhow!("invalid market: {e}"))
}

pub fn read_market(path: &Path) -> Result<FisherMarket> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read market file {}", path.display()))?;
    parse_market(&text).with_context(|| format!("in market file {}", path.display()))
}
