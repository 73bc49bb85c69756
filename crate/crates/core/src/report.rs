//! Analysis tables built from score reports: per-event-type AC deltas in
//! training-frequency order, side-by-side variant comparisons, and CSV files
//! for plotting.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::SplitStats;
use crate::error::{Error, Result};
use crate::parse_eval::ScoreReport;

pub const PLOT_HEADER: [&str; 6] = ["rank", "event_type", "train_count", "ac_a", "ac_b", "delta"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    /// 0 for the most frequent training type.
    pub rank: usize,
    pub event_type: String,
    pub train_count: usize,
    pub ac_a: f64,
    pub ac_b: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub ac_a: f64,
    pub ac_b: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub rows: Vec<FrequencyRow>,
    /// Unweighted mean over rows.
    pub macro_avg: Averages,
    /// Corpus-level AC of each report.
    pub micro: Averages,
}

impl FrequencyTable {
    pub fn to_tsv(&self) -> String {
        let mut out = PLOT_HEADER.join("\t");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.2}\t{:.2}\t{:+.2}",
                r.rank,
                r.event_type,
                r.train_count,
                r.ac_a * 100.0,
                r.ac_b * 100.0,
                r.delta * 100.0
            );
        }
        for (name, a) in [("macro", self.macro_avg), ("micro", self.micro)] {
            let _ = writeln!(out, "\t{name}\t\t{:.2}\t{:.2}\t{:+.2}", a.ac_a * 100.0, a.ac_b * 100.0, a.delta * 100.0);
        }
        out
    }
}

/// AC F1 per event type for two runs, rows ordered by descending training
/// frequency with ties broken by type name. `delta = b - a`.
pub fn frequency_delta(a: &ScoreReport, b: &ScoreReport, train: &SplitStats) -> Result<FrequencyTable> {
    if !a.per_type.keys().eq(b.per_type.keys()) {
        return Err(Error::Precondition(
            "reports cover different event types and cannot be compared".into(),
        ));
    }
    let mut types: Vec<(&String, usize)> = a.per_type.keys().map(|t| (t, train.count_of(t))).collect();
    types.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(y.0)));
    let rows: Vec<FrequencyRow> = types
        .into_iter()
        .enumerate()
        .map(|(rank, (t, count))| {
            let (ac_a, ac_b) = (a.per_type[t].ac.f1, b.per_type[t].ac.f1);
            FrequencyRow {
                rank,
                event_type: t.clone(),
                train_count: count,
                ac_a,
                ac_b,
                delta: ac_b - ac_a,
            }
        })
        .collect();
    let n = rows.len().max(1) as f64;
    let mean = |f: fn(&FrequencyRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let macro_avg = Averages {
        ac_a: mean(|r| r.ac_a),
        ac_b: mean(|r| r.ac_b),
        delta: mean(|r| r.delta),
    };
    let micro = Averages {
        ac_a: a.overall.ac.f1,
        ac_b: b.overall.ac.f1,
        delta: b.overall.ac.f1 - a.overall.ac.f1,
    };
    Ok(FrequencyTable { rows, macro_avg, micro })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rank {
    Best,
    Second,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    /// TI, TC, AI, AC F1 as percentages rounded to 2 decimals.
    pub values: [f64; 4],
    pub ranks: [Rank; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

const METRICS: [&str; 4] = ["TI", "TC", "AI", "AC"];

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn cell(v: f64, r: Rank) -> String {
    match r {
        Rank::Best => format!("{v:.2}*"),
        Rank::Second => format!("{v:.2}+"),
        Rank::Other => format!("{v:.2}"),
    }
}

impl ComparisonTable {
    /// Tab-separated; `*` marks the best value per column and `+` the second.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("variant\t{}\n", METRICS.join("\t"));
        for r in &self.rows {
            let cells: Vec<String> = (0..4).map(|k| cell(r.values[k], r.ranks[k])).collect();
            let _ = writeln!(out, "{}\t{}", r.name, cells.join("\t"));
        }
        out
    }

    /// Space-aligned version of [`Self::to_tsv`].
    pub fn to_text(&self) -> String {
        let mut grid: Vec<Vec<String>> = vec![std::iter::once("variant".to_string())
            .chain(METRICS.iter().map(|m| m.to_string()))
            .collect()];
        for r in &self.rows {
            grid.push(
                std::iter::once(r.name.clone())
                    .chain((0..4).map(|k| cell(r.values[k], r.ranks[k])))
                    .collect(),
            );
        }
        let widths: Vec<usize> = (0..5)
            .map(|c| grid.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in grid {
            let mut line = format!("{:<w$}", row[0], w = widths[0]);
            for c in 1..5 {
                let _ = write!(line, "  {:>w$}", row[c], w = widths[c]);
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

/// One row per named report, in the order given.
pub fn comparison_table(reports: &[(String, ScoreReport)]) -> ComparisonTable {
    let mut rows: Vec<ComparisonRow> = reports
        .iter()
        .map(|(name, r)| {
            let o = &r.overall;
            ComparisonRow {
                name: name.clone(),
                values: [o.ti.f1, o.tc.f1, o.ai.f1, o.ac.f1].map(|v| round2(v * 100.0)),
                ranks: [Rank::Other; 4],
            }
        })
        .collect();
    for k in 0..4 {
        let mut distinct: Vec<f64> = rows.iter().map(|r| r.values[k]).collect();
        distinct.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
        distinct.dedup();
        for row in &mut rows {
            row.ranks[k] = match distinct.iter().position(|&v| v == row.values[k]) {
                Some(0) => Rank::Best,
                Some(1) => Rank::Second,
                _ => Rank::Other,
            };
        }
    }
    ComparisonTable { rows }
}

/// Writes the frequency table as CSV with a header row. An empty table gives
/// a header-only file.
pub fn emit_plot_data(table: &FrequencyTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    w.write_record(PLOT_HEADER)?;
    for r in &table.rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_plot_data(path: impl AsRef<Path>) -> Result<Vec<FrequencyRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != PLOT_HEADER {
        return Err(Error::Precondition(format!(
            "{}: expected header {}, found {}",
            path.display(),
            PLOT_HEADER.join(","),
            header.join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
