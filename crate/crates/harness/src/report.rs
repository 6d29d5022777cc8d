//! Scoring and report emission.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use t4d_core::convert::{HintKind, T4DInstance};
use t4d_core::prompts::Strategy;

use crate::error::{HarnessError, Result};
use crate::eval::EvalRecord;

/// "base" without hints, otherwise "+QD", "+ToM+CSA", ...
pub fn hint_condition(hints: &[HintKind]) -> String {
    if hints.is_empty() {
        return "base".into();
    }
    let mut kinds = hints.to_vec();
    kinds.sort();
    kinds.iter().map(|k| format!("+{k}")).collect()
}

fn family_rank(group: &str) -> usize {
    ["tomi", "d1", "d2", "d3", "faux-pas"].iter().position(|g| *g == group).unwrap_or(usize::MAX)
}

fn hint_rank(hint: &str) -> usize {
    ["base", "+QD", "+ToM", "+CSA"].iter().position(|h| *h == hint).unwrap_or(usize::MAX)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub backend: String,
    pub strategy: Strategy,
    pub family: String,
    pub hint: String,
    pub n: usize,
    pub correct: usize,
    pub unparseable: usize,
    pub errors: usize,
    pub accuracy: f64,
    pub unparseable_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub cells: Vec<Cell>,
    /// Expected accuracy of uniform guessing over the evaluated instances.
    pub random_baseline: f64,
    pub random_baseline_by_family: BTreeMap<String, f64>,
}

/// Mean of 1/|options| over the dataset.
pub fn random_baseline(dataset: &[T4DInstance]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    Ok(dataset.iter().map(|i| 1.0 / i.options.len() as f64).sum::<f64>() / dataset.len() as f64)
}

type CellKey = (String, Strategy, usize, String, usize, String);

pub fn score_records(records: &[EvalRecord]) -> Result<Report> {
    if records.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    let mut cells: BTreeMap<CellKey, Cell> = BTreeMap::new();
    for r in records {
        let family = r.family.group().to_string();
        let key = (
            r.backend.clone(),
            r.strategy,
            family_rank(&family),
            family.clone(),
            hint_rank(&r.hint),
            r.hint.clone(),
        );
        let cell = cells.entry(key).or_insert_with(|| Cell {
            backend: r.backend.clone(),
            strategy: r.strategy,
            family,
            hint: r.hint.clone(),
            n: 0,
            correct: 0,
            unparseable: 0,
            errors: 0,
            accuracy: 0.0,
            unparseable_rate: 0.0,
        });
        cell.n += 1;
        cell.correct += usize::from(r.correct);
        if r.error.is_some() {
            cell.errors += 1;
        } else if r.parsed.is_unparseable() {
            cell.unparseable += 1;
        }
    }
    let cells: Vec<Cell> = cells
        .into_values()
        .map(|mut c| {
            c.accuracy = c.correct as f64 / c.n as f64;
            c.unparseable_rate = c.unparseable as f64 / c.n as f64;
            c
        })
        .collect();

    // Each evaluated instance counts once, whatever the grid around it.
    let mut seen = BTreeSet::new();
    let mut by_family: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let (mut total, mut count) = (0.0, 0usize);
    for r in records {
        if seen.insert((&r.instance_id, &r.hint)) {
            let p = 1.0 / r.n_options as f64;
            total += p;
            count += 1;
            let e = by_family.entry(r.family.group().to_string()).or_default();
            e.0 += p;
            e.1 += 1;
        }
    }
    Ok(Report {
        cells,
        random_baseline: total / count as f64,
        random_baseline_by_family: by_family.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    TableText,
    Csv,
    RecordLines,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::TableText => "txt",
            ReportFormat::Csv => "csv",
            ReportFormat::RecordLines => "jsonl",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table-text" | "table" | "text" => Ok(ReportFormat::TableText),
            "csv" => Ok(ReportFormat::Csv),
            "record-lines" | "jsonl" => Ok(ReportFormat::RecordLines),
            other => Err(HarnessError::Config(format!("unknown report format {other:?}"))),
        }
    }
}

fn table_text(report: &Report) -> String {
    let header = ["backend", "strategy", "family", "hint", "n", "accuracy", "unparseable", "errors"];
    let rows: Vec<[String; 8]> = report
        .cells
        .iter()
        .map(|c| {
            [
                c.backend.clone(),
                c.strategy.to_string(),
                c.family.clone(),
                c.hint.clone(),
                c.n.to_string(),
                format!("{:.3}", c.accuracy),
                format!("{:.3}", c.unparseable_rate),
                c.errors.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(header.to_vec(), &mut out);
    line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect(), &mut out);
    for row in &rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "random baseline: {:.4}", report.random_baseline);
    for (family, b) in &report.random_baseline_by_family {
        let _ = writeln!(out, "random baseline ({family}): {b:.4}");
    }
    out
}

fn csv_text(report: &Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["backend", "strategy", "family", "hint", "n", "accuracy", "unparseable_rate"])?;
    for c in &report.cells {
        w.write_record([
            c.backend.clone(),
            c.strategy.to_string(),
            c.family.clone(),
            c.hint.clone(),
            c.n.to_string(),
            format!("{:.6}", c.accuracy),
            format!("{:.6}", c.unparseable_rate),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_report(report: &Report, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::TableText => Ok(table_text(report)),
        ReportFormat::Csv => csv_text(report),
        ReportFormat::RecordLines => {
            let mut out = String::new();
            for c in &report.cells {
                out.push_str(&serde_json::to_string(c)?);
                out.push('\n');
            }
            Ok(out)
        }
    }
}

pub fn emit_report(report: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    fs::write(path, render_report(report, format)?)?;
    Ok(())
}
