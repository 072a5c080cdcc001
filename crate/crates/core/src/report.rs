//! Result tables rendered as aligned text, CSV or JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{aggregate, AccuracyCell, EvalRecord, Grouping, McNemar};
use crate::parser::PARSER_VERSION;

pub const MAIN_COLUMNS: [&str; 11] = [
    "Family", "Size", "Style", "Color", "Overall", "Easy", "Med", "Hard", "Latin", "CJK", "Other",
];

pub const PARSE_FAIL_COLUMN: &str = "ParseFail";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub name: String,
    pub cells: Vec<(String, AccuracyCell)>,
}

impl ReportRow {
    pub fn cell(&self, column: &str) -> Option<&AccuracyCell> {
        self.cells.iter().find(|(c, _)| c == column).map(|(_, cell)| cell)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub first: String,
    pub second: String,
    pub result: McNemar,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub parser_version: String,
    pub tables: Vec<Table>,
    pub comparisons: Vec<Comparison>,
}

/// Per-property, per-difficulty, per-script-group and overall accuracy.
pub fn main_row(name: &str, records: &[EvalRecord]) -> ReportRow {
    let mut cells: BTreeMap<String, AccuracyCell> = BTreeMap::new();
    for g in [Grouping::Property, Grouping::Difficulty, Grouping::ScriptGroup, Grouping::Overall] {
        cells.extend(aggregate(records, g));
    }
    ReportRow {
        name: name.to_string(),
        cells: MAIN_COLUMNS
            .iter()
            .map(|c| (c.to_string(), cells[*c]))
            .collect(),
    }
}

pub fn main_table(runs: &[(String, Vec<EvalRecord>)]) -> Table {
    Table {
        title: "Accuracy (%)".into(),
        columns: MAIN_COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows: runs.iter().map(|(name, recs)| main_row(name, recs)).collect(),
    }
}

pub fn grouping_table(title: &str, grouping: Grouping, runs: &[(String, Vec<EvalRecord>)]) -> Table {
    let columns: Vec<String> = aggregate(&[], grouping).into_iter().map(|(k, _)| k).collect();
    Table {
        title: title.to_string(),
        columns,
        rows: runs
            .iter()
            .map(|(name, recs)| ReportRow {
                name: name.clone(),
                cells: aggregate(recs, grouping),
            })
            .collect(),
    }
}

impl Report {
    pub fn new(tables: Vec<Table>, comparisons: Vec<Comparison>) -> Self {
        Report {
            parser_version: PARSER_VERSION.to_string(),
            tables,
            comparisons,
        }
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |a| format!("{:.1}", a * 100.0))
}

/// Parse failures over all of a row's questions, from its overall cell or
/// else the sum of its cells.
fn parse_fail_rate(row: &ReportRow) -> Option<f64> {
    if let Some(c) = row.cell("Overall") {
        return c.parse_failure_rate();
    }
    let (f, n) = row.cells.iter().fold((0, 0), |(f, n), (_, c)| (f + c.parse_failures, n + c.n));
    (n > 0).then(|| f as f64 / n as f64)
}

fn string_rows(table: &Table) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["Model".to_string()];
    header.extend(table.columns.iter().cloned());
    header.push(PARSE_FAIL_COLUMN.to_string());
    let rows = table
        .rows
        .iter()
        .map(|row| {
            let mut cells = vec![row.name.clone()];
            cells.extend(table.columns.iter().map(|c| pct(row.cell(c).and_then(|cell| cell.accuracy))));
            cells.push(pct(parse_fail_rate(row)));
            cells
        })
        .collect();
    (header, rows)
}

/// Output format for a report.
pub trait ReportFormat: Send + Sync {
    fn name(&self) -> &'static str;
    fn extension(&self) -> &'static str;
    fn render(&self, report: &Report) -> String;
}

pub struct PlainTable;
pub struct Csv;
pub struct Json;

impl ReportFormat for PlainTable {
    fn name(&self) -> &'static str {
        "table"
    }

    fn extension(&self) -> &'static str {
        "txt"
    }

    fn render(&self, report: &Report) -> String {
        let mut out = String::new();
        for (i, table) in report.tables.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let (header, rows) = string_rows(table);
            let widths: Vec<usize> = (0..header.len())
                .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
                .collect();
            let line = |cells: &[String]| {
                let parts: Vec<String> = cells
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(c, (v, w))| if c == 0 { format!("{v:<w$}") } else { format!("{v:>w$}") })
                    .collect();
                parts.join("  ").trim_end().to_string()
            };
            let _ = writeln!(out, "{}", table.title);
            let _ = writeln!(out, "{}", line(&header));
            let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            let _ = writeln!(out, "{}", "-".repeat(total));
            for r in &rows {
                let _ = writeln!(out, "{}", line(r));
            }
        }
        for cmp in &report.comparisons {
            let m = &cmp.result;
            let stat = m.statistic.map_or_else(|| "-".to_string(), |s| format!("{s:.3}"));
            let _ = writeln!(
                out,
                "\nMcNemar {} vs {}: b={} c={} statistic={} p={:.4} method={:?}",
                cmp.first, cmp.second, m.b, m.c, stat, m.p_value, m.method
            );
        }
        let _ = writeln!(out, "\nparser version {}", report.parser_version);
        out
    }
}

impl ReportFormat for Csv {
    fn name(&self) -> &'static str {
        "csv"
    }

    fn extension(&self) -> &'static str {
        "csv"
    }

    fn render(&self, report: &Report) -> String {
        let mut out = String::new();
        for table in &report.tables {
            let (header, rows) = string_rows(table);
            let mut h = vec!["Table".to_string()];
            h.extend(header);
            let _ = writeln!(out, "{}", h.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
            for r in rows {
                let mut cells = vec![table.title.clone()];
                cells.extend(r);
                let _ = writeln!(out, "{}", cells.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ReportFormat for Json {
    fn name(&self) -> &'static str {
        "json"
    }

    fn extension(&self) -> &'static str {
        "json"
    }

    fn render(&self, report: &Report) -> String {
        let mut s = serde_json::to_string_pretty(report).expect("serializable");
        s.push('\n');
        s
    }
}

pub fn formats() -> Vec<Box<dyn ReportFormat>> {
    vec![Box::new(PlainTable), Box::new(Csv), Box::new(Json)]
}

pub fn format_by_name(name: &str) -> Result<Box<dyn ReportFormat>> {
    let names: Vec<&str> = formats().iter().map(|f| f.name()).collect();
    formats()
        .into_iter()
        .find(|f| f.name() == name)
        .ok_or_else(|| Error::Metrics(format!("unknown report format {name:?}; available: {}", names.join(", "))))
}
