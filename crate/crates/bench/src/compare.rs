//! Side-by-side table of the `summary.csv` files of several runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::fmt_f64;
use crate::output::SUMMARY_HEADER;

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("no run directories given")]
    NoRuns,
    #[error("cannot read {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{}: line {line}: {message}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// One parsed `summary.csv` line.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryEntry {
    pub metric: String,
    pub scope: String,
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

impl SummaryEntry {
    /// Column name used in comparison tables, e.g. `tracking_rms[window 55:100]`.
    pub fn column(&self) -> String {
        format!(
            "{}[{} {}:{}]",
            self.metric, self.scope, self.start, self.end
        )
    }
}

/// Parses `summary.csv` text. Errors carry the 1-based line number.
pub fn parse_summary(text: &str) -> Result<Vec<SummaryEntry>, (usize, String)> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(SUMMARY_HEADER) {
        return Err((1, format!("expected header `{SUMMARY_HEADER}`")));
    }
    let mut entries = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err((
                line_no,
                format!("expected 5 fields, found {}", fields.len()),
            ));
        }
        let number = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| (line_no, format!("`{s}` is not a number")))
        };
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err((line_no, "empty metric or scope".to_string()));
        }
        entries.push(SummaryEntry {
            metric: fields[0].to_string(),
            scope: fields[1].to_string(),
            start: number(fields[2])?,
            end: number(fields[3])?,
            value: number(fields[4])?,
        });
    }
    Ok(entries)
}

pub fn read_summary(dir: &Path) -> Result<Vec<SummaryEntry>, CompareError> {
    let path = dir.join("summary.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| CompareError::Io {
        path: path.clone(),
        message: e.to_string(),
    })?;
    parse_summary(&text).map_err(|(line, message)| CompareError::Malformed {
        path,
        line,
        message,
    })
}

/// Comparison table: one row per run, one column per distinct metric in
/// order of first appearance. Missing cells are left empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

impl Comparison {
    pub fn value(&self, run: &str, column: &str) -> Option<f64> {
        let c = self.columns.iter().position(|k| k == column)?;
        self.rows.iter().find(|(r, _)| r == run)?.1[c]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("run");
        for c in &self.columns {
            out.push(',');
            out.push_str(&quote(c));
        }
        out.push('\n');
        for (run, cells) in &self.rows {
            out.push_str(&quote(run));
            for cell in cells {
                out.push(',');
                if let Some(v) = cell {
                    out.push_str(&fmt_f64(*v));
                }
            }
            out.push('\n');
        }
        out
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn compare_summaries(runs: &[(String, Vec<SummaryEntry>)]) -> Result<Comparison, CompareError> {
    if runs.is_empty() {
        return Err(CompareError::NoRuns);
    }
    let mut columns: Vec<String> = Vec::new();
    let mut index = BTreeMap::new();
    for (_, entries) in runs {
        for e in entries {
            let key = e.column();
            if !index.contains_key(&key) {
                index.insert(key.clone(), columns.len());
                columns.push(key);
            }
        }
    }
    let rows = runs
        .iter()
        .map(|(name, entries)| {
            let mut cells = vec![None; columns.len()];
            for e in entries {
                let c = index[&e.column()];
                cells[c].get_or_insert(e.value);
            }
            (name.clone(), cells)
        })
        .collect();
    Ok(Comparison { columns, rows })
}

/// Reads `summary.csv` from each directory and builds the table.
pub fn compare(dirs: &[PathBuf]) -> Result<Comparison, CompareError> {
    if dirs.is_empty() {
        return Err(CompareError::NoRuns);
    }
    let runs = dirs
        .iter()
        .map(|d| Ok((d.display().to_string(), read_summary(d)?)))
        .collect::<Result<Vec<_>, CompareError>>()?;
    compare_summaries(&runs)
}
