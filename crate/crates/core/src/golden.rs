//! Golden regression fixtures: CSV tables compared column by column.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::path::PathBuf;

/// One committed fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenCase {
    pub id: String,
    /// CLI invocation (or library call) that reproduces the table.
    pub command: String,
    pub expected: PathBuf,
    /// Tolerance per column; columns not listed use `default_tol`.
    pub tolerances: BTreeMap<String, f64>,
    pub default_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub row: usize,
    pub column: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenReport {
    pub id: String,
    pub cells_checked: usize,
    pub mismatches: usize,
    /// First ten offending cells.
    pub first: Vec<Mismatch>,
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

impl std::fmt::Display for GoldenReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.passed() {
            return write!(f, "{}: pass ({} cells)", self.id, self.cells_checked);
        }
        write!(f, "{}: FAIL ({} of {} cells differ)", self.id, self.mismatches, self.cells_checked)?;
        for m in &self.first {
            write!(f, "\n  row {} column {}: expected {} got {}", m.row, m.column, m.expected, m.actual)?;
        }
        Ok(())
    }
}

/// Header and rows of a comma-separated table.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::MalformedGolden("empty table".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let row: Vec<String> = l.split(',').map(|s| s.trim().to_string()).collect();
        if row.len() != header.len() {
            return Err(Error::MalformedGolden(format!("row {i} has {} fields, header has {}", row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn cell_matches(expected: &str, actual: &str, tol: f64) -> bool {
    match (expected.parse::<f64>(), actual.parse::<f64>()) {
        (Ok(e), Ok(a)) => {
            if e.is_nan() || a.is_nan() {
                e.is_nan() && a.is_nan()
            } else if e.is_infinite() || a.is_infinite() {
                e == a
            } else {
                (e - a).abs() <= tol * e.abs().max(1.0)
            }
        }
        _ => expected == actual,
    }
}

/// Compares `actual_csv` against the case's committed file.
///
/// Numeric cells pass when `|a - e| <= tol * max(1, |e|)`; other cells must
/// match exactly.
pub fn verify_golden(case: &GoldenCase, actual_csv: &str) -> Result<GoldenReport> {
    let text = std::fs::read_to_string(&case.expected)
        .map_err(|e| Error::MissingGolden(format!("{}: {e}", case.expected.display())))?;
    let (eh, erows) = parse_csv(&text)?;
    let (ah, arows) = parse_csv(actual_csv)?;
    if eh != ah {
        return Err(Error::MalformedGolden(format!("header mismatch: expected {eh:?}, got {ah:?}")));
    }
    if erows.len() != arows.len() {
        return Err(Error::MalformedGolden(format!("expected {} rows, got {}", erows.len(), arows.len())));
    }
    let mut report = GoldenReport { id: case.id.clone(), cells_checked: 0, mismatches: 0, first: Vec::new() };
    for (r, (er, ar)) in erows.iter().zip(&arows).enumerate() {
        for (c, name) in eh.iter().enumerate() {
            let tol = case.tolerances.get(name).copied().unwrap_or(case.default_tol);
            report.cells_checked += 1;
            if !cell_matches(&er[c], &ar[c], tol) {
                report.mismatches += 1;
                if report.first.len() < 10 {
                    report.first.push(Mismatch {
                        row: r,
                        column: name.clone(),
                        expected: er[c].clone(),
                        actual: ar[c].clone(),
                    });
                }
            }
        }
    }
    Ok(report)
}
