//! Report rows against expected values.
//!
//! The expected file is a CSV whose header names any subset of the report's
//! coordinate columns, an `expected` column and optionally a per-row `tol`
//! (relative). Each expected row must match exactly one report row on the
//! named columns; numeric columns match to `1e-9` relative.

use std::fmt::Write;

use crate::error::{PlateError, Result};

pub const DEFAULT_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    /// `column=value` pairs identifying the row.
    pub key: String,
    pub value: Option<f64>,
    pub expected: f64,
    pub relative_error: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            4
        }
    }

    /// One line per expected row.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "result  key  value  expected  rel_error  tol");
        for r in &self.rows {
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
            let _ = write!(
                out,
                "{}  {}  {}  {}  {}  {}",
                if r.pass { "PASS" } else { "FAIL" },
                r.key,
                fmt(r.value),
                r.expected,
                r.relative_error.map_or("-".to_string(), |e| format!("{e:.3e}")),
                r.tolerance
            );
            if !r.note.is_empty() {
                let _ = write!(out, "  ({})", r.note);
            }
            out.push('\n');
        }
        let failed = self.rows.iter().filter(|r| !r.pass).count();
        let _ = writeln!(out, "{} rows, {} failed", self.rows.len(), failed);
        out
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(text: &str, what: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let err = |e: csv::Error| PlateError::Config(format!("{what}: {e}"));
    let header = reader.headers().map_err(err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(record.map_err(err)?.iter().map(str::to_string).collect());
    }
    Ok(Table { header, rows })
}

fn column(table: &Table, name: &str) -> Option<usize> {
    table.header.iter().position(|h| h == name)
}

fn same(a: &str, b: &str) -> bool {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0),
        _ => a == b,
    }
}

fn parse_number(s: &str, what: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| PlateError::Config(format!("{what}: {s:?} is not a number")))
}

/// Compares the `normalized` column of `report_csv` with `expected_csv`.
/// `tolerance` overrides every per-row tolerance when given.
pub fn compare(report_csv: &str, expected_csv: &str, tolerance: Option<f64>) -> Result<Comparison> {
    let report = read_table(report_csv, "report")?;
    let expected = read_table(expected_csv, "expected values")?;
    let value_col = column(&report, "normalized")
        .ok_or_else(|| PlateError::Config("report has no \"normalized\" column".into()))?;
    let expected_col = column(&expected, "expected")
        .ok_or_else(|| PlateError::Config("expected file has no \"expected\" column".into()))?;
    let tol_col = column(&expected, "tol");
    let mut keys = Vec::new();
    for (i, name) in expected.header.iter().enumerate() {
        if i == expected_col || Some(i) == tol_col {
            continue;
        }
        let j = column(&report, name)
            .ok_or_else(|| PlateError::Config(format!("expected file column {name:?} is not in the report")))?;
        keys.push((name.as_str(), i, j));
    }
    if let Some(t) = tolerance {
        if !(t >= 0.0) {
            return Err(PlateError::Config(format!("tolerance must be >= 0, got {t}")));
        }
    }

    let mut rows = Vec::new();
    for erow in &expected.rows {
        let key = keys.iter().map(|(name, i, _)| format!("{name}={}", erow[*i])).collect::<Vec<_>>().join(",");
        let target = parse_number(&erow[expected_col], "expected")?;
        let tol = match (tolerance, tol_col) {
            (Some(t), _) => t,
            (None, Some(c)) if !erow[c].is_empty() => parse_number(&erow[c], "tol")?,
            _ => DEFAULT_TOLERANCE,
        };
        let matches: Vec<&Vec<String>> =
            report.rows.iter().filter(|r| keys.iter().all(|(_, i, j)| same(&r[*j], &erow[*i]))).collect();
        let mut row = CompareRow {
            key,
            value: None,
            expected: target,
            relative_error: None,
            tolerance: tol,
            pass: false,
            note: String::new(),
        };
        match matches.as_slice() {
            [] => row.note = "no matching report row".into(),
            [only] => match only[value_col].parse::<f64>() {
                Ok(v) => {
                    let err = (v - target).abs() / if target == 0.0 { 1.0 } else { target.abs() };
                    row.value = Some(v);
                    row.relative_error = Some(err);
                    row.pass = err <= tol;
                }
                Err(_) => row.note = "report row has no value".into(),
            },
            _ => row.note = format!("{} report rows match this key", matches.len()),
        }
        rows.push(row);
    }
    Ok(Comparison { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    const REPORT: &str = "case,n,mesh,normalized\nstatic,0,8x8,0.1648\nstatic,1,8x8,0.2703\n";

    #[test]
    fn identical_values_pass() {
        let exp = "n,expected\n0,0.1648\n1,0.2703\n";
        let c = compare(REPORT, exp, None).unwrap();
        assert!(c.passed());
        assert_eq!(c.rows.len(), 2);
        assert_eq!(c.exit_code(), 0);
    }

    #[test]
    fn row_tolerance_and_override() {
        let exp = "n,expected,tol\n0,0.17,0.05\n1,0.2703,0\n";
        assert!(compare(REPORT, exp, None).unwrap().passed());
        let c = compare(REPORT, exp, Some(0.001)).unwrap();
        assert!(!c.passed());
        assert_eq!(c.exit_code(), 4);
    }

    #[test]
    fn numeric_keys_match_across_spellings() {
        let exp = "n,mesh,expected\n0.0,8x8,0.1648\n";
        assert!(compare(REPORT, exp, Some(0.0)).unwrap().passed());
    }

    #[test]
    fn missing_and_ambiguous_rows_fail() {
        let exp = "n,expected\n2,0.3\n";
        let c = compare(REPORT, exp, None).unwrap();
        assert!(!c.passed());
        assert!(c.rows[0].note.contains("no matching"));
        let exp = "case,expected\nstatic,0.3\n";
        let c = compare(REPORT, exp, None).unwrap();
        assert!(c.rows[0].note.contains("2 report rows"));
    }

    #[test]
    fn unknown_key_column_is_a_config_error() {
        let exp = "gradient,expected\n0,0.1\n";
        assert!(matches!(compare(REPORT, exp, None), Err(PlateError::Config(_))));
    }
}
