//! Tabular experiment output in CSV or JSON.
//!
//! Both formats print every float with 17 significant digits so that a
//! report round-trips bit for bit. JSON maps non-finite values to `null`.

use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Report {
    pub kind: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

impl Report {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Report {
            kind: kind.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidParams(format!(
                "row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn emit_report(report: &Report, format: Format, out: &mut impl Write) -> Result<()> {
    match format {
        Format::Csv => emit_csv(report, out),
        Format::Json => emit_json(report, out),
    }
}

pub fn report_to_string(report: &Report, format: Format) -> String {
    let mut buf = Vec::new();
    emit_report(report, format, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("reports are UTF-8")
}

fn emit_csv(report: &Report, out: &mut impl Write) -> Result<()> {
    writeln!(out, "{}", report.columns.join(","))?;
    for row in &report.rows {
        let cells: Vec<String> = row.iter().map(|&x| format_float(x)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn json_number(x: f64) -> String {
    if x.is_finite() {
        format_float(x)
    } else {
        "null".to_string()
    }
}

fn emit_json(report: &Report, out: &mut impl Write) -> Result<()> {
    let columns: Vec<String> = report.columns.iter().map(|c| json_string(c)).collect();
    let metadata: Vec<String> = report
        .metadata
        .iter()
        .map(|(k, v)| format!("{}: {}", json_string(k), json_string(v)))
        .collect();
    writeln!(out, "{{")?;
    writeln!(out, "  \"kind\": {},", json_string(&report.kind))?;
    writeln!(out, "  \"metadata\": {{{}}},", metadata.join(", "))?;
    writeln!(out, "  \"columns\": [{}],", columns.join(", "))?;
    writeln!(out, "  \"rows\": [")?;
    for (i, row) in report.rows.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|&x| json_number(x)).collect();
        let sep = if i + 1 < report.rows.len() { "," } else { "" };
        writeln!(out, "    [{}]{sep}", cells.join(", "))?;
    }
    writeln!(out, "  ]")?;
    writeln!(out, "}}")?;
    Ok(())
}
