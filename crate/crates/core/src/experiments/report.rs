use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{QhError, Result};
use crate::estimate::ConstantEstimate;

/// Rounds to 12 significant digits; non-finite values become `None`.
pub fn round12(v: f64) -> Option<f64> {
    if !v.is_finite() {
        return None;
    }
    if v == 0.0 {
        return Some(0.0);
    }
    Some(format!("{v:.11e}").parse().expect("formatted float parses"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub index: usize,
    pub label: String,
    /// One entry per report column; `None` where not applicable.
    pub values: Vec<Option<f64>>,
    pub pass: bool,
    /// The row could not be evaluated; it does not count as a violation.
    #[serde(default)]
    pub soft_failure: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Row {
    pub fn new(index: usize, label: impl Into<String>, values: Vec<Option<f64>>, pass: bool) -> Self {
        Row {
            index,
            label: label.into(),
            values: values.into_iter().map(|v| v.and_then(round12)).collect(),
            pass,
            soft_failure: false,
            note: None,
        }
    }

    pub fn soft(index: usize, label: impl Into<String>, columns: usize, reason: impl Into<String>) -> Self {
        Row {
            index,
            label: label.into(),
            values: vec![None; columns],
            pass: true,
            soft_failure: true,
            note: Some(reason.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimate {
    pub name: String,
    #[serde(flatten)]
    pub estimate: ConstantEstimate,
}

impl NamedEstimate {
    pub fn new(name: impl Into<String>, mut estimate: ConstantEstimate) -> Self {
        estimate.value = round12(estimate.value).unwrap_or(f64::MAX);
        NamedEstimate { name: name.into(), estimate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub violations: usize,
    pub soft_failures: usize,
    pub constants: Vec<NamedEstimate>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub summary: Summary,
    /// Seconds spent; kept out of the serialized report so identical
    /// configurations give identical bytes.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.summary.violations == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = QhError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(QhError::Config(format!("unknown report format `{other}`"))),
        }
    }
}

pub fn report_to_json(report: &ExperimentReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn write_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let csv_err = |e: csv::Error| QhError::Internal(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string(), "label".to_string()];
    header.extend(report.columns.iter().cloned());
    header.extend(["pass", "soft_failure", "note"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for r in &report.rows {
        let mut rec = vec![r.index.to_string(), r.label.clone()];
        rec.extend(r.values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        rec.push(r.pass.to_string());
        rec.push(r.soft_failure.to_string());
        rec.push(r.note.clone().unwrap_or_default());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| QhError::Internal(format!("csv: {e}")))?;
    Ok(())
}

/// Writes the report as one JSON object or as CSV rows under a header.
pub fn write_report(report: &ExperimentReport, path: &Path, format: ReportFormat) -> Result<()> {
    let io = |source| QhError::Io { path: path.into(), source };
    let file = File::create(path).map_err(io)?;
    let mut out = BufWriter::new(file);
    match format {
        ReportFormat::Json => out.write_all(report_to_json(report)?.as_bytes()).map_err(io)?,
        ReportFormat::Csv => write_csv(report, &mut out)?,
    }
    out.flush().map_err(io)
}
