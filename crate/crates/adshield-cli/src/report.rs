//! The robustness report: one row per (classifier, test set) with detection
//! counts, effectiveness metrics, the odds ratio against the reference and
//! the FDR-controlled significance flag.
//!
//! CSV header:
//! `classifier,test_set,tp,fp,fn,tn,precision,recall,f1,odds_ratio,ci_low,ci_high,p_value,significant`
//!
//! Numbers are written at 4 decimals. A plot-data file
//! (`classifier,test_set,odds_ratio,ci_low,ci_high`) is emitted next to
//! every report so CI charts can be regenerated externally.

use std::path::{Path, PathBuf};

use adshield_core::stats::benjamini_hochberg;
use serde::{Deserialize, Serialize};

use crate::AppError;

pub const CSV_HEADER: &[&str] = &[
    "classifier",
    "test_set",
    "tp",
    "fp",
    "fn",
    "tn",
    "precision",
    "recall",
    "f1",
    "odds_ratio",
    "ci_low",
    "ci_high",
    "p_value",
    "significant",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub classifier: String,
    pub test_set: String,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub odds_ratio: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub p_value: Option<f64>,
    pub significant: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Structured,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "structured" => Ok(ReportFormat::Structured),
            other => Err(format!("unknown format {other:?} (csv|structured)")),
        }
    }
}

impl std::fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Structured => "structured",
        })
    }
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

fn fmt4(x: f64) -> String {
    format!("{:.4}", x)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt4).unwrap_or_default()
}

impl Report {
    /// Recompute the significance flags by applying Benjamini-Hochberg to
    /// the p-value column, jointly over all rows that carry one.
    pub fn apply_fdr(&mut self, q: f64) -> Result<(), AppError> {
        let p_values: Vec<f64> = self.rows.iter().filter_map(|r| r.p_value).collect();
        if p_values.is_empty() {
            return Ok(());
        }
        let flags = benjamini_hochberg(&p_values, q)
            .map_err(|e| AppError::Data(format!("FDR control failed: {e}")))?;
        let mut it = flags.into_iter();
        for row in &mut self.rows {
            if row.p_value.is_some() {
                row.significant = it.next();
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path, format: ReportFormat) -> Result<(), AppError> {
        match format {
            ReportFormat::Csv => self.write_csv(path)?,
            ReportFormat::Structured => self.write_structured(path)?,
        }
        self.write_plot_data(&plot_path(path))
    }

    fn write_csv(&self, path: &Path) -> Result<(), AppError> {
        let mut writer = csv::Writer::from_path(path)
            .map_err(|e| AppError::Data(format!("cannot write {}: {e}", path.display())))?;
        writer
            .write_record(CSV_HEADER)
            .map_err(|e| AppError::Data(e.to_string()))?;
        for row in &self.rows {
            writer
                .write_record([
                    row.classifier.as_str(),
                    row.test_set.as_str(),
                    &row.tp.to_string(),
                    &row.fp.to_string(),
                    &row.fn_.to_string(),
                    &row.tn.to_string(),
                    &fmt4(row.precision),
                    &fmt4(row.recall),
                    &fmt4(row.f1),
                    &fmt_opt(row.odds_ratio),
                    &fmt_opt(row.ci_low),
                    &fmt_opt(row.ci_high),
                    &fmt_opt(row.p_value),
                    &row.significant.map(|s| s.to_string()).unwrap_or_default(),
                ])
                .map_err(|e| AppError::Data(e.to_string()))?;
        }
        writer.flush().map_err(|e| AppError::Data(e.to_string()))?;
        Ok(())
    }

    fn write_structured(&self, path: &Path) -> Result<(), AppError> {
        let mut out = String::new();
        for row in &self.rows {
            let mut rounded = row.clone();
            rounded.precision = round4(rounded.precision);
            rounded.recall = round4(rounded.recall);
            rounded.f1 = round4(rounded.f1);
            rounded.odds_ratio = rounded.odds_ratio.map(round4);
            rounded.ci_low = rounded.ci_low.map(round4);
            rounded.ci_high = rounded.ci_high.map(round4);
            rounded.p_value = rounded.p_value.map(round4);
            out.push_str(&serde_json::to_string(&rounded).expect("report row serializes"));
            out.push('\n');
        }
        std::fs::write(path, out)
            .map_err(|e| AppError::Data(format!("cannot write {}: {e}", path.display())))
    }

    fn write_plot_data(&self, path: &Path) -> Result<(), AppError> {
        let mut writer = csv::Writer::from_path(path)
            .map_err(|e| AppError::Data(format!("cannot write {}: {e}", path.display())))?;
        writer
            .write_record(["classifier", "test_set", "odds_ratio", "ci_low", "ci_high"])
            .map_err(|e| AppError::Data(e.to_string()))?;
        for row in &self.rows {
            if let (Some(or), Some(lo), Some(hi)) = (row.odds_ratio, row.ci_low, row.ci_high) {
                writer
                    .write_record([
                        row.classifier.as_str(),
                        row.test_set.as_str(),
                        &fmt4(or),
                        &fmt4(lo),
                        &fmt4(hi),
                    ])
                    .map_err(|e| AppError::Data(e.to_string()))?;
            }
        }
        writer.flush().map_err(|e| AppError::Data(e.to_string()))?;
        Ok(())
    }

    pub fn read(path: &Path, format: ReportFormat) -> Result<Report, AppError> {
        match format {
            ReportFormat::Csv => Self::read_csv(path),
            ReportFormat::Structured => Self::read_structured(path),
        }
    }

    fn read_csv(path: &Path) -> Result<Report, AppError> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| AppError::Data(format!("cannot read {}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| AppError::Data(e.to_string()))?
            .clone();
        let expected: Vec<&str> = CSV_HEADER.to_vec();
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(AppError::Data(format!(
                "{}: unexpected header {got:?}",
                path.display()
            )));
        }
        let mut rows = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| AppError::Data(e.to_string()))?;
            let cell = |i: usize| record.get(i).unwrap_or("").to_string();
            let num = |i: usize| -> Result<u64, AppError> {
                cell(i).parse().map_err(|e| {
                    AppError::Data(format!("{}: row {}: {e}", path.display(), idx + 1))
                })
            };
            let float = |i: usize| -> Result<f64, AppError> {
                cell(i).parse().map_err(|e| {
                    AppError::Data(format!("{}: row {}: {e}", path.display(), idx + 1))
                })
            };
            let opt_float = |i: usize| -> Result<Option<f64>, AppError> {
                let c = cell(i);
                if c.is_empty() {
                    Ok(None)
                } else {
                    Ok(Some(c.parse().map_err(|e| {
                        AppError::Data(format!("{}: row {}: {e}", path.display(), idx + 1))
                    })?))
                }
            };
            let significant = match cell(13).as_str() {
                "" => None,
                "true" => Some(true),
                "false" => Some(false),
                other => {
                    return Err(AppError::Data(format!(
                        "{}: row {}: bad significant flag {other:?}",
                        path.display(),
                        idx + 1
                    )))
                }
            };
            rows.push(ReportRow {
                classifier: cell(0),
                test_set: cell(1),
                tp: num(2)?,
                fp: num(3)?,
                fn_: num(4)?,
                tn: num(5)?,
                precision: float(6)?,
                recall: float(7)?,
                f1: float(8)?,
                odds_ratio: opt_float(9)?,
                ci_low: opt_float(10)?,
                ci_high: opt_float(11)?,
                p_value: opt_float(12)?,
                significant,
            });
        }
        Ok(Report { rows })
    }

    fn read_structured(path: &Path) -> Result<Report, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Data(format!("cannot read {}: {e}", path.display())))?;
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            rows.push(serde_json::from_str(line).map_err(|e| {
                AppError::Data(format!("{}: line {}: {e}", path.display(), idx + 1))
            })?);
        }
        Ok(Report { rows })
    }
}

pub fn plot_path(report_path: &Path) -> PathBuf {
    let stem = report_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".to_string());
    report_path.with_file_name(format!("{stem}_plot.csv"))
}
