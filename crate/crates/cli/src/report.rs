//! Check reports and their JSON/CSV emission.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context as _, Result};
use serde::Serialize;

/// One measured quantity against its bound.
#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    /// Name, unique within the check.
    pub name: String,
    /// Measured value.
    pub value: f64,
    /// Bound the value is compared with; `None` for informational values.
    pub tolerance: Option<f64>,
    /// How `value` is compared with `tolerance`.
    pub relation: Relation,
    /// Comparison outcome; informational values always pass.
    pub passed: bool,
}

/// Comparison used by a [`Metric`].
#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value ≤ tolerance`.
    AtMost,
    /// `value ≥ tolerance`.
    AtLeast,
    /// Boolean property encoded as `1.0` for true.
    Holds,
    /// Reported only.
    Info,
}

/// Table written as the check's CSV file.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Table {
    /// Column names.
    pub columns: Vec<String>,
    /// Rows, one value per column.
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Empty table with the given columns.
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    /// Appends a row.
    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Result of one acceptance check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    /// Registered check name.
    pub name: String,
    /// Acceptance criterion number.
    pub criterion: u8,
    /// Conjunction of the metric outcomes, or false on error.
    pub passed: bool,
    /// Measured values with their tolerances.
    pub metrics: Vec<Metric>,
    /// Error that aborted the check, if any.
    pub error: Option<String>,
    /// Wall time in seconds.
    pub runtime_s: f64,
    /// Hash of the configuration that produced the values.
    pub config_hash: String,
    /// Seed of the random draws.
    pub seed: u64,
    /// Tabulated data behind the metrics.
    #[serde(skip)]
    pub table: Table,
}

impl CheckReport {
    /// One line: criterion, name, verdict and the gated metrics.
    pub fn summary_line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let detail: Vec<String> = self
            .metrics
            .iter()
            .map(|m| match (m.relation, m.tolerance) {
                (Relation::AtMost, Some(t)) => format!("{}={:.3e}≤{:.1e}", m.name, m.value, t),
                (Relation::AtLeast, Some(t)) => format!("{}={:.4}≥{}", m.name, m.value, t),
                (Relation::Holds, _) => format!("{}={}", m.name, if m.value == 1.0 { "yes" } else { "no" }),
                _ => format!("{}={:.4e}", m.name, m.value),
            })
            .collect();
        let err = self.error.as_deref().map(|e| format!(" error: {e}")).unwrap_or_default();
        format!("[{verdict}] {:>2} {:<22} {}{}", self.criterion, self.name, detail.join(" "), err)
    }

    /// Metric by name.
    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

/// Output format of [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// `<name>.json` per check plus `summary.json`.
    Json,
    /// `<name>.csv` per check with the table columns.
    Csv,
}

/// Writes one file per check into `dir`; JSON also writes `summary.json`.
pub fn emit_report(reports: &[CheckReport], format: Format, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    match format {
        Format::Json => {
            for r in reports {
                let path = dir.join(format!("{}.json", r.name));
                fs::write(&path, serde_json::to_vec_pretty(r)?).with_context(|| format!("writing {}", path.display()))?;
            }
            let summary: BTreeMap<&str, bool> = reports.iter().map(|r| (r.name.as_str(), r.passed)).collect();
            fs::write(dir.join("summary.json"), serde_json::to_vec_pretty(&summary)?)?;
        }
        Format::Csv => {
            for r in reports {
                let path = dir.join(format!("{}.csv", r.name));
                let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
                w.write_record(&r.table.columns)?;
                for row in &r.table.rows {
                    w.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
                }
                w.flush()?;
            }
        }
    }
    Ok(())
}
