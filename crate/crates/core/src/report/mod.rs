//! Per-file reports, corpus aggregation, output formats and the CLI.

mod cli;
mod render;
mod scan;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cli::cli_main;
pub use render::{render_csv, render_json, render_text, Format, RateEntry, ScanDocument, Summary};
pub use scan::{audit_file, collect_paths, scan};

use crate::controls::{ControlId, Verdict, VerdictValue};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkbookReport {
    pub path: String,
    pub created: Option<String>,
    pub occupied_cells: usize,
    pub calculation_cells: usize,
    pub verdicts: BTreeMap<ControlId, Verdict>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl WorkbookReport {
    pub fn failed(path: &str, error: String) -> Self {
        WorkbookReport {
            path: path.to_string(),
            created: None,
            occupied_cells: 0,
            calculation_cells: 0,
            verdicts: BTreeMap::new(),
            warnings: Vec::new(),
            error: Some(error),
        }
    }

    pub fn value(&self, control: ControlId) -> Option<VerdictValue> {
        self.verdicts.get(&control).map(|v| v.value)
    }

    pub fn any_no(&self) -> bool {
        self.verdicts.values().any(|v| v.value == VerdictValue::No)
    }
}

/// An exact ratio of compliant to audited files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    /// Whole percent, rounded half up.
    pub fn percent(self) -> u64 {
        if self.den == 0 {
            return 0;
        }
        (200 * self.num + self.den) / (2 * self.den)
    }

    pub fn value(self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            self.num as f64 / self.den as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRow {
    pub path: String,
    pub values: BTreeMap<ControlId, VerdictValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceMatrix {
    /// Loadable files in path order.
    pub rows: Vec<MatrixRow>,
    pub rates: BTreeMap<ControlId, Fraction>,
    pub all_three_count: u64,
    pub none_count: u64,
    /// Files that failed to load, in path order; not in any denominator.
    pub failed: Vec<String>,
}

impl ComplianceMatrix {
    pub fn audited(&self) -> u64 {
        self.rows.len() as u64
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AggregateError {
    #[error("no loadable workbooks to aggregate")]
    EmptyCorpus,
}

/// Per-control compliance over every file that loaded. Waived verdicts count
/// as compliant.
pub fn compliance_rates(reports: &[WorkbookReport]) -> Result<ComplianceMatrix, AggregateError> {
    let mut sorted: Vec<&WorkbookReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.path.cmp(&b.path));
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for r in sorted {
        if r.error.is_some() {
            failed.push(r.path.clone());
        } else {
            rows.push(MatrixRow {
                path: r.path.clone(),
                values: r.verdicts.iter().map(|(&c, v)| (c, v.value)).collect(),
            });
        }
    }
    if rows.is_empty() {
        return Err(AggregateError::EmptyCorpus);
    }
    let den = rows.len() as u64;
    let compliant = |row: &MatrixRow, c: ControlId| row.values.get(&c).is_some_and(|v| v.is_compliant());
    let rates = ControlId::ALL
        .into_iter()
        .map(|c| {
            let num = rows.iter().filter(|r| compliant(r, c)).count() as u64;
            (c, Fraction { num, den })
        })
        .collect();
    let all_three_count = rows
        .iter()
        .filter(|r| ControlId::ALL.iter().all(|&c| compliant(r, c)))
        .count() as u64;
    let none_count = rows
        .iter()
        .filter(|r| ControlId::ALL.iter().all(|&c| !compliant(r, c)))
        .count() as u64;
    Ok(ComplianceMatrix {
        rows,
        rates,
        all_three_count,
        none_count,
        failed,
    })
}

/// Exit status for a finished scan: 2 if any file failed to load, else 1 if
/// any verdict is NO, else 0.
pub fn exit_code(reports: &[WorkbookReport]) -> i32 {
    if reports.iter().any(|r| r.error.is_some()) {
        2
    } else if reports.iter().any(WorkbookReport::any_no) {
        1
    } else {
        0
    }
}
