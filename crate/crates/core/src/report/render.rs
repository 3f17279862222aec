use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{compliance_rates, ComplianceMatrix, WorkbookReport, TOOL_VERSION};
use crate::controls::{ControlId, VerdictValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub fraction: [u64; 2],
    pub percent: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub audited: u64,
    pub rates: BTreeMap<ControlId, RateEntry>,
    pub all_three: u64,
    pub none: u64,
}

/// The JSON document written by `scan --format json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanDocument {
    pub tool_version: String,
    pub config_digest: String,
    pub files: Vec<WorkbookReport>,
    /// Absent when no file could be loaded.
    pub summary: Option<Summary>,
}

impl From<&ComplianceMatrix> for Summary {
    fn from(m: &ComplianceMatrix) -> Self {
        Summary {
            audited: m.audited(),
            rates: m
                .rates
                .iter()
                .map(|(&c, f)| {
                    (
                        c,
                        RateEntry {
                            fraction: [f.num, f.den],
                            percent: f.percent(),
                        },
                    )
                })
                .collect(),
            all_three: m.all_three_count,
            none: m.none_count,
        }
    }
}

pub fn render_json(reports: &[WorkbookReport], config_digest: &str) -> String {
    let doc = ScanDocument {
        tool_version: TOOL_VERSION.to_string(),
        config_digest: config_digest.to_string(),
        files: reports.to_vec(),
        summary: compliance_rates(reports).ok().as_ref().map(Summary::from),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

fn cell(v: Option<VerdictValue>) -> &'static str {
    match v {
        Some(VerdictValue::Yes) => "Yes",
        Some(VerdictValue::No) => "No",
        Some(VerdictValue::YesWaived) => "Yes*",
        None => "-",
    }
}

pub fn render_text(reports: &[WorkbookReport]) -> String {
    let mut out = String::new();
    let headers = [
        "Workbook",
        "Created",
        "Occupied",
        "Calculation",
        "Data Validity",
        "Placement/Labels",
        "Constants",
    ];
    let rows: Vec<[String; 7]> = reports
        .iter()
        .map(|r| {
            [
                r.path.clone(),
                r.created.clone().unwrap_or_else(|| "-".into()),
                r.occupied_cells.to_string(),
                r.calculation_cells.to_string(),
                cell(r.value(ControlId::DataValidity)).into(),
                cell(r.value(ControlId::PlacementLabels)).into(),
                cell(r.value(ControlId::DisplayConstants)).into(),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[&str]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = w - c.chars().count();
            if (2..4).contains(&i) {
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            } else {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            }
        }
        s.trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(&headers));
    let _ = writeln!(
        out,
        "{}",
        widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ")
    );
    for row in &rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        let _ = writeln!(out, "{}", line(&cells));
    }
    if reports
        .iter()
        .any(|r| r.verdicts.values().any(|v| v.value == VerdictValue::YesWaived))
    {
        let _ = writeln!(out, "* criterion waived by configuration; see the file details below.");
    }

    for r in reports {
        let mut body = String::new();
        if let Some(e) = &r.error {
            let _ = writeln!(body, "  error: {e}");
        }
        for (control, verdict) in &r.verdicts {
            if verdict.evidence.is_empty() {
                continue;
            }
            let _ = writeln!(body, "  {} ({}):", control.title(), cell(Some(verdict.value)));
            for e in &verdict.evidence {
                let _ = writeln!(body, "    - {:?} at {}: {}", e.kind, e.locus, e.detail);
            }
        }
        for w in &r.warnings {
            let _ = writeln!(body, "  note: {w}");
        }
        if !body.is_empty() {
            let _ = write!(out, "\n{}\n{}", r.path, body);
        }
    }

    out.push('\n');
    match compliance_rates(reports) {
        Ok(m) => {
            let _ = writeln!(out, "Rate of compliance ({} workbooks audited)", m.audited());
            for (c, f) in &m.rates {
                let _ = writeln!(out, "  {:<32} {:>3}%  ({}/{})", c.title(), f.percent(), f.num, f.den);
            }
            let _ = writeln!(out, "  All three controls: {}", m.all_three_count);
            let _ = writeln!(out, "  None of the controls: {}", m.none_count);
            if !m.failed.is_empty() {
                let _ = writeln!(out, "  Failed to load (excluded): {}", m.failed.len());
            }
        }
        Err(e) => {
            let _ = writeln!(out, "No compliance summary: {e}");
        }
    }
    out
}

pub fn render_csv(reports: &[WorkbookReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record([
        "path",
        "created",
        "occupied_cells",
        "calculation_cells",
        "data_validity",
        "placement_labels",
        "display_constants",
        "error",
    ]);
    let key = |v: Option<VerdictValue>| match v {
        Some(VerdictValue::Yes) => "yes",
        Some(VerdictValue::No) => "no",
        Some(VerdictValue::YesWaived) => "yes_waived",
        None => "",
    };
    for r in reports {
        let _ = w.write_record([
            r.path.as_str(),
            r.created.as_deref().unwrap_or(""),
            &r.occupied_cells.to_string(),
            &r.calculation_cells.to_string(),
            key(r.value(ControlId::DataValidity)),
            key(r.value(ControlId::PlacementLabels)),
            key(r.value(ControlId::DisplayConstants)),
            r.error.as_deref().unwrap_or(""),
        ]);
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::{Evidence, EvidenceKind, Verdict};

    fn sample() -> WorkbookReport {
        let verdicts = [
            (ControlId::DataValidity, VerdictValue::YesWaived),
            (ControlId::PlacementLabels, VerdictValue::Yes),
            (ControlId::DisplayConstants, VerdictValue::No),
        ]
        .into_iter()
        .map(|(c, value)| {
            let evidence = if value == VerdictValue::No {
                vec![Evidence {
                    kind: EvidenceKind::BuriedConstant,
                    locus: "S!C1".into(),
                    excerpt: ".35".into(),
                    detail: "constant .35 is embedded in =780000*.35".into(),
                }]
            } else {
                vec![]
            };
            (c, Verdict { value, evidence })
        })
        .collect();
        WorkbookReport {
            path: "dir/a, b.xlsx".into(),
            created: Some("2010-01-01T00:00:00Z".into()),
            occupied_cells: 10,
            calculation_cells: 4,
            verdicts,
            warnings: vec!["note".into()],
            error: None,
        }
    }

    #[test]
    fn text_marks_waived_with_asterisk_and_footnote() {
        let text = render_text(&[sample()]);
        assert!(text.contains("Yes*"));
        assert!(text.contains("* criterion waived"));
        assert!(text.contains("  0%  (0/1)"));
    }

    #[test]
    fn json_round_trips_and_keeps_empty_evidence() {
        let json = render_json(&[sample()], "abc");
        assert!(json.contains("\"evidence\": []"));
        let doc: ScanDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(doc.files, vec![sample()]);
        assert_eq!(doc.summary.unwrap().rates[&ControlId::DataValidity].percent, 100);
        let dv = json.find("\"data_validity\"").unwrap();
        let pl = json.find("\"placement_labels\"").unwrap();
        let dc = json.find("\"display_constants\"").unwrap();
        assert!(dv < pl && pl < dc);
        assert!(json.contains("\"value\": \"yes_waived\""));
    }

    #[test]
    fn csv_quotes_commas() {
        let csv = render_csv(&[sample()]);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.starts_with("\"dir/a, b.xlsx\","));
        assert!(line.contains("yes_waived,yes,no"));
    }
}
