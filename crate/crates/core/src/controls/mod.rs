//! The three review controls and the per-workbook audit pipeline.

mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use config::{ConfigError, ControlConfig, ExemptArg, Waiver};

use crate::classify::{analyze, style_distinct, Analysis, CellClass, CheckCellFinding, TargetKind};
use crate::depgraph::{build_graph, DependencyGraph};
use crate::formula::{extract_numeric_literals, LiteralContext};
use crate::ingest::{calculation_cells, hidden_data, occupied_cells, subsumed_hidden_data, WorkbookModel};
use crate::report::WorkbookReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlId {
    DataValidity,
    PlacementLabels,
    DisplayConstants,
}

impl ControlId {
    pub const ALL: [ControlId; 3] = [
        ControlId::DataValidity,
        ControlId::PlacementLabels,
        ControlId::DisplayConstants,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ControlId::DataValidity => "data_validity",
            ControlId::PlacementLabels => "placement_labels",
            ControlId::DisplayConstants => "display_constants",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ControlId::DataValidity => "Data Validity Checks",
            ControlId::PlacementLabels => "Clear Data Placement and Labels",
            ControlId::DisplayConstants => "Display of Constants",
        }
    }

    /// Independently waivable parts of the control.
    pub fn sub_rules(self) -> &'static [&'static str] {
        match self {
            ControlId::DataValidity => &["input_check", "output_check"],
            ControlId::PlacementLabels => &["hidden_data", "header_labels", "mixed_input_calc", "orphan_region"],
            ControlId::DisplayConstants => &["buried_constants"],
        }
    }

    pub fn parse(text: &str) -> Option<ControlId> {
        let norm: String = text
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        ControlId::ALL
            .into_iter()
            .find(|c| c.key().replace('_', "") == norm || format!("{c:?}").to_lowercase() == norm)
    }
}

impl fmt::Display for ControlId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictValue {
    Yes,
    No,
    YesWaived,
}

impl VerdictValue {
    /// Waived verdicts count as compliant.
    pub fn is_compliant(self) -> bool {
        self != VerdictValue::No
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EvidenceKind {
    NoCheckCells,
    CircularCheck,
    BrokenLinkCheck,
    MissingOutputCheck,
    MissingInputCheck,
    HiddenData,
    UnlabeledRegion,
    MixedInputCalc,
    OrphanRegion,
    BuriedConstant,
    UnparsedFormula,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub kind: EvidenceKind,
    /// Cell (`Sheet!A1`), range, row (`Sheet!7`), column (`Sheet!C`), sheet,
    /// or the workbook path for workbook-wide findings.
    pub locus: String,
    /// Source text as stored in the file; empty when there is none.
    pub excerpt: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub value: VerdictValue,
    pub evidence: Vec<Evidence>,
}

/// A violated sub-rule and the evidence for it.
struct Violation {
    sub_rule: &'static str,
    evidence: Vec<Evidence>,
}

/// Turn violations into a verdict. The verdict is waived when every violated
/// sub-rule has a waiver; the waiver justification is cited in each item.
fn decide(control: ControlId, path: &str, config: &ControlConfig, violations: Vec<Violation>) -> Verdict {
    if violations.is_empty() {
        return Verdict {
            value: VerdictValue::Yes,
            evidence: Vec::new(),
        };
    }
    let all_waived = violations
        .iter()
        .all(|v| config.waiver(path, control, v.sub_rule).is_some());
    let mut evidence = Vec::new();
    for v in violations {
        let waiver = config.waiver(path, control, v.sub_rule);
        for mut e in v.evidence {
            if let Some(w) = waiver.filter(|_| all_waived) {
                e.detail = format!("{} [waived: {}]", e.detail, w.justification);
            }
            evidence.push(e);
        }
    }
    Verdict {
        value: if all_waived {
            VerdictValue::YesWaived
        } else {
            VerdictValue::No
        },
        evidence,
    }
}

/// Data validity: inputs and calculated outputs each need at least one
/// check cell without circular or broken dependencies.
pub fn check_data_validity(
    model: &WorkbookModel,
    analysis: &Analysis,
    config: &ControlConfig,
    notes: &mut Vec<String>,
) -> Verdict {
    let has_inputs = analysis.classes.count(CellClass::Input) > 0;
    let has_calcs = analysis.classes.iter().any(|(_, c)| c.is_calculation());
    let findings = &analysis.findings;
    let workbook = |kind, detail: String| Evidence {
        kind,
        locus: model.path.clone(),
        excerpt: String::new(),
        detail,
    };

    if !has_inputs {
        notes.push("data_validity: input check not applicable (no input cells)".into());
    }
    if !has_calcs {
        notes.push("data_validity: output check not applicable (no calculation cells)".into());
    }

    let mut violations = Vec::new();
    let needed: Vec<(TargetKind, &'static str)> = [
        (has_inputs, TargetKind::Input, "input_check"),
        (has_calcs, TargetKind::CalculatedOutput, "output_check"),
    ]
    .into_iter()
    .filter(|&(need, ..)| need)
    .map(|(_, kind, rule)| (kind, rule))
    .collect();

    if findings.is_empty() {
        for (_, rule) in needed {
            violations.push(Violation {
                sub_rule: rule,
                evidence: vec![workbook(
                    EvidenceKind::NoCheckCells,
                    "no check cells found in the workbook".into(),
                )],
            });
        }
        return decide(ControlId::DataValidity, &model.path, config, violations);
    }

    for (target, rule) in needed {
        let of_kind: Vec<&CheckCellFinding> = findings.iter().filter(|f| f.target_kind == target).collect();
        if of_kind.iter().any(|f| f.is_adequate()) {
            continue;
        }
        let mut evidence = Vec::new();
        for f in &of_kind {
            for defect in &f.adequacy_defects {
                let (kind, what) = match defect {
                    crate::classify::AdequacyDefect::Circular => {
                        (EvidenceKind::CircularCheck, "depends on a circular reference")
                    }
                    crate::classify::AdequacyDefect::BrokenLink => {
                        (EvidenceKind::BrokenLinkCheck, "depends on a broken link or error value")
                    }
                };
                evidence.push(Evidence {
                    kind,
                    locus: f.cell.to_string(),
                    excerpt: f.formula.clone(),
                    detail: format!("check cell {} {what}", f.cell),
                });
            }
        }
        if evidence.is_empty() {
            evidence.push(match target {
                TargetKind::Input => workbook(
                    EvidenceKind::MissingInputCheck,
                    "no check cell verifies the input cells".into(),
                ),
                TargetKind::CalculatedOutput => workbook(
                    EvidenceKind::MissingOutputCheck,
                    "checks are built in for inputs but not for calculated outputs".into(),
                ),
            });
        }
        violations.push(Violation {
            sub_rule: rule,
            evidence,
        });
    }

    // Inadequate checks that do not decide the verdict are still worth seeing.
    let verdict = decide(ControlId::DataValidity, &model.path, config, violations);
    if verdict.value != VerdictValue::No {
        for f in findings.iter().filter(|f| !f.is_adequate()) {
            notes.push(format!(
                "data_validity: check cell {} is inadequate ({})",
                f.cell,
                f.adequacy_defects
                    .iter()
                    .map(|d| format!("{d:?}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
    }
    verdict
}

/// Placement and labels: nothing hidden, data blocks headed by labels,
/// inputs styled apart from calculations, no orphaned blocks.
pub fn check_placement_labels(
    model: &WorkbookModel,
    graph: &DependencyGraph,
    analysis: &Analysis,
    config: &ControlConfig,
    notes: &mut Vec<String>,
) -> Verdict {
    let mut violations = Vec::new();

    let hidden: Vec<Evidence> = hidden_data(model)
        .into_iter()
        .map(|h| Evidence {
            kind: EvidenceKind::HiddenData,
            locus: h.identifier.clone(),
            excerpt: String::new(),
            detail: format!(
                "hidden {} {} contains {} occupied cell(s)",
                h.kind, h.identifier, h.occupied
            ),
        })
        .collect();
    if !hidden.is_empty() {
        violations.push(Violation {
            sub_rule: "hidden_data",
            evidence: hidden,
        });
    }
    for h in subsumed_hidden_data(model) {
        notes.push(format!(
            "placement_labels: hidden {} {} lies in hidden sheet {} and is reported with it",
            h.kind, h.identifier, h.sheet
        ));
    }

    let unlabeled: Vec<Evidence> = analysis
        .regions
        .iter()
        .filter(|r| r.cells.len() > 1 && r.is_data() && !r.has_header_labels)
        .map(|r| Evidence {
            kind: EvidenceKind::UnlabeledRegion,
            locus: r.locus(),
            excerpt: String::new(),
            detail: format!("data block {} has no header row or column of labels", r.locus()),
        })
        .collect();
    if !unlabeled.is_empty() {
        violations.push(Violation {
            sub_rule: "header_labels",
            evidence: unlabeled,
        });
    }

    let mixed: Vec<Evidence> = analysis
        .regions
        .iter()
        .filter(|r| r.count(CellClass::Input) > 0 && r.calculation_count() > 0)
        .filter(|r| !style_distinct(model, graph, &analysis.classes, r, config.style_family_threshold))
        .map(|r| Evidence {
            kind: EvidenceKind::MixedInputCalc,
            locus: r.locus(),
            excerpt: String::new(),
            detail: format!(
                "block {} mixes {} input and {} calculation cells without distinct styling",
                r.locus(),
                r.count(CellClass::Input),
                r.calculation_count()
            ),
        })
        .collect();
    if !mixed.is_empty() {
        violations.push(Violation {
            sub_rule: "mixed_input_calc",
            evidence: mixed,
        });
    }

    let orphans: Vec<Evidence> = analysis
        .orphans
        .iter()
        .map(|&i| {
            let r = &analysis.regions[i];
            Evidence {
                kind: EvidenceKind::OrphanRegion,
                locus: r.locus(),
                excerpt: String::new(),
                detail: format!("block {} is neither referenced by nor references other data", r.locus()),
            }
        })
        .collect();
    if !orphans.is_empty() {
        if config.orphan_fails_verdict {
            violations.push(Violation {
                sub_rule: "orphan_region",
                evidence: orphans,
            });
        } else {
            notes.extend(orphans.into_iter().map(|e| format!("placement_labels: {}", e.detail)));
        }
    }

    decide(ControlId::PlacementLabels, &model.path, config, violations)
}

/// Display of constants: numeric literals written into formulas, other than
/// whitelisted values and exempt argument positions.
pub fn check_display_constants(model: &WorkbookModel, graph: &DependencyGraph, config: &ControlConfig) -> Verdict {
    let mut evidence = Vec::new();
    for (i, address) in graph.addresses().iter().enumerate() {
        let Some(Ok(ast)) = graph.formula(i as u32) else {
            continue;
        };
        let Some(text) = model.cell(address).and_then(|c| c.content.formula_text()) else {
            continue;
        };
        for lit in extract_numeric_literals(ast) {
            if config.is_whitelisted(lit.value) {
                continue;
            }
            if let LiteralContext::FunctionArg { function, index } = &lit.context {
                if config.is_exempt(function, *index) {
                    continue;
                }
            }
            let excerpt = lit.excerpt(text).to_string();
            evidence.push(Evidence {
                kind: EvidenceKind::BuriedConstant,
                locus: address.to_string(),
                detail: format!("constant {excerpt} is embedded in ={text}"),
                excerpt,
            });
        }
    }
    let violations = if evidence.len() > config.max_buried_constants {
        vec![Violation {
            sub_rule: "buried_constants",
            evidence,
        }]
    } else {
        Vec::new()
    };
    decide(ControlId::DisplayConstants, &model.path, config, violations)
}

/// Run the whole pipeline on a loaded workbook.
pub fn audit_workbook(model: &WorkbookModel, config: &ControlConfig) -> WorkbookReport {
    let graph = build_graph(model);
    let analysis = analyze(model, &graph, &config.classify());
    let mut warnings = Vec::new();
    for (address, err) in graph.unparsed() {
        warnings.push(format!("UnparsedFormula {address}: {err}"));
    }
    let mut verdicts = BTreeMap::new();
    verdicts.insert(
        ControlId::DataValidity,
        check_data_validity(model, &analysis, config, &mut warnings),
    );
    verdicts.insert(
        ControlId::PlacementLabels,
        check_placement_labels(model, &graph, &analysis, config, &mut warnings),
    );
    verdicts.insert(
        ControlId::DisplayConstants,
        check_display_constants(model, &graph, config),
    );
    let warnings: Vec<String> = warnings.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    WorkbookReport {
        path: model.path.clone(),
        created: model.file_creation_date.clone(),
        occupied_cells: occupied_cells(model),
        calculation_cells: calculation_cells(model),
        verdicts,
        warnings,
        error: None,
    }
}
