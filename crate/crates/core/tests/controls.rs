mod common;

use ssaudit::controls::{audit_workbook, ControlConfig, ControlId, EvidenceKind, VerdictValue, Waiver};
use ssaudit::ingest::load_bytes;
use ssaudit::report::WorkbookReport;
use xlsxgen::{Sheet, Workbook};

use ControlId::{DataValidity, DisplayConstants, PlacementLabels};
use VerdictValue::{No, Yes, YesWaived};

fn audit_as(name: &str, wb: &Workbook, config: &ControlConfig) -> WorkbookReport {
    let model = load_bytes(name, &wb.to_bytes().unwrap()).unwrap();
    audit_workbook(&model, config)
}

fn audit(wb: &Workbook) -> WorkbookReport {
    audit_as("book.xlsx", wb, &ControlConfig::default())
}

fn sheet(cells: &[(&str, &str)]) -> Workbook {
    let mut s = Sheet::new("S");
    for (a1, v) in cells {
        match v.parse::<f64>() {
            Ok(n) => s.set(a1, n),
            Err(_) => s.set(a1, *v),
        };
    }
    let mut wb = Workbook::new();
    wb.add_sheet(s);
    wb
}

fn fixture(name: &str) -> common::Fixture {
    common::corpus().into_iter().find(|f| f.name == name).unwrap()
}

#[test]
fn operating_income_times_tax_rate() {
    let report = audit(&sheet(&[("A1", "Tax expense"), ("B1", "=780000*.35")]));
    let v = &report.verdicts[&DisplayConstants];
    assert_eq!(v.value, No);
    let excerpts: Vec<&str> = v.evidence.iter().map(|e| e.excerpt.as_str()).collect();
    assert_eq!(excerpts, vec!["780000", ".35"]);
    assert!(v
        .evidence
        .iter()
        .all(|e| e.kind == EvidenceKind::BuriedConstant && e.locus == "S!B1"));
}

#[test]
fn constants_moved_to_labeled_cells() {
    let report = audit(&sheet(&[
        ("A1", "Operating income"),
        ("B1", "780000"),
        ("A2", "Tax rate"),
        ("B2", "0.35"),
        ("A3", "Tax expense"),
        ("B3", "=B1*B2"),
    ]));
    assert_eq!(report.value(DisplayConstants), Some(Yes));
    assert!(report.verdicts[&DisplayConstants].evidence.is_empty());
}

#[test]
fn identity_factor_is_whitelisted() {
    let report = audit(&sheet(&[("A1", "3"), ("B1", "=A1*1")]));
    assert_eq!(report.value(DisplayConstants), Some(Yes));
    let strict = ControlConfig {
        constant_whitelist: vec![],
        ..ControlConfig::default()
    };
    let report = audit_as("book.xlsx", &sheet(&[("A1", "3"), ("B1", "=A1*1")]), &strict);
    assert_eq!(report.value(DisplayConstants), Some(No));
}

#[test]
fn round_digits_are_exempt() {
    let report = audit(&sheet(&[("A1", "3.14159"), ("B1", "=ROUND(A1,2)")]));
    assert_eq!(report.value(DisplayConstants), Some(Yes));
}

#[test]
fn buried_constant_allowance() {
    let config = ControlConfig {
        max_buried_constants: 2,
        ..ControlConfig::default()
    };
    let report = audit_as("b.xlsx", &sheet(&[("B1", "=780000*.35")]), &config);
    assert_eq!(report.value(DisplayConstants), Some(Yes));
}

#[test]
fn data_validity_examples() {
    let tb = fixture("TrialBalance");
    let report = audit_as("tb.xlsx", &common::build(&tb), &ControlConfig::default());
    assert_eq!(report.value(DataValidity), Some(Yes));

    // Input check only, formulas present.
    let mut f = fixture("TrialBalance");
    f.checks = common::Checks::InputOnly;
    let wb = common::build(&f);
    let report = audit_as("tb.xlsx", &wb, &ControlConfig::default());
    assert_eq!(report.value(DataValidity), Some(No));
    let kinds: Vec<EvidenceKind> = report.verdicts[&DataValidity].evidence.iter().map(|e| e.kind).collect();
    assert_eq!(kinds, vec![EvidenceKind::MissingOutputCheck]);

    let mut config = ControlConfig::default();
    config.waivers.push(Waiver {
        file: "tb.xlsx".into(),
        control: DataValidity,
        sub_rule: "output_check".into(),
        justification: "reviewed by hand".into(),
    });
    let report = audit_as("tb.xlsx", &wb, &config);
    assert_eq!(report.value(DataValidity), Some(YesWaived));
    assert!(report.verdicts[&DataValidity].evidence[0]
        .detail
        .contains("reviewed by hand"));
}

#[test]
fn placement_examples() {
    let mut f = fixture("TrialBalance");
    f.hidden = Some(common::Hidden::Row);
    let report = audit_as("x.xlsx", &common::build(&f), &ControlConfig::default());
    assert_eq!(report.value(PlacementLabels), Some(No));
    let v = &report.verdicts[&PlacementLabels];
    assert_eq!(v.evidence[0].kind, EvidenceKind::HiddenData);
    assert_eq!(v.evidence[0].locus, "Data!3");

    let clean = audit_as(
        "x.xlsx",
        &common::build(&fixture("TrialBalance")),
        &ControlConfig::default(),
    );
    assert_eq!(clean.value(PlacementLabels), Some(Yes));

    let mut f = fixture("TrialBalance");
    f.orphan = true;
    let report = audit_as("x.xlsx", &common::build(&f), &ControlConfig::default());
    let kinds: Vec<EvidenceKind> = report.verdicts[&PlacementLabels]
        .evidence
        .iter()
        .map(|e| e.kind)
        .collect();
    assert_eq!(kinds, vec![EvidenceKind::OrphanRegion]);
    let lenient = ControlConfig {
        orphan_fails_verdict: false,
        ..ControlConfig::default()
    };
    let report = audit_as("x.xlsx", &common::build(&f), &lenient);
    assert_eq!(report.value(PlacementLabels), Some(Yes));
    assert!(report.warnings.iter().any(|w| w.contains("Data!H1:I4")));
}

#[test]
fn whole_workbook_examples() {
    let lease = audit_as(
        "Lease.xlsx",
        &common::build(&fixture("Lease")),
        &ControlConfig::default(),
    );
    assert_eq!(
        lease.verdicts.values().map(|v| v.value).collect::<Vec<_>>(),
        vec![Yes, Yes, Yes]
    );
    let inv = audit_as("Inv1.xlsx", &common::build(&fixture("Inv1")), &ControlConfig::default());
    assert_eq!(
        inv.verdicts.values().map(|v| v.value).collect::<Vec<_>>(),
        vec![No, No, No]
    );
}

#[test]
fn empty_workbook_is_vacuously_compliant() {
    let mut wb = Workbook::new();
    wb.add_sheet(Sheet::new("Blank"));
    let report = audit(&wb);
    assert_eq!(report.occupied_cells, 0);
    assert!(report
        .verdicts
        .values()
        .all(|v| v.value == Yes && v.evidence.is_empty()));
    assert!(report.warnings.iter().any(|w| w.contains("not applicable")));
}

#[test]
fn waiver_applies_to_its_file_and_sub_rule_only() {
    let config = common::corpus_config();
    let cfs = fixture("ConsolidatedFS");
    let wb = common::build(&cfs);
    assert_eq!(
        audit_as("a/ConsolidatedFS.xlsx", &wb, &config).value(DataValidity),
        Some(YesWaived)
    );
    assert_eq!(audit_as("a/CashFlow1.xlsx", &wb, &config).value(DataValidity), Some(No));

    // The waiver covers the output check, not a missing input check.
    let mut f = cfs.clone();
    f.checks = common::Checks::None;
    let report = audit_as("a/ConsolidatedFS.xlsx", &common::build(&f), &config);
    assert_eq!(report.value(DataValidity), Some(No));
}

#[test]
fn config_rejects_unknown_fields_and_bad_waivers() {
    assert!(ControlConfig::from_json(r#"{"constant_whitelist": [0]}"#).is_ok());
    assert!(ControlConfig::from_json(r#"{"whitelist": [0]}"#).is_err());
    let bad =
        r#"{"waivers": [{"file": "*.xlsx", "control": "data_validity", "sub_rule": "nope", "justification": "x"}]}"#;
    assert!(ControlConfig::from_json(bad).is_err());
}
