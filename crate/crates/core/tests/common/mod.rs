//! Authored fixture corpus shared by the integration tests.
//!
//! Each fixture is a small financial schedule whose defects are switched on
//! individually, so the expected verdicts follow from the recipe alone.
#![allow(dead_code)]

pub mod cycles;

use std::path::{Path, PathBuf};

use ssaudit::controls::{ControlConfig, ControlId, VerdictValue, Waiver};
use xlsxgen::{Sheet, SheetState, Style, Workbook};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Checks sit below the schedule on the same sheet.
    Data,
    /// Checks live on their own sheet.
    Checks,
    /// Tax rate comes from a labeled assumptions sheet.
    Assumptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Checks {
    None,
    InputOnly,
    OutputOnly,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckDefect {
    /// The output check reads a total that includes itself.
    Circular,
    /// The output check reads a sheet that no longer exists.
    Broken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hidden {
    Row,
    Column,
    Sheet,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub corpus: char,
    pub year: u32,
    pub rows: u32,
    pub layout: Layout,
    pub checks: Checks,
    pub defect: Option<CheckDefect>,
    pub hidden: Option<Hidden>,
    pub unlabeled: bool,
    pub unstyled: bool,
    pub orphan: bool,
    pub buried: bool,
    pub waiver: bool,
    pub expected: [VerdictValue; 3],
}

use VerdictValue::{No, Yes, YesWaived};

impl Fixture {
    fn new(name: &'static str, corpus: char, year: u32, rows: u32, expected: [VerdictValue; 3]) -> Self {
        Fixture {
            name,
            corpus,
            year,
            rows,
            layout: Layout::Data,
            checks: Checks::Both,
            defect: None,
            hidden: None,
            unlabeled: false,
            unstyled: false,
            orphan: false,
            buried: false,
            waiver: false,
            expected,
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.xlsx", self.name)
    }

    fn tax_column(&self) -> bool {
        self.buried || self.layout == Layout::Assumptions
    }
}

/// The fourteen-workbook corpus: eight financial-services schedules (A) and
/// six manufacturing schedules (B).
pub fn corpus() -> Vec<Fixture> {
    let mut v = Vec::new();

    let mut f = Fixture::new("CashFlow1", 'A', 2008, 24, [No, No, Yes]);
    f.checks = Checks::InputOnly;
    f.hidden = Some(Hidden::Row);
    v.push(f);

    let mut f = Fixture::new("CashFlow2", 'A', 2003, 18, [No, No, Yes]);
    f.checks = Checks::None;
    f.unlabeled = true;
    v.push(f);

    let mut f = Fixture::new("ConsolidatedFS", 'A', 2008, 30, [YesWaived, No, Yes]);
    f.checks = Checks::InputOnly;
    f.waiver = true;
    f.hidden = Some(Hidden::Sheet);
    v.push(f);

    let mut f = Fixture::new("EquityRollforward", 'A', 2005, 15, [No, No, Yes]);
    f.defect = Some(CheckDefect::Broken);
    f.unstyled = true;
    v.push(f);

    let mut f = Fixture::new("OtherFin1", 'A', 2004, 12, [No, No, No]);
    f.defect = Some(CheckDefect::Circular);
    f.orphan = true;
    f.buried = true;
    v.push(f);

    let mut f = Fixture::new("TrialBalance", 'A', 2005, 40, [Yes, Yes, Yes]);
    f.layout = Layout::Checks;
    v.push(f);

    let mut f = Fixture::new("OtherFin2", 'A', 2007, 6, [No, No, No]);
    f.checks = Checks::None;
    f.hidden = Some(Hidden::Column);
    f.buried = true;
    v.push(f);

    let mut f = Fixture::new("10Q", 'A', 2005, 10, [No, Yes, Yes]);
    f.layout = Layout::Checks;
    f.checks = Checks::OutputOnly;
    v.push(f);

    let mut f = Fixture::new("AvgShares", 'B', 2000, 20, [No, Yes, Yes]);
    f.layout = Layout::Assumptions;
    f.checks = Checks::None;
    v.push(f);

    let mut f = Fixture::new("Lease", 'B', 2006, 36, [Yes, Yes, Yes]);
    f.layout = Layout::Assumptions;
    v.push(f);

    let mut f = Fixture::new("Inv1", 'B', 1997, 14, [No, No, No]);
    f.checks = Checks::None;
    f.unlabeled = true;
    f.buried = true;
    v.push(f);

    let mut f = Fixture::new("Inv2", 'B', 1999, 16, [Yes, No, No]);
    f.orphan = true;
    f.buried = true;
    v.push(f);

    let mut f = Fixture::new("Inv3", 'B', 1999, 5, [No, No, No]);
    f.checks = Checks::InputOnly;
    f.hidden = Some(Hidden::Row);
    f.buried = true;
    v.push(f);

    let mut f = Fixture::new("Inv4", 'B', 1999, 11, [No, No, No]);
    f.defect = Some(CheckDefect::Circular);
    f.unstyled = true;
    f.buried = true;
    v.push(f);

    v
}

/// Configuration the corpus is audited under: one waiver, for the
/// consolidated statements' output check.
pub fn corpus_config() -> ControlConfig {
    let mut config = ControlConfig::default();
    for f in corpus().iter().filter(|f| f.waiver) {
        config.waivers.push(Waiver {
            file: f.file_name(),
            control: ControlId::DataValidity,
            sub_rule: "output_check".into(),
            justification: "outputs are tied out in the downstream consolidation review".into(),
        });
    }
    config
}

const INPUT_FILL: &str = "FFDDEBF7";

pub fn build(f: &Fixture) -> Workbook {
    let mut wb = Workbook::new();
    wb.created = Some(format!("{}-01-01T00:00:00Z", f.year));
    let input = if f.unstyled {
        0
    } else {
        wb.add_style(Style::fill(INPUT_FILL))
    };
    let header = wb.add_style(Style::bold());

    let n = f.rows;
    let last = n + 1;
    let total = n + 2;
    let mut data = Sheet::new("Data");

    if !f.unlabeled {
        let mut heads = vec!["Account", "Prior", "Current", "Change"];
        if f.tax_column() {
            heads.push("Tax");
        }
        for (i, h) in heads.iter().enumerate() {
            data.set_rc(1, i as u32 + 1, *h, header);
        }
    }
    for i in 1..=n {
        let r = i + 1;
        if !f.unlabeled {
            data.set_rc(r, 1, format!("Account {i:03}").as_str(), 0);
        }
        let prior = f64::from(1000 + 37 * i);
        data.set_rc(r, 2, prior, input);
        data.set_rc(r, 3, prior + f64::from(11 * i), input);
        data.set_rc(r, 4, format!("=C{r}-B{r}").as_str(), 0);
        if f.tax_column() {
            let tax = if f.buried {
                format!("=D{r}*0.35")
            } else {
                format!("=D{r}*Assumptions!$B$2")
            };
            data.set_rc(r, 5, tax.as_str(), 0);
        }
    }
    if !f.unlabeled {
        data.set_rc(total, 1, "Total", header);
    }
    data.set_rc(total, 2, format!("=SUM(B2:B{last})").as_str(), 0);
    data.set_rc(total, 3, format!("=SUM(C2:C{last})").as_str(), 0);
    let change_total = match f.defect {
        Some(CheckDefect::Circular) => format!("=SUM(D2:D{total})"),
        _ => format!("=SUM(D2:D{last})"),
    };
    data.set_rc(total, 4, change_total.as_str(), 0);
    if f.tax_column() {
        data.set_rc(total, 5, format!("=SUM(E2:E{last})").as_str(), 0);
    }

    // Check block: on the data sheet two rows below the total, or on its own sheet.
    let (mut checks, prefix, mut row) = match f.layout {
        Layout::Checks => (Some(Sheet::new("Checks")), "Data!", 1),
        _ => (None, "", total + 2),
    };
    {
        let target = checks.as_mut().unwrap_or(&mut data);
        if matches!(f.checks, Checks::InputOnly | Checks::Both) {
            let current_sum: f64 = (1..=n).map(|i| f64::from(1000 + 37 * i + 11 * i)).sum();
            target.set_rc(row, 1, "Ledger control total", 0);
            target.set_rc(row, 2, current_sum, input);
            target.set_rc(row + 1, 1, "Input check", 0);
            target.set_rc(row + 1, 2, format!("=SUM({prefix}C2:C{last})=B{row}").as_str(), 0);
            row += 2;
        }
        if matches!(f.checks, Checks::OutputOnly | Checks::Both) {
            let extra = if f.defect == Some(CheckDefect::Broken) {
                "+Adjustments!B5"
            } else {
                ""
            };
            target.set_rc(row, 1, "Output check (cross-foot)", 0);
            target.set_rc(
                row,
                2,
                format!("={prefix}D{total}={prefix}C{total}-{prefix}B{total}{extra}").as_str(),
                0,
            );
        }
    }

    if f.orphan {
        data.set_rc(1, 8, "Prior year copy", header);
        data.set_rc(1, 9, "Amount", header);
        for i in 1..=3 {
            data.set_rc(i + 1, 8, format!("Old account {i}").as_str(), 0);
            data.set_rc(i + 1, 9, f64::from(500 * i), input);
        }
    }
    match f.hidden {
        Some(Hidden::Row) => {
            data.hide_row(3);
        }
        Some(Hidden::Column) => {
            data.hide_col(3);
        }
        _ => {}
    }
    wb.add_sheet(data);
    if let Some(c) = checks {
        wb.add_sheet(c);
    }
    if f.layout == Layout::Assumptions {
        let mut a = Sheet::new("Assumptions");
        a.set_styled("A1", "Assumption", header)
            .set_styled("B1", "Value", header)
            .set("A2", "Tax rate")
            .set_styled("B2", 0.35, input);
        wb.add_sheet(a);
    }
    if f.hidden == Some(Hidden::Sheet) {
        let mut w = Sheet::new("Workings").with_state(SheetState::Hidden);
        w.set_styled("A1", "Note", header)
            .set_styled("B1", "Value", header)
            .set("A2", "Old balance")
            .set_styled("B2", 123.0, input);
        wb.add_sheet(w);
    }
    wb
}

/// Occupied and calculation cell counts worked out from the recipe by hand,
/// independent of both the writer and the reader.
pub fn expected_counts(f: &Fixture) -> (usize, usize) {
    let n = f.rows as usize;
    let tax = usize::from(f.tax_column());
    let label = usize::from(!f.unlabeled);
    let mut occupied = label * (4 + tax) // header row
        + n * (label + 2 + 1 + tax)      // schedule rows
        + label + 3 + tax; // total row
    let mut formulas = n * (1 + tax) + 3 + tax;
    if matches!(f.checks, Checks::InputOnly | Checks::Both) {
        occupied += 4;
        formulas += 1;
    }
    if matches!(f.checks, Checks::OutputOnly | Checks::Both) {
        occupied += 2;
        formulas += 1;
    }
    if f.layout == Layout::Assumptions {
        occupied += 4;
    }
    if f.orphan {
        occupied += 8;
    }
    if f.hidden == Some(Hidden::Sheet) {
        occupied += 4;
    }
    (occupied, formulas)
}

/// Write the corpus under `dir/a` and `dir/b`; returns (path, fixture) pairs.
pub fn write_corpus(dir: &Path) -> Vec<(PathBuf, Fixture)> {
    let mut out = Vec::new();
    for f in corpus() {
        let sub = dir.join(f.corpus.to_ascii_lowercase().to_string());
        std::fs::create_dir_all(&sub).unwrap();
        let path = sub.join(f.file_name());
        build(&f).save(&path).unwrap();
        out.push((path, f));
    }
    out
}

/// A large trial-balance style workbook: `rows` schedule rows, checks on
/// their own sheet.
pub fn large(rows: u32) -> Fixture {
    let mut f = Fixture::new("Large", 'A', 2005, rows, [Yes, Yes, Yes]);
    f.layout = Layout::Checks;
    f
}
