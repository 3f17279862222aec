use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::address::{column_letters, CellAddress};
use crate::formula::ErrorCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SheetVisibility {
    Visible,
    Hidden,
    VeryHidden,
}

/// A stored value: a literal cell's content or a formula's cached result.
#[derive(Debug, Clone, PartialEq)]
pub enum CellValue {
    Number(f64),
    Text(String),
    Boolean(bool),
    Error(ErrorCode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Blank,
    Number,
    Text,
    Boolean,
    ErrorValue,
    Formula,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellContent {
    /// The cell element exists (usually for formatting) but holds nothing.
    Blank,
    Number(f64),
    Text(String),
    Boolean(bool),
    Error(ErrorCode),
    /// `text` is the formula without its leading `=`; never empty.
    Formula {
        text: String,
        cached: Option<CellValue>,
    },
}

impl CellContent {
    pub fn kind(&self) -> CellKind {
        match self {
            CellContent::Blank => CellKind::Blank,
            CellContent::Number(_) => CellKind::Number,
            CellContent::Text(_) => CellKind::Text,
            CellContent::Boolean(_) => CellKind::Boolean,
            CellContent::Error(_) => CellKind::ErrorValue,
            CellContent::Formula { .. } => CellKind::Formula,
        }
    }

    pub fn formula_text(&self) -> Option<&str> {
        match self {
            CellContent::Formula { text, .. } => Some(text),
            _ => None,
        }
    }

    /// The error code a reviewer would see in the cell, if any.
    pub fn visible_error(&self) -> Option<ErrorCode> {
        match self {
            CellContent::Error(code) => Some(*code),
            CellContent::Formula {
                cached: Some(CellValue::Error(code)),
                ..
            } => Some(*code),
            _ => None,
        }
    }

    /// Source text of the cell as stored in the file.
    pub fn source_text(&self) -> String {
        match self {
            CellContent::Blank => String::new(),
            CellContent::Number(n) => format_number(*n),
            CellContent::Text(t) => t.clone(),
            CellContent::Boolean(b) => if *b { "TRUE" } else { "FALSE" }.to_string(),
            CellContent::Error(e) => e.as_str().to_string(),
            CellContent::Formula { text, .. } => text.clone(),
        }
    }
}

pub(crate) fn format_number(n: f64) -> String {
    format!("{n}")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct StyleRecord {
    /// Fill color as `rgb:AARRGGBB`, `theme:N[+tint]` or `indexed:N`; `None` for no fill.
    pub fill: Option<String>,
    pub font_color: Option<String>,
    pub bold: bool,
    pub border: bool,
}

/// The attributes that make cells look alike to a reader.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StyleFamily {
    pub fill: Option<String>,
    pub font_color: Option<String>,
    pub bold: bool,
}

impl StyleRecord {
    pub fn family(&self) -> StyleFamily {
        StyleFamily {
            fill: self.fill.clone(),
            font_color: self.font_color.clone(),
            bold: self.bold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub address: CellAddress,
    pub content: CellContent,
    /// Index into [`WorkbookModel::styles`]; always in range.
    pub style: usize,
}

impl Cell {
    pub fn is_occupied(&self) -> bool {
        !matches!(self.content, CellContent::Blank)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SheetModel {
    pub name: String,
    pub visibility: SheetVisibility,
    /// Keyed by (row, column).
    pub cells: BTreeMap<(u32, u32), Cell>,
    pub hidden_rows: BTreeSet<u32>,
    pub hidden_columns: BTreeSet<u32>,
}

impl SheetModel {
    pub fn cell(&self, row: u32, column: u32) -> Option<&Cell> {
        self.cells.get(&(row, column))
    }

    pub fn occupied(&self) -> impl Iterator<Item = &Cell> {
        self.cells.values().filter(|c| c.is_occupied())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefinedName {
    pub name: String,
    /// Sheet the name is local to; `None` for workbook scope.
    pub scope: Option<String>,
    /// Definition text without a leading `=`.
    pub refers_to: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalLink {
    /// 1-based position; formulas in the file write `[1]Sheet!A1`.
    pub index: usize,
    /// Target path of the linked workbook, when the package records one.
    pub target: Option<String>,
    pub sheet_names: Vec<String>,
}

impl ExternalLink {
    /// File name portion of the target.
    pub fn file_name(&self) -> Option<&str> {
        self.target
            .as_deref()
            .map(|t| t.rsplit(['/', '\\']).next().unwrap_or(t))
    }

    /// Whether a formula's `[book]` prefix designates this link.
    pub fn matches(&self, book: &str) -> bool {
        if let Ok(i) = book.trim().parse::<usize>() {
            return i == self.index;
        }
        let wanted = book.rsplit(['/', '\\']).next().unwrap_or(book);
        self.file_name().is_some_and(|f| f.eq_ignore_ascii_case(wanted))
    }
}

/// Parsed snapshot of one workbook. Built once by the loader and never
/// mutated; every analysis is a function of it.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkbookModel {
    pub path: String,
    pub sheets: Vec<SheetModel>,
    pub defined_names: Vec<DefinedName>,
    pub external_links: Vec<ExternalLink>,
    /// `dcterms:created` from the core properties, verbatim.
    pub file_creation_date: Option<String>,
    /// Cell format table; index 0 is the default format.
    pub styles: Vec<StyleRecord>,
}

impl WorkbookModel {
    pub fn sheet(&self, name: &str) -> Option<&SheetModel> {
        self.sheets.iter().find(|s| s.name.eq_ignore_ascii_case(name))
    }

    pub fn sheet_index(&self, name: &str) -> Option<usize> {
        self.sheets.iter().position(|s| s.name.eq_ignore_ascii_case(name))
    }

    pub fn style(&self, cell: &Cell) -> &StyleRecord {
        &self.styles[cell.style]
    }

    pub fn cell(&self, address: &CellAddress) -> Option<&Cell> {
        let sheet = self.sheet(address.sheet.as_deref()?)?;
        sheet.cell(address.row, address.column)
    }

    pub fn occupied(&self) -> impl Iterator<Item = &Cell> {
        self.sheets.iter().flat_map(SheetModel::occupied)
    }

    /// Defined name lookup: sheet-local scope first, then workbook scope.
    pub fn defined_name(&self, name: &str, sheet: Option<&str>) -> Option<&DefinedName> {
        let local = sheet.and_then(|s| {
            self.defined_names.iter().find(|d| {
                d.name.eq_ignore_ascii_case(name) && d.scope.as_deref().is_some_and(|sc| sc.eq_ignore_ascii_case(s))
            })
        });
        local.or_else(|| {
            self.defined_names
                .iter()
                .find(|d| d.scope.is_none() && d.name.eq_ignore_ascii_case(name))
        })
    }
}

/// Number of cells holding a value or a formula, across every sheet
/// including hidden ones. Cells that exist only to carry formatting do not
/// count.
pub fn occupied_cells(model: &WorkbookModel) -> usize {
    model.occupied().count()
}

pub fn calculation_cells(model: &WorkbookModel) -> usize {
    model
        .occupied()
        .filter(|c| c.content.kind() == CellKind::Formula)
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HiddenKind {
    Sheet,
    Row,
    Column,
}

impl fmt::Display for HiddenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HiddenKind::Sheet => "sheet",
            HiddenKind::Row => "row",
            HiddenKind::Column => "column",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenEntry {
    pub kind: HiddenKind,
    /// `Sheet`, `Sheet!7` or `Sheet!C`.
    pub identifier: String,
    pub sheet: String,
    pub occupied: usize,
}

/// Hidden sheets, rows and columns that contain data. Rows and columns
/// hidden inside an already hidden sheet are folded into the sheet entry.
pub fn hidden_data(model: &WorkbookModel) -> Vec<HiddenEntry> {
    hidden_scan(model).0
}

/// Hidden rows and columns with data that [`hidden_data`] folded into a
/// hidden sheet entry.
pub fn subsumed_hidden_data(model: &WorkbookModel) -> Vec<HiddenEntry> {
    hidden_scan(model).1
}

fn hidden_scan(model: &WorkbookModel) -> (Vec<HiddenEntry>, Vec<HiddenEntry>) {
    let mut reported = Vec::new();
    let mut subsumed = Vec::new();
    for sheet in &model.sheets {
        let mut rows: BTreeMap<u32, usize> = BTreeMap::new();
        let mut cols: BTreeMap<u32, usize> = BTreeMap::new();
        let mut total = 0;
        for cell in sheet.occupied() {
            total += 1;
            let (r, c) = (cell.address.row, cell.address.column);
            if sheet.hidden_rows.contains(&r) {
                *rows.entry(r).or_default() += 1;
            }
            if sheet.hidden_columns.contains(&c) {
                *cols.entry(c).or_default() += 1;
            }
        }
        let lines = rows
            .into_iter()
            .map(|(r, n)| HiddenEntry {
                kind: HiddenKind::Row,
                identifier: format!("{}!{}", sheet.name, r),
                sheet: sheet.name.clone(),
                occupied: n,
            })
            .chain(cols.into_iter().map(|(c, n)| HiddenEntry {
                kind: HiddenKind::Column,
                identifier: format!("{}!{}", sheet.name, column_letters(c)),
                sheet: sheet.name.clone(),
                occupied: n,
            }));
        if sheet.visibility == SheetVisibility::Visible {
            reported.extend(lines);
        } else {
            subsumed.extend(lines);
            if total > 0 {
                reported.push(HiddenEntry {
                    kind: HiddenKind::Sheet,
                    identifier: sheet.name.clone(),
                    sheet: sheet.name.clone(),
                    occupied: total,
                });
            }
        }
    }
    (reported, subsumed)
}
