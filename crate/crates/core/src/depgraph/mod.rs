//! Workbook-wide cell dependency graph.
//!
//! Nodes are the occupied cells, numbered in address order (sheet name,
//! column, row) so that node ids do not depend on the order sheets or cells
//! appear in the file. Edges run from a formula cell to each occupied cell it
//! reads, directly, through a range, or through a defined name.

mod cycles;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use cycles::find_cycles;

use crate::formula::{extract_refs, parse_formula, Ast, ErrorCode, FormulaError, RangeBound, Reference};
use crate::ingest::address::{CellAddress, MAX_COLUMN, MAX_ROW};
use crate::ingest::{CellContent, CellValue, WorkbookModel};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnresolvedReason {
    ExternalBookMissing,
    NamedRangeUndefined,
    SheetMissing,
    RefError,
}

impl fmt::Display for UnresolvedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnresolvedReason::ExternalBookMissing => "external workbook not found",
            UnresolvedReason::NamedRangeUndefined => "undefined name",
            UnresolvedReason::SheetMissing => "sheet does not exist",
            UnresolvedReason::RefError => "#REF! reference",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Unresolved {
    pub source: CellAddress,
    /// Reference as written in the formula.
    pub reference: String,
    pub reason: UnresolvedReason,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RangeMarker {
    pub source: CellAddress,
    /// Sheet-qualified range text, e.g. `Data!A1:A10`.
    pub range: String,
}

#[derive(Debug)]
pub struct DependencyGraph {
    nodes: Vec<CellAddress>,
    edges: Vec<Vec<NodeId>>,
    reverse: Vec<Vec<NodeId>>,
    lookup: HashMap<(String, u32, u32), NodeId>,
    formulas: HashMap<NodeId, Result<Ast, FormulaError>>,
    pub unresolved: Vec<Unresolved>,
    pub range_markers: Vec<RangeMarker>,
}

impl DependencyGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn address(&self, node: NodeId) -> &CellAddress {
        &self.nodes[node as usize]
    }

    pub fn addresses(&self) -> &[CellAddress] {
        &self.nodes
    }

    /// Node for an occupied cell; sheet names match case-insensitively.
    pub fn node(&self, sheet: &str, row: u32, column: u32) -> Option<NodeId> {
        self.lookup.get(&(sheet.to_lowercase(), row, column)).copied()
    }

    pub fn node_of(&self, address: &CellAddress) -> Option<NodeId> {
        self.node(address.sheet.as_deref()?, address.row, address.column)
    }

    /// Cells `node` reads, in node order.
    pub fn dependencies(&self, node: NodeId) -> &[NodeId] {
        &self.edges[node as usize]
    }

    /// Cells that read `node`, in node order.
    pub fn dependents(&self, node: NodeId) -> &[NodeId] {
        &self.reverse[node as usize]
    }

    /// Parse result for a formula cell; `None` for non-formula cells.
    pub fn formula(&self, node: NodeId) -> Option<&Result<Ast, FormulaError>> {
        self.formulas.get(&node)
    }

    /// Formula cells whose text did not parse, in address order.
    pub fn unparsed(&self) -> Vec<(&CellAddress, &FormulaError)> {
        let mut out: Vec<_> = self
            .formulas
            .iter()
            .filter_map(|(&n, r)| r.as_ref().err().map(|e| (self.address(n), e)))
            .collect();
        out.sort_by(|a, b| a.0.cmp(b.0));
        out
    }

    /// All edges as address pairs, sorted.
    pub fn edge_list(&self) -> Vec<(CellAddress, CellAddress)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (from, targets) in self.edges.iter().enumerate() {
            for &to in targets {
                out.push((self.nodes[from].clone(), self.nodes[to as usize].clone()));
            }
        }
        out
    }
}

/// Per-sheet index used while resolving references.
struct SheetIndex {
    name: String,
    /// (column, row) → node, so a column slice of a range is one range query.
    cells: BTreeMap<(u32, u32), NodeId>,
    /// Used area: (min row, max row, min column, max column).
    bounds: Option<(u32, u32, u32, u32)>,
}

pub fn build_graph(model: &WorkbookModel) -> DependencyGraph {
    let mut nodes: Vec<(CellAddress, &CellContent)> =
        model.occupied().map(|c| (c.address.clone(), &c.content)).collect();
    nodes.sort_by(|a, b| a.0.cmp(&b.0));

    let mut lookup = HashMap::with_capacity(nodes.len());
    let mut sheets: HashMap<String, SheetIndex> = HashMap::new();
    for s in &model.sheets {
        sheets.insert(
            s.name.to_lowercase(),
            SheetIndex {
                name: s.name.clone(),
                cells: BTreeMap::new(),
                bounds: None,
            },
        );
    }
    for (i, (addr, _)) in nodes.iter().enumerate() {
        let sheet = addr.sheet.as_deref().unwrap_or_default().to_lowercase();
        lookup.insert((sheet.clone(), addr.row, addr.column), i as NodeId);
        if let Some(idx) = sheets.get_mut(&sheet) {
            idx.cells.insert((addr.column, addr.row), i as NodeId);
            let (r, c) = (addr.row, addr.column);
            idx.bounds = Some(match idx.bounds {
                None => (r, r, c, c),
                Some((r0, r1, c0, c1)) => (r0.min(r), r1.max(r), c0.min(c), c1.max(c)),
            });
        }
    }

    let mut resolver = Resolver {
        model,
        sheets: &sheets,
        name_cache: HashMap::new(),
    };
    let mut edges: Vec<Vec<NodeId>> = vec![Vec::new(); nodes.len()];
    let mut formulas = HashMap::new();
    let mut unresolved = Vec::new();
    let mut range_markers = Vec::new();

    for (i, (addr, content)) in nodes.iter().enumerate() {
        let CellContent::Formula { text, .. } = content else {
            continue;
        };
        let parsed = parse_formula(text);
        if let Ok(ast) = &parsed {
            let home = addr.sheet.as_deref().unwrap_or_default();
            let mut out = Resolution::default();
            resolver.resolve_ast(ast, home, &mut out, 0);
            let mut targets = out.targets;
            targets.sort_unstable();
            targets.dedup();
            edges[i] = targets;
            for (reference, reason) in out.unresolved {
                unresolved.push(Unresolved {
                    source: addr.clone(),
                    reference,
                    reason,
                });
            }
            for range in out.ranges {
                range_markers.push(RangeMarker {
                    source: addr.clone(),
                    range,
                });
            }
        }
        formulas.insert(i as NodeId, parsed);
    }
    unresolved.sort();
    unresolved.dedup();
    range_markers.sort();
    range_markers.dedup();

    let mut reverse: Vec<Vec<NodeId>> = vec![Vec::new(); nodes.len()];
    for (from, targets) in edges.iter().enumerate() {
        for &to in targets {
            reverse[to as usize].push(from as NodeId);
        }
    }

    DependencyGraph {
        nodes: nodes.into_iter().map(|(a, _)| a).collect(),
        edges,
        reverse,
        lookup,
        formulas,
        unresolved,
        range_markers,
    }
}

#[derive(Default)]
struct Resolution {
    targets: Vec<NodeId>,
    unresolved: Vec<(String, UnresolvedReason)>,
    ranges: Vec<String>,
}

struct Resolver<'a> {
    model: &'a WorkbookModel,
    sheets: &'a HashMap<String, SheetIndex>,
    /// Parsed defined-name bodies keyed by (name, scope).
    name_cache: HashMap<(String, Option<String>), Option<Ast>>,
}

const MAX_NAME_DEPTH: usize = 16;

impl Resolver<'_> {
    fn resolve_ast(&mut self, ast: &Ast, home: &str, out: &mut Resolution, depth: usize) {
        ast.walk(&mut |node| {
            if let Ast::Error(ErrorCode::Ref) = node {
                out.unresolved
                    .push((ErrorCode::Ref.as_str().to_string(), UnresolvedReason::RefError));
            }
        });
        for reference in extract_refs(ast) {
            self.resolve(&reference, home, out, depth);
        }
    }

    fn resolve(&mut self, reference: &Reference, home: &str, out: &mut Resolution, depth: usize) {
        if let Some(book) = reference.book() {
            if !self.external_resolves(book, reference.sheet()) {
                out.unresolved
                    .push((reference.render(), UnresolvedReason::ExternalBookMissing));
            }
            return;
        }
        match reference {
            Reference::Cell { address, .. } => {
                let Some(sheet) = self.sheet(address.sheet.as_deref().unwrap_or(home)) else {
                    out.unresolved
                        .push((reference.render(), UnresolvedReason::SheetMissing));
                    return;
                };
                if let Some(&n) = sheet.cells.get(&(address.column, address.row)) {
                    out.targets.push(n);
                }
            }
            Reference::Range { sheet, start, end, .. } => {
                let Some(index) = self.sheet(sheet.as_deref().unwrap_or(home)) else {
                    out.unresolved
                        .push((reference.render(), UnresolvedReason::SheetMissing));
                    return;
                };
                out.ranges.push(format!(
                    "{}!{}:{}",
                    crate::ingest::address::quote_sheet_name(&index.name),
                    start.render(),
                    end.render()
                ));
                expand_range(index, start, end, &mut out.targets);
            }
            Reference::Name { sheet, name, .. } => {
                let scope = sheet.as_deref().unwrap_or(home);
                if sheet.is_some() && self.sheet(scope).is_none() {
                    out.unresolved
                        .push((reference.render(), UnresolvedReason::SheetMissing));
                    return;
                }
                let Some(def) = self.model.defined_name(name, Some(scope)) else {
                    out.unresolved
                        .push((reference.render(), UnresolvedReason::NamedRangeUndefined));
                    return;
                };
                if depth >= MAX_NAME_DEPTH {
                    return;
                }
                let key = (def.name.to_lowercase(), def.scope.clone());
                let body = self
                    .name_cache
                    .entry(key)
                    .or_insert_with(|| parse_formula(&def.refers_to).ok())
                    .clone();
                if let Some(body) = body {
                    // Unqualified references inside a name body are read
                    // relative to the name's own sheet, else the caller's.
                    let name_home = def.scope.clone().unwrap_or_else(|| home.to_string());
                    let mut inner = Resolution::default();
                    self.resolve_ast(&body, &name_home, &mut inner, depth + 1);
                    out.targets.extend(inner.targets);
                    out.ranges.extend(inner.ranges);
                    for (text, reason) in inner.unresolved {
                        out.unresolved
                            .push((format!("{} ({text})", reference.render()), reason));
                    }
                }
            }
        }
    }

    fn sheet(&self, name: &str) -> Option<&SheetIndex> {
        self.sheets.get(&name.to_lowercase())
    }

    /// External references resolve only against link records stored in the
    /// package; the other workbook is never opened.
    fn external_resolves(&self, book: &str, sheet: Option<&str>) -> bool {
        self.model.external_links.iter().any(|link| {
            link.matches(book)
                && match sheet {
                    Some(s) if !link.sheet_names.is_empty() => {
                        link.sheet_names.iter().any(|n| n.eq_ignore_ascii_case(s))
                    }
                    _ => true,
                }
        })
    }
}

/// Push every occupied cell inside the range. Whole-column and whole-row
/// ranges are clamped to the sheet's used area.
fn expand_range(index: &SheetIndex, start: &RangeBound, end: &RangeBound, out: &mut Vec<NodeId>) {
    let Some((min_r, max_r, min_c, max_c)) = index.bounds else {
        return;
    };
    let (c0, c1) = match (start.column, end.column) {
        (Some(a), Some(b)) => (a.min(b), a.max(b)),
        _ => (1, MAX_COLUMN),
    };
    let (r0, r1) = match (start.row, end.row) {
        (Some(a), Some(b)) => (a.min(b), a.max(b)),
        _ => (1, MAX_ROW),
    };
    let (c0, c1) = (c0.max(min_c), c1.min(max_c));
    let (r0, r1) = (r0.max(min_r), r1.min(max_r));
    if c0 > c1 || r0 > r1 {
        return;
    }
    for col in c0..=c1 {
        out.extend(index.cells.range((col, r0)..=(col, r1)).map(|(_, &n)| n));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BrokenReason {
    RefError,
    ErrorValue(ErrorCode),
    ExternalBookMissing,
    NamedRangeUndefined,
    SheetMissing,
}

impl fmt::Display for BrokenReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BrokenReason::RefError => f.write_str("#REF! error"),
            BrokenReason::ErrorValue(code) => write!(f, "error value {code}"),
            BrokenReason::ExternalBookMissing => f.write_str("external workbook not found"),
            BrokenReason::NamedRangeUndefined => f.write_str("undefined name"),
            BrokenReason::SheetMissing => f.write_str("sheet does not exist"),
        }
    }
}

impl From<UnresolvedReason> for BrokenReason {
    fn from(r: UnresolvedReason) -> Self {
        match r {
            UnresolvedReason::ExternalBookMissing => BrokenReason::ExternalBookMissing,
            UnresolvedReason::NamedRangeUndefined => BrokenReason::NamedRangeUndefined,
            UnresolvedReason::SheetMissing => BrokenReason::SheetMissing,
            UnresolvedReason::RefError => BrokenReason::RefError,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BrokenLink {
    pub cell: CellAddress,
    pub reason: BrokenReason,
}

/// Cells showing an error value, formulas with unresolvable references, and
/// formulas that still contain a `#REF!` left behind by a deleted reference.
/// Sorted by cell, one entry per (cell, reason).
pub fn find_broken_links(model: &WorkbookModel, graph: &DependencyGraph) -> Vec<BrokenLink> {
    let mut out = BTreeSet::new();
    for cell in model.occupied() {
        let code = match &cell.content {
            CellContent::Error(code) => Some(*code),
            CellContent::Formula {
                cached: Some(CellValue::Error(code)),
                ..
            } => Some(*code),
            _ => None,
        };
        if let Some(code) = code {
            let reason = if code == ErrorCode::Ref {
                BrokenReason::RefError
            } else {
                BrokenReason::ErrorValue(code)
            };
            out.insert(BrokenLink {
                cell: cell.address.clone(),
                reason,
            });
        }
    }
    for u in &graph.unresolved {
        out.insert(BrokenLink {
            cell: u.source.clone(),
            reason: u.reason.into(),
        });
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Cell, SheetModel, SheetVisibility, StyleRecord};

    pub(crate) fn model(sheets: &[(&str, &[(&str, CellContent)])]) -> WorkbookModel {
        WorkbookModel {
            path: "t.xlsx".into(),
            sheets: sheets
                .iter()
                .map(|(name, cells)| SheetModel {
                    name: name.to_string(),
                    visibility: SheetVisibility::Visible,
                    cells: cells
                        .iter()
                        .map(|(a1, content)| {
                            let a = crate::ingest::parse_address(a1).unwrap();
                            (
                                (a.row, a.column),
                                Cell {
                                    address: CellAddress::on_sheet(name, a.column, a.row),
                                    content: content.clone(),
                                    style: 0,
                                },
                            )
                        })
                        .collect(),
                    hidden_rows: Default::default(),
                    hidden_columns: Default::default(),
                })
                .collect(),
            defined_names: vec![],
            external_links: vec![],
            file_creation_date: None,
            styles: vec![StyleRecord::default()],
        }
    }

    fn f(text: &str) -> CellContent {
        CellContent::Formula {
            text: text.into(),
            cached: None,
        }
    }

    fn edges(g: &DependencyGraph) -> Vec<(String, String)> {
        g.edge_list()
            .into_iter()
            .map(|(a, b)| (a.local_a1(), b.local_a1()))
            .collect()
    }

    #[test]
    fn single_edge() {
        let m = model(&[("S", &[("A1", CellContent::Number(5.0)), ("B1", f("A1*2"))])]);
        let g = build_graph(&m);
        assert_eq!(edges(&g), vec![("B1".into(), "A1".into())]);
        assert!(g.unresolved.is_empty());
    }

    #[test]
    fn missing_sheet_is_unresolved() {
        let m = model(&[("S", &[("B1", f("Missing!C3"))])]);
        let g = build_graph(&m);
        assert_eq!(g.unresolved.len(), 1);
        assert_eq!(g.unresolved[0].reason, UnresolvedReason::SheetMissing);
        assert_eq!(g.unresolved[0].source.to_string(), "S!B1");
    }

    #[test]
    fn range_expands_to_occupied_cells_only() {
        let m = model(&[(
            "S",
            &[
                ("A1", CellContent::Number(1.0)),
                ("A2", CellContent::Number(2.0)),
                ("A3", CellContent::Blank),
                ("C1", f("SUM(A1:A3)")),
            ],
        )]);
        let g = build_graph(&m);
        assert_eq!(edges(&g), vec![("C1".into(), "A1".into()), ("C1".into(), "A2".into())]);
        assert_eq!(g.range_markers.len(), 1);
        assert_eq!(g.range_markers[0].range, "S!A1:A3");
    }

    #[test]
    fn whole_column_clamps_to_used_area() {
        let m = model(&[(
            "S",
            &[
                ("B1", CellContent::Number(1.0)),
                ("B9", CellContent::Number(2.0)),
                ("D1", f("SUM(B:B)")),
                ("D2", f("SUM(3:3)")),
            ],
        )]);
        let g = build_graph(&m);
        assert_eq!(edges(&g), vec![("D1".into(), "B1".into()), ("D1".into(), "B9".into())]);
    }

    #[test]
    fn defined_names_resolve() {
        let mut m = model(&[
            (
                "S",
                &[
                    ("A1", CellContent::Number(0.35)),
                    ("B1", f("Rate*2")),
                    ("B2", f("Nope")),
                ],
            ),
            ("T", &[("A1", f("S!A1"))]),
        ]);
        m.defined_names.push(crate::ingest::DefinedName {
            name: "Rate".into(),
            scope: None,
            refers_to: "S!$A$1".into(),
        });
        let g = build_graph(&m);
        let e = g.edge_list();
        assert!(e
            .iter()
            .any(|(a, b)| a.to_string() == "S!B1" && b.to_string() == "S!A1"));
        assert_eq!(g.unresolved.len(), 1);
        assert_eq!(g.unresolved[0].reason, UnresolvedReason::NamedRangeUndefined);
    }

    #[test]
    fn ref_error_literal_is_unresolved() {
        let m = model(&[("S", &[("A1", f("#REF!+1")), ("A2", f("S!#REF!*2"))])]);
        let g = build_graph(&m);
        assert_eq!(g.unresolved.len(), 2);
        assert!(g.unresolved.iter().all(|u| u.reason == UnresolvedReason::RefError));
    }

    #[test]
    fn external_links_resolve_against_package_records() {
        let mut m = model(&[(
            "S",
            &[
                ("A1", f("[1]Rates!A1")),
                ("A2", f("[Gone.xlsx]S!A1")),
                ("A3", f("[1]Other!A1")),
            ],
        )]);
        m.external_links.push(crate::ingest::ExternalLink {
            index: 1,
            target: Some("Rates.xlsx".into()),
            sheet_names: vec!["Rates".into()],
        });
        let g = build_graph(&m);
        let sources: Vec<_> = g.unresolved.iter().map(|u| u.source.local_a1()).collect();
        assert_eq!(sources, vec!["A2", "A3"]);
        assert!(g
            .unresolved
            .iter()
            .all(|u| u.reason == UnresolvedReason::ExternalBookMissing));
    }

    #[test]
    fn unparsed_formulas_are_recorded_without_edges() {
        let m = model(&[("S", &[("A1", CellContent::Number(1.0)), ("B1", f("SUM(A1,"))])]);
        let g = build_graph(&m);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.unparsed().len(), 1);
    }

    #[test]
    fn broken_links_union() {
        let m = model(&[(
            "S",
            &[
                (
                    "A1",
                    CellContent::Formula {
                        text: "B1".into(),
                        cached: Some(CellValue::Error(ErrorCode::Ref)),
                    },
                ),
                ("A2", CellContent::Error(ErrorCode::NA)),
                ("A3", f("[Gone.xlsx]S!A1")),
                ("A4", CellContent::Number(1.0)),
            ],
        )]);
        let g = build_graph(&m);
        let found: Vec<_> = find_broken_links(&m, &g)
            .into_iter()
            .map(|b| (b.cell.local_a1(), b.reason))
            .collect();
        assert_eq!(
            found,
            vec![
                ("A1".into(), BrokenReason::RefError),
                ("A2".into(), BrokenReason::ErrorValue(ErrorCode::NA)),
                ("A3".into(), BrokenReason::ExternalBookMissing),
            ]
        );
    }

    #[test]
    fn healthy_workbook_has_no_broken_links() {
        let m = model(&[("S", &[("A1", CellContent::Number(1.0)), ("B1", f("A1+1"))])]);
        assert!(find_broken_links(&m, &build_graph(&m)).is_empty());
    }

    #[test]
    fn sheet_order_does_not_change_edges() {
        let a: &[(&str, CellContent)] = &[("A1", CellContent::Number(1.0)), ("B1", f("T!A1+A1"))];
        let b: &[(&str, CellContent)] = &[("A1", f("S!B1*2"))];
        let g1 = build_graph(&model(&[("S", a), ("T", b)]));
        let g2 = build_graph(&model(&[("T", b), ("S", a)]));
        assert_eq!(g1.edge_list(), g2.edge_list());
    }
}
