use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{Classes, ClassifyConfig};
use crate::depgraph::{find_broken_links, find_cycles, DependencyGraph, NodeId};
use crate::formula::{Ast, BinaryOp};
use crate::ingest::address::CellAddress;
use crate::ingest::{CellContent, WorkbookModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetKind {
    Input,
    CalculatedOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CheckSignal {
    DifferencePattern,
    HashTotalPattern,
    ComparisonPattern,
    LabelKeyword,
    CrossRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AdequacyDefect {
    Circular,
    BrokenLink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckCellFinding {
    pub cell: CellAddress,
    pub formula: String,
    pub target_kind: TargetKind,
    pub signals: BTreeSet<CheckSignal>,
    /// Empty when the check is adequate.
    pub adequacy_defects: BTreeSet<AdequacyDefect>,
}

impl CheckCellFinding {
    pub fn is_adequate(&self) -> bool {
        self.adequacy_defects.is_empty()
    }
}

/// Text branches of an IF longer than this are not status flags.
const STATUS_TEXT_MAX: usize = 24;

const AGGREGATES: &[&str] = &["SUM", "SUBTOTAL", "COUNT", "COUNTA"];

/// Formula cells whose structure compares or differences independently
/// derived figures, corroborated by a nearby keyword label or by reading
/// from two or more regions.
pub fn detect_check_cells(
    model: &WorkbookModel,
    graph: &DependencyGraph,
    classes: &Classes,
    region_of: &[usize],
    config: &ClassifyConfig,
) -> Vec<CheckCellFinding> {
    let keywords: Vec<String> = config.check_keywords.iter().map(|k| k.to_lowercase()).collect();
    let mut candidates = Vec::new();
    for (node, class) in classes.iter() {
        if !class.is_calculation() {
            continue;
        }
        let Some(Ok(ast)) = graph.formula(node) else {
            continue;
        };
        let address = graph.address(node);
        let home = address.sheet.as_deref().unwrap_or_default();
        let matcher = Matcher { graph, classes, home };
        let mut signals = matcher.structure(ast);
        if signals.is_empty() {
            continue;
        }
        if keyword_nearby(model, address, &keywords, config.label_distance) {
            signals.insert(CheckSignal::LabelKeyword);
        }
        let regions: BTreeSet<usize> = graph
            .dependencies(node)
            .iter()
            .map(|&d| region_of[d as usize])
            .collect();
        if regions.len() >= 2 {
            signals.insert(CheckSignal::CrossRegion);
        }
        if !signals.contains(&CheckSignal::LabelKeyword) && !signals.contains(&CheckSignal::CrossRegion) {
            continue;
        }
        let target_kind = if graph
            .dependencies(node)
            .iter()
            .any(|&d| classes.get(d).is_calculation())
        {
            TargetKind::CalculatedOutput
        } else {
            TargetKind::Input
        };
        candidates.push((node, signals, target_kind));
    }
    if candidates.is_empty() {
        return Vec::new();
    }

    let cyclic: Vec<NodeId> = find_cycles(graph)
        .iter()
        .flatten()
        .filter_map(|a| graph.node_of(a))
        .collect();
    let broken: Vec<NodeId> = find_broken_links(model, graph)
        .iter()
        .filter_map(|b| graph.node_of(&b.cell))
        .collect();
    let reaches_cycle = upstream(graph, &cyclic);
    let reaches_broken = upstream(graph, &broken);

    candidates
        .into_iter()
        .map(|(node, signals, target_kind)| {
            let mut adequacy_defects = BTreeSet::new();
            if reaches_cycle[node as usize] {
                adequacy_defects.insert(AdequacyDefect::Circular);
            }
            if reaches_broken[node as usize] {
                adequacy_defects.insert(AdequacyDefect::BrokenLink);
            }
            let address = graph.address(node).clone();
            let formula = model
                .cell(&address)
                .and_then(|c| c.content.formula_text().map(str::to_string))
                .unwrap_or_default();
            CheckCellFinding {
                cell: address,
                formula,
                target_kind,
                signals,
                adequacy_defects,
            }
        })
        .collect()
}

/// Nodes from which any of `seeds` is reachable (seeds included).
fn upstream(graph: &DependencyGraph, seeds: &[NodeId]) -> Vec<bool> {
    let mut seen = vec![false; graph.node_count()];
    let mut queue: VecDeque<NodeId> = VecDeque::new();
    for &s in seeds {
        if !seen[s as usize] {
            seen[s as usize] = true;
            queue.push_back(s);
        }
    }
    while let Some(n) = queue.pop_front() {
        for &p in graph.dependents(n) {
            if !seen[p as usize] {
                seen[p as usize] = true;
                queue.push_back(p);
            }
        }
    }
    seen
}

fn keyword_nearby(model: &WorkbookModel, at: &CellAddress, keywords: &[String], distance: u32) -> bool {
    let Some(sheet) = at.sheet.as_deref().and_then(|s| model.sheet(s)) else {
        return false;
    };
    let left = (1..=distance).filter_map(|d| at.column.checked_sub(d).map(|c| (at.row, c)));
    let above = (1..=distance).filter_map(|d| at.row.checked_sub(d).map(|r| (r, at.column)));
    left.chain(above)
        .any(|(r, c)| match sheet.cell(r, c).map(|c| &c.content) {
            Some(CellContent::Text(text)) => has_keyword(text, keywords),
            _ => false,
        })
}

/// A word of `text` starts with one of the keywords, ignoring case.
pub(crate) fn has_keyword(text: &str, keywords: &[String]) -> bool {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .any(|w| keywords.iter().any(|k| w.starts_with(k.as_str())))
}

struct Matcher<'a> {
    graph: &'a DependencyGraph,
    classes: &'a Classes,
    home: &'a str,
}

impl Matcher<'_> {
    /// Structural signals of a whole formula.
    fn structure(&self, ast: &Ast) -> BTreeSet<CheckSignal> {
        let mut signals = BTreeSet::new();
        let ast = ast.unparen();
        if let Some(hash) = self.difference(ast).or_else(|| self.wrapped_difference(ast)) {
            signals.insert(CheckSignal::DifferencePattern);
            if hash {
                signals.insert(CheckSignal::HashTotalPattern);
            }
        } else if self.comparison(ast) || self.status_if(ast) {
            signals.insert(CheckSignal::ComparisonPattern);
        }
        signals
    }

    /// Difference of two aggregates. `Some(true)` when either side is an
    /// aggregate function call (a control total).
    fn difference(&self, ast: &Ast) -> Option<bool> {
        let Ast::Binary {
            op: BinaryOp::Sub,
            left,
            right,
        } = ast.unparen()
        else {
            return None;
        };
        let (l, r) = (self.aggregate(left)?, self.aggregate(right)?);
        Some(l || r)
    }

    /// ABS or ROUND around a difference of aggregates.
    fn wrapped_difference(&self, ast: &Ast) -> Option<bool> {
        match ast.unparen() {
            Ast::Call { name, args } if (name == "ABS" || name == "ROUND") && !args.is_empty() => {
                self.difference(&args[0])
            }
            _ => None,
        }
    }

    /// `Some(is_call)` when the node is an aggregate call or a reference to a
    /// calculation cell.
    fn aggregate(&self, ast: &Ast) -> Option<bool> {
        match ast.unparen() {
            Ast::Call { name, .. } if AGGREGATES.contains(&name.as_str()) => Some(true),
            Ast::Ref { book: None, address } => {
                let sheet = address.sheet.as_deref().unwrap_or(self.home);
                let n = self.graph.node(sheet, address.row, address.column)?;
                self.classes.get(n).is_calculation().then_some(false)
            }
            _ => None,
        }
    }

    /// A comparison between two non-literal operands, or a tolerance test on
    /// a difference of aggregates.
    fn comparison(&self, ast: &Ast) -> bool {
        let Ast::Binary { op, left, right } = ast.unparen() else {
            return false;
        };
        if !op.is_comparison() {
            return false;
        }
        let tolerance = |side: &Ast| {
            self.difference(side)
                .or_else(|| self.wrapped_difference(side))
                .is_some()
        };
        (!left.is_literal() && !right.is_literal()) || tolerance(left) || tolerance(right)
    }

    fn status_if(&self, ast: &Ast) -> bool {
        let Ast::Call { name, args } = ast.unparen() else {
            return false;
        };
        if name != "IF" || !(2..=3).contains(&args.len()) {
            return false;
        }
        let cond = &args[0];
        let cond_ok = self.difference(cond).is_some() || self.comparison(cond);
        cond_ok && args[1..].iter().all(is_status_literal)
    }
}

fn is_status_literal(ast: &Ast) -> bool {
    match ast.unparen() {
        Ast::Text(t) => t.chars().count() <= STATUS_TEXT_MAX,
        Ast::Bool(_) | Ast::Number { .. } | Ast::Empty => true,
        Ast::Unary { operand, .. } => matches!(operand.unparen(), Ast::Number { .. }),
        _ => false,
    }
}
