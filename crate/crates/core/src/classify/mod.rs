//! Cell roles, contiguous regions, check cells and orphaned blocks.

mod checks;
mod regions;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use checks::{detect_check_cells, AdequacyDefect, CheckCellFinding, CheckSignal, TargetKind};
pub use regions::{detect_orphan_regions, detect_regions, style_distinct, Region};

use crate::depgraph::{DependencyGraph, NodeId};
use crate::ingest::address::CellAddress;
use crate::ingest::{CellContent, WorkbookModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CellClass {
    Input,
    Calculation,
    Label,
    CheckCell,
    Inert,
}

impl CellClass {
    /// Check cells are calculation cells with an extra role.
    pub fn is_calculation(self) -> bool {
        matches!(self, CellClass::Calculation | CellClass::CheckCell)
    }
}

/// Tunables shared by region, header, style and check-cell detection.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyConfig {
    pub check_keywords: Vec<String>,
    /// How far left of or above a check cell a keyword label may sit.
    pub label_distance: u32,
    pub header_label_threshold: f64,
    pub style_family_threshold: f64,
    /// Treat blocks of pure labels as candidate orphans.
    pub orphan_label_only: bool,
}

pub const DEFAULT_CHECK_KEYWORDS: &[&str] = &[
    "check",
    "diff",
    "difference",
    "variance",
    "var",
    "tie",
    "recon",
    "reconcile",
    "control",
    "hash",
    "balance",
    "oob",
];

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            check_keywords: DEFAULT_CHECK_KEYWORDS.iter().map(|s| s.to_string()).collect(),
            label_distance: 3,
            header_label_threshold: 0.8,
            style_family_threshold: 0.9,
            orphan_label_only: false,
        }
    }
}

/// Class of every occupied cell, indexed by graph node.
#[derive(Debug, Clone, PartialEq)]
pub struct Classes {
    classes: Vec<CellClass>,
}

impl Classes {
    pub fn get(&self, node: NodeId) -> CellClass {
        self.classes[node as usize]
    }

    pub fn of(&self, graph: &DependencyGraph, address: &CellAddress) -> Option<CellClass> {
        graph.node_of(address).map(|n| self.get(n))
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, CellClass)> + '_ {
        self.classes.iter().enumerate().map(|(i, &c)| (i as NodeId, c))
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Promote the cells of `findings` to [`CellClass::CheckCell`].
    pub fn mark_checks(&mut self, graph: &DependencyGraph, findings: &[CheckCellFinding]) {
        for f in findings {
            if let Some(n) = graph.node_of(&f.cell) {
                self.classes[n as usize] = CellClass::CheckCell;
            }
        }
    }
}

/// Base partition of occupied cells. Check cells are added afterwards by
/// [`Classes::mark_checks`].
pub fn classify_cells(model: &WorkbookModel, graph: &DependencyGraph) -> Classes {
    let contents: HashMap<&CellAddress, &CellContent> = model.occupied().map(|c| (&c.address, &c.content)).collect();
    let has_formulas = contents.values().any(|c| matches!(c, CellContent::Formula { .. }));
    let classes = graph
        .addresses()
        .iter()
        .enumerate()
        .map(|(i, addr)| match contents[addr] {
            CellContent::Formula { .. } => CellClass::Calculation,
            CellContent::Text(_) => CellClass::Label,
            _ if has_formulas || !graph.dependents(i as NodeId).is_empty() => CellClass::Input,
            _ => CellClass::Inert,
        })
        .collect();
    Classes { classes }
}

/// Everything the control checks need from this module, computed once.
#[derive(Debug)]
pub struct Analysis {
    pub classes: Classes,
    pub regions: Vec<Region>,
    /// Region index of every node.
    pub region_of: Vec<usize>,
    pub findings: Vec<CheckCellFinding>,
    pub orphans: Vec<usize>,
}

pub fn analyze(model: &WorkbookModel, graph: &DependencyGraph, config: &ClassifyConfig) -> Analysis {
    let mut classes = classify_cells(model, graph);
    let (mut regions, region_of) = regions::build_regions(graph, &classes, config);
    let findings = detect_check_cells(model, graph, &classes, &region_of, config);
    classes.mark_checks(graph, &findings);
    for r in &mut regions {
        r.recount(&classes);
    }
    let orphans = regions::orphans(graph, &classes, &regions, &region_of, config);
    Analysis {
        classes,
        regions,
        region_of,
        findings,
        orphans,
    }
}
