use std::collections::{BTreeMap, HashMap, VecDeque};

use super::{CellClass, Classes, ClassifyConfig};
use crate::depgraph::{DependencyGraph, NodeId};
use crate::ingest::address::{quote_sheet_name, CellAddress};
use crate::ingest::{StyleFamily, WorkbookModel};

/// A maximal 4-connected block of occupied cells on one sheet.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub sheet: String,
    pub top: u32,
    pub left: u32,
    pub bottom: u32,
    pub right: u32,
    /// Member cells in node order.
    pub cells: Vec<NodeId>,
    pub histogram: BTreeMap<CellClass, usize>,
    pub has_header_labels: bool,
}

impl Region {
    /// `Sheet!A1:C5`, or `Sheet!A1` for a single cell.
    pub fn locus(&self) -> String {
        let tl = CellAddress::new(None, self.left, self.top).local_a1();
        let br = CellAddress::new(None, self.right, self.bottom).local_a1();
        let sheet = quote_sheet_name(&self.sheet);
        if tl == br {
            format!("{sheet}!{tl}")
        } else {
            format!("{sheet}!{tl}:{br}")
        }
    }

    pub fn count(&self, class: CellClass) -> usize {
        self.histogram.get(&class).copied().unwrap_or(0)
    }

    pub fn calculation_count(&self) -> usize {
        self.count(CellClass::Calculation) + self.count(CellClass::CheckCell)
    }

    /// Holds at least one cell that is not a label.
    pub fn is_data(&self) -> bool {
        self.count(CellClass::Label) < self.cells.len()
    }

    pub fn is_label_only(&self) -> bool {
        !self.is_data()
    }

    pub(crate) fn recount(&mut self, classes: &Classes) {
        self.histogram.clear();
        for &n in &self.cells {
            *self.histogram.entry(classes.get(n)).or_default() += 1;
        }
    }
}

pub fn detect_regions(graph: &DependencyGraph, classes: &Classes, config: &ClassifyConfig) -> Vec<Region> {
    build_regions(graph, classes, config).0
}

/// Regions in order of their first cell, and the region index of each node.
pub(crate) fn build_regions(
    graph: &DependencyGraph,
    classes: &Classes,
    config: &ClassifyConfig,
) -> (Vec<Region>, Vec<usize>) {
    let addresses = graph.addresses();
    let mut region_of = vec![usize::MAX; addresses.len()];
    let mut regions = Vec::new();

    let mut start = 0;
    while start < addresses.len() {
        let sheet = addresses[start].sheet.clone();
        let mut end = start;
        while end < addresses.len() && addresses[end].sheet == sheet {
            end += 1;
        }
        let at: HashMap<(u32, u32), NodeId> = (start..end)
            .map(|i| ((addresses[i].row, addresses[i].column), i as NodeId))
            .collect();

        for seed in start..end {
            if region_of[seed] != usize::MAX {
                continue;
            }
            let id = regions.len();
            let mut cells = Vec::new();
            let mut queue = VecDeque::from([seed as NodeId]);
            region_of[seed] = id;
            while let Some(n) = queue.pop_front() {
                cells.push(n);
                let a = &addresses[n as usize];
                let (r, c) = (a.row, a.column);
                let neighbours = [(r.wrapping_sub(1), c), (r + 1, c), (r, c.wrapping_sub(1)), (r, c + 1)];
                for key in neighbours {
                    if let Some(&m) = at.get(&key) {
                        if region_of[m as usize] == usize::MAX {
                            region_of[m as usize] = id;
                            queue.push_back(m);
                        }
                    }
                }
            }
            cells.sort_unstable();
            let mut region = Region {
                sheet: sheet.clone().unwrap_or_default(),
                top: u32::MAX,
                left: u32::MAX,
                bottom: 0,
                right: 0,
                cells,
                histogram: BTreeMap::new(),
                has_header_labels: false,
            };
            for &n in &region.cells {
                let a = &addresses[n as usize];
                region.top = region.top.min(a.row);
                region.bottom = region.bottom.max(a.row);
                region.left = region.left.min(a.column);
                region.right = region.right.max(a.column);
            }
            region.recount(classes);
            region.has_header_labels = header_labels(&region, addresses, classes, config.header_label_threshold);
            regions.push(region);
        }
        start = end;
    }
    (regions, region_of)
}

/// True when enough of the occupied cells on the region's top row, or on
/// its leftmost column, are labels.
fn header_labels(region: &Region, addresses: &[CellAddress], classes: &Classes, threshold: f64) -> bool {
    let share = |on_edge: &dyn Fn(&CellAddress) -> bool| {
        let (mut total, mut labels) = (0usize, 0usize);
        for &n in &region.cells {
            if on_edge(&addresses[n as usize]) {
                total += 1;
                if classes.get(n) == CellClass::Label {
                    labels += 1;
                }
            }
        }
        total > 0 && labels as f64 >= threshold * total as f64
    };
    share(&|a| a.row == region.top) || share(&|a| a.column == region.left)
}

/// Whether a region's inputs and calculations look different: each group
/// must be dominated by one style family and the two families must differ.
pub fn style_distinct(
    model: &WorkbookModel,
    graph: &DependencyGraph,
    classes: &Classes,
    region: &Region,
    threshold: f64,
) -> bool {
    let dominant = |want: &dyn Fn(CellClass) -> bool| -> Option<StyleFamily> {
        let mut counts: BTreeMap<StyleFamily, usize> = BTreeMap::new();
        let mut total = 0usize;
        for &n in &region.cells {
            if !want(classes.get(n)) {
                continue;
            }
            let cell = model.cell(graph.address(n))?;
            *counts.entry(model.style(cell).family()).or_default() += 1;
            total += 1;
        }
        counts
            .into_iter()
            .find(|&(_, k)| total > 0 && k as f64 >= threshold * total as f64)
            .map(|(f, _)| f)
    };
    match (
        dominant(&|c| c == CellClass::Input),
        dominant(&|c: CellClass| c.is_calculation()),
    ) {
        (Some(inputs), Some(calcs)) => inputs != calcs,
        _ => false,
    }
}

pub fn detect_orphan_regions(
    graph: &DependencyGraph,
    classes: &Classes,
    regions: &[Region],
    region_of: &[usize],
    config: &ClassifyConfig,
) -> Vec<Region> {
    orphans(graph, classes, regions, region_of, config)
        .into_iter()
        .map(|i| regions[i].clone())
        .collect()
}

/// Indices of regions that no dependency edge enters or leaves, that hold no
/// check cell, in a workbook where some other region takes part in at least
/// one dependency. Pure label blocks are exempt unless configured otherwise.
pub(crate) fn orphans(
    graph: &DependencyGraph,
    classes: &Classes,
    regions: &[Region],
    region_of: &[usize],
    config: &ClassifyConfig,
) -> Vec<usize> {
    let mut crossing = vec![false; regions.len()];
    let mut participates = vec![false; regions.len()];
    for (from, &ra) in region_of.iter().enumerate() {
        for &to in graph.dependencies(from as NodeId) {
            let rb = region_of[to as usize];
            participates[ra] = true;
            participates[rb] = true;
            if ra != rb {
                crossing[ra] = true;
                crossing[rb] = true;
            }
        }
    }
    let participating = participates.iter().filter(|&&p| p).count();
    (0..regions.len())
        .filter(|&i| {
            let r = &regions[i];
            !crossing[i]
                && r.cells.iter().all(|&n| classes.get(n) != CellClass::CheckCell)
                && (config.orphan_label_only || r.is_data())
                && participating > usize::from(participates[i])
        })
        .collect()
}
