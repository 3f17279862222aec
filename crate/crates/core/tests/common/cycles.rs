//! Random small formula workbooks with a brute-force cycle oracle that
//! works from the generator's own reference lists, not the tool's graph.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xlsxgen::{column_name, Sheet, Workbook};

const SHEETS: [&str; 2] = ["One", "Two"];
const GRID: u32 = 6;

/// (sheet index, row, column)
pub type Key = (usize, u32, u32);

pub struct RandomBook {
    pub workbook: Workbook,
    /// Every occupied cell with the occupied cells its formula reads.
    pub edges: BTreeMap<Key, BTreeSet<Key>>,
}

fn a1(sheet: usize, row: u32, col: u32, from: usize) -> String {
    let local = format!("{}{row}", column_name(col));
    if sheet == from {
        local
    } else {
        format!("{}!{local}", SHEETS[sheet])
    }
}

/// A workbook with at most `max_formulas` formula cells on two 6×6 grids.
/// References may land on blank cells, which contribute no edge.
pub fn random_book(seed: u64, max_formulas: usize) -> RandomBook {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells: BTreeMap<Key, Option<Vec<Key>>> = BTreeMap::new();
    let random_key = |rng: &mut ChaCha8Rng| (rng.gen_range(0..2), rng.gen_range(1..=GRID), rng.gen_range(1..=GRID));

    for _ in 0..rng.gen_range(0..12) {
        cells.insert(random_key(&mut rng), None);
    }
    let formulas = rng.gen_range(1..=max_formulas);
    while cells.values().filter(|v| v.is_some()).count() < formulas {
        let key = random_key(&mut rng);
        let refs = (0..rng.gen_range(1..=3)).map(|_| random_key(&mut rng)).collect();
        cells.insert(key, Some(refs));
    }

    let mut sheets: Vec<Sheet> = SHEETS.iter().map(|n| Sheet::new(n)).collect();
    for (&(s, row, col), refs) in &cells {
        match refs {
            None => sheets[s].set_rc(row, col, f64::from(row * 10 + col), 0),
            Some(refs) => {
                let terms: Vec<String> = refs.iter().map(|&(rs, rr, rc)| a1(rs, rr, rc, s)).collect();
                sheets[s].set_rc(row, col, format!("={}", terms.join("+")).as_str(), 0)
            }
        };
    }
    let mut workbook = Workbook::new();
    for s in sheets {
        workbook.add_sheet(s);
    }
    let edges = cells
        .iter()
        .map(|(k, refs)| {
            let targets = refs
                .iter()
                .flatten()
                .filter(|r| cells.contains_key(r))
                .copied()
                .collect();
            (*k, targets)
        })
        .collect();
    RandomBook { workbook, edges }
}

fn reachable(edges: &BTreeMap<Key, BTreeSet<Key>>, from: Key) -> BTreeSet<Key> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<Key> = edges[&from].iter().copied().collect();
    while let Some(k) = stack.pop() {
        if seen.insert(k) {
            stack.extend(edges[&k].iter().copied());
        }
    }
    seen
}

/// Cycles by exhaustive reachability: two cells share a cycle when each
/// reaches the other; a cell alone is a cycle when it reaches itself.
/// Cells are rendered as `Sheet!A1`.
pub fn oracle_cycles(edges: &BTreeMap<Key, BTreeSet<Key>>) -> BTreeSet<BTreeSet<String>> {
    let reach: BTreeMap<Key, BTreeSet<Key>> = edges.keys().map(|&k| (k, reachable(edges, k))).collect();
    let mut cycles = BTreeSet::new();
    for &k in edges.keys() {
        if !reach[&k].contains(&k) {
            continue;
        }
        let members = edges
            .keys()
            .filter(|&&o| o == k || (reach[&k].contains(&o) && reach[&o].contains(&k)))
            .map(|&(s, r, c)| format!("{}!{}{r}", SHEETS[s], column_name(c)))
            .collect();
        cycles.insert(members);
    }
    cycles
}

/// The tool's cycles in the oracle's shape.
pub fn as_sets(cycles: &[Vec<ssaudit::ingest::CellAddress>]) -> BTreeSet<BTreeSet<String>> {
    cycles
        .iter()
        .map(|c| c.iter().map(|a| a.to_string()).collect())
        .collect()
}
