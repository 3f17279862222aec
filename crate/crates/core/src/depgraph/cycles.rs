use super::{DependencyGraph, NodeId};
use crate::ingest::address::CellAddress;

/// Circular references: every strongly connected component with two or more
/// cells, plus every cell that reads itself. Each cycle lists its cells in
/// ascending address order; cycles are sorted by their first cell.
pub fn find_cycles(graph: &DependencyGraph) -> Vec<Vec<CellAddress>> {
    let mut out: Vec<Vec<CellAddress>> = strongly_connected(graph)
        .into_iter()
        .filter(|scc| scc.len() > 1 || graph.dependencies(scc[0]).contains(&scc[0]))
        .map(|mut scc| {
            scc.sort_unstable();
            scc.into_iter().map(|n| graph.address(n).clone()).collect()
        })
        .collect();
    out.sort();
    out
}

/// Tarjan's algorithm with an explicit stack, so long formula chains cannot
/// overflow the call stack.
pub(crate) fn strongly_connected(graph: &DependencyGraph) -> Vec<Vec<NodeId>> {
    const UNVISITED: u32 = u32::MAX;
    let n = graph.node_count();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<NodeId> = Vec::new();
    let mut next = 0u32;
    let mut out = Vec::new();
    // (node, position in its edge list)
    let mut work: Vec<(NodeId, usize)> = Vec::new();

    for root in 0..n as NodeId {
        if index[root as usize] != UNVISITED {
            continue;
        }
        work.push((root, 0));
        index[root as usize] = next;
        low[root as usize] = next;
        next += 1;
        stack.push(root);
        on_stack[root as usize] = true;

        while let Some(&mut (v, ref mut pos)) = work.last_mut() {
            let deps = graph.dependencies(v);
            if *pos < deps.len() {
                let w = deps[*pos];
                *pos += 1;
                if index[w as usize] == UNVISITED {
                    index[w as usize] = next;
                    low[w as usize] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    work.push((w, 0));
                } else if on_stack[w as usize] {
                    low[v as usize] = low[v as usize].min(index[w as usize]);
                }
                continue;
            }
            work.pop();
            if let Some(&(parent, _)) = work.last() {
                low[parent as usize] = low[parent as usize].min(low[v as usize]);
            }
            if low[v as usize] == index[v as usize] {
                let mut scc = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w as usize] = false;
                    scc.push(w);
                    if w == v {
                        break;
                    }
                }
                out.push(scc);
            }
        }
    }
    out
}
