//! Range-constrained raster/vector join (filter step).
//!
//! The R-tree and the k²-raster are walked together from their roots with an
//! explicit stack of `(R-tree node, k²-raster node)` pairs. For each pair the
//! cheap quadrant check descends the raster along the unique quadrant that
//! contains the node's MBR, and often decides the whole subtree from the
//! quadrant's min/max. Leaves that stay undecided are resolved against their
//! MBR, and each object's in-range cells are collected from the raster.
//!
//! Objects are represented by their MBRs. Cells are always restricted to the
//! object's own MBR clipped to the raster extent. An object is *definitive*
//! when every such cell is in range and *probable* when only some are.

use crate::error::{Error, Result};
use crate::geom::{Cell, Mbr};
use crate::k2raster::{K2Raster, NodeCursor};
use crate::rtree::{NodeId, ObjectId, RTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadOverlap {
    /// Every cell of the quadrant is in range.
    TotalOverlap,
    /// The quadrant holds values both inside and outside the range.
    PossibleOverlap,
    /// No cell of the quadrant is in range.
    NoOverlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbrOverlap {
    TotalOverlap,
    PartialOverlap,
    NoOverlap,
}

/// Per-object cell lists; both lists ascend by object id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JoinResult {
    pub definitive: Vec<(ObjectId, Vec<Cell>)>,
    pub probable: Vec<(ObjectId, Vec<Cell>)>,
}

impl JoinResult {
    pub fn is_empty(&self) -> bool {
        self.definitive.is_empty() && self.probable.is_empty()
    }

    /// Sorts both lists by object id and every cell list by (row, col).
    pub fn canonicalize(&mut self) {
        for list in [&mut self.definitive, &mut self.probable] {
            for (_, cells) in list.iter_mut() {
                cells.sort_unstable();
            }
            list.sort_unstable_by_key(|(id, _)| *id);
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JoinStats {
    /// k²-raster nodes materialised during the query.
    pub k2_nodes_visited: u64,
    pub pairs_processed: u64,
    pub quadrant_checks: u64,
    pub mbr_checks: u64,
    pub pruned_at_quadrant: u64,
}

/// Stack contents (top first) before the first pop and after each step.
#[derive(Debug, Clone, Default)]
pub struct JoinTrace {
    pub steps: Vec<Vec<(NodeId, NodeCursor)>>,
}

/// Descends from `pk` along the unique child containing `window` while the
/// node's value interval meets `[lo, hi]` without being inside it.
pub fn check_quadrant_j(
    k2: &K2Raster,
    window: &Mbr,
    pk: NodeCursor,
    lo: i64,
    hi: i64,
) -> (QuadOverlap, NodeCursor) {
    let mut c = pk;
    loop {
        if c.max() < lo || c.min() > hi {
            return (QuadOverlap::NoOverlap, c);
        }
        if lo <= c.min() && c.max() <= hi {
            return (QuadOverlap::TotalOverlap, c);
        }
        match k2.containing_child(&c, window) {
            Some(child) => c = child,
            None => return (QuadOverlap::PossibleOverlap, c),
        }
    }
}

/// Classifies the cells of `window ∩ pk.quad` against `[lo, hi]`, visiting
/// only children that intersect the window and stopping as soon as both an
/// in-range and an out-of-range region have been seen. `window` must lie
/// within the raster extent.
pub fn check_mbr(k2: &K2Raster, window: &Mbr, pk: NodeCursor, lo: i64, hi: i64) -> MbrOverlap {
    let mut seen = (false, false);
    scan_overlap(k2, window, pk, lo, hi, &mut seen);
    match seen {
        (true, true) => MbrOverlap::PartialOverlap,
        (true, false) => MbrOverlap::TotalOverlap,
        _ => MbrOverlap::NoOverlap,
    }
}

fn scan_overlap(
    k2: &K2Raster,
    window: &Mbr,
    c: NodeCursor,
    lo: i64,
    hi: i64,
    seen: &mut (bool, bool),
) {
    let Some(w) = c.quad().intersection(window) else {
        return;
    };
    if c.max() < lo || c.min() > hi {
        seen.1 = true;
        return;
    }
    if lo <= c.min() && c.max() <= hi {
        seen.0 = true;
        return;
    }
    for slot in k2.overlapping_slots(&c, &w) {
        scan_overlap(k2, &w, k2.child_unchecked(&c, slot), lo, hi, seen);
        if seen.0 && seen.1 {
            return;
        }
    }
}

/// In-range cells of `window ∩ pk.quad`, ascending by (row, col).
pub fn extract_cells(k2: &K2Raster, window: &Mbr, pk: NodeCursor, lo: i64, hi: i64) -> Vec<Cell> {
    let mut out = Vec::new();
    if let Some(w) = window.clip(k2.n_rows(), k2.n_cols()) {
        k2.collect_in_range(pk, &w, lo, hi, &mut out);
    }
    out.sort_unstable();
    out
}

/// Appends every object under `pr` with its in-range cells. Used once the
/// quadrant containing `pr` is known to be wholly in range.
pub fn add_descendants_leaves_join(
    k2: &K2Raster,
    tree: &RTree,
    pr: NodeId,
    pk_deep: NodeCursor,
    lo: i64,
    hi: i64,
    out: &mut Vec<(ObjectId, Vec<Cell>)>,
) {
    let mut objects = tree.descendant_objects(pr);
    objects.sort_unstable_by_key(|o| o.0);
    for (id, mbr) in objects {
        let cells = extract_cells(k2, &mbr, pk_deep, lo, hi);
        if !cells.is_empty() {
            out.push((id, cells));
        }
    }
}

pub fn join(k2: &K2Raster, tree: &RTree, lo: i64, hi: i64) -> Result<JoinResult> {
    run(k2, tree, lo, hi, None).map(|(r, _)| r)
}

pub fn join_with_stats(
    k2: &K2Raster,
    tree: &RTree,
    lo: i64,
    hi: i64,
) -> Result<(JoinResult, JoinStats)> {
    run(k2, tree, lo, hi, None)
}

pub fn join_traced(
    k2: &K2Raster,
    tree: &RTree,
    lo: i64,
    hi: i64,
) -> Result<(JoinResult, JoinStats, JoinTrace)> {
    let mut trace = JoinTrace::default();
    let (r, s) = run(k2, tree, lo, hi, Some(&mut trace))?;
    Ok((r, s, trace))
}

fn run(
    k2: &K2Raster,
    tree: &RTree,
    lo: i64,
    hi: i64,
    mut trace: Option<&mut JoinTrace>,
) -> Result<(JoinResult, JoinStats)> {
    if lo > hi {
        return Err(Error::InvalidRange { lo, hi });
    }
    let visits_before = k2.node_count_visited();
    let (n_rows, n_cols) = (k2.n_rows(), k2.n_cols());
    let mut stats = JoinStats::default();
    let mut result = JoinResult::default();

    let root = k2.root();
    let seeds: Vec<NodeId> = if tree.root().is_leaf() {
        vec![tree.root().id]
    } else {
        tree.root().children().to_vec()
    };
    let mut stack: Vec<(NodeId, NodeCursor)> = seeds.iter().rev().map(|&c| (c, root)).collect();
    let mut snapshot = |stack: &Vec<(NodeId, NodeCursor)>| {
        if let Some(t) = trace.as_deref_mut() {
            t.steps.push(stack.iter().rev().copied().collect());
        }
    };
    snapshot(&stack);

    while let Some((pr, pk)) = stack.pop() {
        stats.pairs_processed += 1;
        let node = tree.node(pr);
        let Some(window) = node.mbr.clip(n_rows, n_cols) else {
            snapshot(&stack);
            continue;
        };
        stats.quadrant_checks += 1;
        let (kind, deep) = check_quadrant_j(k2, &window, pk, lo, hi);
        match kind {
            QuadOverlap::TotalOverlap => {
                add_descendants_leaves_join(k2, tree, pr, deep, lo, hi, &mut result.definitive);
            }
            QuadOverlap::PossibleOverlap if !node.is_leaf() => {
                stack.extend(node.children().iter().rev().map(|&c| (c, deep)));
            }
            QuadOverlap::PossibleOverlap => {
                stats.mbr_checks += 1;
                match check_mbr(k2, &window, deep, lo, hi) {
                    MbrOverlap::TotalOverlap => {
                        add_descendants_leaves_join(
                            k2,
                            tree,
                            pr,
                            deep,
                            lo,
                            hi,
                            &mut result.definitive,
                        );
                    }
                    MbrOverlap::PartialOverlap => {
                        // The leaf straddles the range; resolve each object on
                        // its own MBR. Its cell list decides its class.
                        for &(id, mbr) in node.entries() {
                            let Some(own) = mbr.clip(n_rows, n_cols) else {
                                continue;
                            };
                            let cells = extract_cells(k2, &own, deep, lo, hi);
                            if cells.is_empty() {
                                continue;
                            }
                            if cells.len() == own.area() {
                                result.definitive.push((id, cells));
                            } else {
                                result.probable.push((id, cells));
                            }
                        }
                    }
                    MbrOverlap::NoOverlap => {}
                }
            }
            QuadOverlap::NoOverlap => stats.pruned_at_quadrant += 1,
        }
        snapshot(&stack);
    }

    result.definitive.sort_unstable_by_key(|o| o.0);
    result.probable.sort_unstable_by_key(|o| o.0);
    stats.k2_nodes_visited = k2.node_count_visited() - visits_before;
    Ok((result, stats))
}
