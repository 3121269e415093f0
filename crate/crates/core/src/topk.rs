//! Top-K objects by the highest (or lowest) raster value they overlap.
//!
//! A priority queue mixes two kinds of entries: *tentative* ones, pairing an
//! R-tree node with the deepest k²-raster quadrant containing it and bounded
//! by that quadrant's extreme, and *confirmed* ones, holding an object with
//! its exact extreme. Confirmed heads are emitted. Tentative heads over a
//! uniform quadrant emit all objects below them; tentative leaves are
//! resolved object by object; tentative internal nodes are expanded.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geom::Mbr;
use crate::k2raster::{K2Raster, NodeCursor};
use crate::rtree::{NodeId, ObjectId, RTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Highest,
    Lowest,
}

impl Direction {
    /// The quadrant bound relevant to this direction.
    fn bound(self, c: &NodeCursor) -> i64 {
        match self {
            Direction::Highest => c.max(),
            Direction::Lowest => c.min(),
        }
    }

    /// Maps a value to a score where larger is better.
    fn score(self, v: i64) -> i128 {
        match self {
            Direction::Highest => v as i128,
            Direction::Lowest => -(v as i128),
        }
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: i64, b: i64) -> bool {
        self.score(a) > self.score(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vect {
    Node(NodeId),
    Object(ObjectId),
}

/// Queue record: tentative entries carry a node and its quadrant, confirmed
/// entries carry an object and no quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopKEntry {
    pub vect: Vect,
    pub pk: Option<NodeCursor>,
    pub max: i64,
    pub tent: bool,
    direction: Direction,
}

impl TopKEntry {
    pub fn tentative(node: NodeId, pk: NodeCursor, bound: i64, direction: Direction) -> Self {
        Self {
            vect: Vect::Node(node),
            pk: Some(pk),
            max: bound,
            tent: true,
            direction,
        }
    }

    pub fn confirmed(object: ObjectId, value: i64, direction: Direction) -> Self {
        Self {
            vect: Vect::Object(object),
            pk: None,
            max: value,
            tent: false,
            direction,
        }
    }

    fn id(&self) -> u64 {
        match self.vect {
            Vect::Node(n) => n as u64,
            Vect::Object(o) => o,
        }
    }
}

/// Heap order: better value first, then confirmed before tentative, then
/// ascending id.
impl Ord for TopKEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.direction
            .score(self.max)
            .cmp(&other.direction.score(other.max))
            .then_with(|| other.tent.cmp(&self.tent))
            .then_with(|| other.id().cmp(&self.id()))
    }
}

impl PartialOrd for TopKEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopKResult {
    pub entries: Vec<(ObjectId, i64)>,
}

impl TopKResult {
    pub fn values(&self) -> Vec<i64> {
        self.entries.iter().map(|e| e.1).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopKStats {
    pub k2_nodes_visited: u64,
    pub queue_inserts: u64,
    pub geometry_checks: u64,
    /// Objects skipped because their MBR misses the raster.
    pub omitted_objects: u64,
}

/// Queue contents in priority order, after seeding and after each step.
#[derive(Debug, Clone, Default)]
pub struct TopKTrace {
    pub steps: Vec<Vec<TopKEntry>>,
}

/// Deepest descendant of `pk` whose quadrant contains `window`, and its
/// bound for `direction`.
pub fn check_quadrant_t(
    k2: &K2Raster,
    window: &Mbr,
    pk: NodeCursor,
    direction: Direction,
) -> (i64, NodeCursor) {
    let mut c = pk;
    while let Some(child) = k2.containing_child(&c, window) {
        c = child;
    }
    (direction.bound(&c), c)
}

/// Exact extreme value over `window ∩ extent`, searched below `pk` with
/// branch and bound. `window` must be clipped to the extent.
pub fn window_extreme(
    k2: &K2Raster,
    window: &Mbr,
    pk: NodeCursor,
    direction: Direction,
) -> Option<i64> {
    let mut best = None;
    extreme_rec(k2, window, pk, direction, &mut best);
    best
}

fn extreme_rec(
    k2: &K2Raster,
    window: &Mbr,
    c: NodeCursor,
    direction: Direction,
    best: &mut Option<i64>,
) {
    let Some(w) = c.quad().intersection(window) else {
        return;
    };
    let bound = direction.bound(&c);
    if best.is_some_and(|b| !direction.better(bound, b)) {
        return;
    }
    let whole = c
        .quad()
        .clip(k2.n_rows(), k2.n_cols())
        .is_some_and(|q| w.contains(&q));
    if !c.has_children() || whole {
        *best = Some(bound);
        return;
    }
    let mut kids: Vec<NodeCursor> = k2
        .overlapping_slots(&c, &w)
        .into_iter()
        .map(|s| k2.child(&c, s).expect("expandable"))
        .collect();
    kids.sort_by_key(|k| std::cmp::Reverse(direction.score(direction.bound(k))));
    for kid in kids {
        extreme_rec(k2, &w, kid, direction, best);
    }
}

/// Exact extreme for every object of a leaf, ascending by object id.
/// Objects whose MBR misses the raster are left out.
pub fn check_geometry(
    k2: &K2Raster,
    objects: &[(ObjectId, Mbr)],
    pk: NodeCursor,
    direction: Direction,
) -> Vec<(ObjectId, i64)> {
    let mut out: Vec<(ObjectId, i64)> = objects
        .iter()
        .filter_map(|&(id, m)| {
            let w = m.clip(k2.n_rows(), k2.n_cols())?;
            window_extreme(k2, &w, pk, direction).map(|v| (id, v))
        })
        .collect();
    out.sort_unstable_by_key(|o| o.0);
    out
}

pub fn top_k(k2: &K2Raster, tree: &RTree, k: usize, direction: Direction) -> Result<TopKResult> {
    run(k2, tree, k, direction, None).map(|(r, _)| r)
}

pub fn top_k_with_stats(
    k2: &K2Raster,
    tree: &RTree,
    k: usize,
    direction: Direction,
) -> Result<(TopKResult, TopKStats)> {
    run(k2, tree, k, direction, None)
}

pub fn top_k_traced(
    k2: &K2Raster,
    tree: &RTree,
    k: usize,
    direction: Direction,
) -> Result<(TopKResult, TopKStats, TopKTrace)> {
    let mut trace = TopKTrace::default();
    let (r, s) = run(k2, tree, k, direction, Some(&mut trace))?;
    Ok((r, s, trace))
}

fn run(
    k2: &K2Raster,
    tree: &RTree,
    k: usize,
    direction: Direction,
    mut trace: Option<&mut TopKTrace>,
) -> Result<(TopKResult, TopKStats)> {
    if k == 0 {
        return Err(Error::InvalidConfig("K must be at least 1".into()));
    }
    let visits_before = k2.node_count_visited();
    let (n_rows, n_cols) = (k2.n_rows(), k2.n_cols());
    let mut stats = TopKStats::default();
    let mut out: Vec<(ObjectId, i64)> = Vec::with_capacity(k.min(1024));
    let mut queue = BinaryHeap::new();

    let push_node =
        |queue: &mut BinaryHeap<TopKEntry>, stats: &mut TopKStats, id: NodeId, pk: NodeCursor| {
            if let Some(w) = tree.node(id).mbr.clip(n_rows, n_cols) {
                let (bound, deep) = check_quadrant_t(k2, &w, pk, direction);
                queue.push(TopKEntry::tentative(id, deep, bound, direction));
                stats.queue_inserts += 1;
            }
        };
    let mut snapshot = |queue: &BinaryHeap<TopKEntry>| {
        if let Some(t) = trace.as_deref_mut() {
            let mut v = queue.clone().into_vec();
            v.sort_unstable_by(|a, b| b.cmp(a));
            t.steps.push(v);
        }
    };

    let root = k2.root();
    if tree.root().is_leaf() {
        push_node(&mut queue, &mut stats, tree.root().id, root);
    } else {
        for &c in tree.root().children() {
            push_node(&mut queue, &mut stats, c, root);
        }
    }
    snapshot(&queue);

    while out.len() < k {
        let Some(head) = queue.pop() else { break };
        match (head.vect, head.pk) {
            (Vect::Object(id), _) => out.push((id, head.max)),
            (Vect::Node(id), Some(pk)) => {
                let node = tree.node(id);
                if pk.is_uniform() {
                    let mut objects = tree.descendant_objects(id);
                    objects.retain(|(_, m)| m.clip(n_rows, n_cols).is_some());
                    objects.sort_unstable_by_key(|o| o.0);
                    let room = k - out.len();
                    out.extend(objects.into_iter().take(room).map(|(o, _)| (o, head.max)));
                } else if node.is_leaf() {
                    stats.geometry_checks += 1;
                    let found = check_geometry(k2, node.entries(), pk, direction);
                    stats.omitted_objects += (node.entries().len() - found.len()) as u64;
                    for (o, v) in found {
                        if v == head.max {
                            out.push((o, v));
                            if out.len() == k {
                                break;
                            }
                        } else {
                            queue.push(TopKEntry::confirmed(o, v, direction));
                            stats.queue_inserts += 1;
                        }
                    }
                } else {
                    for &c in node.children() {
                        push_node(&mut queue, &mut stats, c, pk);
                    }
                }
            }
            (Vect::Node(_), None) => unreachable!("tentative entries carry a quadrant"),
        }
        snapshot(&queue);
    }

    stats.k2_nodes_visited = k2.node_count_visited() - visits_before;
    Ok((TopKResult { entries: out }, stats))
}
