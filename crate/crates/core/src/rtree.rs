//! Static R-tree over object MBRs, packed with Sort-Tile-Recursive.
//!
//! Node ids are arena positions. Bulk loading creates leaves first, then each
//! upper level in turn, so a node's id is always smaller than its parent's.

use std::collections::HashSet;
use std::path::Path;

use crate::codec::{self, Reader};
use crate::error::{Error, Result};
use crate::geom::Mbr;

pub type ObjectId = u64;
pub type NodeId = usize;

/// Default node capacity (roughly one 4 KB page of entries).
pub const DEFAULT_CAPACITY: usize = 100;

const MAGIC: &[u8; 4] = b"RTRE";
const FORMAT_VERSION: u16 = 1;

/// A set of objects; each object is represented by its MBR.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VectorDataset {
    objects: Vec<(ObjectId, Mbr)>,
}

impl VectorDataset {
    pub fn new(objects: Vec<(ObjectId, Mbr)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(objects.len());
        for (i, (id, _)) in objects.iter().enumerate() {
            if !seen.insert(*id) {
                return Err(Error::DuplicateId {
                    id: *id,
                    line: i + 1,
                });
            }
        }
        Ok(Self { objects })
    }

    pub fn objects(&self) -> &[(ObjectId, Mbr)] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Clips every MBR to the grid, dropping objects wholly outside it.
    pub fn clipped(&self, n_rows: usize, n_cols: usize) -> Self {
        Self {
            objects: self
                .objects
                .iter()
                .filter_map(|&(id, m)| m.clip(n_rows, n_cols).map(|c| (id, c)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeRefs {
    Internal(Vec<NodeId>),
    Leaf(Vec<(ObjectId, Mbr)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RTreeNode {
    pub id: NodeId,
    pub mbr: Mbr,
    pub refs: NodeRefs,
}

impl RTreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.refs, NodeRefs::Leaf(_))
    }

    pub fn children(&self) -> &[NodeId] {
        match &self.refs {
            NodeRefs::Internal(c) => c,
            NodeRefs::Leaf(_) => &[],
        }
    }

    pub fn entries(&self) -> &[(ObjectId, Mbr)] {
        match &self.refs {
            NodeRefs::Leaf(e) => e,
            NodeRefs::Internal(_) => &[],
        }
    }

    fn fanout(&self) -> usize {
        match &self.refs {
            NodeRefs::Internal(c) => c.len(),
            NodeRefs::Leaf(e) => e.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RTree {
    nodes: Vec<RTreeNode>,
    root: NodeId,
    capacity: usize,
    grid: Option<(usize, usize)>,
}

/// Sizes of `groups` nearly equal parts of `len` items.
fn even_split(len: usize, groups: usize) -> impl Iterator<Item = usize> {
    let (q, r) = (len / groups, len % groups);
    (0..groups).map(move |i| q + usize::from(i < r))
}

/// One STR pass: tiles `items` into groups of at most `capacity`.
fn str_tile<T>(mut items: Vec<(Mbr, T)>, capacity: usize) -> Vec<Vec<(Mbr, T)>> {
    let groups = items.len().div_ceil(capacity);
    let slices = (groups as f64).sqrt().ceil() as usize;
    items.sort_by_key(|(m, _)| m.center2());
    let group_sizes: Vec<usize> = even_split(items.len(), groups).collect();
    let mut out = Vec::with_capacity(groups);
    let mut rest = items;
    let mut g = 0;
    for per_slice in even_split(groups, slices) {
        let take: usize = group_sizes[g..g + per_slice].iter().sum();
        let tail = rest.split_off(take);
        let mut slice = rest;
        rest = tail;
        slice.sort_by_key(|(m, _)| {
            let (r, c) = m.center2();
            (c, r)
        });
        for &size in &group_sizes[g..g + per_slice] {
            let tail = slice.split_off(size);
            out.push(slice);
            slice = tail;
        }
        g += per_slice;
    }
    out
}

fn union_all(mbrs: impl IntoIterator<Item = Mbr>) -> Mbr {
    mbrs.into_iter()
        .reduce(|a, b| a.union(&b))
        .expect("non-empty node")
}

impl RTree {
    /// Sort-Tile-Recursive bulk load.
    pub fn bulk_load(dataset: &VectorDataset, capacity: usize) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if capacity < 2 {
            return Err(Error::InvalidConfig(format!(
                "node capacity {capacity} < 2"
            )));
        }
        let mut nodes: Vec<RTreeNode> = Vec::new();
        let items: Vec<(Mbr, (ObjectId, Mbr))> = dataset
            .objects()
            .iter()
            .map(|&(id, m)| (m, (id, m)))
            .collect();
        let mut level: Vec<(Mbr, NodeId)> = str_tile(items, capacity)
            .into_iter()
            .map(|group| {
                let id = nodes.len();
                let mbr = union_all(group.iter().map(|(m, _)| *m));
                nodes.push(RTreeNode {
                    id,
                    mbr,
                    refs: NodeRefs::Leaf(group.into_iter().map(|(_, e)| e).collect()),
                });
                (mbr, id)
            })
            .collect();
        while level.len() > 1 {
            level = str_tile(level, capacity)
                .into_iter()
                .map(|group| {
                    let id = nodes.len();
                    let mbr = union_all(group.iter().map(|(m, _)| *m));
                    nodes.push(RTreeNode {
                        id,
                        mbr,
                        refs: NodeRefs::Internal(group.into_iter().map(|(_, c)| c).collect()),
                    });
                    (mbr, id)
                })
                .collect();
        }
        let root = level[0].1;
        Ok(Self {
            nodes,
            root,
            capacity,
            grid: None,
        })
    }

    /// Records the raster grid the objects were clipped to.
    pub fn with_grid(mut self, n_rows: usize, n_cols: usize) -> Self {
        self.grid = Some((n_rows, n_cols));
        self
    }

    pub fn grid(&self) -> Option<(usize, usize)> {
        self.grid
    }

    pub fn root(&self) -> &RTreeNode {
        &self.nodes[self.root]
    }

    pub fn node(&self, id: NodeId) -> &RTreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[RTreeNode] {
        &self.nodes
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn height(&self) -> usize {
        let mut h = 1;
        let mut n = self.root();
        while let Some(&c) = n.children().first() {
            n = self.node(c);
            h += 1;
        }
        h
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<&RTreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let n = self.node(id);
            match &n.refs {
                NodeRefs::Leaf(_) => out.push(n),
                NodeRefs::Internal(c) => stack.extend(c.iter().rev()),
            }
        }
        out
    }

    /// `(leaf id, object ids)` for every leaf, depth-first.
    pub fn leaf_mbrs(&self) -> Vec<(NodeId, Vec<ObjectId>)> {
        self.leaves()
            .into_iter()
            .map(|l| (l.id, l.entries().iter().map(|e| e.0).collect()))
            .collect()
    }

    /// All objects under `id`, depth-first.
    pub fn descendant_objects(&self, id: NodeId) -> Vec<(ObjectId, Mbr)> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(id) = stack.pop() {
            match &self.node(id).refs {
                NodeRefs::Leaf(e) => out.extend_from_slice(e),
                NodeRefs::Internal(c) => stack.extend(c.iter().rev()),
            }
        }
        out
    }

    pub fn objects(&self) -> Vec<(ObjectId, Mbr)> {
        self.descendant_objects(self.root)
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().map(|n| n.entries().len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Objects whose MBR intersects `window`, ascending by id.
    pub fn window_query(&self, window: &Mbr) -> Vec<ObjectId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let n = self.node(id);
            if !n.mbr.intersects(window) {
                continue;
            }
            match &n.refs {
                NodeRefs::Leaf(e) => {
                    out.extend(e.iter().filter(|(_, m)| m.intersects(window)).map(|e| e.0))
                }
                NodeRefs::Internal(c) => stack.extend(c),
            }
        }
        out.sort_unstable();
        out
    }

    /// Objects whose MBR contains the cell, ascending by id.
    pub fn point_query(&self, row: usize, col: usize) -> Vec<ObjectId> {
        self.window_query(&Mbr::cell(row, col))
    }

    /// True when every non-root node holds at least 40% of capacity.
    pub fn meets_min_fill(&self) -> bool {
        let min_fill = (self.capacity * 2).div_ceil(5);
        self.nodes
            .iter()
            .all(|n| n.id == self.root || n.fanout() >= min_fill)
    }

    /// Checks tight MBRs, capacity and unique reachability.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Format(m));
        let mut seen_nodes = vec![false; self.nodes.len()];
        let mut seen_objects = HashSet::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if id >= self.nodes.len() || std::mem::replace(&mut seen_nodes[id], true) {
                return bad(format!("node {id} missing or reachable twice"));
            }
            let n = &self.nodes[id];
            if n.id != id {
                return bad(format!("node {id} carries id {}", n.id));
            }
            let fan = n.fanout();
            if fan == 0 || fan > self.capacity {
                return bad(format!("node {id} fan-out {fan} outside bounds"));
            }
            let tight = match &n.refs {
                NodeRefs::Leaf(e) => {
                    for (oid, _) in e {
                        if !seen_objects.insert(*oid) {
                            return bad(format!("object {oid} appears twice"));
                        }
                    }
                    union_all(e.iter().map(|x| x.1))
                }
                NodeRefs::Internal(c) => {
                    if c.iter().any(|&ch| ch >= self.nodes.len()) {
                        return bad(format!("node {id} has a dangling child"));
                    }
                    stack.extend(c);
                    union_all(c.iter().map(|&ch| self.nodes[ch].mbr))
                }
            };
            if tight != n.mbr {
                return bad(format!(
                    "node {id} MBR {} is not the tight union {tight}",
                    n.mbr
                ));
            }
        }
        if seen_nodes.iter().any(|s| !s) {
            return bad("unreachable nodes".into());
        }
        Ok(())
    }

    /// Binary dump: header, then nodes in pre-order, each with its id and
    /// explicit child (or entry) count.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        codec::put_u16(&mut out, FORMAT_VERSION);
        codec::put_u32(&mut out, self.capacity as u32);
        let (gr, gc) = self.grid.unwrap_or((0, 0));
        codec::put_u8(&mut out, u8::from(self.grid.is_some()));
        codec::put_u32(&mut out, gr as u32);
        codec::put_u32(&mut out, gc as u32);
        codec::put_u64(&mut out, self.nodes.len() as u64);
        let put_mbr = |out: &mut Vec<u8>, m: &Mbr| {
            for v in [m.row_lo, m.col_lo, m.row_hi, m.col_hi] {
                codec::put_u32(out, v as u32);
            }
        };
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let n = self.node(id);
            codec::put_u32(&mut out, id as u32);
            codec::put_u8(&mut out, u8::from(n.is_leaf()));
            codec::put_u32(&mut out, n.fanout() as u32);
            put_mbr(&mut out, &n.mbr);
            match &n.refs {
                NodeRefs::Leaf(e) => {
                    for (oid, m) in e {
                        codec::put_u64(&mut out, *oid);
                        put_mbr(&mut out, m);
                    }
                }
                NodeRefs::Internal(c) => {
                    for &ch in c {
                        codec::put_u32(&mut out, ch as u32);
                    }
                    stack.extend(c.iter().rev());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not an R-tree file (bad magic)".into()));
        }
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {version}"
            )));
        }
        let capacity = r.u32()? as usize;
        let has_grid = r.u8()? != 0;
        let grid = (r.u32()? as usize, r.u32()? as usize);
        let count = r.u64()? as usize;
        if count == 0 || count > bytes.len() {
            return Err(Error::Format(format!("implausible node count {count}")));
        }
        let read_mbr = |r: &mut Reader<'_>| -> Result<Mbr> {
            let v = [r.u32()?, r.u32()?, r.u32()?, r.u32()?];
            Mbr::new(v[0] as usize, v[1] as usize, v[2] as usize, v[3] as usize)
                .map_err(|e| Error::Format(e.to_string()))
        };
        let mut slots: Vec<Option<RTreeNode>> = vec![None; count];
        let mut root = None;
        for _ in 0..count {
            let id = r.u32()? as usize;
            if id >= count || slots[id].is_some() {
                return Err(Error::Format(format!("bad or repeated node id {id}")));
            }
            root.get_or_insert(id);
            let leaf = r.u8()? != 0;
            let fan = r.u32()? as usize;
            let mbr = read_mbr(&mut r)?;
            let refs = if leaf {
                let mut e = Vec::with_capacity(fan.min(count * 64));
                for _ in 0..fan {
                    e.push((r.u64()?, read_mbr(&mut r)?));
                }
                NodeRefs::Leaf(e)
            } else {
                NodeRefs::Internal(
                    (0..fan)
                        .map(|_| r.u32().map(|c| c as usize))
                        .collect::<Result<_>>()?,
                )
            };
            slots[id] = Some(RTreeNode { id, mbr, refs });
        }
        if !r.is_empty() {
            return Err(Error::Format("trailing bytes after R-tree".into()));
        }
        let nodes = slots
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Format("missing nodes".into()))?;
        let tree = Self {
            nodes,
            root: root.expect("count > 0"),
            capacity,
            grid: has_grid.then_some(grid),
        };
        tree.validate()?;
        Ok(tree)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Assembles an R-tree with an explicit shape. Nodes get ids in creation
/// order; node MBRs are computed as tight unions.
#[derive(Debug, Default)]
pub struct RTreeBuilder {
    nodes: Vec<RTreeNode>,
}

impl RTreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn leaf(&mut self, objects: Vec<(ObjectId, Mbr)>) -> NodeId {
        let id = self.nodes.len();
        let mbr = union_all(objects.iter().map(|e| e.1));
        self.nodes.push(RTreeNode {
            id,
            mbr,
            refs: NodeRefs::Leaf(objects),
        });
        id
    }

    pub fn internal(&mut self, children: Vec<NodeId>) -> NodeId {
        let id = self.nodes.len();
        let mbr = union_all(children.iter().map(|&c| self.nodes[c].mbr));
        self.nodes.push(RTreeNode {
            id,
            mbr,
            refs: NodeRefs::Internal(children),
        });
        id
    }

    pub fn finish(self, root: NodeId, capacity: usize) -> Result<RTree> {
        let tree = RTree {
            nodes: self.nodes,
            root,
            capacity,
            grid: None,
        };
        tree.validate()?;
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dataset(n: usize, seed: u64) -> VectorDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        VectorDataset::new(
            (0..n as u64)
                .map(|id| {
                    let (r, c) = (rng.gen_range(0..1000), rng.gen_range(0..1000));
                    let m =
                        Mbr::new(r, c, r + rng.gen_range(0..20), c + rng.gen_range(0..20)).unwrap();
                    (id * 3 + 1, m)
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_and_duplicates_rejected() {
        assert!(matches!(
            RTree::bulk_load(&VectorDataset::default(), 10),
            Err(Error::EmptyDataset)
        ));
        let m = Mbr::cell(0, 0);
        assert!(matches!(
            VectorDataset::new(vec![(1, m), (1, m)]),
            Err(Error::DuplicateId { id: 1, line: 2 })
        ));
    }

    #[test]
    fn single_object_is_root_leaf() {
        let ds = VectorDataset::new(vec![(9, Mbr::new(0, 0, 3, 3).unwrap())]).unwrap();
        let t = RTree::bulk_load(&ds, 10).unwrap();
        assert!(t.root().is_leaf());
        assert_eq!(t.leaf_mbrs(), vec![(t.root().id, vec![9])]);
    }

    #[test]
    fn forced_split() {
        let ds = random_dataset(11, 1);
        let t = RTree::bulk_load(&ds, 10).unwrap();
        assert!(!t.root().is_leaf());
        assert_eq!(t.root().children().len(), 2);
        t.validate().unwrap();
        assert!(t.meets_min_fill());
    }

    #[test]
    fn str_leaf_counts() {
        let t = RTree::bulk_load(&random_dataset(100, 2), 10).unwrap();
        assert_eq!(t.leaves().len(), 10);
        let t = RTree::bulk_load(&random_dataset(10_000, 3), DEFAULT_CAPACITY).unwrap();
        assert_eq!(t.leaves().len(), 100);
        assert_eq!(t.height(), 2);
        t.validate().unwrap();
        assert!(t.meets_min_fill());
    }

    #[test]
    fn unions_are_tight_and_ids_partition() {
        let ds = random_dataset(10_000, 4);
        let t = RTree::bulk_load(&ds, 16).unwrap();
        // Recompute unions bottom-up (children have smaller ids).
        let mut recomputed: Vec<Option<Mbr>> = vec![None; t.nodes().len()];
        for n in t.nodes() {
            let u = match &n.refs {
                NodeRefs::Leaf(e) => e.iter().map(|x| x.1).reduce(|a, b| a.union(&b)),
                NodeRefs::Internal(c) => c
                    .iter()
                    .map(|&ch| recomputed[ch].unwrap())
                    .reduce(|a, b| a.union(&b)),
            };
            assert_eq!(u, Some(n.mbr));
            recomputed[n.id] = u;
        }
        let mut ids: Vec<ObjectId> = t.leaf_mbrs().into_iter().flat_map(|(_, o)| o).collect();
        ids.sort_unstable();
        let mut expected: Vec<ObjectId> = ds.objects().iter().map(|o| o.0).collect();
        expected.sort_unstable();
        assert_eq!(ids, expected);
    }

    #[test]
    fn point_query_matches_scan() {
        let ds = random_dataset(500, 5);
        let t = RTree::bulk_load(&ds, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..500 {
            let (r, c) = (rng.gen_range(0..1030), rng.gen_range(0..1030));
            let mut scan: Vec<ObjectId> = ds
                .objects()
                .iter()
                .filter(|(_, m)| m.contains_cell(r, c))
                .map(|o| o.0)
                .collect();
            scan.sort_unstable();
            assert_eq!(t.point_query(r, c), scan);
        }
        assert!(t.point_query(5000, 5000).is_empty());
    }

    #[test]
    fn serialization_round_trip() {
        let t = RTree::bulk_load(&random_dataset(300, 7), 10)
            .unwrap()
            .with_grid(1024, 1024);
        let back = RTree::from_bytes(&t.to_bytes()).unwrap();
        assert_eq!(back, t);
        let bytes = t.to_bytes();
        assert!(RTree::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn builder_validates() {
        let mut b = RTreeBuilder::new();
        let a = b.leaf(vec![(1, Mbr::cell(0, 0))]);
        let c = b.leaf(vec![(2, Mbr::cell(5, 5))]);
        let root = b.internal(vec![a, c]);
        let t = b.finish(root, 4).unwrap();
        assert_eq!(t.root().mbr, Mbr::new(0, 0, 5, 5).unwrap());

        let mut b = RTreeBuilder::new();
        let a = b.leaf(vec![(1, Mbr::cell(0, 0))]);
        let c = b.leaf(vec![(1, Mbr::cell(5, 5))]);
        let root = b.internal(vec![a, c]);
        assert!(b.finish(root, 4).is_err());
    }
}
