//! Plain-array baselines.
//!
//! The raster is kept uncompressed, row by row. Two strategies answer the
//! join and top-K queries: `mbrs` walks the R-tree leaves and scans the
//! cells under each object, `cells` scans the raster and probes the R-tree
//! per cell. Both produce the same answers as the synchronized traversal and
//! report how many cells they inspected.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geom::{Cell, Mbr};
use crate::join::JoinResult;
use crate::k2raster::RasterMatrix;
use crate::rtree::{ObjectId, RTree};
use crate::topk::{Direction, TopKResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainRaster {
    n_rows: usize,
    n_cols: usize,
    values: Vec<i64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BaselineStats {
    pub cells_inspected: u64,
    pub rtree_probes: u64,
}

impl From<&RasterMatrix> for PlainRaster {
    fn from(m: &RasterMatrix) -> Self {
        Self {
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
            values: m.values().to_vec(),
        }
    }
}

impl PlainRaster {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.values[row * self.n_cols + col]
    }

    /// Size with 32 bits per cell.
    pub fn plain_ints_bytes(&self) -> usize {
        self.values.len() * 4
    }

    /// Size with `ceil(log2(#distinct values))` bits per cell.
    pub fn plain_bits_bytes(&self) -> usize {
        let mut v = self.values.clone();
        v.sort_unstable();
        v.dedup();
        let bits = (usize::BITS - (v.len() - 1).leading_zeros()) as usize;
        (bits * self.values.len()).div_ceil(8)
    }

    fn clip(&self, m: &Mbr) -> Option<Mbr> {
        m.clip(self.n_rows, self.n_cols)
    }
}

fn check_range(lo: i64, hi: i64) -> Result<()> {
    if lo > hi {
        Err(Error::InvalidRange { lo, hi })
    } else {
        Ok(())
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::InvalidConfig("K must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Leaf-by-leaf scan of every object's cells.
pub fn join_mbrs(
    plain: &PlainRaster,
    tree: &RTree,
    lo: i64,
    hi: i64,
) -> Result<(JoinResult, BaselineStats)> {
    check_range(lo, hi)?;
    let mut stats = BaselineStats::default();
    let mut result = JoinResult::default();
    for leaf in tree.leaves() {
        for &(id, mbr) in leaf.entries() {
            let Some(w) = plain.clip(&mbr) else { continue };
            stats.cells_inspected += w.area() as u64;
            let cells: Vec<Cell> = w
                .cells()
                .filter(|&(r, c)| (lo..=hi).contains(&plain.get(r, c)))
                .collect();
            if cells.is_empty() {
                continue;
            }
            if cells.len() == w.area() {
                result.definitive.push((id, cells));
            } else {
                result.probable.push((id, cells));
            }
        }
    }
    result.canonicalize();
    Ok((result, stats))
}

/// Raster scan; in-range cells are mapped to objects through the R-tree.
pub fn join_cells(
    plain: &PlainRaster,
    tree: &RTree,
    lo: i64,
    hi: i64,
) -> Result<(JoinResult, BaselineStats)> {
    check_range(lo, hi)?;
    let mut stats = BaselineStats::default();
    let mut hits: BTreeMap<ObjectId, Vec<Cell>> = BTreeMap::new();
    for r in 0..plain.n_rows {
        for c in 0..plain.n_cols {
            stats.cells_inspected += 1;
            if !(lo..=hi).contains(&plain.get(r, c)) {
                continue;
            }
            stats.rtree_probes += 1;
            for id in tree.point_query(r, c) {
                hits.entry(id).or_default().push((r, c));
            }
        }
    }
    let areas: BTreeMap<ObjectId, usize> = tree
        .objects()
        .into_iter()
        .filter_map(|(id, m)| plain.clip(&m).map(|w| (id, w.area())))
        .collect();
    let mut result = JoinResult::default();
    for (id, cells) in hits {
        if cells.len() == areas[&id] {
            result.definitive.push((id, cells));
        } else {
            result.probable.push((id, cells));
        }
    }
    result.canonicalize();
    Ok((result, stats))
}

/// Sorts `(object, value)` pairs by the tie rule: better value first, then
/// ascending object id.
pub fn rank_objects(entries: &mut [(ObjectId, i64)], direction: Direction) {
    entries.sort_unstable_by(|a, b| match direction {
        Direction::Highest => b.1.cmp(&a.1).then(a.0.cmp(&b.0)),
        Direction::Lowest => a.1.cmp(&b.1).then(a.0.cmp(&b.0)),
    });
}

/// Exact extreme of every object that overlaps the raster, by scanning.
pub fn object_extremes(
    plain: &PlainRaster,
    tree: &RTree,
    direction: Direction,
) -> (Vec<(ObjectId, i64)>, BaselineStats) {
    let mut stats = BaselineStats::default();
    let mut all = Vec::new();
    for leaf in tree.leaves() {
        for &(id, mbr) in leaf.entries() {
            let Some(w) = plain.clip(&mbr) else { continue };
            stats.cells_inspected += w.area() as u64;
            let values = w.cells().map(|(r, c)| plain.get(r, c));
            let v = match direction {
                Direction::Highest => values.max(),
                Direction::Lowest => values.min(),
            };
            all.push((id, v.expect("non-empty window")));
        }
    }
    (all, stats)
}

/// Per-object extremes by leaf scan, ranked, first `k` kept.
pub fn topk_mbrs(
    plain: &PlainRaster,
    tree: &RTree,
    k: usize,
    direction: Direction,
) -> Result<(TopKResult, BaselineStats)> {
    check_k(k)?;
    let (mut all, stats) = object_extremes(plain, tree, direction);
    rank_objects(&mut all, direction);
    all.truncate(k);
    Ok((TopKResult { entries: all }, stats))
}

/// Cells in value order, `k` at a time, probing the R-tree until `k`
/// distinct objects are found and the tie group of the last one is closed.
pub fn topk_cells(
    plain: &PlainRaster,
    tree: &RTree,
    k: usize,
    direction: Direction,
) -> Result<(TopKResult, BaselineStats)> {
    check_k(k)?;
    let mut stats = BaselineStats::default();
    let mut order: Vec<(i64, usize)> = plain.values.iter().copied().zip(0..).collect();
    stats.cells_inspected = order.len() as u64;
    match direction {
        Direction::Highest => order.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1))),
        Direction::Lowest => order.sort_unstable(),
    }
    let mut found: BTreeMap<ObjectId, i64> = BTreeMap::new();
    let mut cutoff: Option<i64> = None;
    'batches: for batch in order.chunks(k) {
        for &(v, idx) in batch {
            if cutoff.is_some_and(|c| c != v) {
                break 'batches;
            }
            stats.rtree_probes += 1;
            for id in tree.point_query(idx / plain.n_cols, idx % plain.n_cols) {
                found.entry(id).or_insert(v);
            }
            if cutoff.is_none() && found.len() >= k {
                cutoff = Some(v);
            }
        }
    }
    let mut all: Vec<(ObjectId, i64)> = found.into_iter().collect();
    rank_objects(&mut all, direction);
    all.truncate(k);
    Ok((TopKResult { entries: all }, stats))
}
