//! Compressed, self-indexed integer raster.
//!
//! The raster is subdivided recursively into `k x k` quadrants (`k` may vary
//! per level) and every quadrant keeps its minimum and maximum. Subdivision
//! stops at uniform quadrants and at single cells. The conceptual tree is
//! stored as:
//!
//! * `T`, one bit per node of levels `1..h-1` in level order, set when the
//!   node has children;
//! * per level, the differences `parent.max - node.max` for every node;
//! * per level below the leaves, the differences `node.min - parent.min`
//!   for nodes that have children (uniform nodes have `min == max`).
//!
//! Both difference sequences are DACs-compressed. Cells of the padded square
//! that fall outside the raster extent are virtual: a quadrant lying wholly
//! outside is stored as a childless node with a zero difference and never
//! visited by queries.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::bitvec::{BitmapBuilder, RankBitmap};
use crate::codec::{self, Reader};
use crate::dacs::{DacsSequence, DEFAULT_MAX_LEVELS};
use crate::error::{Error, Result};
use crate::geom::{Cell, Mbr};

const MAGIC: &[u8; 4] = b"K2RA";
const FORMAT_VERSION: u16 = 1;

/// Row-major integer grid; row 0 is the top row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<i64>,
}

impl RasterMatrix {
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<i64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidRaster(format!(
                "extent {n_rows}x{n_cols} has no cells"
            )));
        }
        if n_rows.checked_mul(n_cols) != Some(values.len()) {
            return Err(Error::InvalidRaster(format!(
                "{} values for a {n_rows}x{n_cols} extent",
                values.len()
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn from_fn(
        n_rows: usize,
        n_cols: usize,
        mut f: impl FnMut(usize, usize) -> i64,
    ) -> Result<Self> {
        let values = (0..n_rows)
            .flat_map(|r| (0..n_cols).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self::new(n_rows, n_cols, values)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.values[row * self.n_cols + col]
    }

    pub fn extent(&self) -> Mbr {
        Mbr {
            row_lo: 0,
            col_lo: 0,
            row_hi: self.n_rows - 1,
            col_hi: self.n_cols - 1,
        }
    }

    pub fn min_max(&self) -> (i64, i64) {
        let min = *self.values.iter().min().expect("non-empty raster");
        let max = *self.values.iter().max().expect("non-empty raster");
        (min, max)
    }

    pub fn distinct_values(&self) -> usize {
        let mut v = self.values.clone();
        v.sort_unstable();
        v.dedup();
        v.len()
    }

    pub fn map(&self, f: impl Fn(i64) -> i64) -> Self {
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Hybrid branching schedule: `k1` for the first `n1` levels, `k2` below.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct K2Config {
    pub n1: usize,
    pub k1: usize,
    pub k2: usize,
    pub dacs_max_levels: usize,
}

impl Default for K2Config {
    fn default() -> Self {
        Self {
            n1: 4,
            k1: 4,
            k2: 2,
            dacs_max_levels: DEFAULT_MAX_LEVELS,
        }
    }
}

impl K2Config {
    pub fn uniform(k: usize) -> Self {
        Self {
            n1: 0,
            k1: k,
            k2: k,
            dacs_max_levels: DEFAULT_MAX_LEVELS,
        }
    }

    pub fn hybrid(n1: usize, k1: usize, k2: usize) -> Self {
        Self {
            n1,
            k1,
            k2,
            dacs_max_levels: DEFAULT_MAX_LEVELS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k1 < 2 || self.k2 < 2 {
            return Err(Error::InvalidConfig(format!(
                "branching factors must be at least 2 (k1={}, k2={})",
                self.k1, self.k2
            )));
        }
        if self.k1 > 255 || self.k2 > 255 {
            return Err(Error::InvalidConfig(
                "branching factors must fit in a byte".into(),
            ));
        }
        if self.dacs_max_levels == 0 || self.dacs_max_levels > 64 {
            return Err(Error::InvalidConfig(format!(
                "DACs level cap {} outside 1..=64",
                self.dacs_max_levels
            )));
        }
        Ok(())
    }
}

/// Padded side and per-level branching factors for an extent.
///
/// The side is the smallest `k1^a * k2^j >= max(n_rows, n_cols)` with
/// `a <= n1`; ties keep the larger number of `k1` levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Padding {
    pub side: usize,
    pub level_ks: Vec<usize>,
}

pub fn pad_to_square(n_rows: usize, n_cols: usize, cfg: &K2Config) -> Result<Padding> {
    cfg.validate()?;
    let target = n_rows.max(n_cols).max(1);
    let mut best: Option<(usize, usize, usize)> = None;
    let mut head = 1usize;
    for a in 0..=cfg.n1 {
        if a > 0 {
            match head.checked_mul(cfg.k1) {
                Some(h) => head = h,
                None => break,
            }
        }
        let mut side = head;
        let mut j = 0;
        while side < target {
            side = side
                .checked_mul(cfg.k2)
                .ok_or_else(|| Error::InvalidConfig("padded side overflows".into()))?;
            j += 1;
        }
        if best.is_none_or(|(s, _, _)| side <= s) {
            best = Some((side, a, j));
        }
        if head >= target {
            break;
        }
    }
    let (side, a, j) = best.expect("at least one candidate");
    let mut level_ks = vec![cfg.k1; a];
    level_ks.extend(std::iter::repeat_n(cfg.k2, j));
    Ok(Padding { side, level_ks })
}

/// Navigable handle to one node of the conceptual tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeCursor {
    level: usize,
    index: usize,
    row0: usize,
    col0: usize,
    side: usize,
    min: i64,
    max: i64,
    has_children: bool,
}

impl NodeCursor {
    pub fn level(&self) -> usize {
        self.level
    }

    /// Position of the node within its level, in level order.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn quad(&self) -> Mbr {
        Mbr::square(self.row0, self.col0, self.side)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn min(&self) -> i64 {
        self.min
    }

    pub fn max(&self) -> i64 {
        self.max
    }

    pub fn has_children(&self) -> bool {
        self.has_children
    }

    pub fn is_uniform(&self) -> bool {
        self.min == self.max
    }

    /// Stable key used for tie-breaking and traces.
    pub fn key(&self) -> (usize, usize) {
        (self.level, self.index)
    }
}

#[derive(Debug)]
pub struct K2Raster {
    n_rows: usize,
    n_cols: usize,
    side: usize,
    offset: i64,
    level_ks: Vec<usize>,
    /// Shifted root values (`value - offset`).
    root_min: u64,
    root_max: u64,
    topology: RankBitmap,
    /// `lmax[l - 1]` holds level `l`, for `l` in `1..=h`.
    lmax: Vec<DacsSequence>,
    /// `lmin[l - 1]` holds level `l`, for `l` in `1..h`.
    lmin: Vec<DacsSequence>,
    /// Derived navigation tables, indexed by level.
    t_start: Vec<usize>,
    ones_before: Vec<usize>,
    visits: AtomicU64,
}

impl Clone for K2Raster {
    fn clone(&self) -> Self {
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            side: self.side,
            offset: self.offset,
            level_ks: self.level_ks.clone(),
            root_min: self.root_min,
            root_max: self.root_max,
            topology: self.topology.clone(),
            lmax: self.lmax.clone(),
            lmin: self.lmin.clone(),
            t_start: self.t_start.clone(),
            ones_before: self.ones_before.clone(),
            visits: AtomicU64::new(0),
        }
    }
}

struct PendingNode {
    row0: usize,
    col0: usize,
    min: u64,
    max: u64,
}

impl K2Raster {
    pub fn build(m: &RasterMatrix, cfg: &K2Config) -> Result<Self> {
        let Padding { side, level_ks } = pad_to_square(m.n_rows, m.n_cols, cfg)?;
        if u32::try_from(side).is_err() {
            return Err(Error::InvalidRaster(format!(
                "padded side {side} exceeds u32"
            )));
        }
        let (gmin, gmax) = m.min_max();
        let span = gmax
            .checked_sub(gmin)
            .ok_or_else(|| Error::InvalidRaster("value span overflows i64".into()))?;
        let offset = gmin;
        let shifted: Vec<u64> = m.values.iter().map(|&v| (v - offset) as u64).collect();
        let (n_rows, n_cols) = (m.n_rows, m.n_cols);
        let h = level_ks.len();

        let extremes = |row0: usize, col0: usize, size: usize| -> Option<(u64, u64)> {
            if row0 >= n_rows || col0 >= n_cols {
                return None;
            }
            let mut lo = u64::MAX;
            let mut hi = 0u64;
            for r in row0..(row0 + size).min(n_rows) {
                let row = &shifted[r * n_cols + col0..r * n_cols + (col0 + size).min(n_cols)];
                for &v in row {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            Some((lo, hi))
        };

        let mut topology = BitmapBuilder::new();
        let mut lmax_levels: Vec<Vec<u64>> = vec![Vec::new(); h];
        let mut lmin_levels: Vec<Vec<u64>> = vec![Vec::new(); h.saturating_sub(1)];
        let mut frontier = Vec::new();
        if h > 0 && span != 0 {
            frontier.push(PendingNode {
                row0: 0,
                col0: 0,
                min: 0,
                max: span as u64,
            });
        }
        let mut size = side;
        for level in 0..h {
            let k = level_ks[level];
            let sub = size / k;
            let child_level = level + 1;
            let mut next = Vec::new();
            for parent in &frontier {
                for i in 0..k * k {
                    let row0 = parent.row0 + (i / k) * sub;
                    let col0 = parent.col0 + (i % k) * sub;
                    match extremes(row0, col0, sub) {
                        None => {
                            lmax_levels[level].push(0);
                            if child_level < h {
                                topology.push(false);
                            }
                        }
                        Some((lo, hi)) => {
                            lmax_levels[level].push(parent.max - hi);
                            if child_level < h {
                                let split = lo != hi;
                                topology.push(split);
                                if split {
                                    lmin_levels[level].push(lo - parent.min);
                                    next.push(PendingNode {
                                        row0,
                                        col0,
                                        min: lo,
                                        max: hi,
                                    });
                                }
                            }
                        }
                    }
                }
            }
            frontier = next;
            size = sub;
        }

        let lmax = lmax_levels
            .iter()
            .map(|v| DacsSequence::encode(v, cfg.dacs_max_levels))
            .collect::<Result<Vec<_>>>()?;
        let lmin = lmin_levels
            .iter()
            .map(|v| DacsSequence::encode(v, cfg.dacs_max_levels))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(
            n_rows,
            n_cols,
            side,
            offset,
            level_ks,
            0,
            span as u64,
            topology.build(),
            lmax,
            lmin,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        n_rows: usize,
        n_cols: usize,
        side: usize,
        offset: i64,
        level_ks: Vec<usize>,
        root_min: u64,
        root_max: u64,
        topology: RankBitmap,
        lmax: Vec<DacsSequence>,
        lmin: Vec<DacsSequence>,
    ) -> Result<Self> {
        let h = level_ks.len();
        if lmax.len() != h || lmin.len() != h.saturating_sub(1) {
            return Err(Error::Format("level sequence count mismatch".into()));
        }
        let bad = |msg: String| Err(Error::Format(msg));
        // Level l holds `expanding(l-1) * k(l-1)^2` nodes.
        let mut t_start = vec![0usize; h + 1];
        let mut ones_before = vec![0usize; h + 1];
        let mut expanding = usize::from(h > 0 && root_min != root_max);
        let mut pos = 0usize;
        for level in 1..=h {
            let k = level_ks[level - 1];
            let count = expanding * k * k;
            if lmax[level - 1].len() != count {
                return bad(format!(
                    "level {level} has {} max entries, expected {count}",
                    lmax[level - 1].len()
                ));
            }
            if level < h {
                t_start[level] = pos;
                if pos + count > topology.len() {
                    return bad("topology bitmap too short".into());
                }
                ones_before[level] = topology.rank_prefix(pos);
                pos += count;
                expanding = topology.rank_prefix(pos) - ones_before[level];
                if lmin[level - 1].len() != expanding {
                    return bad(format!("level {level} min entry count mismatch"));
                }
            }
        }
        if pos != topology.len() {
            return bad("topology bitmap has trailing bits".into());
        }
        Ok(Self {
            n_rows,
            n_cols,
            side,
            offset,
            level_ks,
            root_min,
            root_max,
            topology,
            lmax,
            lmin,
            t_start,
            ones_before,
            visits: AtomicU64::new(0),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn level_ks(&self) -> &[usize] {
        &self.level_ks
    }

    pub fn height(&self) -> usize {
        self.level_ks.len()
    }

    pub fn extent(&self) -> Mbr {
        Mbr {
            row_lo: 0,
            col_lo: 0,
            row_hi: self.n_rows - 1,
            col_hi: self.n_cols - 1,
        }
    }

    pub fn min_value(&self) -> i64 {
        self.offset + self.root_min as i64
    }

    pub fn max_value(&self) -> i64 {
        self.offset + self.root_max as i64
    }

    pub fn topology(&self) -> &RankBitmap {
        &self.topology
    }

    /// Differential max sequence of level `l` (`1..=height`).
    pub fn lmax(&self, level: usize) -> Option<&DacsSequence> {
        level.checked_sub(1).and_then(|l| self.lmax.get(l))
    }

    /// Differential min sequence of level `l` (`1..height`).
    pub fn lmin(&self, level: usize) -> Option<&DacsSequence> {
        level.checked_sub(1).and_then(|l| self.lmin.get(l))
    }

    pub fn node_count_visited(&self) -> u64 {
        self.visits.load(Ordering::Relaxed)
    }

    pub fn reset_visits(&self) {
        self.visits.store(0, Ordering::Relaxed);
    }

    fn visit(&self) {
        self.visits.fetch_add(1, Ordering::Relaxed);
    }

    pub fn root(&self) -> NodeCursor {
        self.visit();
        NodeCursor {
            level: 0,
            index: 0,
            row0: 0,
            col0: 0,
            side: self.side,
            min: self.min_value(),
            max: self.max_value(),
            has_children: self.height() > 0 && self.root_min != self.root_max,
        }
    }

    /// True when the node's quadrant lies wholly in the padding.
    pub fn is_virtual(&self, c: &NodeCursor) -> bool {
        c.row0 >= self.n_rows || c.col0 >= self.n_cols
    }

    /// Branching factor below `c`.
    pub fn branching(&self, c: &NodeCursor) -> Option<usize> {
        c.has_children.then(|| self.level_ks[c.level])
    }

    /// Number of expanded nodes preceding this one in its level.
    fn expanded_rank(&self, level: usize, index: usize) -> usize {
        if level == 0 {
            0
        } else {
            self.topology.rank_prefix(self.t_start[level] + index) - self.ones_before[level]
        }
    }

    /// The `i`-th child (row-major) of `c`.
    pub fn child(&self, c: &NodeCursor, i: usize) -> Result<NodeCursor> {
        if !c.has_children {
            return Err(Error::UniformNode);
        }
        let k = self.level_ks[c.level];
        if i >= k * k {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: k * k,
            });
        }
        Ok(self.child_unchecked(c, i))
    }

    pub(crate) fn child_unchecked(&self, c: &NodeCursor, i: usize) -> NodeCursor {
        self.visit();
        let k = self.level_ks[c.level];
        let level = c.level + 1;
        let index = self.expanded_rank(c.level, c.index) * k * k + i;
        let max = c.max - self.lmax[level - 1].get(index) as i64;
        let sub = c.side / k;
        let row0 = c.row0 + (i / k) * sub;
        let col0 = c.col0 + (i % k) * sub;
        let (min, has_children) = if level < self.height()
            && self.topology.get(self.t_start[level] + index) == Some(true)
        {
            let rank = self.expanded_rank(level, index);
            (c.min + self.lmin[level - 1].get(rank) as i64, true)
        } else {
            (max, false)
        };
        NodeCursor {
            level,
            index,
            row0,
            col0,
            side: sub,
            min,
            max,
            has_children,
        }
    }

    /// All children of `c` in row-major quadrant order.
    pub fn child_cursors(&self, c: &NodeCursor) -> Result<Vec<NodeCursor>> {
        let k = self.branching(c).ok_or(Error::UniformNode)?;
        Ok((0..k * k).map(|i| self.child_unchecked(c, i)).collect())
    }

    /// Index of the child of `c` whose quadrant contains `(row, col)`.
    pub fn child_slot(&self, c: &NodeCursor, row: usize, col: usize) -> Option<usize> {
        let k = self.branching(c)?;
        let sub = c.side / k;
        if !c.quad().contains_cell(row, col) {
            return None;
        }
        Some((row - c.row0) / sub * k + (col - c.col0) / sub)
    }

    /// The unique child of `c` whose quadrant contains `window`, if any.
    pub fn containing_child(&self, c: &NodeCursor, window: &Mbr) -> Option<NodeCursor> {
        let slot = self.child_slot(c, window.row_lo, window.col_lo)?;
        let other = self.child_slot(c, window.row_hi, window.col_hi)?;
        (slot == other).then(|| self.child_unchecked(c, slot))
    }

    /// Indices of the children of `c` whose quadrants intersect `window`,
    /// row-major.
    pub fn overlapping_slots(&self, c: &NodeCursor, window: &Mbr) -> Vec<usize> {
        let Some(k) = self.branching(c) else {
            return Vec::new();
        };
        let Some(w) = c.quad().intersection(window) else {
            return Vec::new();
        };
        let sub = c.side / k;
        let (r_lo, r_hi) = ((w.row_lo - c.row0) / sub, (w.row_hi - c.row0) / sub);
        let (c_lo, c_hi) = ((w.col_lo - c.col0) / sub, (w.col_hi - c.col0) / sub);
        (r_lo..=r_hi)
            .flat_map(|r| (c_lo..=c_hi).map(move |cc| r * k + cc))
            .collect()
    }

    pub fn get_cell(&self, row: usize, col: usize) -> Result<i64> {
        if row >= self.n_rows || col >= self.n_cols {
            return Err(Error::CellOutOfRange {
                row,
                col,
                n_rows: self.n_rows,
                n_cols: self.n_cols,
            });
        }
        let mut c = self.root();
        while c.has_children {
            let slot = self.child_slot(&c, row, col).expect("cell inside quadrant");
            c = self.child_unchecked(&c, slot);
        }
        Ok(c.max)
    }

    /// Cells inside `window` (clipped to the extent) holding values in
    /// `[lo, hi]`, ascending by (row, col).
    pub fn cells_in_range(&self, window: &Mbr, lo: i64, hi: i64) -> Result<Vec<Cell>> {
        if lo > hi {
            return Err(Error::InvalidRange { lo, hi });
        }
        let w = window
            .clip(self.n_rows, self.n_cols)
            .ok_or(Error::EmptyWindow)?;
        let mut out = Vec::new();
        self.collect_in_range(self.root(), &w, lo, hi, &mut out);
        out.sort_unstable();
        Ok(out)
    }

    /// Appends (unsorted) every cell of `window ∩ c.quad` with value in
    /// `[lo, hi]`. `window` must already be clipped to the extent.
    pub(crate) fn collect_in_range(
        &self,
        c: NodeCursor,
        window: &Mbr,
        lo: i64,
        hi: i64,
        out: &mut Vec<Cell>,
    ) {
        let Some(w) = c.quad().intersection(window) else {
            return;
        };
        if c.max < lo || c.min > hi {
            return;
        }
        if lo <= c.min && c.max <= hi {
            out.extend(w.cells());
            return;
        }
        for slot in self.overlapping_slots(&c, &w) {
            let child = self.child_unchecked(&c, slot);
            self.collect_in_range(child, &w, lo, hi, out);
        }
    }

    pub fn decompress(&self) -> RasterMatrix {
        let mut values = vec![0i64; self.n_rows * self.n_cols];
        let mut stack = vec![self.root()];
        while let Some(c) = stack.pop() {
            if self.is_virtual(&c) {
                continue;
            }
            if c.has_children {
                stack.extend(self.child_cursors(&c).expect("expandable"));
            } else if let Some(q) = c.quad().clip(self.n_rows, self.n_cols) {
                for (r, col) in q.cells() {
                    values[r * self.n_cols + col] = c.max;
                }
            }
        }
        RasterMatrix::new(self.n_rows, self.n_cols, values).expect("valid extent")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        codec::put_u16(&mut out, FORMAT_VERSION);
        codec::put_i64(&mut out, self.offset);
        codec::put_u32(&mut out, self.n_rows as u32);
        codec::put_u32(&mut out, self.n_cols as u32);
        codec::put_u32(&mut out, self.side as u32);
        codec::put_u8(&mut out, self.level_ks.len() as u8);
        for &k in &self.level_ks {
            codec::put_u8(&mut out, k as u8);
        }
        codec::put_i64(&mut out, self.root_min as i64);
        codec::put_i64(&mut out, self.root_max as i64);
        self.topology.write_to(&mut out);
        for s in &self.lmax {
            s.write_to(&mut out);
        }
        for s in &self.lmin {
            s.write_to(&mut out);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not a k2-raster file (bad magic)".into()));
        }
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {version}"
            )));
        }
        let offset = r.i64()?;
        let n_rows = r.u32()? as usize;
        let n_cols = r.u32()? as usize;
        let side = r.u32()? as usize;
        let h = r.u8()? as usize;
        let level_ks: Vec<usize> = (0..h)
            .map(|_| r.u8().map(usize::from))
            .collect::<Result<_>>()?;
        if n_rows == 0 || n_cols == 0 || level_ks.iter().any(|&k| k < 2) {
            return Err(Error::Format("invalid header".into()));
        }
        let product = level_ks
            .iter()
            .try_fold(1usize, |acc, &k| acc.checked_mul(k))
            .ok_or_else(|| Error::Format("padded side overflows".into()))?;
        if product != side || side < n_rows.max(n_cols) {
            return Err(Error::Format("side does not match level schedule".into()));
        }
        let root_min = r.i64()?;
        let root_max = r.i64()?;
        if root_min < 0 || root_max < root_min {
            return Err(Error::Format("invalid root extremes".into()));
        }
        let topology = RankBitmap::read_from(&mut r)?;
        let lmax = (0..h)
            .map(|_| DacsSequence::read_from(&mut r))
            .collect::<Result<Vec<_>>>()?;
        let lmin = (0..h.saturating_sub(1))
            .map(|_| DacsSequence::read_from(&mut r))
            .collect::<Result<Vec<_>>>()?;
        if !r.is_empty() {
            return Err(Error::Format("trailing bytes after k2-raster".into()));
        }
        Self::assemble(
            n_rows,
            n_cols,
            side,
            offset,
            level_ks,
            root_min as u64,
            root_max as u64,
            topology,
            lmax,
            lmin,
        )
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Serialized size in bytes.
    pub fn size_bytes(&self) -> usize {
        self.to_bytes().len()
    }

    /// Number of nodes in the conceptual tree, root included.
    pub fn node_count(&self) -> usize {
        1 + self.lmax.iter().map(DacsSequence::len).sum::<usize>()
    }
}
