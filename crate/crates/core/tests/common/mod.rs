//! Shared oracles and fixtures for the integration tests.
#![allow(dead_code)]

use k2join::baseline::{self, PlainRaster};
use k2join::ingest::{synth_raster, SynthKind};
use k2join::rtree::RTreeBuilder;
use k2join::{
    Direction, K2Config, K2Raster, Mbr, ObjectId, RTree, RasterMatrix, TopKResult, VectorDataset,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smallest side `k1^a * k2^j >= max(rows, cols)` with `a <= n1`, preferring
/// more `k1` levels on ties. Found by enumeration.
pub fn oracle_level_ks(n_rows: usize, n_cols: usize, cfg: &K2Config) -> Vec<usize> {
    let need = n_rows.max(n_cols);
    let mut best: Option<(usize, usize, usize)> = None;
    for a in 0..=cfg.n1 {
        let Some(mut side) = cfg.k1.checked_pow(a as u32) else {
            break;
        };
        let mut j = 0;
        while side < need {
            side *= cfg.k2;
            j += 1;
        }
        let better = match best {
            None => true,
            Some((s, _, ba)) => side < s || (side == s && a > ba),
        };
        if better {
            best = Some((side, j, a));
        }
    }
    let (_, j, a) = best.unwrap();
    let mut ks = vec![cfg.k1; a];
    ks.extend(std::iter::repeat_n(cfg.k2, j));
    ks
}

/// Node of the explicit (pointer-based) conceptual tree.
#[derive(Debug)]
pub struct Concept {
    pub row0: usize,
    pub col0: usize,
    pub side: usize,
    /// `None` for quadrants wholly in the padding.
    pub range: Option<(i64, i64)>,
    pub children: Vec<Concept>,
}

pub fn concept_tree(m: &RasterMatrix, ks: &[usize]) -> Concept {
    fn build(m: &RasterMatrix, ks: &[usize], row0: usize, col0: usize, side: usize) -> Concept {
        let mut range: Option<(i64, i64)> = None;
        for r in row0..row0 + side {
            for c in col0..col0 + side {
                if r < m.n_rows() && c < m.n_cols() {
                    let v = m.get(r, c);
                    range = Some(range.map_or((v, v), |(a, b)| (a.min(v), b.max(v))));
                }
            }
        }
        let mut children = Vec::new();
        if let (Some((lo, hi)), Some((&k, rest))) = (range, ks.split_first()) {
            if lo != hi {
                let sub = side / k;
                for i in 0..k * k {
                    children.push(build(
                        m,
                        rest,
                        row0 + (i / k) * sub,
                        col0 + (i % k) * sub,
                        sub,
                    ));
                }
            }
        }
        Concept {
            row0,
            col0,
            side,
            range,
            children,
        }
    }
    let side: usize = ks.iter().product();
    build(m, ks, 0, 0, side)
}

/// Level-order sequences expected from the conceptual tree:
/// `(topology bits, lmax per level, lmin per level)`, in shifted space.
pub fn concept_sequences(
    root: &Concept,
    height: usize,
) -> (Vec<bool>, Vec<Vec<u64>>, Vec<Vec<u64>>) {
    let mut t = Vec::new();
    let mut lmax = vec![Vec::new(); height];
    let mut lmin = vec![Vec::new(); height.saturating_sub(1)];
    let mut frontier = vec![root];
    for level in 1..=height {
        let mut next = Vec::new();
        for parent in &frontier {
            let (pmin, pmax) = parent.range.unwrap();
            for ch in &parent.children {
                match ch.range {
                    None => {
                        lmax[level - 1].push(0);
                        if level < height {
                            t.push(false);
                        }
                    }
                    Some((lo, hi)) => {
                        lmax[level - 1].push((pmax - hi) as u64);
                        if level < height {
                            t.push(!ch.children.is_empty());
                            if !ch.children.is_empty() {
                                lmin[level - 1].push((lo - pmin) as u64);
                                next.push(ch);
                            }
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    (t, lmax, lmin)
}

/// Checks every stored sequence and every reachable cursor against the
/// conceptual tree. Returns a description of the first mismatch.
pub fn check_against_concept(m: &RasterMatrix, cfg: &K2Config) -> Result<(), String> {
    let k2 = K2Raster::build(m, cfg).map_err(|e| e.to_string())?;
    let ks = oracle_level_ks(m.n_rows(), m.n_cols(), cfg);
    if k2.level_ks() != ks.as_slice() {
        return Err(format!("level ks {:?} != {:?}", k2.level_ks(), ks));
    }
    let root = concept_tree(m, &ks);
    let (gmin, gmax) = m.min_max();
    if (k2.min_value(), k2.max_value()) != (gmin, gmax) {
        return Err("root extremes differ".into());
    }
    let (t, lmax, lmin) = concept_sequences(&root, ks.len());
    let got_t: Vec<bool> = (0..k2.topology().len())
        .map(|i| k2.topology().get(i).unwrap())
        .collect();
    if got_t != t {
        return Err(format!(
            "topology differs ({} vs {} bits)",
            got_t.len(),
            t.len()
        ));
    }
    for (l, want) in lmax.iter().enumerate() {
        let got: Vec<u64> = k2.lmax(l + 1).ok_or("missing lmax level")?.iter().collect();
        if &got != want {
            return Err(format!("lmax level {} differs", l + 1));
        }
    }
    for (l, want) in lmin.iter().enumerate() {
        let got: Vec<u64> = k2.lmin(l + 1).ok_or("missing lmin level")?.iter().collect();
        if &got != want {
            return Err(format!("lmin level {} differs", l + 1));
        }
    }
    // Cursor walk.
    let mut stack = vec![(k2.root(), &root)];
    while let Some((c, n)) = stack.pop() {
        if (c.quad().row_lo, c.quad().col_lo, c.side()) != (n.row0, n.col0, n.side) {
            return Err(format!(
                "cursor geometry {:?} vs concept ({}, {}, {})",
                c.quad(),
                n.row0,
                n.col0,
                n.side
            ));
        }
        if let Some((lo, hi)) = n.range {
            if (c.min(), c.max()) != (lo, hi) {
                return Err(format!(
                    "cursor at {} has [{}, {}], expected [{lo}, {hi}]",
                    c.quad(),
                    c.min(),
                    c.max()
                ));
            }
        }
        if c.has_children() != !n.children.is_empty() {
            return Err(format!("has_children mismatch at {}", c.quad()));
        }
        if c.has_children() {
            let kids = k2.child_cursors(&c).map_err(|e| e.to_string())?;
            if kids.len() != n.children.len() {
                return Err("child count differs".into());
            }
            for (kc, kn) in kids.into_iter().zip(&n.children) {
                if kn.range.is_some() {
                    stack.push((kc, kn));
                }
            }
        }
    }
    for r in 0..m.n_rows() {
        for c in 0..m.n_cols() {
            if k2.get_cell(r, c).map_err(|e| e.to_string())? != m.get(r, c) {
                return Err(format!("get_cell({r}, {c}) differs"));
            }
        }
    }
    if k2.decompress() != *m {
        return Err("decompress differs".into());
    }
    Ok(())
}

pub fn random_kind(rng: &mut ChaCha8Rng) -> SynthKind {
    SynthKind::ALL[rng.gen_range(0..4)]
}

/// A random raster up to `max_side` per axis, drawn from every synthetic
/// kind and a few value spans (some negative, some narrow).
pub fn random_raster(rng: &mut ChaCha8Rng, max_side: usize) -> RasterMatrix {
    let rows = rng.gen_range(1..=max_side);
    let cols = rng.gen_range(1..=max_side);
    let lo = rng.gen_range(-50..=50);
    let hi = lo + [0, 1, 3, 9, 100][rng.gen_range(0..5)];
    let kind = random_kind(rng);
    synth_raster(kind, rng.gen(), rows, cols, (lo, hi)).unwrap()
}

/// Random objects, some poking beyond the raster extent.
pub fn random_objects(
    rng: &mut ChaCha8Rng,
    n_rows: usize,
    n_cols: usize,
    max_objects: usize,
) -> VectorDataset {
    let n = rng.gen_range(1..=max_objects);
    let objects = (0..n)
        .map(|i| {
            let r = rng.gen_range(0..n_rows + 2);
            let c = rng.gen_range(0..n_cols + 2);
            let h = rng.gen_range(0..=(n_rows / 2).max(1));
            let w = rng.gen_range(0..=(n_cols / 2).max(1));
            (i as ObjectId * 3 + 1, Mbr::new(r, c, r + h, c + w).unwrap())
        })
        .collect();
    VectorDataset::new(objects).unwrap()
}

pub struct Instance {
    pub matrix: RasterMatrix,
    pub cfg: K2Config,
    pub k2: K2Raster,
    pub tree: RTree,
    pub plain: PlainRaster,
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_side: usize, max_objects: usize) -> Instance {
    let matrix = random_raster(rng, max_side);
    let cfg = if rng.gen_bool(0.5) {
        K2Config::default()
    } else {
        K2Config::hybrid(
            rng.gen_range(0..3),
            rng.gen_range(2..5),
            rng.gen_range(2..4),
        )
    };
    let k2 = K2Raster::build(&matrix, &cfg).unwrap();
    let ds = random_objects(rng, matrix.n_rows(), matrix.n_cols(), max_objects);
    let tree = RTree::bulk_load(&ds, rng.gen_range(2..=8)).unwrap();
    let plain = PlainRaster::from(&matrix);
    Instance {
        matrix,
        cfg,
        k2,
        tree,
        plain,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// True extreme of every object overlapping the raster, straight from the matrix.
pub fn scan_extremes(m: &RasterMatrix, tree: &RTree, dir: Direction) -> Vec<(ObjectId, i64)> {
    tree.objects()
        .into_iter()
        .filter_map(|(id, mbr)| {
            let w = mbr.clip(m.n_rows(), m.n_cols())?;
            let vals = w.cells().map(|(r, c)| m.get(r, c));
            let v = match dir {
                Direction::Highest => vals.max(),
                Direction::Lowest => vals.min(),
            };
            Some((id, v.unwrap()))
        })
        .collect()
}

/// Checks `got` against the ranked extremes: same value sequence, every
/// strictly-better object present, every reported value exact.
pub fn check_topk(
    m: &RasterMatrix,
    tree: &RTree,
    k: usize,
    dir: Direction,
    got: &TopKResult,
) -> Result<(), String> {
    let mut all = scan_extremes(m, tree, dir);
    baseline::rank_objects(&mut all, dir);
    let want: Vec<(ObjectId, i64)> = all.iter().copied().take(k).collect();
    let want_vals: Vec<i64> = want.iter().map(|e| e.1).collect();
    if got.values() != want_vals {
        return Err(format!("values {:?} != {:?}", got.values(), want_vals));
    }
    let truth: std::collections::HashMap<ObjectId, i64> = all.iter().copied().collect();
    let mut ids: Vec<ObjectId> = got.entries.iter().map(|e| e.0).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != got.len() {
        return Err("duplicate object in result".into());
    }
    for &(id, v) in &got.entries {
        if truth.get(&id) != Some(&v) {
            return Err(format!(
                "object {id} reported at {v}, true extreme {:?}",
                truth.get(&id)
            ));
        }
    }
    if let Some(&boundary) = want_vals.last() {
        for &(id, v) in &want {
            if v != boundary && !got.entries.iter().any(|e| e.0 == id) {
                return Err(format!("object {id} at {v} missing"));
            }
        }
    }
    Ok(())
}

/// 8x8 raster with one uniform quadrant of 5s and a three-group R-tree.
///
/// Objects a..f have ids 1..6. Leaves m11, m12, m21, m22, m31, m32 get node
/// ids 0..5, then M1, M2, M3 get 6..8 and the root 9.
pub struct WorkedExample {
    pub matrix: RasterMatrix,
    pub k2: K2Raster,
    pub tree: RTree,
}

pub const M11: usize = 0;
pub const M12: usize = 1;
pub const M21: usize = 2;
pub const M22: usize = 3;
pub const M31: usize = 4;
pub const M32: usize = 5;
pub const BIG_M1: usize = 6;
pub const BIG_M2: usize = 7;
pub const BIG_M3: usize = 8;
pub const OBJ_D: ObjectId = 4;
pub const OBJ_E: ObjectId = 5;
pub const OBJ_F: ObjectId = 6;

pub fn worked_example() -> WorkedExample {
    #[rustfmt::skip]
    let rows: [[i64; 8]; 8] = [
        [2, 2, 2, 2, 1, 2, 3, 3],
        [2, 2, 2, 2, 2, 2, 3, 1],
        [2, 2, 2, 2, 1, 1, 2, 2],
        [2, 2, 2, 2, 3, 2, 1, 1],
        [5, 1, 2, 3, 1, 4, 2, 3],
        [4, 4, 1, 3, 2, 3, 3, 1],
        [3, 4, 4, 2, 2, 2, 5, 5],
        [3, 4, 4, 1, 1, 2, 5, 5],
    ];
    let matrix = RasterMatrix::new(8, 8, rows.concat()).unwrap();
    let k2 = K2Raster::build(&matrix, &K2Config::uniform(2)).unwrap();
    let mbr = |a, b, c, d| Mbr::new(a, b, c, d).unwrap();
    let mut b = RTreeBuilder::new();
    let m11 = b.leaf(vec![(1, mbr(0, 4, 1, 5))]);
    let m12 = b.leaf(vec![(2, mbr(2, 5, 3, 7))]);
    let m21 = b.leaf(vec![(3, mbr(4, 2, 5, 3))]);
    let m22 = b.leaf(vec![(OBJ_D, mbr(6, 1, 7, 2))]);
    let m31 = b.leaf(vec![(OBJ_E, mbr(4, 4, 5, 6))]);
    let m32 = b.leaf(vec![(OBJ_F, mbr(6, 6, 7, 7))]);
    let big1 = b.internal(vec![m11, m12]);
    let big2 = b.internal(vec![m21, m22]);
    let big3 = b.internal(vec![m31, m32]);
    let root = b.internal(vec![big1, big2, big3]);
    let tree = b.finish(root, 3).unwrap().with_grid(8, 8);
    assert_eq!((big1, big2, big3), (BIG_M1, BIG_M2, BIG_M3));
    WorkedExample { matrix, k2, tree }
}
