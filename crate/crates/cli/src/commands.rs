use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use k2join::baseline::{self, PlainRaster};
use k2join::ingest::{parse_ascii_grid, parse_mbr_csv, SynthKind};
use k2join::join::join_with_stats;
use k2join::topk::top_k_with_stats;
use k2join::{synth_raster, Direction, JoinResult, K2Config, K2Raster, RTree, TopKResult};
use serde::Deserialize;
use serde_json::json;

use crate::{BuildRasterArgs, BuildRtreeArgs, Engine, JoinArgs, K2Flags, TopkArgs};

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n1: Option<usize>,
    k1: Option<usize>,
    k2: Option<usize>,
    dacs_max_levels: Option<usize>,
}

pub fn k2_config(flags: &K2Flags) -> Result<K2Config> {
    let file: ConfigFile = match &flags.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ConfigFile::default(),
    };
    let d = K2Config::default();
    let cfg = K2Config {
        n1: flags.n1.or(file.n1).unwrap_or(d.n1),
        k1: flags.k1.or(file.k1).unwrap_or(d.k1),
        k2: flags.k2.or(file.k2).unwrap_or(d.k2),
        dacs_max_levels: flags
            .dacs_levels
            .or(file.dacs_max_levels)
            .unwrap_or(d.dacs_max_levels),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn percent(part: usize, whole: usize) -> String {
    if whole == 0 {
        "n/a".into()
    } else {
        format!("{:.2}%", 100.0 * part as f64 / whole as f64)
    }
}

pub fn mask_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".mask");
    PathBuf::from(s)
}

pub fn build_raster(a: &BuildRasterArgs) -> Result<()> {
    let cfg = k2_config(&a.k2)?;
    let (matrix, mask) = match (&a.grid, &a.kind) {
        (Some(path), _) => {
            let g = parse_ascii_grid(path, a.digits)
                .with_context(|| format!("reading grid {}", path.display()))?;
            (g.matrix, g.mask)
        }
        (None, Some(kind)) => {
            let kind: SynthKind = kind.parse()?;
            (synth_raster(kind, a.seed, a.rows, a.cols, a.span)?, None)
        }
        (None, None) => bail!("either --grid or --kind is required"),
    };
    let k2 = K2Raster::build(&matrix, &cfg)?;
    k2.write_file(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(mask) = &mask {
        let p = mask_path(&a.out);
        mask.write_file(&p)
            .with_context(|| format!("writing {}", p.display()))?;
        eprintln!("{} nodata cells recorded in {}", mask.count(), p.display());
    }
    let plain = PlainRaster::from(&matrix);
    let size = k2.size_bytes();
    println!(
        "raster      {}x{}, {} distinct values",
        matrix.n_rows(),
        matrix.n_cols(),
        matrix.distinct_values()
    );
    println!("levels      {:?}", k2.level_ks());
    println!("k2-raster   {size} bytes");
    println!(
        "plain-ints  {} bytes (k2-raster is {})",
        plain.plain_ints_bytes(),
        percent(size, plain.plain_ints_bytes())
    );
    println!(
        "plain-bits  {} bytes (k2-raster is {})",
        plain.plain_bits_bytes(),
        percent(size, plain.plain_bits_bytes())
    );
    Ok(())
}

pub fn build_rtree(a: &BuildRtreeArgs) -> Result<()> {
    let extent = match (&a.raster, a.rows, a.cols) {
        (Some(p), _, _) => {
            let k2 = K2Raster::read_file(p).with_context(|| format!("reading {}", p.display()))?;
            Some((k2.n_rows(), k2.n_cols()))
        }
        (None, Some(r), Some(c)) => Some((r, c)),
        _ => None,
    };
    let ds = parse_mbr_csv(&a.csv, a.affine.as_ref(), extent)
        .with_context(|| format!("reading {}", a.csv.display()))?;
    let mut tree = RTree::bulk_load(&ds, a.capacity)?;
    if let Some((r, c)) = extent {
        tree = tree.with_grid(r, c);
    }
    tree.write_file(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    println!("objects  {}", tree.len());
    println!("leaves   {}", tree.leaves().len());
    println!("levels   {}", tree.height());
    println!("nodes    {}", tree.nodes().len());
    Ok(())
}

/// Loads both indexes and rejects pairs built for different grids.
pub fn load_indexes(raster: &Path, rtree: &Path) -> Result<(K2Raster, RTree)> {
    let k2 =
        K2Raster::read_file(raster).with_context(|| format!("reading {}", raster.display()))?;
    let tree = RTree::read_file(rtree).with_context(|| format!("reading {}", rtree.display()))?;
    match tree.grid() {
        Some(g) if g == (k2.n_rows(), k2.n_cols()) => Ok((k2, tree)),
        Some((r, c)) => bail!(
            "extent mismatch: raster is {}x{} but the R-tree was built for {r}x{c}",
            k2.n_rows(),
            k2.n_cols()
        ),
        None => {
            bail!("the R-tree records no grid extent; rebuild it with --raster or --rows/--cols")
        }
    }
}

pub fn format_join(res: &JoinResult) -> String {
    let mut out = String::new();
    for (tag, list) in [("D", &res.definitive), ("P", &res.probable)] {
        for (id, cells) in list {
            let _ = write!(out, "{tag} {id} {}", cells.len());
            for (r, c) in cells {
                let _ = write!(out, " {r},{c}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn format_topk(res: &TopKResult) -> String {
    res.entries
        .iter()
        .enumerate()
        .map(|(i, (id, v))| format!("{} {id} {v}\n", i + 1))
        .collect()
}

pub fn run_join(
    engine: Engine,
    k2: &K2Raster,
    plain: Option<&PlainRaster>,
    tree: &RTree,
    lo: i64,
    hi: i64,
) -> Result<(JoinResult, serde_json::Value)> {
    Ok(match engine {
        Engine::K2 => {
            let (res, s) = join_with_stats(k2, tree, lo, hi)?;
            let stats = json!({
                "engine": engine.name(),
                "k2_nodes_visited": s.k2_nodes_visited,
                "pairs_processed": s.pairs_processed,
                "quadrant_checks": s.quadrant_checks,
                "mbr_checks": s.mbr_checks,
                "pruned_at_quadrant": s.pruned_at_quadrant,
            });
            (res, stats)
        }
        Engine::PlainMbrs | Engine::PlainCells => {
            let plain = plain.expect("plain raster for plain engines");
            let f = if engine == Engine::PlainMbrs {
                baseline::join_mbrs
            } else {
                baseline::join_cells
            };
            let (res, s) = f(plain, tree, lo, hi)?;
            (
                res,
                json!({ "engine": engine.name(), "cells_inspected": s.cells_inspected, "rtree_probes": s.rtree_probes }),
            )
        }
    })
}

pub fn run_topk(
    engine: Engine,
    k2: &K2Raster,
    plain: Option<&PlainRaster>,
    tree: &RTree,
    k: usize,
    dir: Direction,
) -> Result<(TopKResult, serde_json::Value)> {
    Ok(match engine {
        Engine::K2 => {
            let (res, s) = top_k_with_stats(k2, tree, k, dir)?;
            let stats = json!({
                "engine": engine.name(),
                "k2_nodes_visited": s.k2_nodes_visited,
                "queue_inserts": s.queue_inserts,
                "geometry_checks": s.geometry_checks,
                "omitted_objects": s.omitted_objects,
            });
            (res, stats)
        }
        Engine::PlainMbrs | Engine::PlainCells => {
            let plain = plain.expect("plain raster for plain engines");
            let f = if engine == Engine::PlainMbrs {
                baseline::topk_mbrs
            } else {
                baseline::topk_cells
            };
            let (res, s) = f(plain, tree, k, dir)?;
            (
                res,
                json!({ "engine": engine.name(), "cells_inspected": s.cells_inspected, "rtree_probes": s.rtree_probes }),
            )
        }
    })
}

fn plain_for(engine: Engine, k2: &K2Raster) -> Option<PlainRaster> {
    (engine != Engine::K2).then(|| PlainRaster::from(&k2.decompress()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing to stdout"),
    }
}

pub fn join(a: &JoinArgs) -> Result<()> {
    let (k2, tree) = load_indexes(&a.raster, &a.rtree)?;
    let plain = plain_for(a.engine, &k2);
    let (res, mut stats) = run_join(a.engine, &k2, plain.as_ref(), &tree, a.lo, a.hi)?;
    emit(a.out.as_deref(), &format_join(&res))?;
    if a.stats {
        stats["definitive"] = json!(res.definitive.len());
        stats["probable"] = json!(res.probable.len());
        println!("{stats}");
    }
    Ok(())
}

pub fn topk(a: &TopkArgs) -> Result<()> {
    let (k2, tree) = load_indexes(&a.raster, &a.rtree)?;
    let dir = if a.lowest {
        Direction::Lowest
    } else {
        Direction::Highest
    };
    let plain = plain_for(a.engine, &k2);
    let (res, mut stats) = run_topk(a.engine, &k2, plain.as_ref(), &tree, a.k, dir)?;
    emit(None, &format_topk(&res))?;
    if a.stats {
        stats["returned"] = json!(res.len());
        println!("{stats}");
    }
    Ok(())
}
