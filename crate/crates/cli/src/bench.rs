//! Synthetic scenario families run against every engine.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use k2join::ingest::{plasma_field, synth_objects, DEFAULT_ROUGHNESS};
use k2join::{Direction, K2Raster, PlainRaster, RTree, RasterMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{format_join, k2_config, run_join, run_topk};
use crate::{BenchArgs, Engine, Scenario};

const SCENARIO_I_SPAN: f64 = 2000.0;
const SCENARIO_II_RELIEF: f64 = 1000.0;

#[derive(Serialize, Clone, Debug)]
pub struct Dataset {
    pub scenario: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    /// Truncation digits (scenario II only).
    pub digits: Option<u32>,
    pub distinct_values: usize,
    pub objects: usize,
    pub k2_bytes: usize,
    pub plain_ints_bytes: usize,
    pub plain_bits_bytes: usize,
    pub rtree_bytes: usize,
}

#[derive(Serialize, Debug)]
pub struct Record {
    pub dataset: Dataset,
    pub engine: &'static str,
    pub query_type: &'static str,
    pub query_index: usize,
    pub query_seed: u64,
    pub lo: Option<i64>,
    pub hi: Option<i64>,
    pub k: Option<usize>,
    pub direction: Option<&'static str>,
    pub wall_ns: u128,
    /// Node visits for k2, cells inspected for plain engines.
    pub work: u64,
    pub work_unit: &'static str,
    pub result_size: usize,
    pub result_digest: String,
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

struct Plan {
    scenario: Scenario,
    side: usize,
    seed: u64,
    digits: Option<u32>,
}

fn raster_for(plan: &Plan) -> Result<RasterMatrix> {
    let field = plasma_field(plan.seed, plan.side, plan.side, DEFAULT_ROUGHNESS);
    let values = match plan.digits {
        None => field
            .iter()
            .map(|v| (v * SCENARIO_I_SPAN).round() as i64)
            .collect(),
        Some(d) => {
            let scale = SCENARIO_II_RELIEF * 10f64.powi(d as i32);
            field.iter().map(|v| (v * scale).floor() as i64).collect()
        }
    };
    Ok(RasterMatrix::new(plan.side, plan.side, values)?)
}

fn run_dataset(plan: &Plan, a: &BenchArgs) -> Result<Vec<Record>> {
    let cfg = k2_config(&a.k2)?;
    let matrix = raster_for(plan)?;
    let k2 = K2Raster::build(&matrix, &cfg)?;
    let plain = PlainRaster::from(&matrix);
    let objects = synth_objects(
        plan.seed ^ 0x5eed,
        a.objects,
        plan.side,
        plan.side,
        (plan.side / 32).max(2),
    );
    let tree = RTree::bulk_load(&objects, a.capacity)?.with_grid(plan.side, plan.side);
    let dataset = Dataset {
        scenario: match plan.scenario {
            Scenario::I => "I",
            Scenario::Ii => "II",
        },
        rows: plan.side,
        cols: plan.side,
        seed: plan.seed,
        digits: plan.digits,
        distinct_values: matrix.distinct_values(),
        objects: objects.len(),
        k2_bytes: k2.size_bytes(),
        plain_ints_bytes: plain.plain_ints_bytes(),
        plain_bits_bytes: plain.plain_bits_bytes(),
        rtree_bytes: tree.to_bytes().len(),
    };
    let (gmin, gmax) = matrix.min_max();
    let mut out = Vec::new();
    for q in 0..a.queries {
        let query_seed = plan.seed.wrapping_mul(1_000_003).wrapping_add(q as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(query_seed);
        let x = rng.gen_range(gmin..=gmax);
        let y = rng.gen_range(gmin..=gmax);
        let (lo, hi) = (x.min(y), x.max(y));
        let k = rng.gen_range(1..=20);
        let dir = if rng.gen_bool(0.5) {
            Direction::Highest
        } else {
            Direction::Lowest
        };
        for engine in Engine::ALL {
            let work_unit = if engine == Engine::K2 {
                "node_visits"
            } else {
                "cells_inspected"
            };
            let work_of = |s: &serde_json::Value| {
                s[if engine == Engine::K2 {
                    "k2_nodes_visited"
                } else {
                    "cells_inspected"
                }]
                .as_u64()
                .unwrap_or(0)
            };

            let start = Instant::now();
            let (res, stats) = run_join(engine, &k2, Some(&plain), &tree, lo, hi)?;
            let wall_ns = start.elapsed().as_nanos();
            let text = format_join(&res);
            out.push(Record {
                dataset: dataset.clone(),
                engine: engine.name(),
                query_type: "join",
                query_index: q,
                query_seed,
                lo: Some(lo),
                hi: Some(hi),
                k: None,
                direction: None,
                wall_ns,
                work: work_of(&stats),
                work_unit,
                result_size: res.definitive.len() + res.probable.len(),
                result_digest: format!("{:016x}", fnv1a(&text)),
            });

            let start = Instant::now();
            let (res, stats) = run_topk(engine, &k2, Some(&plain), &tree, k, dir)?;
            let wall_ns = start.elapsed().as_nanos();
            // Ties may resolve differently across engines; the digest covers values only.
            let values: Vec<String> = res.values().iter().map(i64::to_string).collect();
            out.push(Record {
                dataset: dataset.clone(),
                engine: engine.name(),
                query_type: "topk",
                query_index: q,
                query_seed,
                lo: None,
                hi: None,
                k: Some(k),
                direction: Some(if dir == Direction::Highest {
                    "highest"
                } else {
                    "lowest"
                }),
                wall_ns,
                work: work_of(&stats),
                work_unit,
                result_size: res.len(),
                result_digest: format!("{:016x}", fnv1a(&values.join(","))),
            });
        }
    }
    Ok(out)
}

const CSV_HEADER: &str = "scenario,rows,cols,seed,digits,distinct_values,objects,engine,query_type,query_index,query_seed,lo,hi,k,direction,wall_ms,work,work_unit,result_size,result_digest,k2_bytes,plain_ints_bytes,plain_bits_bytes,rtree_bytes";

fn csv_row(r: &Record) -> String {
    let opt = |v: Option<String>| v.unwrap_or_default();
    let d = &r.dataset;
    let mut s = String::new();
    let _ = write!(
        s,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6},{},{},{},{},{},{},{},{}",
        d.scenario,
        d.rows,
        d.cols,
        d.seed,
        opt(d.digits.map(|x| x.to_string())),
        d.distinct_values,
        d.objects,
        r.engine,
        r.query_type,
        r.query_index,
        r.query_seed,
        opt(r.lo.map(|x| x.to_string())),
        opt(r.hi.map(|x| x.to_string())),
        opt(r.k.map(|x| x.to_string())),
        r.direction.unwrap_or_default(),
        r.wall_ns as f64 / 1e6,
        r.work,
        r.work_unit,
        r.result_size,
        r.result_digest,
        d.k2_bytes,
        d.plain_ints_bytes,
        d.plain_bits_bytes,
        d.rtree_bytes,
    );
    s
}

pub fn run(a: &BenchArgs) -> Result<()> {
    k2_config(&a.k2)?;
    let mut plans = Vec::new();
    for &seed in &a.seeds {
        match a.scenario {
            Scenario::I => plans.extend(a.sizes.iter().map(|&side| Plan {
                scenario: a.scenario,
                side,
                seed,
                digits: None,
            })),
            Scenario::Ii => plans.extend(a.digits.iter().map(|&d| Plan {
                scenario: a.scenario,
                side: a.size,
                seed,
                digits: Some(d),
            })),
        }
    }
    anyhow::ensure!(
        plans.iter().all(|s| s.side >= 1),
        "raster sides must be at least 1"
    );
    // Datasets are independent; each task owns its indexes and counters.
    let per_dataset: Vec<Vec<Record>> = plans
        .par_iter()
        .map(|s| run_dataset(s, a))
        .collect::<Result<_>>()?;
    let records: Vec<Record> = per_dataset.into_iter().flatten().collect();

    let jsonl: PathBuf = format!("{}.jsonl", a.out.display()).into();
    let csv: PathBuf = format!("{}.csv", a.out.display()).into();
    let mut j = String::new();
    let mut c = String::from(CSV_HEADER);
    c.push('\n');
    for r in &records {
        j.push_str(&serde_json::to_string(r)?);
        j.push('\n');
        c.push_str(&csv_row(r));
        c.push('\n');
    }
    fs::write(&jsonl, j).with_context(|| format!("writing {}", jsonl.display()))?;
    fs::write(&csv, c).with_context(|| format!("writing {}", csv.display()))?;
    println!("{} records from {} datasets", records.len(), plans.len());
    println!("{}", jsonl.display());
    println!("{}", csv.display());
    Ok(())
}
