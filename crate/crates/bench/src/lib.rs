//! Fixtures shared by the criterion benches.

use k2join::ingest::synth_objects;
use k2join::{synth_raster, K2Config, K2Raster, PlainRaster, RTree, RasterMatrix, SynthKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub matrix: RasterMatrix,
    pub k2: K2Raster,
    pub plain: PlainRaster,
    pub tree: RTree,
    pub ranges: Vec<(i64, i64)>,
}

/// Plasma raster of `side x side` with values in `[0, 2000]`, `objects`
/// random rectangles and a seeded set of query ranges.
pub fn fixture(side: usize, objects: usize, seed: u64) -> Fixture {
    let matrix = synth_raster(SynthKind::Plasma, seed, side, side, (0, 2000)).expect("valid span");
    let k2 = K2Raster::build(&matrix, &K2Config::default()).expect("default config");
    let plain = PlainRaster::from(&matrix);
    let tree = RTree::bulk_load(
        &synth_objects(seed ^ 0x5eed, objects, side, side, (side / 32).max(2)),
        16,
    )
    .expect("non-empty");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranges = (0..10)
        .map(|_| {
            let a = rng.gen_range(0..=2000);
            let b = rng.gen_range(0..=2000);
            (a.min(b), a.max(b))
        })
        .collect();
    Fixture {
        matrix,
        k2,
        plain,
        tree,
        ranges,
    }
}
