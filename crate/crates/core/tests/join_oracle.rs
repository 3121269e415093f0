mod common;

use common::{random_instance, rng};
use k2join::baseline::{join_cells, join_mbrs};
use k2join::join::join_with_stats;
use k2join::{join, K2Config, K2Raster, Mbr, PlainRaster, RTree, RasterMatrix, VectorDataset};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn join_equals_both_baselines(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, 48, 40);
        let (gmin, gmax) = inst.matrix.min_max();
        let a = r.gen_range(gmin - 2..=gmax + 2);
        let b = r.gen_range(gmin - 2..=gmax + 2);
        let (lo, hi) = (a.min(b), a.max(b));
        let got = join(&inst.k2, &inst.tree, lo, hi).unwrap();
        prop_assert_eq!(&got, &join_mbrs(&inst.plain, &inst.tree, lo, hi).unwrap().0);
        prop_assert_eq!(&got, &join_cells(&inst.plain, &inst.tree, lo, hi).unwrap().0);
    }

    #[test]
    fn join_result_invariants(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, 32, 30);
        let (gmin, gmax) = inst.matrix.min_max();
        let lo = r.gen_range(gmin..=gmax);
        let hi = r.gen_range(lo..=gmax);
        let res = join(&inst.k2, &inst.tree, lo, hi).unwrap();
        let mbrs: std::collections::HashMap<_, _> = inst.tree.objects().into_iter().collect();
        let (nr, nc) = (inst.matrix.n_rows(), inst.matrix.n_cols());
        for (list, definitive) in [(&res.definitive, true), (&res.probable, false)] {
            for (id, cells) in list.iter() {
                let own = mbrs[id].clip(nr, nc).unwrap();
                prop_assert!(!cells.is_empty());
                prop_assert!(cells.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(cells.iter().all(|&(r, c)| own.contains_cell(r, c)));
                prop_assert!(cells.iter().all(|&(r, c)| (lo..=hi).contains(&inst.matrix.get(r, c))));
                prop_assert_eq!(cells.len() == own.area(), definitive);
            }
        }
        let d: Vec<_> = res.definitive.iter().map(|e| e.0).collect();
        prop_assert!(res.probable.iter().all(|e| !d.contains(&e.0)));
    }
}

#[test]
fn uniform_fixture() {
    let m = RasterMatrix::new(4, 4, vec![7; 16]).unwrap();
    let k2 = K2Raster::build(&m, &K2Config::default()).unwrap();
    let ds = VectorDataset::new(vec![
        (1, Mbr::new(0, 0, 1, 1).unwrap()),
        (2, Mbr::new(1, 2, 3, 3).unwrap()),
    ])
    .unwrap();
    let tree = RTree::bulk_load(&ds, 4).unwrap();
    let res = join(&k2, &tree, 7, 7).unwrap();
    assert!(res.probable.is_empty());
    assert_eq!(
        res.definitive
            .iter()
            .map(|e| (e.0, e.1.len()))
            .collect::<Vec<_>>(),
        vec![(1, 4), (2, 6)]
    );
    assert!(join(&k2, &tree, 8, 9).unwrap().is_empty());
    assert!(join(&k2, &tree, 3, 2).is_err());
}

#[test]
fn uniform_raster_needs_one_visit_per_pair() {
    let m = RasterMatrix::new(64, 64, vec![3; 64 * 64]).unwrap();
    let k2 = K2Raster::build(&m, &K2Config::default()).unwrap();
    let ds = common::random_objects(&mut rng(1), 64, 64, 30);
    let tree = RTree::bulk_load(&ds, 4).unwrap();
    let (res, stats) = join_with_stats(&k2, &tree, 0, 10).unwrap();
    assert_eq!(stats.k2_nodes_visited, 1);
    assert!(res.probable.is_empty());
    let (base, _) = join_mbrs(&PlainRaster::from(&m), &tree, 0, 10).unwrap();
    assert_eq!(res, base);
}

#[test]
fn join_is_deterministic_and_concurrent_safe() {
    let inst = random_instance(&mut rng(99), 48, 40);
    let (gmin, gmax) = inst.matrix.min_max();
    let first = join(&inst.k2, &inst.tree, gmin, (gmin + gmax) / 2).unwrap();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..4)
            .map(|_| s.spawn(|| join(&inst.k2, &inst.tree, gmin, (gmin + gmax) / 2).unwrap()))
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), first);
        }
    });
}
