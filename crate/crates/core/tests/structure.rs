mod common;

use common::{check_against_concept, oracle_level_ks, random_raster, rng};
use k2join::{pad_to_square, K2Config, K2Raster, RasterMatrix};
use proptest::prelude::*;

fn configs() -> impl Strategy<Value = K2Config> {
    prop_oneof![
        Just(K2Config::default()),
        Just(K2Config::hybrid(2, 2, 2)),
        Just(K2Config::uniform(3)),
        (0usize..4, 2usize..6, 2usize..5).prop_map(|(n1, k1, k2)| K2Config::hybrid(n1, k1, k2)),
    ]
}

fn matrices() -> impl Strategy<Value = RasterMatrix> {
    (
        1usize..24,
        1usize..24,
        prop_oneof![Just(0i64), Just(1), Just(4), Just(1000)],
    )
        .prop_flat_map(|(r, c, span)| {
            proptest::collection::vec(-span..=span, r * c)
                .prop_map(move |v| RasterMatrix::new(r, c, v).unwrap())
        })
}

proptest! {
    #[test]
    fn matches_conceptual_tree(m in matrices(), cfg in configs()) {
        prop_assert_eq!(check_against_concept(&m, &cfg), Ok(()));
    }

    #[test]
    fn serialization_is_lossless(m in matrices(), cfg in configs()) {
        let k2 = K2Raster::build(&m, &cfg).unwrap();
        let bytes = k2.to_bytes();
        let back = K2Raster::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.decompress(), m);
        prop_assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn padding_is_minimal(rows in 1usize..5000, cols in 1usize..5000, cfg in configs()) {
        let p = pad_to_square(rows, cols, &cfg).unwrap();
        let ks = oracle_level_ks(rows, cols, &cfg);
        prop_assert_eq!(&p.level_ks, &ks);
        prop_assert_eq!(p.side, ks.iter().product::<usize>());
        prop_assert!(p.side >= rows.max(cols));
    }

    #[test]
    fn range_search_matches_scan(m in matrices(), a in -6i64..6, b in -6i64..6, r0 in 0usize..24, c0 in 0usize..24, h in 0usize..12, w in 0usize..12) {
        let (lo, hi) = (a.min(b), a.max(b));
        let k2 = K2Raster::build(&m, &K2Config::default()).unwrap();
        let window = k2join::Mbr::new(r0, c0, r0 + h, c0 + w).unwrap();
        match window.clip(m.n_rows(), m.n_cols()) {
            None => prop_assert!(k2.cells_in_range(&window, lo, hi).is_err()),
            Some(clipped) => {
                let want: Vec<_> = clipped.cells().filter(|&(r, c)| (lo..=hi).contains(&m.get(r, c))).collect();
                prop_assert_eq!(k2.cells_in_range(&window, lo, hi).unwrap(), want);
            }
        }
    }
}

#[test]
fn synthetic_kinds_match_conceptual_tree() {
    let mut r = rng(17);
    for _ in 0..40 {
        let m = random_raster(&mut r, 70);
        for cfg in [K2Config::default(), K2Config::hybrid(2, 2, 2)] {
            assert_eq!(
                check_against_concept(&m, &cfg),
                Ok(()),
                "{}x{}",
                m.n_rows(),
                m.n_cols()
            );
        }
    }
}

#[test]
fn file_round_trip() {
    let dir = std::env::temp_dir().join(format!("k2join-structure-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("r.k2r");
    let m = random_raster(&mut rng(2), 40);
    let k2 = K2Raster::build(&m, &K2Config::default()).unwrap();
    k2.write_file(&path).unwrap();
    assert_eq!(K2Raster::read_file(&path).unwrap().decompress(), m);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn visit_counter_is_monotone() {
    let m = random_raster(&mut rng(5), 30);
    let k2 = K2Raster::build(&m, &K2Config::default()).unwrap();
    let mut last = k2.node_count_visited();
    for r in 0..m.n_rows() {
        k2.get_cell(r, 0).unwrap();
        let now = k2.node_count_visited();
        assert!(now > last);
        last = now;
    }
    k2.reset_visits();
    assert_eq!(k2.node_count_visited(), 0);
}
