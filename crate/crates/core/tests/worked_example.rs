mod common;

use common::*;
use k2join::join::{check_quadrant_j, join_traced};
use k2join::rtree::NodeId;
use k2join::topk::{top_k_traced, TopKEntry, Vect};
use k2join::{Direction, NodeCursor, QuadOverlap};

/// `(level, index)` of a quadrant: root is (0, 0), q1..q4 are (1, 0..4).
/// Level 2 only holds children of the non-uniform q2, q3, q4, so q3x sits
/// at 4 + x - 1 and q4x at 8 + x - 1.
type Quad = (usize, usize);

const QROOT: Quad = (0, 0);
const Q2: Quad = (1, 1);
const Q3: Quad = (1, 2);
const Q4: Quad = (1, 3);
const Q32: Quad = (2, 5);
const Q44: Quad = (2, 11);

fn quad(c: &NodeCursor) -> Quad {
    (c.level(), c.index())
}

fn is_subsequence<T: PartialEq>(needle: &[T], hay: &[T]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

#[test]
fn fixture_constraints() {
    let ex = worked_example();
    let root = ex.k2.root();
    assert_eq!((root.min(), root.max()), (1, 5));
    let kids = ex.k2.child_cursors(&root).unwrap();
    assert_eq!((kids[1].min(), kids[1].max()), (1, 3));
    let q4_kids = ex.k2.child_cursors(&kids[3]).unwrap();
    assert!(q4_kids[3].is_uniform() && q4_kids[3].max() == 5);
}

#[test]
fn join_decisions() {
    let ex = worked_example();
    let root = ex.k2.root();
    let m1 = ex.tree.node(BIG_M1).mbr;
    let (kind, q) = check_quadrant_j(&ex.k2, &m1, root, 4, 5);
    assert_eq!((kind, quad(&q)), (QuadOverlap::NoOverlap, Q2));
    let (kind, q) = check_quadrant_j(
        &ex.k2,
        &ex.tree.node(M21).mbr,
        ex.k2.child(&root, 2).unwrap(),
        4,
        5,
    );
    assert_eq!((kind, quad(&q)), (QuadOverlap::NoOverlap, Q32));
    let (kind, q) = check_quadrant_j(
        &ex.k2,
        &ex.tree.node(M32).mbr,
        ex.k2.child(&root, 3).unwrap(),
        4,
        5,
    );
    assert_eq!((kind, quad(&q)), (QuadOverlap::TotalOverlap, Q44));

    let (res, stats, _) = join_traced(&ex.k2, &ex.tree, 4, 5).unwrap();
    let ids = |l: &Vec<(u64, Vec<(usize, usize)>)>| l.iter().map(|e| e.0).collect::<Vec<_>>();
    assert_eq!(ids(&res.definitive), vec![OBJ_D, OBJ_F]);
    assert_eq!(ids(&res.probable), vec![OBJ_E]);
    assert_eq!(res.probable[0].1, vec![(4, 5)]);
    assert_eq!(res.definitive[0].1, vec![(6, 1), (6, 2), (7, 1), (7, 2)]);
    assert_eq!(stats.pruned_at_quadrant, 2);
}

#[test]
fn join_stack_sequence() {
    let ex = worked_example();
    let (_, _, trace) = join_traced(&ex.k2, &ex.tree, 4, 5).unwrap();
    let steps: Vec<Vec<(NodeId, Quad)>> = trace
        .steps
        .iter()
        .map(|s| s.iter().map(|(n, c)| (*n, quad(c))).collect())
        .collect();
    let expected: Vec<Vec<(NodeId, Quad)>> = vec![
        vec![(BIG_M1, QROOT), (BIG_M2, QROOT), (BIG_M3, QROOT)],
        vec![(BIG_M2, QROOT), (BIG_M3, QROOT)],
        vec![(M21, Q3), (M22, Q3), (BIG_M3, QROOT)],
        vec![(BIG_M3, QROOT)],
        vec![(M31, Q4), (M32, Q4)],
    ];
    assert!(is_subsequence(&expected, &steps), "{steps:?}");
    assert_eq!(steps.last().unwrap(), &Vec::new());
}

fn describe(e: &TopKEntry) -> (Vect, Option<Quad>, i64, bool) {
    (e.vect, e.pk.as_ref().map(quad), e.max, e.tent)
}

#[test]
fn top1_queue_sequence() {
    let ex = worked_example();
    let (res, _, trace) = top_k_traced(&ex.k2, &ex.tree, 1, Direction::Highest).unwrap();
    assert_eq!(res.entries, vec![(OBJ_F, 5)]);
    let steps: Vec<Vec<_>> = trace
        .steps
        .iter()
        .map(|s| s.iter().map(describe).collect())
        .collect();
    let n = |id| Vect::Node(id);
    let o = |id| Vect::Object(id);
    // Object e is confirmed at 4: its MBR covers a 4 that its exact
    // geometry would not.
    let expected = vec![
        vec![
            (n(BIG_M2), Some(Q3), 5, true),
            (n(BIG_M3), Some(Q4), 5, true),
            (n(BIG_M1), Some(Q2), 3, true),
        ],
        vec![
            (n(M22), Some(Q3), 5, true),
            (n(BIG_M3), Some(Q4), 5, true),
            (n(M21), Some(Q32), 3, true),
            (n(BIG_M1), Some(Q2), 3, true),
        ],
        vec![
            (n(BIG_M3), Some(Q4), 5, true),
            (o(OBJ_D), None, 4, false),
            (n(M21), Some(Q32), 3, true),
            (n(BIG_M1), Some(Q2), 3, true),
        ],
        vec![
            (n(M31), Some(Q4), 5, true),
            (n(M32), Some(Q44), 5, true),
            (o(OBJ_D), None, 4, false),
            (n(M21), Some(Q32), 3, true),
            (n(BIG_M1), Some(Q2), 3, true),
        ],
        vec![
            (n(M32), Some(Q44), 5, true),
            (o(OBJ_D), None, 4, false),
            (o(OBJ_E), None, 4, false),
            (n(M21), Some(Q32), 3, true),
            (n(BIG_M1), Some(Q2), 3, true),
        ],
    ];
    assert!(is_subsequence(&expected, &steps), "{steps:#?}");
}

#[test]
fn top_k_beyond_one_follows_oracle() {
    let ex = worked_example();
    for k in 1..=6 {
        for dir in [Direction::Highest, Direction::Lowest] {
            let got = k2join::top_k(&ex.k2, &ex.tree, k, dir).unwrap();
            assert_eq!(check_topk(&ex.matrix, &ex.tree, k, dir, &got), Ok(()));
        }
    }
}
