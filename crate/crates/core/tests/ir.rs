mod common;

use std::collections::BTreeSet;

use optlab::ir::{clone_tree, derive_cecs, dump_tree, BinaryOp, ColumnRef, Predicate, RelSet, ScalarExpr};
use optlab::ir::cec::cecs_from_predicates;
use optlab::qrw::merge::subquery_merge;
use proptest::prelude::*;

fn eq(a: ColumnRef, b: ColumnRef) -> Predicate {
    Predicate::new(ScalarExpr::binary(BinaryOp::Eq, ScalarExpr::Column(a), ScalarExpr::Column(b)))
}

fn members(preds: &[Predicate]) -> BTreeSet<BTreeSet<ColumnRef>> {
    cecs_from_predicates(preds).into_iter().map(|c| c.members).collect()
}

fn c(rti: usize, col: usize) -> ColumnRef {
    ColumnRef::new(rti, col)
}

#[test]
fn single_equality_one_class() {
    let got = members(&[eq(c(1, 1), c(2, 1))]);
    assert_eq!(got, BTreeSet::from([BTreeSet::from([c(1, 1), c(2, 1)])]));
}

#[test]
fn transitive_and_separate_classes() {
    let got = members(&[eq(c(1, 1), c(2, 1)), eq(c(2, 1), c(3, 1)), eq(c(4, 2), c(5, 2))]);
    assert_eq!(
        got,
        BTreeSet::from([BTreeSet::from([c(1, 1), c(2, 1), c(3, 1)]), BTreeSet::from([c(4, 2), c(5, 2)])])
    );
}

#[test]
fn spanning_predicates_only() {
    // A cycle over three columns needs only two edges to connect them.
    let classes = cecs_from_predicates(&[eq(c(1, 1), c(2, 1)), eq(c(2, 1), c(3, 1)), eq(c(3, 1), c(1, 1))]);
    assert_eq!(classes.len(), 1);
    assert_eq!(classes[0].source_predicates.len(), 2);
}

#[test]
fn corpus_cecs_come_from_block_quals() {
    let cat = common::catalog();
    let tree = common::resolve(&cat, common::EAGER_ORIGINAL);
    let classes = derive_cecs(&tree.root);
    assert_eq!(classes.len(), 3);
    assert!(classes.iter().all(|k| k.members.len() >= 2));
}

#[test]
fn clone_is_deep() {
    let cat = common::pair_catalog(100.0, 100.0);
    let tree = common::resolve(&cat, common::MERGE_ORIGINAL);
    let mut copy = clone_tree(&tree);
    assert_eq!(copy, tree);
    copy.root.quals.clear();
    assert_ne!(copy, tree);
    assert_eq!(tree.root.sublinks().len(), 1);
}

#[test]
fn merge_in_copy_leaves_original() {
    let cat = common::pair_catalog(100.0, 100.0);
    let tree = common::resolve(&cat, common::MERGE_ORIGINAL);
    let before = dump_tree(&tree);
    let merged = subquery_merge(&clone_tree(&tree), &cat).expect("merge applies");
    assert_eq!(merged.root.sublinks().len(), 0);
    assert!(merged.root.distinct);
    assert_eq!(tree.root.sublinks().len(), 1);
    assert_eq!(dump_tree(&tree), before);
}

#[test]
fn predicates_consistent_across_corpus() {
    let cat = common::catalog();
    for q in common::corpus() {
        let tree = common::resolve(&cat, &q.sql);
        common::walk_blocks(&tree.root, None, &mut |b, _| {
            for p in &b.quals {
                assert!(p.is_consistent(), "{}: {p}", q.id);
            }
            for sj in b.special_joins() {
                assert!(!sj.min_left.is_empty() && !sj.min_right.is_empty());
                assert!(!sj.min_left.overlaps(sj.min_right), "{}", q.id);
            }
        });
    }
}

#[test]
fn dump_is_stable() {
    let cat = common::catalog();
    let a = dump_tree(&common::resolve(&cat, common::EAGER_ORIGINAL));
    let b = dump_tree(&common::resolve(&cat, common::EAGER_ORIGINAL));
    assert_eq!(a, b);
    assert!(a.contains("lineitem"));
}

fn edge_lists() -> impl Strategy<Value = (Vec<Predicate>, Vec<Predicate>)> {
    let col = (1usize..5, 1usize..3).prop_map(|(r, k)| c(r, k));
    prop::collection::vec((col.clone(), col), 1..10)
        .prop_map(|edges| edges.into_iter().filter(|(a, b)| a != b).map(|(a, b)| eq(a, b)).collect::<Vec<_>>())
        .prop_flat_map(|preds| (Just(preds.clone()), Just(preds).prop_shuffle()))
}

proptest! {
    #[test]
    fn cecs_ignore_edge_order((preds, shuffled) in edge_lists()) {
        let flipped: Vec<Predicate> = shuffled
            .iter()
            .map(|p| {
                let (a, b) = p.as_column_equality().unwrap();
                eq(b, a)
            })
            .collect();
        prop_assert_eq!(members(&preds), members(&shuffled));
        prop_assert_eq!(members(&preds), members(&flipped));
    }

    #[test]
    fn relset_algebra(a in any::<u64>(), b in any::<u64>()) {
        let (x, y) = (RelSet::from_bits(a), RelSet::from_bits(b));
        prop_assert_eq!(x.union(y).len(), x.len() + y.len() - x.intersect(y).len());
        prop_assert!(x.minus(y).is_subset(x));
        prop_assert_eq!(x.overlaps(y), !x.intersect(y).is_empty());
        prop_assert_eq!(x.iter().collect::<RelSet>(), x);
    }
}
