mod common;

use std::sync::Arc;

use optlab::catalog::Catalog;
use optlab::cbo::{prepare_block, BlockCtx, Level};
use optlab::ir::{BinaryOp, ColumnRef, Literal, QueryTree, RelSet, ScalarExpr};
use optlab::plancache::{BlockDescriptor, IdMapping, RelDescriptor};
use optlab::qrw::merge::subquery_merge;
use optlab::qrw::optimize;
use optlab::session::Mode;
use optlab::Error;
use proptest::prelude::*;

fn small() -> Arc<Catalog> {
    common::pair_catalog(100.0, 100.0)
}

/// Descriptor of `rels` (None for all) in the root block of `sql`.
fn describe(cat: &Arc<Catalog>, sql: &str, rels: Option<RelSet>) -> RelDescriptor {
    let tree = common::resolve(cat, sql);
    with_ctx(cat, &tree, |ctx| {
        let s = rels.unwrap_or(ctx.all_relids());
        RelDescriptor::new(ctx, s, if s.len() == 1 { Level::Base } else { Level::Join })
    })
}

fn with_ctx<T>(cat: &Arc<Catalog>, tree: &QueryTree, f: impl FnOnce(&BlockCtx) -> T) -> T {
    let mut s = common::session(cat, Mode::Naive);
    let ctx = prepare_block(&mut s, cat, &tree.root, None).unwrap();
    f(&ctx)
}

fn col_gt(rti: usize, col: usize, v: i64) -> ScalarExpr {
    ScalarExpr::binary(BinaryOp::Gt, ScalarExpr::Column(ColumnRef::new(rti, col)), ScalarExpr::Literal(Literal::Int(v)))
}

#[test]
fn single_rel_maps_across_positions() {
    let cat = small();
    let cached = describe(&cat, "SELECT t1.pk FROM t1, t2 WHERE t1.c1 = t2.c1 AND t2.c3 = 4", Some(RelSet::single(2)));
    let probe = describe(&cat, "SELECT c2 FROM t2 WHERE c3 = 4", None);
    let m = IdMapping::between(&cached, &probe).expect("same table");
    assert_eq!(m.rel_map.into_iter().collect::<Vec<_>>(), [(2, 1)]);
}

#[test]
fn differing_oids_decline() {
    let cat = small();
    let a = describe(&cat, "SELECT c2 FROM t1 WHERE c2 = 4", None);
    let b = describe(&cat, "SELECT c2 FROM t2 WHERE c2 = 4", None);
    assert!(IdMapping::between(&a, &b).is_none());
    assert_ne!(a.signature, b.signature);
}

#[test]
fn self_join_declines() {
    let cat = small();
    let d = describe(&cat, "SELECT a.pk FROM t1 a, t1 b WHERE a.c1 = b.c2", None);
    assert!(IdMapping::between(&d, &d).is_none());
}

#[test]
fn translate_expr_renumbers() {
    let m = IdMapping { rel_map: [(2, 1)].into(), ..Default::default() };
    assert_eq!(m.translate_expr(&col_gt(2, 1, 1)).unwrap(), col_gt(1, 1, 1));
    assert!(matches!(m.translate_expr(&col_gt(3, 1, 1)), Err(Error::UnmappedRti(3))));
    let swap = IdMapping { rel_map: [(1, 3), (2, 1), (3, 2)].into(), ..Default::default() };
    assert_eq!(swap.translate_relset(RelSet::single(1).union(RelSet::single(2))).unwrap(), RelSet::single(1).union(RelSet::single(3)));
    assert!(m.translate_relset(RelSet::single(4)).is_err());
}

#[test]
fn block_signature_changes_with_merge() {
    let cat = small();
    let tree = common::resolve(&cat, common::MERGE_ORIGINAL);
    let merged = subquery_merge(&tree, &cat).unwrap();
    let (a, b) = (BlockDescriptor::new(&tree.root, None, false), BlockDescriptor::new(&merged.root, None, false));
    assert_ne!(a.signature, b.signature);
    assert_ne!(a.key, b.key);
    assert_ne!(a.key, BlockDescriptor::new(&tree.root, None, true).key);
}

#[test]
fn repeated_sub_block_hits_at_block_level() {
    let cat = small();
    let tree = common::resolve(&cat, "SELECT pk FROM t1 WHERE c1 > (SELECT c2 FROM t2 WHERE c3 = 1) \
        AND c2 > (SELECT c2 FROM t2 WHERE c3 = 1)");
    let mut s = common::session(&cat, Mode::Cache);
    optimize(&tree, &mut s).unwrap();
    let block = s.cache.stats.levels[&Level::Block];
    assert!(block.full_matches >= 1, "{block:?}");
}

#[test]
fn stats_are_consistent_over_corpus() {
    let cat = common::catalog();
    for mode in [Mode::Cache, Mode::CacheGuess] {
        let mut hits = 0;
        for q in common::corpus() {
            let mut s = common::session(&cat, mode);
            optimize(&common::resolve(&cat, &q.sql), &mut s).unwrap();
            let stats = &s.cache.stats;
            for (level, l) in &stats.levels {
                assert!(l.full_matches <= l.signature_hits && l.signature_hits <= l.probes, "{} {level:?}", q.id);
                let visits: u64 = stats.visits.get(level).map(|h| h.values().sum()).unwrap_or(0);
                assert!(l.signature_hits <= visits && visits <= l.probes, "{} {level:?}", q.id);
            }
            hits += stats.total().full_matches;
        }
        assert!(hits > 0);
    }
}

const TABLES: [&str; 4] = ["customer", "supplier", "nation", "region"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn signature_ignores_from_order(order in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
        let cat = common::catalog();
        let sql = |idx: &[usize]| {
            let from: Vec<&str> = idx.iter().map(|&i| TABLES[i]).collect();
            format!(
                "SELECT n_name FROM {} WHERE c_nationkey = n_nationkey AND s_nationkey = n_nationkey \
                 AND n_regionkey = r_regionkey AND r_name = 'ASIA'",
                from.join(", ")
            )
        };
        let base = describe(&cat, &sql(&[0, 1, 2, 3]), None);
        let shuffled = describe(&cat, &sql(&order), None);
        prop_assert_eq!(&base.signature, &shuffled.signature);
        let m = IdMapping::between(&base, &shuffled).expect("one table each");
        for (from, to) in &m.rel_map {
            prop_assert_eq!(order[to - 1], from - 1);
        }
    }
}
