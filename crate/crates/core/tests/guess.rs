mod common;

use std::sync::Arc;

use optlab::catalog::hll::intersection_estimate;
use optlab::catalog::{load_catalog_str, Catalog, Datum, HllSketch};
use optlab::cbo::CostParams;
use optlab::guess::{guess_eager_agg, guess_subquery_merge, preserved_fraction, GuessContext, Prediction, Rationale};
use optlab::ir::ColumnRef;
use optlab::qrw::merge::subquery_merge;
use optlab::qrw::run_rewrite_phase;
use optlab::session::{Mode, OptimizerSession, SessionConfig};
use proptest::prelude::*;

const GROUPED: &str = "SELECT a.k, SUM(a.v) AS s FROM a, b WHERE a.k = b.k GROUP BY a.k";

/// a(k, v) and b(k) whose join-key sketches hold the given values.
fn keyed_catalog(a_keys: std::ops::Range<i64>, b_keys: std::ops::Range<i64>) -> Arc<Catalog> {
    let col = |name: &str, keys: &std::ops::Range<i64>| {
        serde_json::json!({"name": name, "type": "int", "ndv": keys.end - keys.start, "null_frac": 0,
                           "min": keys.start, "max": keys.end - 1, "hll_values": keys.clone().collect::<Vec<_>>()})
    };
    let doc = serde_json::json!({"tables": [
        {"oid": 2001, "name": "a", "row_count": 50000, "page_count": 200,
         "columns": [col("k", &a_keys), {"name": "v", "type": "int", "ndv": 100, "null_frac": 0, "min": 1, "max": 100}]},
        {"oid": 2002, "name": "b", "row_count": 2000, "page_count": 10, "columns": [col("k", &b_keys)]}
    ]});
    Arc::new(load_catalog_str(&doc.to_string()).unwrap())
}

fn ctx(cat: &Catalog) -> GuessContext<'_> {
    GuessContext { catalog: cat, params: CostParams::default(), tau: 0.9, time_critical: false }
}

fn eager_guess(cat: &Arc<Catalog>) -> (Prediction, Rationale, f64) {
    let tree = common::resolve(cat, GROUPED);
    let (agg, other) = (ColumnRef::new(1, 1), ColumnRef::new(2, 1));
    let g = guess_eager_agg(&tree.root, agg, other, &ctx(cat));
    let f = preserved_fraction(cat, &tree.root, agg, other).unwrap().0;
    (g.prediction, g.rationale, f)
}

#[test]
fn identical_domains_prefer_rewrite() {
    let (p, r, f) = eager_guess(&keyed_catalog(0..2000, 0..2000));
    assert_eq!((p, r), (Prediction::PreferRewritten, Rationale::NearLossless));
    assert!(f > 0.95, "{f}");
}

#[test]
fn disjoint_domains_prefer_original() {
    let (p, r, f) = eager_guess(&keyed_catalog(0..2000, 10_000..12_000));
    assert_eq!((p, r), (Prediction::PreferOriginal, Rationale::LossyJoin));
    assert!(f < 0.1, "{f}");
}

#[test]
fn missing_sketch_prefers_original() {
    let cat = common::pair_catalog(100.0, 100.0);
    let tree = common::resolve(&cat, "SELECT t1.c1, SUM(t1.c2) AS s FROM t1, t2 WHERE t1.c1 = t2.c1 GROUP BY t1.c1");
    let g = guess_eager_agg(&tree.root, ColumnRef::new(1, 2), ColumnRef::new(2, 1), &ctx(&cat));
    assert_eq!((g.prediction, g.rationale), (Prediction::PreferOriginal, Rationale::LossyJoin));
}

#[test]
fn wide_distinct_risks_spill() {
    let heavy = common::pair_catalog(1.0e6, 10.0);
    let sql = "SELECT t1.pk, t1.c1, t1.c2 FROM t1 WHERE t1.c1 IN (SELECT c1 FROM t2 WHERE t2.c3 = 10)";
    let merged = subquery_merge(&common::resolve(&heavy, sql), &heavy).unwrap();
    let g = guess_subquery_merge(&merged.root, &ctx(&heavy));
    assert_eq!((g.prediction, g.rationale), (Prediction::PreferOriginal, Rationale::SpillRisk), "{:?}", g.estimates);
    assert!(g.estimates.iter().any(|(n, v)| *n == "hash_bytes" && *v > CostParams::default().work_mem));

    let small = common::pair_catalog(100.0, 100.0);
    let merged = subquery_merge(&common::resolve(&small, common::MERGE_ORIGINAL), &small).unwrap();
    let g = guess_subquery_merge(&merged.root, &ctx(&small));
    assert_eq!((g.prediction, g.rationale), (Prediction::PreferRewritten, Rationale::Default));
}

/// With time-critical set, each matched rule plans only the alternative
/// the guess picked, so the guess itself costs no optimizer call.
#[test]
fn guesses_never_plan() {
    let cat = common::catalog();
    let mut matched = 0;
    for q in common::corpus() {
        let tree = common::resolve(&cat, &q.sql);
        let mut cfg = SessionConfig::new(Mode::GuessOnly);
        cfg.time_critical = true;
        let mut s = OptimizerSession::new(cat.clone(), cfg);
        let (_, decisions) = run_rewrite_phase(&tree, &mut s).unwrap();
        let hits = decisions.iter().filter(|d| d.matched).count() as u64;
        assert!(decisions.iter().all(|d| d.matched == d.guess.is_some()), "{}", q.id);
        assert_eq!(s.counters.qrw_cbo_invocations, hits, "{}", q.id);
        matched += hits;
    }
    assert!(matched > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn intersection_is_symmetric(a in 0i64..3000, len_a in 1i64..3000, b in 0i64..3000, len_b in 1i64..3000) {
        let build = |lo: i64, len: i64| {
            let mut s = HllSketch::new(10).unwrap();
            for v in lo..lo + len {
                s.add(&Datum::Int(v));
            }
            s
        };
        let (x, y) = (build(a, len_a), build(b, len_b));
        prop_assert_eq!(intersection_estimate(&x, &y).unwrap(), intersection_estimate(&y, &x).unwrap());
    }
}
