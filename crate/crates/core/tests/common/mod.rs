#![allow(dead_code)]

pub mod eval;
pub mod exec;
pub mod oracle;

use std::sync::Arc;

use optlab::bench::corpus::{generate_corpus, CorpusQuery, DEFAULT_SEED, DEFAULT_SIZE};
use optlab::bench::fixture::tpch_catalog;
use optlab::catalog::Catalog;
use optlab::frontend::parse_and_resolve;
use optlab::ir::{QueryBlock, QueryTree, RteKind};
use optlab::qrw::optimize;
use optlab::session::{Mode, OptimizerSession, SessionConfig};

pub fn catalog() -> Arc<Catalog> {
    Arc::new(tpch_catalog())
}

pub fn corpus() -> Vec<CorpusQuery> {
    generate_corpus(DEFAULT_SEED, DEFAULT_SIZE)
}

pub fn resolve(cat: &Catalog, sql: &str) -> QueryTree {
    parse_and_resolve(sql, cat).unwrap_or_else(|e| panic!("{sql}: {e}"))
}

pub fn session(cat: &Arc<Catalog>, mode: Mode) -> OptimizerSession {
    OptimizerSession::new(cat.clone(), SessionConfig::new(mode))
}

/// Final (digest, cost bits) of `sql` under `mode`.
pub fn final_plan(cat: &Arc<Catalog>, sql: &str, mode: Mode) -> (u64, u64) {
    let tree = resolve(cat, sql);
    let mut s = session(cat, mode);
    let out = optimize(&tree, &mut s).unwrap_or_else(|e| panic!("{sql}: {e}"));
    (out.plan.digest(), out.plan.total_cost().to_bits())
}

/// Visits `block` and every block nested in it, with the labels of the
/// enclosing block for correlated sub-links.
pub fn walk_blocks<'a>(block: &'a QueryBlock, outer: Option<Vec<String>>, f: &mut dyn FnMut(&'a QueryBlock, Option<&[String]>)) {
    f(block, outer.as_deref());
    for rte in &block.range_table {
        if let RteKind::Subquery { block: child, .. } = &rte.kind {
            walk_blocks(child, None, f);
        }
    }
    let labels = optlab::cbo::context::rel_labels(block);
    for s in block.sublinks() {
        walk_blocks(&s.block, Some(labels.clone()), f);
    }
}

/// Two-table catalog shaped like the subquery-merge example: t1(pk, c1, c2)
/// with 1000 rows and t2(c1, c2, c3) with `t2_rows` rows.
pub fn pair_catalog(t2_rows: f64, t2_c1_ndv: f64) -> Arc<Catalog> {
    let t2_pages = (t2_rows * 12.0 / 8192.0).ceil().max(1.0);
    let doc = serde_json::json!({"tables": [
        {"oid": 1001, "name": "t1", "row_count": 1000, "page_count": 100,
         "columns": [
            {"name": "pk", "type": "int", "ndv": 1000, "null_frac": 0, "min": 1, "max": 1000},
            {"name": "c1", "type": "int", "ndv": 100, "null_frac": 0, "min": 1, "max": 100},
            {"name": "c2", "type": "int", "ndv": 50, "null_frac": 0, "min": 1, "max": 50}],
         "indexes": [{"name": "t1_pk", "columns": ["pk"], "unique": true},
                     {"name": "t1_c1", "columns": ["c1"], "unique": false}],
         "primary_key": ["pk"]},
        {"oid": 1007, "name": "t2", "row_count": t2_rows, "page_count": t2_pages,
         "columns": [
            {"name": "c1", "type": "int", "ndv": t2_c1_ndv, "null_frac": 0, "min": 1, "max": 100},
            {"name": "c2", "type": "int", "ndv": 50, "null_frac": 0, "min": 1, "max": 50},
            {"name": "c3", "type": "int", "ndv": 20, "null_frac": 0, "min": 1, "max": 20}],
         "indexes": []}
    ]});
    Arc::new(optlab::catalog::load_catalog_str(&doc.to_string()).unwrap())
}

pub const MERGE_ORIGINAL: &str =
    "SELECT t1.pk, t1.c1, t1.c2 FROM t1 WHERE t1.c1 IN (SELECT c1 FROM t2 WHERE t2.c2 <= t1.c2 AND t2.c3 = 10)";

pub const EAGER_ORIGINAL: &str = "SELECT c_custkey, c_name, sum(l_extendedprice * (1 - l_discount)) AS revenue, \
    c_acctbal, n_name, c_address, c_phone, c_comment FROM customer, orders, lineitem, nation \
    WHERE c_custkey = o_custkey AND l_orderkey = o_orderkey AND o_orderdate >= date '1993-10-01' \
    AND o_orderdate < date '1993-10-01' + interval '3' month AND l_returnflag = 'R' AND c_nationkey = n_nationkey \
    GROUP BY c_custkey, c_name, c_acctbal, c_phone, n_name, c_address, c_comment ORDER BY revenue DESC LIMIT 20";
