//! Seeded query corpus over the TPC-H fixture.
//!
//! A few handcrafted shapes come first, followed by generated queries drawn
//! from parameterized families. Most families match one of the cost-based
//! rewrite rules; the rest are plain join blocks of two to six relations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SIZE: usize = 52;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusQuery {
    pub id: String,
    pub sql: String,
}

/// Seed from `OPTLAB_SEED`, falling back to the default.
pub fn seed_from_env() -> u64 {
    std::env::var("OPTLAB_SEED")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

fn handcrafted() -> Vec<String> {
    vec![
        // Subquery merge over supplier and partsupp.
        "SELECT s_suppkey, s_name, s_acctbal FROM supplier \
         WHERE s_suppkey IN (SELECT ps_suppkey FROM partsupp WHERE ps_supplycost <= s_acctbal AND ps_partkey = 10)"
            .into(),
        // Eager aggregation, TPC-H Q10.
        "SELECT c_custkey, c_name, sum(l_extendedprice * (1 - l_discount)) AS revenue, c_acctbal, n_name, \
         c_address, c_phone, c_comment FROM customer, orders, lineitem, nation \
         WHERE c_custkey = o_custkey AND l_orderkey = o_orderkey AND o_orderdate >= date '1993-10-01' \
         AND o_orderdate < date '1993-10-01' + interval '3' month AND l_returnflag = 'R' \
         AND c_nationkey = n_nationkey \
         GROUP BY c_custkey, c_name, c_acctbal, c_phone, n_name, c_address, c_comment \
         ORDER BY revenue DESC LIMIT 20"
            .into(),
        // Lineitem filtered through two small dimension joins.
        "SELECT l_orderkey, l_linenumber, p_partkey, s_suppkey FROM lineitem, part, supplier \
         WHERE l_partkey = p_partkey AND l_suppkey = s_suppkey AND p_size < 5 AND s_acctbal > 8000.0 \
         AND l_orderkey IN (SELECT o_orderkey FROM orders WHERE o_orderpriority = '1-URGENT')"
            .into(),
        // Long IN list on a table that also feeds a merged subquery.
        "SELECT c_custkey, c_name FROM customer WHERE c_nationkey IN (1, 3, 5, 7, 9) \
         AND c_custkey IN (SELECT o_custkey FROM orders WHERE o_totalprice > c_acctbal)"
            .into(),
    ]
}

fn date(rng: &mut ChaCha8Rng) -> String {
    let year = rng.gen_range(1992..=1997);
    let month = rng.gen_range(1..=12);
    format!("date '{year}-{month:02}-01'")
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).copied().expect("non-empty choice list")
}

fn in_list(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> String {
    let n = rng.gen_range(4..=6);
    let mut vals: Vec<i64> = (lo..=hi).collect::<Vec<_>>().choose_multiple(rng, n).copied().collect();
    vals.sort_unstable();
    vals.iter().map(i64::to_string).collect::<Vec<_>>().join(", ")
}

/// IN-subquery with a correlated inner filter.
fn merge_query(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..6) {
        0 => format!(
            "SELECT s_suppkey, s_name, s_acctbal FROM supplier WHERE s_suppkey IN \
             (SELECT ps_suppkey FROM partsupp WHERE ps_supplycost <= s_acctbal AND ps_partkey = {})",
            rng.gen_range(1..=2000)
        ),
        1 => format!(
            "SELECT c_custkey, c_name, n_nationkey, n_name FROM customer, nation \
             WHERE c_nationkey = n_nationkey AND n_regionkey = {} AND c_custkey IN \
             (SELECT o_custkey FROM orders WHERE o_totalprice > c_acctbal AND o_orderdate >= {})",
            rng.gen_range(0..=4),
            date(rng)
        ),
        2 => format!(
            "SELECT p_partkey, p_name, p_size FROM part WHERE p_brand = 'Brand#{}{}' AND p_partkey IN \
             (SELECT l_partkey FROM lineitem WHERE l_quantity > p_size AND l_shipmode = '{}')",
            rng.gen_range(1..=5),
            rng.gen_range(1..=5),
            pick(rng, &["AIR", "MAIL", "SHIP", "TRUCK", "RAIL"])
        ),
        3 => format!(
            "SELECT o_orderkey, o_orderdate, o_comment, o_clerk FROM orders WHERE o_orderkey IN \
             (SELECT l_orderkey FROM lineitem WHERE l_quantity > {})",
            rng.gen_range(1..=20)
        ),
        4 => format!(
            "SELECT c_custkey, c_name, c_address, c_comment, c_phone FROM customer WHERE c_custkey IN \
             (SELECT o_custkey FROM orders, lineitem WHERE o_orderkey = l_orderkey AND l_discount > {:.2})",
            rng.gen_range(0..=5) as f64 / 100.0
        ),
        _ => format!(
            "SELECT s_suppkey, s_name, n_nationkey, n_name FROM supplier, nation \
             WHERE s_nationkey = n_nationkey AND n_nationkey IN ({}) AND s_suppkey IN \
             (SELECT ps_suppkey FROM partsupp WHERE ps_availqty > {})",
            in_list(rng, 0, 24),
            rng.gen_range(100..=9000)
        ),
    }
}

/// Aggregate over a join whose grouping side is keyed.
fn eager_query(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..6) {
        0 => {
            let d = date(rng);
            format!(
                "SELECT c_custkey, c_name, sum(l_extendedprice * (1 - l_discount)) AS revenue, c_acctbal, n_name \
                 FROM customer, orders, lineitem, nation \
                 WHERE c_custkey = o_custkey AND l_orderkey = o_orderkey AND o_orderdate >= {d} \
                 AND o_orderdate < {d} + interval '{}' month AND l_returnflag = '{}' AND c_nationkey = n_nationkey \
                 GROUP BY c_custkey, c_name, c_acctbal, n_name ORDER BY revenue DESC LIMIT {}",
                rng.gen_range(1..=6),
                pick(rng, &["R", "A", "N"]),
                rng.gen_range(10..=50)
            )
        }
        1 => format!(
            "SELECT s_suppkey, s_name, sum(ps_supplycost * ps_availqty) AS value FROM supplier, partsupp \
             WHERE s_suppkey = ps_suppkey AND ps_availqty > {} GROUP BY s_suppkey, s_name",
            rng.gen_range(100..=9000)
        ),
        2 => format!(
            "SELECT c_custkey, c_name, sum(o_totalprice) AS spent, count(*) AS n FROM customer, orders \
             WHERE c_custkey = o_custkey AND o_orderdate >= {} AND c_mktsegment = '{}' GROUP BY c_custkey, c_name",
            date(rng),
            pick(rng, &["BUILDING", "AUTOMOBILE", "MACHINERY", "HOUSEHOLD", "FURNITURE"])
        ),
        3 => format!(
            "SELECT p_partkey, p_name, sum(l_quantity) AS qty FROM part, lineitem \
             WHERE p_partkey = l_partkey AND p_size = {} AND l_shipdate >= {} GROUP BY p_partkey, p_name",
            rng.gen_range(1..=50),
            date(rng)
        ),
        // Key domains that barely overlap.
        4 => format!(
            "SELECT s_suppkey, s_name, sum(l_extendedprice) AS total FROM supplier, lineitem \
             WHERE s_suppkey = l_partkey AND l_discount < {:.2} GROUP BY s_suppkey, s_name",
            rng.gen_range(1..=10) as f64 / 100.0
        ),
        _ => format!(
            "SELECT n_nationkey, n_name, sum(o_totalprice) AS total FROM nation, orders \
             WHERE n_nationkey = o_custkey AND o_orderstatus = '{}' GROUP BY n_nationkey, n_name",
            pick(rng, &["F", "O", "P"])
        ),
    }
}

const CHAIN: &[(&str, &str)] = &[
    ("region", ""),
    ("nation", "n_regionkey = r_regionkey"),
    ("customer", "c_nationkey = n_nationkey"),
    ("orders", "o_custkey = c_custkey"),
    ("lineitem", "l_orderkey = o_orderkey"),
    ("part", "p_partkey = l_partkey"),
];

const FILTERS: &[&str] = &[
    "r_name = 'ASIA'",
    "n_name = 'FRANCE'",
    "c_mktsegment = 'BUILDING'",
    "o_orderstatus = 'F'",
    "l_returnflag = 'R'",
    "p_size < 10",
];

/// Plain inner-join chain of two to six relations.
fn join_query(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(2..=6);
    let start = rng.gen_range(0..=CHAIN.len() - len);
    let span = &CHAIN[start..start + len];
    let mut tables: Vec<&str> = span.iter().map(|(t, _)| *t).collect();
    tables.shuffle(rng);
    let mut quals: Vec<String> = span[1..].iter().map(|(_, q)| q.to_string()).collect();
    for f in &FILTERS[start..start + len] {
        if rng.gen_bool(0.4) {
            quals.push(f.to_string());
        }
    }
    if span.iter().any(|(t, _)| *t == "orders") && rng.gen_bool(0.5) {
        quals.push(format!("o_orderdate >= {}", date(rng)));
    }
    format!("SELECT count(*) AS n FROM {} WHERE {}", tables.join(", "), quals.join(" AND "))
}

/// Semi, anti and outer joins plus hinted blocks.
fn special_query(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..4) {
        0 => format!(
            "SELECT c_name FROM customer c WHERE EXISTS \
             (SELECT 1 FROM orders o WHERE o.o_custkey = c.c_custkey AND o.o_totalprice > {})",
            rng.gen_range(1000..=400000)
        ),
        1 => format!(
            "SELECT p_name FROM part p WHERE p_size = {} AND NOT EXISTS \
             (SELECT 1 FROM partsupp ps WHERE ps.ps_partkey = p.p_partkey AND ps.ps_availqty < {})",
            rng.gen_range(1..=50),
            rng.gen_range(10..=500)
        ),
        2 => format!(
            "SELECT c_custkey, o_orderkey FROM customer LEFT JOIN orders ON c_custkey = o_custkey \
             WHERE c_nationkey = {}",
            rng.gen_range(0..=24)
        ),
        _ => format!(
            "SELECT /*+ NESTLOOP(supplier nation) */ s_name, n_name FROM supplier, nation, region \
             WHERE s_nationkey = n_nationkey AND n_regionkey = r_regionkey AND r_regionkey = {}",
            rng.gen_range(0..=4)
        ),
    }
}

/// Builds `size` queries: the handcrafted shapes, then seeded families.
pub fn generate_corpus(seed: u64, size: usize) -> Vec<CorpusQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sqls = handcrafted();
    sqls.truncate(size);
    while sqls.len() < size {
        let sql = match sqls.len() % 8 {
            0..=2 => merge_query(&mut rng),
            3..=5 => eager_query(&mut rng),
            6 => join_query(&mut rng),
            _ => special_query(&mut rng),
        };
        sqls.push(sql);
    }
    sqls.into_iter()
        .enumerate()
        .map(|(i, sql)| CorpusQuery { id: format!("q{:02}", i + 1), sql })
        .collect()
}

/// Writes each query to `<dir>/<id>.sql`.
pub fn write_corpus(dir: &std::path::Path, corpus: &[CorpusQuery]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for q in corpus {
        std::fs::write(dir.join(format!("{}.sql", q.id)), format!("{};\n", q.sql))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_corpus() {
        assert_eq!(generate_corpus(7, 30), generate_corpus(7, 30));
        assert_ne!(generate_corpus(7, 30), generate_corpus(8, 30));
    }

    #[test]
    fn ids_are_sequential() {
        let c = generate_corpus(DEFAULT_SEED, 12);
        assert_eq!(c.len(), 12);
        assert_eq!(c[0].id, "q01");
        assert_eq!(c[11].id, "q12");
    }
}
