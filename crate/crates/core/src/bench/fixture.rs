//! The TPC-H-shaped catalog used by the corpus and the tests.
//!
//! Row counts follow TPC-H proportions at a small scale. Join-key columns
//! carry explicit value lists so the loader can build their sketches; only
//! two thirds of customers place orders, as in the real benchmark.

use serde_json::{json, Value};

use crate::catalog::{load_catalog_str, Catalog};

const PAGE_BYTES: f64 = 8192.0;

struct Col {
    name: &'static str,
    ty: &'static str,
    ndv: f64,
    min: Option<Value>,
    max: Option<Value>,
    values: Option<Vec<i64>>,
}

fn col(name: &'static str, ty: &'static str, ndv: f64) -> Col {
    Col { name, ty, ndv, min: None, max: None, values: None }
}

fn key(name: &'static str, lo: i64, hi: i64) -> Col {
    ranged(name, "int", lo, hi).with_values((lo..=hi).collect())
}

fn ranged(name: &'static str, ty: &'static str, lo: i64, hi: i64) -> Col {
    Col { name, ty, ndv: (hi - lo + 1) as f64, min: Some(json!(lo)), max: Some(json!(hi)), values: None }
}

fn dates(name: &'static str, lo: &str, hi: &str, ndv: f64) -> Col {
    Col { name, ty: "date", ndv, min: Some(json!(lo)), max: Some(json!(hi)), values: None }
}

fn decimal(name: &'static str, lo: f64, hi: f64, ndv: f64) -> Col {
    Col { name, ty: "decimal", ndv, min: Some(json!(lo)), max: Some(json!(hi)), values: None }
}

impl Col {
    fn with_values(mut self, values: Vec<i64>) -> Self {
        self.ndv = values.len() as f64;
        self.values = Some(values);
        self
    }

    fn with_ndv(mut self, ndv: f64) -> Self {
        self.ndv = ndv;
        self
    }

    fn width(&self) -> f64 {
        match self.ty {
            "text" => 32.0,
            "decimal" => 8.0,
            _ => 4.0,
        }
    }

    fn to_json(&self) -> Value {
        let mut v = json!({"name": self.name, "type": self.ty, "ndv": self.ndv, "null_frac": 0.0});
        if let Some(m) = &self.min {
            v["min"] = m.clone();
        }
        if let Some(m) = &self.max {
            v["max"] = m.clone();
        }
        if let Some(vals) = &self.values {
            v["hll_values"] = json!(vals);
        }
        v
    }
}

fn table(oid: u32, name: &str, rows: f64, cols: Vec<Col>, pk: &[&str], indexes: &[(&str, &[&str], bool)]) -> Value {
    let width: f64 = cols.iter().map(Col::width).sum();
    let pages = (rows * width / PAGE_BYTES).ceil().max(1.0);
    json!({
        "oid": oid,
        "name": name,
        "row_count": rows,
        "page_count": pages,
        "columns": cols.iter().map(Col::to_json).collect::<Vec<_>>(),
        "indexes": indexes
            .iter()
            .map(|(n, c, u)| json!({"name": n, "columns": c, "unique": u}))
            .collect::<Vec<_>>(),
        "primary_key": pk,
    })
}

pub fn tpch_catalog_json() -> Value {
    let ordering_customers: Vec<i64> = (1..=1500).filter(|k| k % 3 != 0).collect();
    let tables = vec![
        table(
            1001,
            "region",
            5.0,
            vec![key("r_regionkey", 0, 4), col("r_name", "text", 5.0), col("r_comment", "text", 5.0)],
            &["r_regionkey"],
            &[("region_pk", &["r_regionkey"], true)],
        ),
        table(
            1002,
            "nation",
            25.0,
            vec![
                key("n_nationkey", 0, 24),
                col("n_name", "text", 25.0),
                key("n_regionkey", 0, 4),
                col("n_comment", "text", 25.0),
            ],
            &["n_nationkey"],
            &[("nation_pk", &["n_nationkey"], true)],
        ),
        table(
            1003,
            "supplier",
            100.0,
            vec![
                key("s_suppkey", 1, 100),
                col("s_name", "text", 100.0),
                col("s_address", "text", 100.0),
                key("s_nationkey", 0, 24),
                col("s_phone", "text", 100.0),
                decimal("s_acctbal", -999.99, 9999.99, 100.0),
                col("s_comment", "text", 100.0),
            ],
            &["s_suppkey"],
            &[("supplier_pk", &["s_suppkey"], true), ("supplier_nation", &["s_nationkey"], false)],
        ),
        table(
            1004,
            "customer",
            1500.0,
            vec![
                key("c_custkey", 1, 1500),
                col("c_name", "text", 1500.0),
                col("c_address", "text", 1500.0),
                key("c_nationkey", 0, 24),
                col("c_phone", "text", 1500.0),
                decimal("c_acctbal", -999.99, 9999.99, 1400.0),
                col("c_mktsegment", "text", 5.0),
                col("c_comment", "text", 1500.0),
            ],
            &["c_custkey"],
            &[("customer_pk", &["c_custkey"], true), ("customer_nation", &["c_nationkey"], false)],
        ),
        table(
            1005,
            "part",
            2000.0,
            vec![
                key("p_partkey", 1, 2000),
                col("p_name", "text", 2000.0),
                col("p_mfgr", "text", 5.0),
                col("p_brand", "text", 25.0),
                col("p_type", "text", 150.0),
                ranged("p_size", "int", 1, 50),
                col("p_container", "text", 40.0),
                decimal("p_retailprice", 901.0, 2098.99, 1900.0),
                col("p_comment", "text", 2000.0),
            ],
            &["p_partkey"],
            &[("part_pk", &["p_partkey"], true)],
        ),
        table(
            1006,
            "partsupp",
            8000.0,
            vec![
                key("ps_partkey", 1, 2000),
                key("ps_suppkey", 1, 100),
                ranged("ps_availqty", "int", 1, 9999).with_ndv(7000.0),
                decimal("ps_supplycost", 1.0, 1000.0, 7000.0),
                col("ps_comment", "text", 8000.0),
            ],
            &["ps_partkey", "ps_suppkey"],
            &[("partsupp_pk", &["ps_partkey", "ps_suppkey"], true), ("partsupp_supp", &["ps_suppkey"], false)],
        ),
        table(
            1007,
            "orders",
            15000.0,
            vec![
                key("o_orderkey", 1, 15000),
                ranged("o_custkey", "int", 1, 1499).with_values(ordering_customers),
                col("o_orderstatus", "text", 3.0),
                decimal("o_totalprice", 850.0, 560000.0, 14900.0),
                dates("o_orderdate", "1992-01-01", "1998-08-02", 2400.0),
                col("o_orderpriority", "text", 5.0),
                col("o_clerk", "text", 1000.0),
                ranged("o_shippriority", "int", 0, 0),
                col("o_comment", "text", 15000.0),
            ],
            &["o_orderkey"],
            &[
                ("orders_pk", &["o_orderkey"], true),
                ("orders_cust", &["o_custkey"], false),
                ("orders_date", &["o_orderdate"], false),
            ],
        ),
        table(
            1008,
            "lineitem",
            60000.0,
            vec![
                key("l_orderkey", 1, 15000),
                key("l_partkey", 1, 2000),
                key("l_suppkey", 1, 100),
                ranged("l_linenumber", "int", 1, 7),
                ranged("l_quantity", "decimal", 1, 50),
                decimal("l_extendedprice", 900.0, 105000.0, 50000.0),
                decimal("l_discount", 0.0, 0.1, 11.0),
                decimal("l_tax", 0.0, 0.08, 9.0),
                col("l_returnflag", "text", 3.0),
                col("l_linestatus", "text", 2.0),
                dates("l_shipdate", "1992-01-02", "1998-12-01", 2500.0),
                dates("l_commitdate", "1992-01-31", "1998-10-31", 2450.0),
                dates("l_receiptdate", "1992-01-04", "1998-12-31", 2550.0),
                col("l_shipinstruct", "text", 4.0),
                col("l_shipmode", "text", 7.0),
                col("l_comment", "text", 50000.0),
            ],
            &["l_orderkey", "l_linenumber"],
            &[("lineitem_pk", &["l_orderkey", "l_linenumber"], true), ("lineitem_part", &["l_partkey"], false)],
        ),
    ];
    json!({"tables": tables})
}

pub fn tpch_catalog() -> Catalog {
    load_catalog_str(&tpch_catalog_json().to_string()).expect("fixture catalog is valid")
}
