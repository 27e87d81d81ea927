use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    Catalog, ColumnDef, ColumnStats, DataType, Datum, HllSketch, IndexDef, StatValue, TableDef,
    DEFAULT_HLL_SEED, DEFAULT_PRECISION,
};
use crate::datetime::{format_date, parse_date};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hll_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hll_precision: Option<u8>,
    tables: Vec<RawTable>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    oid: u32,
    name: String,
    row_count: f64,
    page_count: f64,
    columns: Vec<RawColumn>,
    #[serde(default)]
    indexes: Vec<RawIndex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    primary_key: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawColumn {
    name: String,
    #[serde(rename = "type")]
    datatype: String,
    ndv: f64,
    null_frac: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hll_values: Option<Vec<Value>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIndex {
    name: String,
    columns: Vec<String>,
    #[serde(default)]
    unique: bool,
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog> {
    let text = std::fs::read_to_string(path)?;
    load_catalog_str(&text)
}

pub fn load_catalog_str(text: &str) -> Result<Catalog> {
    let raw: RawCatalog = serde_json::from_str(text).map_err(|e| Error::CatalogParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let seed = raw.hll_seed.unwrap_or(DEFAULT_HLL_SEED);
    let precision = raw.hll_precision.unwrap_or(DEFAULT_PRECISION);
    let tables = raw
        .tables
        .into_iter()
        .map(|t| convert_table(t, seed, precision))
        .collect::<Result<Vec<_>>>()?;
    Catalog::with_hll_config(tables, seed, precision)
}

fn convert_table(raw: RawTable, seed: u64, precision: u8) -> Result<TableDef> {
    let table_name = raw.name.clone();
    let invariant = |message: String| Error::CatalogInvariant {
        table: table_name.clone(),
        message,
    };
    let mut columns = Vec::with_capacity(raw.columns.len());
    for (i, c) in raw.columns.into_iter().enumerate() {
        let datatype = DataType::parse(&c.datatype)
            .ok_or_else(|| invariant(format!("unknown type {} for column {}", c.datatype, c.name)))?;
        let min_val = c.min.as_ref().map(|v| stat_value(v, datatype)).transpose().map_err(invariant)?;
        let max_val = c.max.as_ref().map(|v| stat_value(v, datatype)).transpose().map_err(invariant)?;
        let (hll, hll_values) = match c.hll_values {
            Some(values) => {
                let data = values.iter().map(datum).collect::<std::result::Result<Vec<_>, _>>().map_err(invariant)?;
                let mut sketch = HllSketch::with_seed(precision, seed)?;
                for d in &data {
                    sketch.add(d);
                }
                (Some(sketch), Some(data))
            }
            None => (None, None),
        };
        columns.push(ColumnDef {
            position: i + 1,
            name: c.name.to_ascii_lowercase(),
            datatype,
            stats: ColumnStats {
                ndv: c.ndv,
                null_frac: c.null_frac,
                min_val,
                max_val,
                hll,
                hll_values,
            },
        });
    }
    let position_of = |name: &str| -> Result<usize> {
        columns
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(name))
            .map(|c| c.position)
            .ok_or_else(|| invariant(format!("unknown column {name}")))
    };
    let indexes = raw
        .indexes
        .iter()
        .map(|ix| {
            Ok(IndexDef {
                name: ix.name.to_ascii_lowercase(),
                key_columns: ix.columns.iter().map(|n| position_of(n)).collect::<Result<_>>()?,
                unique: ix.unique,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let primary_key = raw
        .primary_key
        .as_ref()
        .map(|pk| pk.iter().map(|n| position_of(n)).collect::<Result<Vec<_>>>())
        .transpose()?;
    Ok(TableDef {
        oid: raw.oid,
        name: raw.name.to_ascii_lowercase(),
        row_count: raw.row_count,
        page_count: raw.page_count,
        columns,
        indexes,
        primary_key,
    })
}

fn stat_value(v: &Value, datatype: DataType) -> std::result::Result<StatValue, String> {
    match v {
        Value::Number(n) => Ok(StatValue::Number(n.as_f64().unwrap_or(0.0))),
        Value::String(s) if datatype == DataType::Date => parse_date(s)
            .map(StatValue::Date)
            .ok_or_else(|| format!("invalid date bound {s}")),
        Value::String(s) => Ok(StatValue::Text(s.clone())),
        other => Err(format!("unsupported statistics bound {other}")),
    }
}

fn datum(v: &Value) -> std::result::Result<Datum, String> {
    match v {
        Value::Number(n) => match n.as_i64() {
            Some(i) => Ok(Datum::Int(i)),
            None => Ok(Datum::Float(n.as_f64().unwrap_or(0.0))),
        },
        Value::String(s) => Ok(Datum::Text(s.clone())),
        other => Err(format!("unsupported hll value {other}")),
    }
}

fn stat_json(v: &StatValue) -> Value {
    match v {
        StatValue::Number(n) => serde_json::json!(n),
        StatValue::Date(d) => Value::String(format_date(*d)),
        StatValue::Text(s) => Value::String(s.clone()),
    }
}

fn datum_json(d: &Datum) -> Value {
    match d {
        Datum::Int(i) => serde_json::json!(i),
        Datum::Float(f) => serde_json::json!(f),
        Datum::Text(s) => Value::String(s.clone()),
    }
}

pub fn save_catalog_string(catalog: &Catalog) -> String {
    let raw = RawCatalog {
        hll_seed: Some(catalog.hll_seed()),
        hll_precision: Some(catalog.hll_precision()),
        tables: catalog
            .tables()
            .iter()
            .map(|t| {
                let name_of = |p: &usize| t.columns[*p - 1].name.clone();
                RawTable {
                    oid: t.oid,
                    name: t.name.clone(),
                    row_count: t.row_count,
                    page_count: t.page_count,
                    columns: t
                        .columns
                        .iter()
                        .map(|c| RawColumn {
                            name: c.name.clone(),
                            datatype: c.datatype.name().to_string(),
                            ndv: c.stats.ndv,
                            null_frac: c.stats.null_frac,
                            min: c.stats.min_val.as_ref().map(stat_json),
                            max: c.stats.max_val.as_ref().map(stat_json),
                            hll_values: c
                                .stats
                                .hll_values
                                .as_ref()
                                .map(|vs| vs.iter().map(datum_json).collect()),
                        })
                        .collect(),
                    indexes: t
                        .indexes
                        .iter()
                        .map(|ix| RawIndex {
                            name: ix.name.clone(),
                            columns: ix.key_columns.iter().map(name_of).collect(),
                            unique: ix.unique,
                        })
                        .collect(),
                    primary_key: t.primary_key.as_ref().map(|pk| pk.iter().map(name_of).collect()),
                }
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("catalog serializes")
}

pub fn save_catalog(catalog: &Catalog, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, save_catalog_string(catalog))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_list() {
        let cat = load_catalog_str(r#"{"tables": []}"#).unwrap();
        assert!(cat.tables().is_empty());
    }

    #[test]
    fn duplicate_oid_names_both_tables() {
        let text = r#"{"tables": [
            {"oid": 7, "name": "a", "row_count": 0, "page_count": 0, "columns": [], "indexes": []},
            {"oid": 7, "name": "b", "row_count": 0, "page_count": 0, "columns": [], "indexes": []}
        ]}"#;
        match load_catalog_str(text) {
            Err(Error::CatalogInvariant { table, .. }) => {
                assert!(table.contains('a') && table.contains('b'), "{table}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_error_reports_position() {
        match load_catalog_str("{\n  \"tables\": [,]\n}") {
            Err(Error::CatalogParse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ndv_above_row_count_is_rejected() {
        let text = r#"{"tables": [{"oid": 1, "name": "t", "row_count": 10, "page_count": 1,
            "columns": [{"name": "c", "type": "int", "ndv": 11, "null_frac": 0}], "indexes": []}]}"#;
        assert!(matches!(load_catalog_str(text), Err(Error::CatalogInvariant { .. })));
    }

    #[test]
    fn round_trip_preserves_structure() {
        let text = r#"{"tables": [{"oid": 3, "name": "T", "row_count": 100, "page_count": 2,
            "columns": [
                {"name": "id", "type": "int", "ndv": 100, "null_frac": 0, "min": 1, "max": 100, "hll_values": [1, 2, 3]},
                {"name": "d", "type": "date", "ndv": 10, "null_frac": 0.1, "min": "1992-01-01", "max": "1998-12-31"}
            ],
            "indexes": [{"name": "t_id", "columns": ["id"], "unique": true}],
            "primary_key": ["id"]}]}"#;
        let first = load_catalog_str(text).unwrap();
        let second = load_catalog_str(&save_catalog_string(&first)).unwrap();
        assert_eq!(first, second);
        let t = second.table("t").unwrap();
        assert!(t.columns[0].stats.hll.is_some());
        assert_eq!(t.primary_key, Some(vec![1]));
    }
}
