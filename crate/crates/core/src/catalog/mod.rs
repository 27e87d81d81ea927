//! Table, column and index metadata plus per-column statistics.
//!
//! The catalog is immutable once loaded and can be shared across sessions.

mod json;
pub mod hll;

use std::collections::HashMap;

pub use hll::{Datum, HllSketch, DEFAULT_HLL_SEED, DEFAULT_PRECISION};
pub use json::{load_catalog, load_catalog_str, save_catalog, save_catalog_string};

use crate::error::{Error, Result};

pub type Oid = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DataType {
    Int,
    Decimal,
    Text,
    Date,
}

impl DataType {
    /// Fixed per-type width in bytes used by the memory model.
    pub fn width(self) -> u32 {
        match self {
            DataType::Int => 4,
            DataType::Decimal => 8,
            DataType::Text => 32,
            DataType::Date => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DataType::Int => "int",
            DataType::Decimal => "decimal",
            DataType::Text => "text",
            DataType::Date => "date",
        }
    }

    pub fn parse(name: &str) -> Option<DataType> {
        match name.to_ascii_lowercase().as_str() {
            "int" | "integer" | "bigint" => Some(DataType::Int),
            "decimal" | "numeric" => Some(DataType::Decimal),
            "text" | "varchar" | "char" => Some(DataType::Text),
            "date" => Some(DataType::Date),
            _ => None,
        }
    }
}

/// A column bound recorded in statistics.
#[derive(Debug, Clone, PartialEq)]
pub enum StatValue {
    Number(f64),
    Date(i32),
    Text(String),
}

impl StatValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            StatValue::Number(v) => Some(*v),
            StatValue::Date(d) => Some(*d as f64),
            StatValue::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub ndv: f64,
    pub null_frac: f64,
    pub min_val: Option<StatValue>,
    pub max_val: Option<StatValue>,
    pub hll: Option<HllSketch>,
    /// Source values the sketch was built from; kept so the catalog can be saved again.
    pub hll_values: Option<Vec<Datum>>,
}

impl ColumnStats {
    pub fn with_ndv(ndv: f64) -> Self {
        Self {
            ndv,
            null_frac: 0.0,
            min_val: None,
            max_val: None,
            hll: None,
            hll_values: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDef {
    /// 1-based ordinal.
    pub position: usize,
    pub name: String,
    pub datatype: DataType,
    pub stats: ColumnStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexDef {
    pub name: String,
    /// 1-based column positions, leading key first.
    pub key_columns: Vec<usize>,
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableDef {
    pub oid: Oid,
    pub name: String,
    pub row_count: f64,
    pub page_count: f64,
    pub columns: Vec<ColumnDef>,
    pub indexes: Vec<IndexDef>,
    pub primary_key: Option<Vec<usize>>,
}

impl TableDef {
    pub fn column(&self, position: usize) -> Option<&ColumnDef> {
        position.checked_sub(1).and_then(|i| self.columns.get(i))
    }

    pub fn column_by_name(&self, name: &str) -> Option<&ColumnDef> {
        self.columns
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(name))
    }

    /// True if the given column positions cover the primary key.
    pub fn covers_primary_key(&self, positions: &[usize]) -> bool {
        match &self.primary_key {
            Some(pk) => pk.iter().all(|p| positions.contains(p)),
            None => false,
        }
    }

    fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::CatalogInvariant {
            table: self.name.clone(),
            message,
        };
        if self.row_count < 0.0 || self.page_count < 0.0 {
            return Err(fail("negative row or page count".into()));
        }
        if self.row_count > 0.0 && self.page_count < 1.0 {
            return Err(fail("page_count must be at least 1 when rows exist".into()));
        }
        for (i, col) in self.columns.iter().enumerate() {
            if col.position != i + 1 {
                return Err(fail(format!("column {} has position {}", col.name, col.position)));
            }
            if self.columns[..i]
                .iter()
                .any(|c| c.name.eq_ignore_ascii_case(&col.name))
            {
                return Err(fail(format!("duplicate column name {}", col.name)));
            }
            if !(0.0..=1.0).contains(&col.stats.null_frac) {
                return Err(fail(format!("null_frac of {} outside [0,1]", col.name)));
            }
            if col.stats.ndv < 0.0 || col.stats.ndv > self.row_count {
                return Err(fail(format!("ndv of {} exceeds row_count", col.name)));
            }
        }
        let valid = |p: &usize| *p >= 1 && *p <= self.columns.len();
        if let Some(pk) = &self.primary_key {
            if pk.is_empty() || !pk.iter().all(valid) {
                return Err(fail("invalid primary key positions".into()));
            }
        }
        for idx in &self.indexes {
            if idx.key_columns.is_empty() || !idx.key_columns.iter().all(valid) {
                return Err(fail(format!("index {} has invalid key columns", idx.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    tables: Vec<TableDef>,
    hll_seed: u64,
    hll_precision: u8,
    by_name: HashMap<String, usize>,
    by_oid: HashMap<Oid, usize>,
}

impl Catalog {
    pub fn new(tables: Vec<TableDef>) -> Result<Self> {
        Self::with_hll_config(tables, DEFAULT_HLL_SEED, DEFAULT_PRECISION)
    }

    pub fn with_hll_config(tables: Vec<TableDef>, hll_seed: u64, hll_precision: u8) -> Result<Self> {
        let mut by_name = HashMap::new();
        let mut by_oid: HashMap<Oid, usize> = HashMap::new();
        for (i, t) in tables.iter().enumerate() {
            t.validate()?;
            if let Some(&prev) = by_oid.get(&t.oid) {
                return Err(Error::CatalogInvariant {
                    table: format!("{} and {}", tables[prev].name, t.name),
                    message: format!("duplicate oid {}", t.oid),
                });
            }
            by_oid.insert(t.oid, i);
            if by_name.insert(t.name.to_ascii_lowercase(), i).is_some() {
                return Err(Error::CatalogInvariant {
                    table: t.name.clone(),
                    message: "duplicate table name".into(),
                });
            }
        }
        Ok(Self {
            tables,
            hll_seed,
            hll_precision,
            by_name,
            by_oid,
        })
    }

    pub fn tables(&self) -> &[TableDef] {
        &self.tables
    }

    pub fn table(&self, name: &str) -> Option<&TableDef> {
        self.by_name
            .get(&name.to_ascii_lowercase())
            .map(|&i| &self.tables[i])
    }

    pub fn table_by_oid(&self, oid: Oid) -> Option<&TableDef> {
        self.by_oid.get(&oid).map(|&i| &self.tables[i])
    }

    pub fn hll_seed(&self) -> u64 {
        self.hll_seed
    }

    pub fn hll_precision(&self) -> u8 {
        self.hll_precision
    }
}
