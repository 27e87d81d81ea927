//! Naive executor for ungrouped query blocks over a tiny in-memory database.
//! Used as a semantics oracle for rewrites.

use std::collections::BTreeMap;

use optlab::ir::{ColumnRef, JoinKind, JoinNode, QueryBlock, RteKind, SubLink, SubLinkKind};

use super::eval::{compare, eval, truth, Env, Value};

pub type Row = Vec<Value>;

#[derive(Default)]
pub struct Database {
    pub tables: BTreeMap<String, Vec<Row>>,
}

type Binding = BTreeMap<ColumnRef, Value>;

struct Scope<'a> {
    db: &'a Database,
    row: &'a Binding,
    outer: Option<&'a Binding>,
}

impl Env for Scope<'_> {
    fn column(&self, c: ColumnRef) -> Value {
        self.row.get(&c).cloned().unwrap_or_else(|| panic!("column {c:?} not bound"))
    }

    fn outer(&self, c: ColumnRef) -> Value {
        self.outer.and_then(|o| o.get(&c)).cloned().expect("outer row bound")
    }

    fn sublink(&self, s: &SubLink) -> Value {
        let rows = execute(self.db, &s.block, Some(self.row));
        let v = match s.kind {
            SubLinkKind::Exists => Value::Bool(!rows.is_empty()),
            SubLinkKind::Scalar => rows.first().map(|r| r[0].clone()).unwrap_or(Value::Null),
            SubLinkKind::In => {
                let test = eval(s.test_expr.as_ref().expect("IN has a test expression"), self);
                let mut saw_null = test == Value::Null;
                let mut found = false;
                for r in &rows {
                    match compare(optlab::ir::BinaryOp::Eq, &test, &r[0]) {
                        Value::Bool(true) => found = true,
                        Value::Null => saw_null = true,
                        _ => {}
                    }
                }
                if found {
                    Value::Bool(true)
                } else if saw_null {
                    Value::Null
                } else {
                    Value::Bool(false)
                }
            }
        };
        match (s.negated, v) {
            (true, Value::Bool(b)) => Value::Bool(!b),
            (_, v) => v,
        }
    }
}

fn holds(db: &Database, e: &optlab::ir::ScalarExpr, row: &Binding, outer: Option<&Binding>) -> bool {
    truth(&eval(e, &Scope { db, row, outer })) == Some(true)
}

fn rel_rows(db: &Database, block: &QueryBlock, rti: usize, outer: Option<&Binding>) -> Vec<Binding> {
    let rows = match &block.rte(rti).kind {
        RteKind::Base { table_name, .. } => db.tables[table_name].clone(),
        RteKind::Subquery { block: child, .. } => execute(db, child, outer),
    };
    rows.into_iter()
        .map(|r| r.into_iter().enumerate().map(|(i, v)| (ColumnRef::new(rti, i + 1), v)).collect())
        .collect()
}

fn null_row(block: &QueryBlock, node: &JoinNode, db: &Database) -> Binding {
    let mut out = Binding::new();
    for rti in node.relids().iter() {
        let width = match &block.rte(rti).kind {
            RteKind::Base { table_name, .. } => db.tables[table_name].first().map(Vec::len).unwrap_or(0),
            RteKind::Subquery { column_names, .. } => column_names.len(),
        };
        for c in 1..=width {
            out.insert(ColumnRef::new(rti, c), Value::Null);
        }
    }
    out
}

fn join_rows(db: &Database, block: &QueryBlock, node: &JoinNode, outer: Option<&Binding>) -> Vec<Binding> {
    match node {
        JoinNode::Rel(r) => rel_rows(db, block, *r, outer),
        JoinNode::Join { kind, left, right, quals } => {
            let (ls, rs) = (join_rows(db, block, left, outer), join_rows(db, block, right, outer));
            let mut out = Vec::new();
            for l in &ls {
                let matches: Vec<Binding> = rs
                    .iter()
                    .map(|r| l.iter().chain(r).map(|(k, v)| (*k, v.clone())).collect::<Binding>())
                    .filter(|b| quals.iter().all(|q| holds(db, &q.expr, b, outer)))
                    .collect();
                match kind {
                    JoinKind::Inner => out.extend(matches),
                    JoinKind::Left if matches.is_empty() => {
                        let mut b = l.clone();
                        b.extend(null_row(block, right, db));
                        out.push(b);
                    }
                    JoinKind::Left => out.extend(matches),
                    JoinKind::Semi if !matches.is_empty() => out.push(l.clone()),
                    JoinKind::Anti if matches.is_empty() => out.push(l.clone()),
                    _ => {}
                }
            }
            out
        }
    }
}

/// Output rows of `block`, in no particular order.
pub fn execute(db: &Database, block: &QueryBlock, outer: Option<&Binding>) -> Vec<Row> {
    assert!(!block.is_grouped(), "executor handles ungrouped blocks only");
    let mut rows = vec![Binding::new()];
    for node in &block.jointree {
        let part = join_rows(db, block, node, outer);
        rows = rows
            .iter()
            .flat_map(|a| part.iter().map(move |b| a.iter().chain(b).map(|(k, v)| (*k, v.clone())).collect()))
            .collect();
    }
    let mut out: Vec<Row> = rows
        .iter()
        .filter(|b| block.quals.iter().all(|q| holds(db, &q.expr, b, outer)))
        .map(|b| block.target_list.iter().map(|t| eval(&t.expr, &Scope { db, row: b, outer })).collect())
        .collect();
    if block.distinct {
        let mut seen = Vec::new();
        out.retain(|r| {
            let key = format!("{r:?}");
            let fresh = !seen.contains(&key);
            seen.push(key);
            fresh
        });
    }
    out
}

/// Rows as sorted debug strings, for bag comparison.
pub fn bag(rows: &[Row]) -> Vec<String> {
    let mut v: Vec<String> = rows.iter().map(|r| format!("{r:?}")).collect();
    v.sort();
    v
}
