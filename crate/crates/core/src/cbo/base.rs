//! Access paths for one range-table entry.

use super::context::BlockCtx;
use super::cost::{product, Cost};
use super::path::{BloomKey, PathNode, PathOp};
use crate::frontend::ast::BinaryOp;
use crate::ir::{ColumnRef, Predicate, Rti, ScalarExpr};
use crate::session::Counters;

/// `col op value` where value is fixed for the duration of a scan.
fn index_operand(pred: &Predicate, col: ColumnRef) -> bool {
    let is_param = |e: &ScalarExpr| e.column_refs().is_empty() && !e.has_sublink();
    match &pred.expr {
        ScalarExpr::Binary { op, left, right }
            if matches!(op, BinaryOp::Eq | BinaryOp::Lt | BinaryOp::LtEq | BinaryOp::Gt | BinaryOp::GtEq) =>
        {
            (left.as_ref() == &ScalarExpr::Column(col) && is_param(right))
                || (right.as_ref() == &ScalarExpr::Column(col) && is_param(left))
        }
        ScalarExpr::InList { expr, negated: false, .. } => expr.as_ref() == &ScalarExpr::Column(col),
        _ => false,
    }
}

fn inlist_len(pred: &Predicate, rti: Rti) -> Option<(usize, usize)> {
    match &pred.expr {
        ScalarExpr::InList { expr, list, negated: false } => match expr.as_ref() {
            ScalarExpr::Column(c) if c.rti == rti => {
                let mut items: Vec<String> = list.iter().map(|l| l.to_string()).collect();
                items.sort();
                items.dedup();
                Some((c.col, items.len()))
            }
            _ => None,
        },
        _ => None,
    }
}

pub const INLIST_JOIN_MIN: usize = 4;

/// Every access path for `rti`. All paths carry the same row estimate.
pub fn base_paths(ctx: &BlockCtx, rti: Rti, counters: &mut Counters) -> Vec<PathNode> {
    let rel = ctx.rel(rti);
    let p = &ctx.params;
    let quals: Vec<&ScalarExpr> = rel.restrictions.iter().map(|q| &q.expr).collect();
    let nq = quals.len();
    let cost_one = |counters: &mut Counters| {
        counters.cost_path_calls += 1;
        counters.paths_built += 1;
    };

    if let Some(child) = &rel.subquery_plan {
        cost_one(counters);
        let (sub, plans) = ctx.subplan_cost(&quals, rel.raw_rows);
        let total = child.cost.total + rel.raw_rows * p.cpu_tuple + rel.raw_rows * nq as f64 * p.cpu_operator + sub;
        let mut path = PathNode::leaf(
            PathOp::SubqueryScan,
            rti,
            &rel.alias,
            rel.filtered_rows,
            Cost::new(child.cost.startup, total),
        );
        path.children.push(child.clone());
        path.subplans = plans;
        return vec![path];
    }

    let blooms = ctx.blooms_for(rti);
    let est_rows = (rel.filtered_rows * product(blooms.iter().map(|b| b.est_selectivity).collect())).max(1.0);
    let mut keys: Vec<BloomKey> = blooms
        .iter()
        .map(|b| BloomKey {
            source_oid: ctx.rel(b.source_rti).oid.unwrap_or(0),
            source_col: b.source_column.col,
            key_col: b.key_column.col,
        })
        .collect();
    keys.sort();
    let bloom_check = |rows: f64| rows * blooms.len() as f64 * p.cpu_operator;
    let finish = |mut path: PathNode, scanned: f64| {
        let (sub, plans) = ctx.subplan_cost(&quals, scanned);
        path.cost.total += bloom_check(scanned) + sub;
        path.subplans = plans;
        path.bloom_filters_applied = keys.clone();
        path
    };

    let mut paths = Vec::new();
    cost_one(counters);
    let seq = PathNode::leaf(PathOp::SeqScan, rti, &rel.alias, est_rows, p.seqscan(rel.pages, rel.raw_rows, nq));
    paths.push(finish(seq, rel.raw_rows));

    let table = rel.oid.and_then(|o| ctx.catalog.table_by_oid(o));
    let indexes = table.map(|t| t.indexes.as_slice()).unwrap_or(&[]);
    for idx in indexes {
        let lead = ColumnRef::new(rti, idx.key_columns[0]);
        let matching: Vec<&Predicate> = rel.restrictions.iter().filter(|q| index_operand(q, lead)).collect();
        if matching.is_empty() {
            continue;
        }
        cost_one(counters);
        let sel = product(matching.iter().map(|q| ctx.selectivity(&q.expr)).collect());
        let matched = (rel.raw_rows * sel).max(1.0);
        let cost = p.indexscan(rel.pages, sel, matched, nq - matching.len());
        let mut path = PathNode::leaf(PathOp::IndexScan, rti, &rel.alias, est_rows, cost);
        path.index = Some(idx.name.clone());
        paths.push(finish(path, matched));
    }

    if ctx.inlist_join {
        for q in &rel.restrictions {
            let Some((col, k)) = inlist_len(q, rti) else { continue };
            if k < INLIST_JOIN_MIN {
                continue;
            }
            cost_one(counters);
            let kf = k as f64;
            let matched = (rel.raw_rows * ctx.selectivity(&q.expr)).max(1.0);
            let residual = (nq - 1) as f64;
            let index = indexes.iter().find(|i| i.key_columns[0] == col);
            let cost = match index {
                Some(_) => {
                    let startup = kf * p.cpu_tuple;
                    let total = startup
                        + kf * p.random_page
                        + matched * (p.cpu_tuple + p.cpu_operator)
                        + matched * residual * p.cpu_operator;
                    Cost::new(startup, total)
                }
                None => {
                    let startup = kf * (p.cpu_tuple + p.hash_build);
                    let total = startup
                        + rel.pages * p.seq_page
                        + rel.raw_rows * (p.cpu_tuple + p.cpu_operator)
                        + matched * residual * p.cpu_operator;
                    Cost::new(startup, total)
                }
            };
            let mut path = PathNode::leaf(PathOp::InListJoinScan, rti, &rel.alias, est_rows, cost);
            path.index = index.map(|i| i.name.clone());
            paths.push(finish(path, matched));
        }
    }
    paths
}
