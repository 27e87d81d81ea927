//! Eager aggregation: aggregate one side of a join before joining.
//!
//! Applies when the grouping keys pin down exactly one row of every table
//! on the non-aggregated side, so grouping the aggregated side by its join
//! key yields the same groups.

use std::collections::BTreeMap;

use super::heuristics::unique_alias;
use crate::catalog::Catalog;
use crate::ir::{
    BinaryOp, ColumnRef, JoinNode, Predicate, QueryBlock, QueryTree, RangeTableEntry, RelSet, Rti, RteKind,
    ScalarExpr, SortKey, TargetEntry,
};

/// What the rule found in the original block.
#[derive(Debug, Clone, PartialEq)]
pub struct EagerCandidate {
    /// Rels referenced by aggregate arguments.
    pub agg_side: RelSet,
    pub other_side: RelSet,
    /// Join key on the aggregated side.
    pub agg_key: ColumnRef,
    /// Join key on the other side.
    pub other_key: ColumnRef,
    edge: usize,
}

/// Columns referenced outside of any aggregate.
fn bare_columns(e: &ScalarExpr, out: &mut Vec<ColumnRef>) {
    match e {
        ScalarExpr::Agg { .. } => {}
        ScalarExpr::Column(c) => out.push(*c),
        ScalarExpr::Binary { left, right, .. } => {
            bare_columns(left, out);
            bare_columns(right, out);
        }
        ScalarExpr::Not(x) | ScalarExpr::Neg(x) => bare_columns(x, out),
        ScalarExpr::Func { args, .. } => args.iter().for_each(|a| bare_columns(a, out)),
        ScalarExpr::InList { expr, .. } => bare_columns(expr, out),
        ScalarExpr::Outer(_) | ScalarExpr::Literal(_) | ScalarExpr::SubLink(_) => {}
    }
}

fn agg_rels(e: &ScalarExpr) -> RelSet {
    let mut set = RelSet::EMPTY;
    e.visit(&mut |n| {
        if let ScalarExpr::Agg { arg: Some(a), .. } = n {
            set = set.union(a.referenced_rtis());
        }
    });
    set
}

/// Rels whose row is fixed by the grouping keys: primary key grouped, or
/// primary key equated to a column of an already fixed rel.
fn determined_rels(block: &QueryBlock, catalog: &Catalog, side: RelSet) -> Option<RelSet> {
    let pk = |r: Rti| -> Option<Vec<usize>> {
        let oid = block.rte(r).oid()?;
        catalog.table_by_oid(oid)?.primary_key.clone()
    };
    let mut done = RelSet::EMPTY;
    for r in side.iter() {
        let Some(key) = pk(r) else { continue };
        let grouped = key
            .iter()
            .all(|c| block.group_by.iter().any(|g| *g == ScalarExpr::Column(ColumnRef::new(r, *c))));
        if grouped {
            done.insert(r);
        }
    }
    loop {
        let mut changed = false;
        for q in &block.quals {
            let Some((a, b)) = q.as_column_equality() else { continue };
            for (from, to) in [(a, b), (b, a)] {
                if done.contains(from.rti) && side.contains(to.rti) && !done.contains(to.rti) && pk(to.rti) == Some(vec![to.col]) {
                    done.insert(to.rti);
                    changed = true;
                }
            }
        }
        if !changed {
            return Some(done);
        }
    }
}

pub fn find_candidate(block: &QueryBlock, catalog: &Catalog) -> Option<EagerCandidate> {
    if block.group_by.is_empty() || !block.hints.is_empty() || !block.sublinks().is_empty() {
        return None;
    }
    if block.range_table.iter().any(|r| r.oid().is_none()) || block.jointree.iter().any(|j| !matches!(j, JoinNode::Rel(_))) {
        return None;
    }
    let all = block.all_relids();
    let other_side = determined_rels(block, catalog, all)?;
    let agg_side = all.minus(other_side);
    if agg_side.is_empty() || other_side.is_empty() {
        return None;
    }
    let outputs: Vec<&ScalarExpr> =
        block.target_list.iter().map(|t| &t.expr).chain(block.order_by.iter().map(|s| &s.expr)).collect();
    if outputs.iter().any(|e| !agg_rels(e).is_subset(agg_side)) {
        return None;
    }
    for e in outputs.iter().copied().chain(block.group_by.iter()) {
        let mut bare = Vec::new();
        bare_columns(e, &mut bare);
        if bare.iter().any(|c| agg_side.contains(c.rti)) || e.has_outer_ref() {
            return None;
        }
    }
    let mut edge = None;
    for (i, q) in block.quals.iter().enumerate() {
        let rels = q.referenced_rtis;
        if rels.is_subset(agg_side) || rels.is_subset(other_side) {
            continue;
        }
        let (a, b) = q.as_column_equality()?;
        if edge.is_some() {
            return None;
        }
        let (agg_key, other_key) = if agg_side.contains(a.rti) { (a, b) } else { (b, a) };
        edge = Some(EagerCandidate { agg_side, other_side, agg_key, other_key, edge: i });
    }
    edge
}

fn column_name(block: &QueryBlock, catalog: &Catalog, c: ColumnRef) -> String {
    match &block.rte(c.rti).kind {
        RteKind::Base { oid, .. } => catalog
            .table_by_oid(*oid)
            .and_then(|t| t.column(c.col))
            .map(|d| d.name.clone())
            .unwrap_or_else(|| format!("c{}", c.col)),
        RteKind::Subquery { column_names, .. } => column_names[c.col - 1].clone(),
    }
}

/// The rewritten tree, or `None` when the root block does not match.
pub fn eager_aggregation(tree: &QueryTree, catalog: &Catalog) -> Option<(QueryTree, EagerCandidate)> {
    let cand = find_candidate(&tree.root, catalog)?;
    let mut out = tree.clone();
    let temp_id = out.alloc_block_id();
    let block = &tree.root;

    let inner_map: BTreeMap<Rti, Rti> = cand.agg_side.iter().enumerate().map(|(i, r)| (r, i + 1)).collect();
    let outer_map: BTreeMap<Rti, Rti> = cand.other_side.iter().enumerate().map(|(i, r)| (r, i + 1)).collect();
    let to_inner = |c: ColumnRef| ColumnRef::new(inner_map[&c.rti], c.col);
    let to_outer = |c: ColumnRef| ColumnRef::new(outer_map[&c.rti], c.col);

    let key_name = column_name(block, catalog, cand.agg_key);
    let mut temp_targets = vec![TargetEntry { expr: ScalarExpr::Column(to_inner(cand.agg_key)), name: key_name }];
    let mut agg_exprs: Vec<ScalarExpr> = Vec::new();
    let mut add_agg = |e: &ScalarExpr, name: &str, temp_targets: &mut Vec<TargetEntry>| -> usize {
        if let Some(k) = agg_exprs.iter().position(|x| x == e) {
            return k + 2;
        }
        agg_exprs.push(e.clone());
        let taken: Vec<String> = temp_targets.iter().map(|t| t.name.clone()).collect();
        temp_targets.push(TargetEntry { expr: e.clone().map_columns(&to_inner), name: unique_alias(&taken, name) });
        agg_exprs.len() + 1
    };

    let temp_rti = cand.other_side.len() + 1;
    let mut targets = Vec::new();
    for t in &block.target_list {
        let expr = if t.expr.has_aggregate() {
            ScalarExpr::col(temp_rti, add_agg(&t.expr, &t.name, &mut temp_targets))
        } else {
            t.expr.clone().map_columns(&to_outer)
        };
        targets.push(TargetEntry { expr, name: t.name.clone() });
    }
    let mut order_by = Vec::new();
    for s in &block.order_by {
        let expr = if s.expr.has_aggregate() {
            ScalarExpr::col(temp_rti, add_agg(&s.expr, "agg", &mut temp_targets))
        } else {
            s.expr.clone().map_columns(&to_outer)
        };
        order_by.push(SortKey { expr, desc: s.desc });
    }

    let mut temp = QueryBlock::empty(temp_id);
    let mut outer = QueryBlock::empty(block.block_id);
    for (r, rte) in block.range_table.iter().enumerate() {
        if cand.agg_side.contains(r + 1) {
            temp.range_table.push(rte.clone());
        } else {
            outer.range_table.push(rte.clone());
        }
    }
    temp.jointree = (1..=temp.range_table.len()).map(JoinNode::Rel).collect();
    for (i, q) in block.quals.iter().enumerate() {
        if i == cand.edge {
            continue;
        }
        if !q.referenced_rtis.is_empty() && q.referenced_rtis.is_subset(cand.agg_side) {
            temp.quals.push(q.clone().map_columns(&to_inner));
        } else {
            outer.quals.push(q.clone().map_columns(&to_outer));
        }
    }
    temp.group_by = vec![ScalarExpr::Column(to_inner(cand.agg_key))];
    temp.target_list = temp_targets;

    let taken: Vec<String> = outer.range_table.iter().map(|r| r.alias.clone()).collect();
    outer.range_table.push(RangeTableEntry {
        alias: unique_alias(&taken, "temp"),
        kind: RteKind::Subquery {
            column_names: temp.target_list.iter().map(|t| t.name.clone()).collect(),
            block: Box::new(temp),
        },
    });
    outer.jointree = (1..=outer.range_table.len()).map(JoinNode::Rel).collect();
    outer.quals.push(Predicate::new(ScalarExpr::binary(
        BinaryOp::Eq,
        ScalarExpr::Column(to_outer(cand.other_key)),
        ScalarExpr::col(temp_rti, 1),
    )));
    outer.target_list = targets;
    outer.order_by = order_by;
    outer.limit = block.limit;
    outer.offset = block.offset;
    outer.distinct = block.distinct;
    out.root = outer;
    Some((out, cand))
}
