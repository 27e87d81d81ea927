//! Subquery merge: `x IN (SELECT y FROM ...)` becomes a join under DISTINCT.
//! When `y` is the primary key of the only table inside, the join cannot
//! repeat an outer row and the DISTINCT is left out.

use super::heuristics::absorb;
use crate::catalog::Catalog;
use crate::ir::{BinaryOp, Predicate, QueryBlock, QueryTree, RteKind, ScalarExpr, SubLinkKind};

fn outer_rows_unique(block: &QueryBlock, catalog: &Catalog) -> bool {
    block.range_table.iter().enumerate().all(|(i, rte)| {
        let RteKind::Base { oid, .. } = &rte.kind else { return false };
        let Some(table) = catalog.table_by_oid(*oid) else { return false };
        let cols: Vec<usize> = block
            .target_list
            .iter()
            .filter_map(|t| match &t.expr {
                ScalarExpr::Column(c) if c.rti == i + 1 => Some(c.col),
                _ => None,
            })
            .collect();
        table.covers_primary_key(&cols)
    })
}

fn mergeable(inner: &QueryBlock) -> bool {
    inner.target_list.len() == 1
        && !inner.is_grouped()
        && inner.limit.is_none()
        && inner.offset.is_none()
        && inner.range_table.iter().all(|r| r.oid().is_some())
        && !inner.target_list[0].expr.has_outer_ref()
}

fn selects_unique_key(inner: &QueryBlock, catalog: &Catalog) -> bool {
    let [rte] = inner.range_table.as_slice() else { return false };
    let (Some(oid), ScalarExpr::Column(c)) = (rte.oid(), &inner.target_list[0].expr) else { return false };
    catalog.table_by_oid(oid).is_some_and(|t| t.primary_key.as_deref() == Some(&[c.col][..]))
}

/// Position of the first IN sub-link qual the rule can merge.
pub fn find_candidate(block: &QueryBlock, catalog: &Catalog) -> Option<usize> {
    let distinct_ok = !block.is_grouped() && outer_rows_unique(block, catalog);
    block.quals.iter().position(|q| match &q.expr {
        ScalarExpr::SubLink(s) => {
            s.kind == SubLinkKind::In
                && !s.negated
                && s.test_expr.is_some()
                && mergeable(&s.block)
                && (distinct_ok || selects_unique_key(&s.block, catalog))
        }
        _ => false,
    })
}

/// The merged tree, or `None` when the root block does not match.
pub fn subquery_merge(tree: &QueryTree, catalog: &Catalog) -> Option<QueryTree> {
    let idx = find_candidate(&tree.root, catalog)?;
    let mut out = tree.clone();
    let block = &mut out.root;
    let ScalarExpr::SubLink(link) = block.quals.remove(idx).expr else { unreachable!() };
    let keyed = selects_unique_key(&link.block, catalog);
    let moved = absorb(block, &link.block);
    let test = *link.test_expr.expect("IN has a test expression");
    let join = ScalarExpr::binary(BinaryOp::Eq, test, moved.target_list[0].expr.clone());
    block.quals.insert(idx, Predicate::new(join));
    block.quals.extend(moved.quals);
    block.jointree.extend(moved.jointree);
    block.distinct |= !keyed;
    Some(out)
}
