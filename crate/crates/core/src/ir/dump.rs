use std::fmt::Write;

use super::block::{JoinNode, QueryBlock, QueryTree, RteKind};
use super::expr::ScalarExpr;

/// Stable, indented text form of a query tree for golden comparisons.
pub fn dump_tree(tree: &QueryTree) -> String {
    let mut out = String::new();
    dump_block(&tree.root, 0, &mut out);
    out
}

pub fn dump_block(block: &QueryBlock, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    let _ = writeln!(out, "{pad}block {}{}", block.block_id, if block.distinct { " distinct" } else { "" });
    for (i, rte) in block.range_table.iter().enumerate() {
        match &rte.kind {
            RteKind::Base { oid, table_name } => {
                let _ = writeln!(out, "{pad}  rte {} base {table_name}#{oid} as {}", i + 1, rte.alias);
            }
            RteKind::Subquery { block: child, column_names } => {
                let _ = writeln!(out, "{pad}  rte {} subquery as {}({})", i + 1, rte.alias, column_names.join(","));
                dump_block(child, depth + 2, out);
            }
        }
    }
    for j in &block.jointree {
        let _ = writeln!(out, "{pad}  from {}", join_text(j));
    }
    for q in &block.quals {
        let _ = writeln!(out, "{pad}  qual {} {}", q.referenced_rtis, q.expr);
    }
    for (i, t) in block.target_list.iter().enumerate() {
        let _ = writeln!(out, "{pad}  target {} {} = {}", i + 1, t.name, t.expr);
    }
    for g in &block.group_by {
        let _ = writeln!(out, "{pad}  group {g}");
    }
    for s in &block.order_by {
        let _ = writeln!(out, "{pad}  order {}{}", s.expr, if s.desc { " desc" } else { "" });
    }
    if let Some(l) = block.limit {
        let _ = writeln!(out, "{pad}  limit {l}");
    }
    if let Some(o) = block.offset {
        let _ = writeln!(out, "{pad}  offset {o}");
    }
    for h in &block.hints {
        let _ = writeln!(out, "{pad}  hint {}({})", h.method.hint_name(), h.table_names.join(" "));
    }
    for e in block.expressions() {
        dump_sublinks(e, depth + 1, out);
    }
}

fn dump_sublinks(e: &ScalarExpr, depth: usize, out: &mut String) {
    for s in e.sublinks() {
        let _ = writeln!(out, "{}sublink {:?}{}", "  ".repeat(depth), s.kind, if s.negated { " negated" } else { "" });
        dump_block(&s.block, depth + 1, out);
    }
}

fn join_text(node: &JoinNode) -> String {
    match node {
        JoinNode::Rel(r) => r.to_string(),
        JoinNode::Join { kind, left, right, quals } => {
            let q: Vec<String> = quals.iter().map(|p| p.expr.to_string()).collect();
            format!("({} {} {} on {})", join_text(left), kind.name(), join_text(right), q.join(" and "))
        }
    }
}
