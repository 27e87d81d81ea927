//! Rewrites applied unconditionally before any costing.

use std::cell::Cell;

use crate::datetime::add_interval;
use crate::ir::{
    BinaryOp, ColumnRef, JoinKind, JoinNode, Literal, Predicate, QueryBlock, QueryTree, RelSet, RteKind, ScalarExpr,
    SubLinkKind,
};

const MAX_ROUNDS: usize = 16;

/// Runs every heuristic rule over the whole tree until nothing changes.
pub fn apply_heuristic_rules(tree: &QueryTree) -> QueryTree {
    let mut out = tree.clone();
    for _ in 0..MAX_ROUNDS {
        let before = out.root.clone();
        fold_constants(&mut out.root);
        flatten_exists(&mut out.root);
        push_down_quals(&mut out.root);
        if out.root == before {
            break;
        }
    }
    out
}

/// Applies `f` to every directly nested block: subquery range-table entries
/// and sub-link blocks.
pub(crate) fn for_each_child_block(block: &mut QueryBlock, f: &dyn Fn(&mut QueryBlock)) {
    for rte in &mut block.range_table {
        if let RteKind::Subquery { block: child, .. } = &mut rte.kind {
            f(child);
        }
    }
    block.map_exprs(&|e| {
        e.transform(&mut |n| match n {
            ScalarExpr::SubLink(mut s) => {
                f(&mut s.block);
                ScalarExpr::SubLink(s)
            }
            other => other,
        })
    });
}

fn num(l: &Literal) -> Option<f64> {
    match l {
        Literal::Int(_) | Literal::Decimal(_) => l.as_f64(),
        _ => None,
    }
}

fn fold_arith(op: BinaryOp, a: &Literal, b: &Literal) -> Option<Literal> {
    match (a, b) {
        (Literal::Int(x), Literal::Int(y)) => match op {
            BinaryOp::Plus => x.checked_add(*y).map(Literal::Int),
            BinaryOp::Minus => x.checked_sub(*y).map(Literal::Int),
            BinaryOp::Mul => x.checked_mul(*y).map(Literal::Int),
            BinaryOp::Div if *y != 0 => Some(Literal::Decimal(*x as f64 / *y as f64)),
            _ => None,
        },
        (Literal::Date(d), Literal::Interval { months, days }) => match op {
            BinaryOp::Plus => add_interval(*d, *months, *days).map(Literal::Date),
            BinaryOp::Minus => add_interval(*d, -*months, -*days).map(Literal::Date),
            _ => None,
        },
        (Literal::Interval { months, days }, Literal::Date(d)) if op == BinaryOp::Plus => {
            add_interval(*d, *months, *days).map(Literal::Date)
        }
        _ => {
            let (x, y) = (num(a)?, num(b)?);
            match op {
                BinaryOp::Plus => Some(Literal::Decimal(x + y)),
                BinaryOp::Minus => Some(Literal::Decimal(x - y)),
                BinaryOp::Mul => Some(Literal::Decimal(x * y)),
                BinaryOp::Div if y != 0.0 => Some(Literal::Decimal(x / y)),
                _ => None,
            }
        }
    }
}

fn fold_compare(op: BinaryOp, a: &Literal, b: &Literal) -> Option<bool> {
    let ord = match (a, b) {
        (Literal::Text(x), Literal::Text(y)) => x.cmp(y),
        (Literal::Date(x), Literal::Date(y)) => x.cmp(y),
        (Literal::Bool(x), Literal::Bool(y)) => x.cmp(y),
        _ => num(a)?.partial_cmp(&num(b)?)?,
    };
    use std::cmp::Ordering::*;
    Some(match op {
        BinaryOp::Eq => ord == Equal,
        BinaryOp::NotEq => ord != Equal,
        BinaryOp::Lt => ord == Less,
        BinaryOp::LtEq => ord != Greater,
        BinaryOp::Gt => ord == Greater,
        BinaryOp::GtEq => ord != Less,
        _ => return None,
    })
}

fn fold_node(e: ScalarExpr) -> ScalarExpr {
    use ScalarExpr::Literal as L;
    match e {
        ScalarExpr::Binary { op: BinaryOp::And, left, right } => match (*left, *right) {
            (L(Literal::Bool(true)), x) | (x, L(Literal::Bool(true))) => x,
            (L(Literal::Bool(false)), _) | (_, L(Literal::Bool(false))) => L(Literal::Bool(false)),
            (l, r) => ScalarExpr::binary(BinaryOp::And, l, r),
        },
        ScalarExpr::Binary { op: BinaryOp::Or, left, right } => match (*left, *right) {
            (L(Literal::Bool(false)), x) | (x, L(Literal::Bool(false))) => x,
            (L(Literal::Bool(true)), _) | (_, L(Literal::Bool(true))) => L(Literal::Bool(true)),
            (l, r) => ScalarExpr::binary(BinaryOp::Or, l, r),
        },
        ScalarExpr::Binary { op, left, right } => {
            if let (L(a), L(b)) = (left.as_ref(), right.as_ref()) {
                if op.is_comparison() {
                    if let Some(v) = fold_compare(op, a, b) {
                        return L(Literal::Bool(v));
                    }
                } else if op.is_arithmetic() {
                    if let Some(v) = fold_arith(op, a, b) {
                        return L(v);
                    }
                }
            }
            ScalarExpr::Binary { op, left, right }
        }
        ScalarExpr::Not(inner) => match *inner {
            L(Literal::Bool(b)) => L(Literal::Bool(!b)),
            other => ScalarExpr::Not(Box::new(other)),
        },
        ScalarExpr::Neg(inner) => match *inner {
            L(Literal::Int(i)) => L(Literal::Int(-i)),
            L(Literal::Decimal(d)) => L(Literal::Decimal(-d)),
            other => ScalarExpr::Neg(Box::new(other)),
        },
        other => other,
    }
}

pub fn fold_expr(e: ScalarExpr) -> ScalarExpr {
    e.transform(&mut fold_node)
}

fn fold_constants(block: &mut QueryBlock) {
    block.map_exprs(&fold_expr);
    block.quals.retain(|q| q.expr != ScalarExpr::Literal(Literal::Bool(true)));
    for_each_child_block(block, &fold_constants);
}

fn exists_link(e: &ScalarExpr) -> Option<(&QueryBlock, bool)> {
    match e {
        ScalarExpr::SubLink(s) if s.kind == SubLinkKind::Exists => Some((&s.block, s.negated)),
        ScalarExpr::Not(inner) => exists_link(inner).map(|(b, neg)| (b, !neg)),
        _ => None,
    }
}

fn flattenable(inner: &QueryBlock) -> bool {
    let refs_outside_quals = inner
        .target_list
        .iter()
        .map(|t| &t.expr)
        .chain(inner.group_by.iter())
        .chain(inner.order_by.iter().map(|s| &s.expr))
        .any(|e| e.has_outer_ref());
    !inner.is_grouped()
        && inner.limit.is_none()
        && inner.offset.is_none()
        && inner.hints.is_empty()
        && !inner.range_table.is_empty()
        && !inner.outer_refs().is_empty()
        && !refs_outside_quals
}

pub(crate) fn unique_alias(taken: &[String], alias: &str) -> String {
    if !taken.iter().any(|a| a.eq_ignore_ascii_case(alias)) {
        return alias.to_string();
    }
    (2..)
        .map(|k| format!("{alias}_{k}"))
        .find(|a| !taken.iter().any(|t| t.eq_ignore_ascii_case(a)))
        .expect("unbounded suffixes")
}

fn combine_inner(items: Vec<JoinNode>) -> JoinNode {
    let mut it = items.into_iter();
    let first = it.next().expect("at least one from-item");
    it.fold(first, |acc, n| JoinNode::Join {
        kind: JoinKind::Inner,
        left: Box::new(acc),
        right: Box::new(n),
        quals: Vec::new(),
    })
}

/// Appends `inner`'s range table to `outer`'s, renumbering its columns and
/// turning its outer references into ordinary columns. Returns the moved block.
pub(crate) fn absorb(outer: &mut QueryBlock, inner: &QueryBlock) -> QueryBlock {
    let offset = outer.range_table.len();
    let mut moved = inner.clone();
    moved.map_own_columns(&|c| ColumnRef::new(c.rti + offset, c.col));
    moved.map_exprs(&|e| {
        e.transform(&mut |n| match n {
            ScalarExpr::Outer(c) => ScalarExpr::Column(c),
            other => other,
        })
    });
    for rte in &moved.range_table {
        let taken: Vec<String> = outer.range_table.iter().map(|r| r.alias.clone()).collect();
        let mut rte = rte.clone();
        rte.alias = unique_alias(&taken, &rte.alias);
        outer.range_table.push(rte);
    }
    moved
}

fn flatten_exists(block: &mut QueryBlock) {
    let mut i = 0;
    while i < block.quals.len() {
        let Some((inner, negated)) = exists_link(&block.quals[i].expr) else {
            i += 1;
            continue;
        };
        let referenced: RelSet = inner.outer_refs().iter().map(|c| c.rti).collect();
        let from_ok = referenced.iter().all(|r| block.jointree.iter().any(|j| j.relids().contains(r)));
        if !flattenable(inner) || !from_ok {
            i += 1;
            continue;
        }
        let inner = inner.clone();
        block.quals.remove(i);
        let moved = absorb(block, &inner);

        let first = block.jointree.iter().position(|j| j.relids().overlaps(referenced)).expect("referenced item");
        let mut left_items = Vec::new();
        let mut rest = Vec::new();
        for (k, j) in std::mem::take(&mut block.jointree).into_iter().enumerate() {
            if j.relids().overlaps(referenced) {
                left_items.push(j);
            } else {
                rest.push((k, j));
            }
        }
        let node = JoinNode::Join {
            kind: if negated { JoinKind::Anti } else { JoinKind::Semi },
            left: Box::new(combine_inner(left_items)),
            right: Box::new(combine_inner(moved.jointree)),
            quals: moved.quals,
        };
        let before = rest.iter().filter(|(k, _)| *k < first).count();
        let mut items: Vec<JoinNode> = rest.into_iter().map(|(_, j)| j).collect();
        items.insert(before, node);
        block.jointree = items;
    }
    for_each_child_block(block, &flatten_exists);
}

fn nullable_rels(block: &QueryBlock) -> RelSet {
    block.special_joins().iter().fold(RelSet::EMPTY, |acc, sj| acc.union(sj.min_right))
}

fn push_down_quals(block: &mut QueryBlock) {
    let blocked = nullable_rels(block);
    let mut kept = Vec::new();
    for q in std::mem::take(&mut block.quals) {
        let rels = q.referenced_rtis;
        let target = (rels.len() == 1 && !rels.overlaps(blocked) && !q.expr.has_sublink() && !q.expr.has_outer_ref())
            .then(|| rels.first().unwrap());
        let pushed = target.is_some_and(|r| {
            let RteKind::Subquery { block: child, .. } = &mut block.range_table[r - 1].kind else {
                return false;
            };
            if child.limit.is_some() || child.offset.is_some() {
                return false;
            }
            let ok = Cell::new(true);
            let translated = q.expr.clone().transform(&mut |n| match n {
                ScalarExpr::Column(c) => match child.target_list.get(c.col - 1) {
                    Some(t)
                        if !t.expr.has_aggregate()
                            && !t.expr.has_sublink()
                            && (child.group_by.is_empty() || child.group_by.contains(&t.expr)) =>
                    {
                        t.expr.clone()
                    }
                    _ => {
                        ok.set(false);
                        ScalarExpr::Column(c)
                    }
                },
                other => other,
            });
            if ok.get() {
                child.quals.push(Predicate::new(translated));
            }
            ok.get()
        });
        if !pushed {
            kept.push(q);
        }
    }
    block.quals = kept;
    for_each_child_block(block, &push_down_quals);
}
