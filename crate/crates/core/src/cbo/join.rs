//! Join legality and join-path construction shared by the DP and by tests.

use std::cmp::Ordering;

use super::context::{BlockCtx, SjInfo};
use super::path::{PathNode, PathOp};
use crate::frontend::ast::JoinMethod;
use crate::ir::{JoinKind, RelSet, ScalarExpr};
use crate::session::Counters;

/// Special join that the split (outer `l`, inner `r`) performs, if any.
pub fn implemented_sj<'c>(ctx: &'c BlockCtx, l: RelSet, r: RelSet) -> Option<&'c SjInfo> {
    ctx.sjinfos
        .iter()
        .find(|j| r == j.min_right && j.min_left.is_subset(l))
}

/// Outer/semi/anti ordering constraints for joining `l` (outer) with `r` (inner).
pub fn split_is_legal(ctx: &BlockCtx, l: RelSet, r: RelSet) -> bool {
    let u = l.union(r);
    ctx.sjinfos.iter().all(|j| {
        let all = j.all();
        !j.min_right.overlaps(u)
            || u.is_subset(j.min_right)
            || all.is_subset(l)
            || all.is_subset(r)
            || (r == j.min_right && j.min_left.is_subset(l))
    })
}

/// A hinted table set must appear as one join node: it may not be split apart.
pub fn hint_allows(ctx: &BlockCtx, l: RelSet, r: RelSet) -> bool {
    let u = l.union(r);
    ctx.hints
        .iter()
        .all(|(h, _)| !(h.is_subset(u) && *h != u) || h.is_subset(l) || h.is_subset(r))
}

/// True if some qual links the two sides, or the split performs a special join.
pub fn connected(ctx: &BlockCtx, l: RelSet, r: RelSet) -> bool {
    let u = l.union(r);
    implemented_sj(ctx, l, r).is_some()
        || ctx
            .join_quals
            .iter()
            .any(|q| q.relids.is_subset(u) && q.relids.overlaps(l) && q.relids.overlaps(r))
}

pub fn path_cmp(a: &PathNode, b: &PathNode) -> Ordering {
    a.cost
        .cmp_total(&b.cost)
        .then_with(|| a.digest_text().cmp(&b.digest_text()))
}

fn method_op(m: JoinMethod) -> PathOp {
    match m {
        JoinMethod::NestLoop => PathOp::NestLoop,
        JoinMethod::HashJoin => PathOp::HashJoin,
        JoinMethod::MergeJoin => PathOp::MergeJoin,
    }
}

/// All join paths for outer `outer` and inner `inner`, with `rows` output rows.
/// Paths violating a join-method hint on the combined set are not produced.
pub fn join_candidates(
    ctx: &BlockCtx,
    outer: &PathNode,
    inner: &PathNode,
    rows: f64,
    counters: &mut Counters,
) -> Vec<PathNode> {
    let (l, r) = (outer.relids, inner.relids);
    let s = l.union(r);
    let sj = implemented_sj(ctx, l, r);
    let mut applied: Vec<&ScalarExpr> = ctx
        .join_quals
        .iter()
        .filter(|q| q.relids.is_subset(s) && !q.relids.is_subset(l) && !q.relids.is_subset(r))
        .map(|q| &q.pred.expr)
        .collect();
    if let Some(j) = sj {
        applied.extend(j.join_quals.iter().map(|p| &p.expr));
    }
    let equi = applied.iter().any(|e| match e {
        ScalarExpr::Binary { op: crate::frontend::ast::BinaryOp::Eq, left, right } => {
            match (left.as_ref(), right.as_ref()) {
                (ScalarExpr::Column(a), ScalarExpr::Column(b)) => {
                    (l.contains(a.rti) && r.contains(b.rti)) || (l.contains(b.rti) && r.contains(a.rti))
                }
                _ => false,
            }
        }
        _ => false,
    });
    let kind = sj.map(|j| j.kind).unwrap_or(JoinKind::Inner);
    let mut methods = vec![PathOp::NestLoop];
    if equi {
        methods.push(PathOp::HashJoin);
        if matches!(kind, JoinKind::Inner | JoinKind::Left) {
            methods.push(PathOp::MergeJoin);
        }
    }
    if let Some((_, m)) = ctx.hints.iter().find(|(h, _)| *h == s) {
        let want = method_op(*m);
        methods.retain(|op| *op == want);
    }
    let (sub_cost, subplans) = ctx.subplan_cost(&applied, rows);
    let p = &ctx.params;
    methods
        .into_iter()
        .map(|op| {
            counters.cost_path_calls += 1;
            counters.paths_built += 1;
            let mut cost = match op {
                PathOp::NestLoop => p.nestloop(outer.cost, outer.est_rows, inner.cost, inner.est_rows, rows),
                PathOp::HashJoin => p.hashjoin(outer.cost, outer.est_rows, inner.cost, inner.est_rows, rows),
                _ => p.mergejoin(outer.cost, outer.est_rows, inner.cost, inner.est_rows, rows),
            };
            cost.total += sub_cost;
            PathNode {
                op,
                join_kind: Some(kind),
                label: String::new(),
                rti: None,
                index: None,
                relids: s,
                children: vec![outer.clone(), inner.clone()],
                subplans: subplans.clone(),
                est_rows: rows,
                cost,
                required_hint_ok: outer.required_hint_ok && inner.required_hint_ok,
                bloom_filters_applied: Vec::new(),
            }
        })
        .collect()
}
