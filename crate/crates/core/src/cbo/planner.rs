use std::cmp::Ordering;
use std::collections::HashMap;

use super::base::base_paths;
use super::context::{rel_labels, BlockCtx};
use super::cost::{product, sum, Cost};
use super::join::{connected, hint_allows, join_candidates, path_cmp, split_is_legal};
use super::path::{PathNode, PathOp};
use super::{IntermediatePlan, Level};
use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::ir::{QueryBlock, QueryTree, RelSet, Rti, RteKind, ScalarExpr};
use crate::plancache::{BlockDescriptor, RelDescriptor, RelKey};
use crate::session::{Counters, OptimizerSession};

pub const MAX_JOIN_RELS: usize = 16;

/// Upper-bound bookkeeping for one planning attempt.
struct Bound {
    limit: Option<f64>,
    witness: Option<Cost>,
}

impl Bound {
    fn new(limit: Option<f64>) -> Self {
        Self { limit, witness: None }
    }

    /// False (and a prune event) when `cost` is strictly above the bound.
    fn admits(&mut self, cost: Cost, counters: &mut Counters) -> bool {
        match self.limit {
            Some(b) if cost.total > b => {
                counters.prune_events += 1;
                if self.witness.is_none_or(|w| cost.cmp_total(&w) == Ordering::Less) {
                    self.witness = Some(cost);
                }
                false
            }
            _ => true,
        }
    }
}

/// Planned inputs a block needs before its own rels can be costed.
pub struct BlockInputs {
    pub child_plans: HashMap<Rti, PathNode>,
    pub subplans: HashMap<u32, PathNode>,
}

/// A LIMIT over a pipelined input can make a plan cheaper than its inputs,
/// which would make pruning unsound.
fn limit_breaks_monotonicity(block: &QueryBlock) -> bool {
    block.limit.is_some() && block.order_by.is_empty() && !block.is_grouped() && !block.distinct
}

fn plan_inputs(
    session: &mut OptimizerSession,
    block: &QueryBlock,
    bound: Option<f64>,
) -> Result<std::result::Result<BlockInputs, Cost>> {
    let labels = rel_labels(block);
    let mut child_plans = HashMap::new();
    for (i, rte) in block.range_table.iter().enumerate() {
        if let RteKind::Subquery { block: child, .. } = &rte.kind {
            let p = plan_block(session, child, bound, None)?;
            if p.bound_exceeded {
                return Ok(Err(p.cheapest_cost));
            }
            child_plans.insert(i + 1, p.paths[0].clone());
        }
    }
    let mut subplans = HashMap::new();
    for s in block.sublinks() {
        let p = plan_block(session, &s.block, bound, Some(&labels))?;
        if p.bound_exceeded {
            return Ok(Err(p.cheapest_cost));
        }
        subplans.insert(s.block.block_id, p.paths[0].clone());
    }
    Ok(Ok(BlockInputs { child_plans, subplans }))
}

/// Plans child blocks without a bound and builds the block's planning context.
pub fn prepare_block<'a>(
    session: &mut OptimizerSession,
    catalog: &'a Catalog,
    block: &'a QueryBlock,
    outer_labels: Option<&[String]>,
) -> Result<BlockCtx<'a>> {
    let inputs = plan_inputs(session, block, None)?.expect("unbounded planning cannot exceed");
    BlockCtx::new(
        block,
        catalog,
        session.config.params,
        session.config.inlist_join,
        inputs.child_plans,
        inputs.subplans,
        outer_labels.map(|l| l.to_vec()),
    )
}

/// Plans the root block of `tree`. Counts as one optimizer invocation.
pub fn plan_tree(session: &mut OptimizerSession, tree: &QueryTree, bound: Option<f64>) -> Result<IntermediatePlan> {
    session.counters.cbo_invocations += 1;
    plan_block(session, &tree.root, bound, None)
}

fn outer_refs_unambiguous(block: &QueryBlock, outer_labels: Option<&[String]>) -> bool {
    let Some(labels) = outer_labels else { return true };
    block.outer_refs().iter().all(|c| {
        let l = &labels[c.rti - 1];
        labels.iter().filter(|x| *x == l).count() == 1
    })
}

pub fn plan_block(
    session: &mut OptimizerSession,
    block: &QueryBlock,
    bound: Option<f64>,
    outer_labels: Option<&[String]>,
) -> Result<IntermediatePlan> {
    // Under such a limit only the finished block can be held to the bound.
    let inner_bound = if limit_breaks_monotonicity(block) { None } else { bound };
    let catalog = session.catalog.clone();
    let relids = block.all_relids();

    let descriptor = (session.cache_enabled() && outer_refs_unambiguous(block, outer_labels))
        .then(|| BlockDescriptor::new(block, outer_labels, session.config.inlist_join));
    if let Some(d) = &descriptor {
        if let Some(plan) = session.cache.lookup_block(d) {
            if bound.is_some_and(|b| plan.cheapest_cost.total > b) {
                session.counters.prune_events += 1;
                return Ok(IntermediatePlan::exceeded(Level::Block, relids, plan.cheapest_cost));
            }
            return Ok(plan);
        }
    }

    let inputs = match plan_inputs(session, block, inner_bound)? {
        Ok(i) => i,
        Err(w) => return Ok(IntermediatePlan::exceeded(Level::Block, relids, w)),
    };
    let ctx = BlockCtx::new(
        block,
        &catalog,
        session.config.params,
        session.config.inlist_join,
        inputs.child_plans,
        inputs.subplans,
        outer_labels.map(|l| l.to_vec()),
    )?;
    let mut tracker = Bound::new(inner_bound);
    let Some(joined) = plan_joins(session, &ctx, &mut tracker)? else {
        return match tracker.witness {
            Some(w) => Ok(IntermediatePlan::exceeded(Level::Block, relids, w)),
            None => Err(Error::NoLegalPlan("no join order satisfies the join hints".into())),
        };
    };
    let top = finish_upper(&ctx, joined, &mut session.counters);
    if !tracker.admits(top.cost, &mut session.counters) {
        let w = tracker.witness.unwrap_or(top.cost);
        return Ok(IntermediatePlan::exceeded(Level::Block, relids, w));
    }
    if inner_bound.is_none() && bound.is_some_and(|b| top.cost.total > b) {
        session.counters.prune_events += 1;
        return Ok(IntermediatePlan::exceeded(Level::Block, relids, top.cost));
    }
    let plan = IntermediatePlan {
        level: Level::Block,
        relids,
        cheapest_cost: top.cost,
        paths: vec![top],
        restrictions: block.quals.clone(),
        join_preds: Vec::new(),
        output_cols: block
            .target_list
            .iter()
            .enumerate()
            .map(|(i, t)| {
                (
                    crate::ir::ColumnRef::new(0, i + 1),
                    super::context::expr_type(block, &catalog, &t.expr),
                )
            })
            .collect(),
        bloom_candidates: ctx.blooms.clone(),
        cec_count: ctx.cecs.len(),
        subquery_count: ctx.rels.iter().filter(|r| r.subquery_plan.is_some()).count(),
        lateral_count: block.outer_refs().len(),
        bound_exceeded: false,
    };
    if let Some(d) = descriptor {
        session.cache.insert_block(d, plan.clone());
    }
    Ok(plan)
}

fn masks_by_size(n: usize) -> Vec<u64> {
    let mut masks: Vec<u64> = (1..(1u64 << n)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks
}

fn submasks(s: u64) -> impl Iterator<Item = u64> {
    let mut l = (s.wrapping_sub(1)) & s;
    std::iter::from_fn(move || {
        if l == 0 {
            return None;
        }
        let cur = l;
        l = (l - 1) & s;
        Some(cur)
    })
}

pub fn split_ok(ctx: &BlockCtx, l: RelSet, r: RelSet, allow_cross: bool) -> bool {
    split_is_legal(ctx, l, r) && hint_allows(ctx, l, r) && (allow_cross || connected(ctx, l, r))
}

/// Whether the full rel set can be assembled at all, ignoring costs.
pub fn formable(ctx: &BlockCtx, allow_cross: bool) -> bool {
    let n = ctx.n_rels();
    let mut ok: std::collections::HashSet<u64> = (0..n).map(|i| 1u64 << i).collect();
    for s in masks_by_size(n).into_iter().filter(|m| m.count_ones() >= 2) {
        let can = submasks(s).any(|l| {
            let r = s ^ l;
            ok.contains(&l)
                && ok.contains(&r)
                && split_ok(ctx, RelSet::from_bits(l), RelSet::from_bits(r), allow_cross)
        });
        if can {
            ok.insert(s);
        }
    }
    ok.contains(&((1u64 << n) - 1))
}

/// Cheapest unbounded join path over all rels of `ctx`.
pub fn best_join_path(session: &mut OptimizerSession, ctx: &BlockCtx) -> Result<Option<PathNode>> {
    plan_joins(session, ctx, &mut Bound::new(None))
}

fn plan_joins(session: &mut OptimizerSession, ctx: &BlockCtx, tracker: &mut Bound) -> Result<Option<PathNode>> {
    let n = ctx.n_rels();
    if n == 0 {
        return Err(Error::Unsupported("query block without FROM".into()));
    }
    if n > MAX_JOIN_RELS {
        return Err(Error::Unsupported(format!("more than {MAX_JOIN_RELS} relations in one block")));
    }
    let use_cache = session.cache_enabled() && outer_refs_unambiguous(ctx.block, ctx.outer_labels.as_deref());
    let mut memo: HashMap<u64, PathNode> = HashMap::new();
    let keys: Vec<RelKey> = if use_cache { (1..=n).map(|r| RelKey::of(ctx.block, r)).collect() } else { Vec::new() };

    for rti in 1..=n {
        let s = RelSet::single(rti);
        let descriptor = use_cache.then(|| RelDescriptor::with_keys(ctx, s, Level::Base, &keys));
        let cached = descriptor.as_ref().and_then(|d| session.cache.lookup_rel(d));
        let mut paths = match cached {
            Some(p) => p,
            None => {
                let p = base_paths(ctx, rti, &mut session.counters);
                if let Some(d) = descriptor {
                    let mut sorted = p.clone();
                    sorted.sort_by(path_cmp);
                    session.cache.insert_rel(d, sorted);
                }
                p
            }
        };
        paths.sort_by(path_cmp);
        let best = paths.swap_remove(0);
        if tracker.admits(best.cost, &mut session.counters) {
            memo.insert(s.bits(), best);
        }
    }
    let full = (1u64 << n) - 1;
    if n == 1 {
        return Ok(memo.remove(&full));
    }
    if memo.len() < n {
        return Ok(None);
    }
    // Any completion of a rel set still has to scan every rel outside it.
    let leaf_cost: Vec<f64> = (0..n).map(|i| memo[&(1u64 << i)].cost.total).collect();
    let rest = |s: u64| sum((0..n).filter(|i| s & (1u64 << i) == 0).map(|i| leaf_cost[i]).collect());

    let allow_cross = !formable(ctx, false);
    if allow_cross && !formable(ctx, true) {
        return Err(Error::NoLegalPlan("join-order constraints cannot be satisfied".into()));
    }
    // Cross-product plans are never shared through the cache.
    let use_cache = use_cache && !allow_cross;

    for s in masks_by_size(n).into_iter().filter(|m| m.count_ones() >= 2) {
        let splits: Vec<(u64, u64)> = submasks(s)
            .map(|l| (l, s ^ l))
            .filter(|(l, r)| {
                memo.contains_key(l)
                    && memo.contains_key(r)
                    && split_ok(ctx, RelSet::from_bits(*l), RelSet::from_bits(*r), allow_cross)
            })
            .collect();
        if splits.is_empty() {
            continue;
        }
        let set = RelSet::from_bits(s);
        let descriptor = use_cache.then(|| RelDescriptor::with_keys(ctx, set, Level::Join, &keys));
        if let Some(d) = &descriptor {
            if let Some(paths) = session.cache.lookup_rel(d) {
                let best = paths.into_iter().next().expect("cached rel has a path");
                if tracker.admits(best.cost, &mut session.counters) {
                    memo.insert(s, best);
                }
                continue;
            }
        }
        let rows = ctx.rel_rows(set);
        let mut best: Option<PathNode> = None;
        for (l, r) in splits {
            // Every join method costs at least both inputs.
            let floor = memo[&l].cost.total + memo[&r].cost.total + rest(s);
            if !tracker.admits(Cost::new(floor, floor), &mut session.counters) {
                continue;
            }
            for cand in join_candidates(ctx, &memo[&l], &memo[&r], rows, &mut session.counters) {
                let reach = cand.cost.total + rest(s);
                if !tracker.admits(Cost::new(reach, reach), &mut session.counters) {
                    continue;
                }
                if best.as_ref().is_none_or(|b| path_cmp(&cand, b) == Ordering::Less) {
                    best = Some(cand);
                }
            }
        }
        if let Some(b) = best {
            if let Some(d) = descriptor {
                session.cache.insert_rel(d, vec![b.clone()]);
            }
            memo.insert(s, b);
        }
    }
    Ok(memo.remove(&full))
}

fn count_aggs(block: &QueryBlock) -> usize {
    let mut n = 0;
    for e in block.target_list.iter().map(|t| &t.expr).chain(block.order_by.iter().map(|s| &s.expr)) {
        e.visit(&mut |x| n += matches!(x, ScalarExpr::Agg { .. }) as usize);
    }
    n
}

fn distinct_rows(ctx: &BlockCtx, exprs: &[&ScalarExpr], input: f64) -> f64 {
    let ndvs: Vec<f64> = exprs
        .iter()
        .map(|e| match e {
            ScalarExpr::Column(c) => ctx.col_stat(*c).map(|s| s.ndv).unwrap_or(input),
            _ => input,
        })
        .collect();
    product(ndvs).min(input).max(1.0)
}

/// Adds aggregation, distinct, sort and limit above the joined rels.
pub fn finish_upper(ctx: &BlockCtx, joined: PathNode, counters: &mut Counters) -> PathNode {
    let block = ctx.block;
    let p = &ctx.params;
    let width = ctx.target_width();
    let mut top = joined;
    let bump = |counters: &mut Counters| {
        counters.cost_path_calls += 1;
        counters.paths_built += 1;
    };

    if block.is_grouped() {
        bump(counters);
        let input = top.est_rows;
        let groups = if block.group_by.is_empty() {
            1.0
        } else {
            distinct_rows(ctx, &block.group_by.iter().collect::<Vec<_>>(), input)
        };
        let spill = if p.spills(groups, width) { 2.0 } else { 1.0 };
        let total = top.cost.total
            + input * (p.cpu_tuple + p.hash_build) * spill
            + input * count_aggs(block) as f64 * p.cpu_operator;
        top = PathNode::unary(PathOp::Agg, top, groups, Cost::new(total, total));
    }
    if block.distinct {
        bump(counters);
        let input = top.est_rows;
        let targets: Vec<&ScalarExpr> = block.target_list.iter().map(|t| &t.expr).collect();
        let rows = if block.is_grouped() { input } else { distinct_rows(ctx, &targets, input) };
        let total = top.cost.total + p.hash_distinct(input, width);
        top = PathNode::unary(PathOp::Distinct, top, rows, Cost::new(total, total));
    }
    let targets: Vec<&ScalarExpr> = block.target_list.iter().map(|t| &t.expr).collect();
    let (sub, plans) = ctx.subplan_cost(&targets, top.est_rows);
    if !plans.is_empty() {
        top.cost.total += sub;
        top.subplans.extend(plans);
    }
    if !block.order_by.is_empty() {
        bump(counters);
        let total = top.cost.total + p.sort(top.est_rows);
        let rows = top.est_rows;
        top = PathNode::unary(PathOp::Sort, top, rows, Cost::new(total, total));
    }
    if let Some(limit) = block.limit {
        bump(counters);
        let count = limit as f64 + block.offset.unwrap_or(0) as f64;
        let rows = top.est_rows.min(limit as f64).max(1.0);
        let cost = p.limit(top.cost, top.est_rows, count);
        top = PathNode::unary(PathOp::Limit, top, rows, cost);
    }
    top
}
