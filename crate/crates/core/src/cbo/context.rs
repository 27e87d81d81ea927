//! Pre-planning analysis of one query block.

use std::collections::{BTreeSet, HashMap};

use super::cost::{product, sum, CostParams};
use super::path::PathNode;
use super::selectivity::{estimate_selectivity, ColStat};
use crate::catalog::{Catalog, DataType, Oid, TableDef};
use crate::error::{Error, Result};
use crate::frontend::ast::{BinaryOp, JoinMethod};
use crate::ir::cec::cecs_from_predicates;
use crate::ir::{
    AggFunc, ColumnEquivalenceClass, ColumnRef, JoinKind, Literal, Predicate, QueryBlock, RelSet, Rti, RteKind,
    ScalarExpr,
};

/// A predicate with the relation set at which it may be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct QualInfo {
    pub pred: Predicate,
    pub relids: RelSet,
    /// Relids were extended to keep the qual above an outer join.
    pub widened: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SjInfo {
    pub kind: JoinKind,
    pub min_left: RelSet,
    pub min_right: RelSet,
    /// Quals evaluated at the join itself.
    pub join_quals: Vec<Predicate>,
    pub selectivity: f64,
}

impl SjInfo {
    pub fn all(&self) -> RelSet {
        self.min_left.union(self.min_right)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BloomCandidate {
    pub id: usize,
    pub target_rti: Rti,
    pub source_rti: Rti,
    pub key_column: ColumnRef,
    pub source_column: ColumnRef,
    pub est_selectivity: f64,
}

#[derive(Debug, Clone)]
pub struct RelInfo {
    pub rti: Rti,
    pub alias: String,
    pub oid: Option<Oid>,
    pub raw_rows: f64,
    pub pages: f64,
    pub restrictions: Vec<Predicate>,
    pub filtered_rows: f64,
    /// Plan of the child block for a subquery entry.
    pub subquery_plan: Option<PathNode>,
}

pub struct BlockCtx<'a> {
    pub block: &'a QueryBlock,
    pub catalog: &'a Catalog,
    pub params: CostParams,
    pub inlist_join: bool,
    pub rels: Vec<RelInfo>,
    pub join_quals: Vec<QualInfo>,
    pub sjinfos: Vec<SjInfo>,
    pub hints: Vec<(RelSet, JoinMethod)>,
    pub blooms: Vec<BloomCandidate>,
    pub cecs: Vec<ColumnEquivalenceClass>,
    /// Plans of sub-link blocks keyed by block id.
    pub subplans: HashMap<u32, PathNode>,
    /// Context-free name of each range-table entry, used by the cache.
    pub labels: Vec<String>,
    pub outer_labels: Option<Vec<String>>,
    pub referenced: BTreeSet<ColumnRef>,
}

/// Cache label of each range-table entry: table OID or the subquery's canonical text.
pub fn rel_labels(block: &QueryBlock) -> Vec<String> {
    block
        .range_table
        .iter()
        .map(|r| match &r.kind {
            RteKind::Base { oid, .. } => format!("#{oid}"),
            RteKind::Subquery { block, .. } => format!("({})", block.canonical_without_targets(&|c| format!("^{c}"))),
        })
        .collect()
}

pub fn literal_type(l: &Literal) -> DataType {
    match l {
        Literal::Decimal(_) => DataType::Decimal,
        Literal::Text(_) => DataType::Text,
        Literal::Date(_) => DataType::Date,
        _ => DataType::Int,
    }
}

/// Static type of an expression evaluated in `block`.
pub fn expr_type(block: &QueryBlock, catalog: &Catalog, e: &ScalarExpr) -> DataType {
    match e {
        ScalarExpr::Column(c) => column_type(block, catalog, *c),
        ScalarExpr::Outer(_) => DataType::Int,
        ScalarExpr::Literal(l) => literal_type(l),
        ScalarExpr::Binary { op, left, right } if op.is_arithmetic() => {
            let (a, b) = (expr_type(block, catalog, left), expr_type(block, catalog, right));
            if a == DataType::Date || b == DataType::Date {
                DataType::Date
            } else if a == DataType::Decimal || b == DataType::Decimal || *op == BinaryOp::Div {
                DataType::Decimal
            } else {
                DataType::Int
            }
        }
        ScalarExpr::Neg(inner) => expr_type(block, catalog, inner),
        ScalarExpr::Agg { func: AggFunc::Count, .. } => DataType::Int,
        ScalarExpr::Agg { func: AggFunc::Sum, arg: Some(a) } => match expr_type(block, catalog, a) {
            DataType::Int => DataType::Int,
            _ => DataType::Decimal,
        },
        ScalarExpr::Agg { arg: Some(a), .. } => expr_type(block, catalog, a),
        ScalarExpr::SubLink(s) if s.kind == crate::ir::SubLinkKind::Scalar => {
            expr_type(&s.block, catalog, &s.block.target_list[0].expr)
        }
        _ => DataType::Int,
    }
}

pub fn column_type(block: &QueryBlock, catalog: &Catalog, c: ColumnRef) -> DataType {
    match &block.rte(c.rti).kind {
        RteKind::Base { oid, .. } => catalog
            .table_by_oid(*oid)
            .and_then(|t| t.column(c.col))
            .map(|d| d.datatype)
            .unwrap_or(DataType::Int),
        RteKind::Subquery { block: child, .. } => child
            .target_list
            .get(c.col - 1)
            .map(|t| expr_type(child, catalog, &t.expr))
            .unwrap_or(DataType::Int),
    }
}

fn base_table(catalog: &Catalog, oid: Oid) -> Result<&TableDef> {
    catalog.table_by_oid(oid).ok_or_else(|| Error::UnknownTable(format!("oid {oid}")))
}

impl<'a> BlockCtx<'a> {
    pub fn new(
        block: &'a QueryBlock,
        catalog: &'a Catalog,
        params: CostParams,
        inlist_join: bool,
        mut child_plans: HashMap<Rti, PathNode>,
        subplans: HashMap<u32, PathNode>,
        outer_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let mut rels = Vec::with_capacity(block.range_table.len());
        for (i, rte) in block.range_table.iter().enumerate() {
            let rti = i + 1;
            let info = match &rte.kind {
                RteKind::Base { oid, .. } => {
                    let t = base_table(catalog, *oid)?;
                    RelInfo {
                        rti,
                        alias: rte.alias.clone(),
                        oid: Some(*oid),
                        raw_rows: t.row_count.max(1.0),
                        pages: t.page_count.max(1.0),
                        restrictions: Vec::new(),
                        filtered_rows: 0.0,
                        subquery_plan: None,
                    }
                }
                RteKind::Subquery { .. } => {
                    let plan = child_plans
                        .remove(&rti)
                        .ok_or_else(|| Error::Unsupported(format!("missing plan for subquery {}", rte.alias)))?;
                    RelInfo {
                        rti,
                        alias: rte.alias.clone(),
                        oid: None,
                        raw_rows: plan.est_rows.max(1.0),
                        pages: 0.0,
                        restrictions: Vec::new(),
                        filtered_rows: 0.0,
                        subquery_plan: Some(plan),
                    }
                }
            };
            rels.push(info);
        }

        let mut ctx = BlockCtx {
            block,
            catalog,
            params,
            inlist_join,
            rels,
            join_quals: Vec::new(),
            sjinfos: Vec::new(),
            hints: Vec::new(),
            blooms: Vec::new(),
            cecs: Vec::new(),
            subplans,
            labels: rel_labels(block),
            outer_labels,
            referenced: BTreeSet::new(),
        };

        let mut quals: Vec<QualInfo> = block
            .quals
            .iter()
            .chain(block.inner_join_quals().iter())
            .map(|p| QualInfo { pred: p.clone(), relids: p.referenced_rtis, widened: false })
            .collect();
        let n_where = block.quals.len();
        for sj in block.special_joins() {
            let mut join_quals = Vec::new();
            for q in sj.quals {
                if !q.referenced_rtis.is_empty() && q.referenced_rtis.is_subset(sj.min_right) {
                    quals.push(QualInfo { relids: q.referenced_rtis, pred: q, widened: false });
                } else {
                    join_quals.push(q);
                }
            }
            ctx.sjinfos.push(SjInfo {
                kind: sj.join_type,
                min_left: sj.min_left,
                min_right: sj.min_right,
                join_quals,
                selectivity: 1.0,
            });
        }
        // WHERE quals touching a nullable side stay above the outer join.
        loop {
            let mut changed = false;
            for q in quals.iter_mut().take(n_where) {
                for sj in ctx.sjinfos.iter().filter(|s| s.kind == JoinKind::Left) {
                    if q.relids.overlaps(sj.min_right) && !sj.all().is_subset(q.relids) {
                        q.relids = q.relids.union(sj.all());
                        q.widened = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let cec_source: Vec<&Predicate> = quals.iter().filter(|q| !q.widened).map(|q| &q.pred).collect();
        ctx.cecs = cecs_from_predicates(cec_source);

        for q in quals {
            match q.relids.len() {
                0 if !ctx.rels.is_empty() => ctx.rels[0].restrictions.push(q.pred),
                1 => {
                    let r = q.relids.first().unwrap();
                    ctx.rels[r - 1].restrictions.push(q.pred);
                }
                _ => ctx.join_quals.push(q),
            }
        }

        for i in 0..ctx.rels.len() {
            let sels: Vec<f64> = ctx.rels[i].restrictions.iter().map(|p| ctx.selectivity(&p.expr)).collect();
            ctx.rels[i].filtered_rows = (ctx.rels[i].raw_rows * product(sels)).max(1.0);
        }
        for j in 0..ctx.sjinfos.len() {
            let sels: Vec<f64> = ctx.sjinfos[j].join_quals.iter().map(|p| ctx.selectivity(&p.expr)).collect();
            ctx.sjinfos[j].selectivity = product(sels);
        }

        for h in &block.hints {
            let set: RelSet = h.table_names.iter().filter_map(|n| block.rti_of_alias(n)).collect();
            ctx.hints.push((set, h.method));
        }

        for e in block.expressions() {
            ctx.referenced.extend(e.column_refs());
            for s in e.sublinks() {
                ctx.referenced.extend(s.block.outer_refs());
            }
        }
        ctx.blooms = ctx.find_bloom_candidates();
        Ok(ctx)
    }

    pub fn n_rels(&self) -> usize {
        self.rels.len()
    }

    pub fn rel(&self, rti: Rti) -> &RelInfo {
        &self.rels[rti - 1]
    }

    pub fn all_relids(&self) -> RelSet {
        self.block.all_relids()
    }

    pub fn col_stat(&self, c: ColumnRef) -> Option<ColStat> {
        let rel = self.rels.get(c.rti.checked_sub(1)?)?;
        match &self.block.rte(c.rti).kind {
            RteKind::Base { oid, .. } => {
                let col = self.catalog.table_by_oid(*oid)?.column(c.col)?;
                Some(ColStat {
                    ndv: col.stats.ndv.max(1.0),
                    min: col.stats.min_val.as_ref().and_then(|v| v.as_f64()),
                    max: col.stats.max_val.as_ref().and_then(|v| v.as_f64()),
                })
            }
            RteKind::Subquery { block: child, .. } => {
                let rows = rel.raw_rows;
                let target = child.target_list.get(c.col - 1)?;
                if let ScalarExpr::Column(inner) = &target.expr {
                    if let RteKind::Base { oid, .. } = &child.rte(inner.rti).kind {
                        let col = self.catalog.table_by_oid(*oid)?.column(inner.col)?;
                        return Some(ColStat {
                            ndv: col.stats.ndv.min(rows).max(1.0),
                            min: col.stats.min_val.as_ref().and_then(|v| v.as_f64()),
                            max: col.stats.max_val.as_ref().and_then(|v| v.as_f64()),
                        });
                    }
                }
                Some(ColStat { ndv: rows, min: None, max: None })
            }
        }
    }

    pub fn selectivity(&self, e: &ScalarExpr) -> f64 {
        estimate_selectivity(e, &|c| self.col_stat(c))
    }

    pub fn width_of(&self, e: &ScalarExpr) -> f64 {
        expr_type(self.block, self.catalog, e).width() as f64
    }

    pub fn target_width(&self) -> f64 {
        sum(self.block.target_list.iter().map(|t| self.width_of(&t.expr)).collect()).max(1.0)
    }

    /// Columns of the given relations referenced anywhere in the block.
    pub fn output_cols(&self, relids: RelSet) -> Vec<(ColumnRef, DataType)> {
        self.referenced
            .iter()
            .filter(|c| relids.contains(c.rti))
            .map(|c| (*c, column_type(self.block, self.catalog, *c)))
            .collect()
    }

    /// Added cost and plans of the sub-links in `preds`, evaluated over `rows` input rows.
    pub fn subplan_cost(&self, preds: &[&ScalarExpr], rows: f64) -> (f64, Vec<PathNode>) {
        let mut costs = Vec::new();
        let mut plans = Vec::new();
        for e in preds {
            for s in e.sublinks() {
                let Some(plan) = self.subplans.get(&s.block.block_id) else { continue };
                if s.is_correlated() {
                    costs.push(rows * plan.cost.total);
                } else {
                    costs.push(plan.cost.total + rows * self.params.cpu_operator);
                }
                plans.push(plan.clone());
            }
        }
        plans.sort_by_cached_key(|p| p.digest_text());
        (sum(costs), plans)
    }

    fn find_bloom_candidates(&self) -> Vec<BloomCandidate> {
        let mut out = Vec::new();
        for q in &self.join_quals {
            if q.widened || q.relids.len() != 2 {
                continue;
            }
            let Some((a, b)) = q.pred.as_column_equality() else { continue };
            if a.rti == b.rti {
                continue;
            }
            for (source, target) in [(a, b), (b, a)] {
                let (s, t) = (self.rel(source.rti), self.rel(target.rti));
                if s.oid.is_none() || t.oid.is_none() {
                    continue;
                }
                if s.filtered_rows > 0.5 * t.filtered_rows {
                    continue;
                }
                let (Some(ss), Some(ts)) = (self.col_stat(source), self.col_stat(target)) else { continue };
                let source_ndv = ss.ndv.min(s.filtered_rows);
                let sel = (source_ndv / ts.ndv.max(1.0)).clamp(super::selectivity::MIN_SELECTIVITY, 1.0);
                out.push(BloomCandidate {
                    id: 0,
                    target_rti: target.rti,
                    source_rti: source.rti,
                    key_column: target,
                    source_column: source,
                    est_selectivity: sel,
                });
            }
        }
        out.sort_by(|x, y| {
            (x.target_rti, x.key_column, x.source_column).cmp(&(y.target_rti, y.key_column, y.source_column))
        });
        out.dedup_by(|x, y| x.key_column == y.key_column && x.source_column == y.source_column);
        for (i, b) in out.iter_mut().enumerate() {
            b.id = i;
        }
        out
    }

    pub fn blooms_for(&self, rti: Rti) -> Vec<&BloomCandidate> {
        self.blooms.iter().filter(|b| b.target_rti == rti).collect()
    }

    /// Special joins fully contained in `s` that are not nested in another contained one.
    fn top_complete_sjs(&self, s: RelSet) -> Vec<&SjInfo> {
        let complete: Vec<&SjInfo> = self.sjinfos.iter().filter(|j| j.all().is_subset(s)).collect();
        complete
            .iter()
            .filter(|j| {
                !complete
                    .iter()
                    .any(|k| k.min_right != j.min_right && j.all().is_subset(k.min_right))
            })
            .copied()
            .collect()
    }

    /// Estimated rows of a join relation. Depends only on the set, not on how it was built.
    pub fn rel_rows(&self, s: RelSet) -> f64 {
        let tops = self.top_complete_sjs(s);
        let hidden = tops.iter().fold(RelSet::EMPTY, |acc, j| acc.union(j.min_right));
        let mut factors: Vec<f64> = s.minus(hidden).iter().map(|r| self.rel(r).filtered_rows).collect();
        for q in &self.join_quals {
            if q.relids.is_subset(s) && !tops.iter().any(|j| q.relids.is_subset(j.min_right)) {
                factors.push(self.selectivity(&q.pred.expr));
            }
        }
        for j in tops {
            let inner = self.rel_rows(j.min_right);
            let matched = j.selectivity * inner;
            factors.push(match j.kind {
                JoinKind::Semi => matched.min(1.0),
                JoinKind::Anti => 1.0 - matched.min(1.0),
                JoinKind::Left => matched.max(1.0),
                JoinKind::Inner => matched,
            });
        }
        product(factors).max(1.0)
    }

    pub fn cecs_within(&self, s: RelSet) -> Vec<BTreeSet<ColumnRef>> {
        self.cecs
            .iter()
            .map(|c| c.members.iter().filter(|m| s.contains(m.rti)).copied().collect::<BTreeSet<_>>())
            .filter(|m| !m.is_empty())
            .collect()
    }
}
