use std::collections::BTreeSet;

use super::mapping::IdMapping;
use super::Signature;
use crate::catalog::{DataType, Oid};
use crate::cbo::context::SjInfo;
use crate::cbo::{BlockCtx, BloomCandidate, Level};
use crate::frontend::ast::JoinMethod;
use crate::ir::cec::derive_cecs;
use crate::ir::{ColumnRef, Predicate, QueryBlock, RelSet, Rti, RteKind, ScalarExpr};

/// How a range-table entry is recognised across blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelKey {
    Base(Oid),
    Subquery { canon: String, targets: Vec<String> },
}

impl RelKey {
    pub fn of(block: &QueryBlock, rti: Rti) -> RelKey {
        match &block.rte(rti).kind {
            RteKind::Base { oid, .. } => RelKey::Base(*oid),
            RteKind::Subquery { block: child, .. } => RelKey::Subquery {
                canon: child.canonical_without_targets(&|c| format!("^{c}")),
                targets: child
                    .target_list
                    .iter()
                    .map(|t| t.expr.canonical_with(&|c| format!("^{c}")))
                    .collect(),
            },
        }
    }

    pub(crate) fn same_relation(&self, other: &RelKey) -> bool {
        match (self, other) {
            (RelKey::Base(a), RelKey::Base(b)) => a == b,
            (RelKey::Subquery { canon: a, targets: ta }, RelKey::Subquery { canon: b, targets: tb }) => {
                let mut x = ta.clone();
                let mut y = tb.clone();
                x.sort();
                y.sort();
                a == b && x == y
            }
            _ => false,
        }
    }
}

/// Everything that determines the plans of one relation set.
#[derive(Debug, Clone)]
pub struct RelDescriptor {
    pub level: Level,
    pub relids: RelSet,
    pub rels: Vec<(Rti, RelKey)>,
    pub signature: Signature,
    restrictions: Vec<Predicate>,
    join_quals: Vec<(RelSet, Predicate)>,
    join_preds: Vec<Predicate>,
    output_cols: Vec<(ColumnRef, DataType)>,
    blooms: Vec<BloomCandidate>,
    sjinfos: Vec<SjInfo>,
    hints: Vec<(RelSet, JoinMethod)>,
    cecs: Vec<BTreeSet<ColumnRef>>,
    inlist_join: bool,
    labels: Vec<String>,
    outer_labels: Option<Vec<String>>,
    pub(crate) aliases: Vec<String>,
}

impl RelDescriptor {
    pub fn new(ctx: &BlockCtx, s: RelSet, level: Level) -> Self {
        let keys: Vec<RelKey> = (1..=ctx.n_rels()).map(|r| RelKey::of(ctx.block, r)).collect();
        Self::with_keys(ctx, s, level, &keys)
    }

    /// Like `new`, with the block's rel keys (indexed by rti - 1) computed once by the caller.
    pub fn with_keys(ctx: &BlockCtx, s: RelSet, level: Level, keys: &[RelKey]) -> Self {
        let block = ctx.block;
        let rels: Vec<(Rti, RelKey)> = s.iter().map(|r| (r, keys[r - 1].clone())).collect();
        let restrictions: Vec<Predicate> = s.iter().flat_map(|r| ctx.rel(r).restrictions.iter().cloned()).collect();
        let join_quals: Vec<(RelSet, Predicate)> = ctx
            .join_quals
            .iter()
            .filter(|q| q.relids.is_subset(s))
            .map(|q| (q.relids, q.pred.clone()))
            .collect();
        let join_preds: Vec<Predicate> = ctx
            .join_quals
            .iter()
            .filter(|q| q.relids.overlaps(s) && !q.relids.is_subset(s))
            .map(|q| q.pred.clone())
            .collect();
        let output_cols = ctx.output_cols(s);
        let blooms: Vec<BloomCandidate> = ctx.blooms.iter().filter(|b| s.contains(b.target_rti)).cloned().collect();
        let sjinfos: Vec<SjInfo> = ctx.sjinfos.iter().filter(|j| j.all().overlaps(s)).cloned().collect();
        let hints: Vec<(RelSet, JoinMethod)> = ctx.hints.iter().filter(|(h, _)| h.is_subset(s)).copied().collect();
        let cecs = ctx.cecs_within(s);
        let lateral_count = restrictions
            .iter()
            .chain(join_quals.iter().map(|(_, p)| p))
            .filter(|p| p.expr.has_outer_ref())
            .count();
        let mut oids: Vec<Oid> = rels
            .iter()
            .filter_map(|(_, k)| match k {
                RelKey::Base(o) => Some(*o),
                RelKey::Subquery { .. } => None,
            })
            .collect();
        oids.sort_unstable();
        let subquery_count = rels.len() - oids.len();
        let signature = Signature {
            level,
            oids,
            bloom_count: blooms.len(),
            restriction_count: restrictions.len() + join_quals.len(),
            join_pred_count: join_preds.len(),
            lateral_count,
            output_count: output_cols.len(),
            cec_count: cecs.len(),
            subquery_count,
        };
        Self {
            level,
            relids: s,
            rels,
            signature,
            restrictions,
            join_quals,
            join_preds,
            output_cols,
            blooms,
            sjinfos,
            hints,
            cecs,
            inlist_join: ctx.inlist_join,
            labels: ctx.labels.clone(),
            outer_labels: ctx.outer_labels.clone(),
            aliases: block.range_table.iter().map(|r| r.alias.clone()).collect(),
        }
    }

    fn col_text(&self, m: &IdMapping, c: ColumnRef) -> String {
        if self.relids.contains(c.rti) {
            let (r, col) = m.map_column(c).expect("in-set column is mapped");
            format!("{r}.{col}")
        } else {
            format!("{}.{}", self.labels[c.rti - 1], c.col)
        }
    }

    fn outer_text(&self, c: ColumnRef) -> String {
        let label = self
            .outer_labels
            .as_ref()
            .and_then(|l| l.get(c.rti - 1))
            .map(String::as_str)
            .unwrap_or("?");
        format!("^{label}.{}", c.col)
    }

    fn expr_text(&self, m: &IdMapping, e: &ScalarExpr) -> String {
        e.render(&|c| self.col_text(m, c), &|c| self.outer_text(c))
    }

    fn set_text(&self, m: &IdMapping, s: RelSet) -> String {
        let mut parts: Vec<String> = s
            .iter()
            .map(|r| match m.map_rti(r) {
                Some(x) if self.relids.contains(r) => x.to_string(),
                _ => self.labels[r - 1].clone(),
            })
            .collect();
        parts.sort();
        format!("{{{}}}", parts.join(","))
    }

    /// Sorted multiset of every planning input, spelled through `m`.
    pub(crate) fn render(&self, m: &IdMapping) -> Vec<String> {
        let mut out = Vec::new();
        for p in &self.restrictions {
            out.push(format!("R {}", self.expr_text(m, &p.expr)));
        }
        for (set, p) in &self.join_quals {
            out.push(format!("Q {} {}", self.set_text(m, *set), self.expr_text(m, &p.expr)));
        }
        for p in &self.join_preds {
            out.push(format!("P {}", self.expr_text(m, &p.expr)));
        }
        for (c, t) in &self.output_cols {
            out.push(format!("O {} {}", self.col_text(m, *c), t.name()));
        }
        for b in &self.blooms {
            out.push(format!(
                "B {} {} {:x}",
                self.col_text(m, b.key_column),
                self.col_text(m, b.source_column),
                b.est_selectivity.to_bits()
            ));
        }
        for j in &self.sjinfos {
            let mut quals: Vec<String> = j.join_quals.iter().map(|q| self.expr_text(m, &q.expr)).collect();
            quals.sort();
            out.push(format!(
                "S {} {} {} {:x} [{}]",
                j.kind.name(),
                self.set_text(m, j.min_left),
                self.set_text(m, j.min_right),
                j.selectivity.to_bits(),
                quals.join("; ")
            ));
        }
        for (h, method) in &self.hints {
            out.push(format!("H {} {}", method.hint_name(), self.set_text(m, *h)));
        }
        for c in &self.cecs {
            let mut members: Vec<String> = c.iter().map(|x| self.col_text(m, *x)).collect();
            members.sort();
            out.push(format!("C {}", members.join("=")));
        }
        out.push(format!("I {}", self.inlist_join));
        out.sort();
        out
    }
}

/// Identity of a whole query block: its canonical text plus how its outer
/// references are bound.
#[derive(Debug, Clone)]
pub struct BlockDescriptor {
    pub signature: Signature,
    pub key: String,
}

impl BlockDescriptor {
    pub fn new(block: &QueryBlock, outer_labels: Option<&[String]>, inlist_join: bool) -> Self {
        let outer = |c: ColumnRef| {
            let label = outer_labels.and_then(|l| l.get(c.rti - 1)).map(String::as_str).unwrap_or("?");
            format!("^{label}.{}", c.col)
        };
        let key = format!("{} | inlist={inlist_join}", block.canonical_with(&outer));
        let mut oids: Vec<Oid> = block.range_table.iter().filter_map(|r| r.oid()).collect();
        oids.sort_unstable();
        let potential_blooms = block
            .quals
            .iter()
            .filter(|q| q.as_column_equality().is_some_and(|(a, b)| a.rti != b.rti))
            .count();
        let signature = Signature {
            level: Level::Block,
            subquery_count: block.range_table.len() - oids.len(),
            oids,
            bloom_count: potential_blooms,
            restriction_count: block.quals.len(),
            join_pred_count: 0,
            lateral_count: block.outer_refs().len(),
            output_count: block.target_list.len(),
            cec_count: derive_cecs(block).len(),
        };
        Self { signature, key }
    }
}
