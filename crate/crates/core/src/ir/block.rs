use std::fmt::Write;

use super::expr::{ColumnRef, Predicate, ScalarExpr, SubLink};
use super::relset::{RelSet, Rti};
use crate::catalog::Oid;
use crate::frontend::ast::HintSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JoinKind {
    Inner,
    Left,
    Semi,
    Anti,
}

impl JoinKind {
    pub fn name(self) -> &'static str {
        match self {
            JoinKind::Inner => "inner",
            JoinKind::Left => "left",
            JoinKind::Semi => "semi",
            JoinKind::Anti => "anti",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RteKind {
    Base { oid: Oid, table_name: String },
    Subquery { block: Box<QueryBlock>, column_names: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeTableEntry {
    pub alias: String,
    pub kind: RteKind,
}

impl RangeTableEntry {
    pub fn oid(&self) -> Option<Oid> {
        match &self.kind {
            RteKind::Base { oid, .. } => Some(*oid),
            RteKind::Subquery { .. } => None,
        }
    }

    pub fn subquery(&self) -> Option<&QueryBlock> {
        match &self.kind {
            RteKind::Subquery { block, .. } => Some(block),
            RteKind::Base { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum JoinNode {
    Rel(Rti),
    Join {
        kind: JoinKind,
        left: Box<JoinNode>,
        right: Box<JoinNode>,
        quals: Vec<Predicate>,
    },
}

impl JoinNode {
    pub fn relids(&self) -> RelSet {
        match self {
            JoinNode::Rel(r) => RelSet::single(*r),
            JoinNode::Join { left, right, .. } => left.relids().union(right.relids()),
        }
    }

    fn visit_quals<'a>(&'a self, f: &mut dyn FnMut(&'a Predicate)) {
        if let JoinNode::Join { left, right, quals, .. } = self {
            left.visit_quals(f);
            right.visit_quals(f);
            quals.iter().for_each(&mut *f);
        }
    }

    fn map_rtis(&mut self, map: &dyn Fn(ColumnRef) -> ColumnRef) {
        match self {
            JoinNode::Rel(r) => *r = map(ColumnRef::new(*r, 1)).rti,
            JoinNode::Join { left, right, quals, .. } => {
                left.map_rtis(map);
                right.map_rtis(map);
                for q in quals.iter_mut() {
                    *q = q.clone().map_columns(map);
                }
            }
        }
    }
}

/// Join-order constraint for an outer, semi, or anti join.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecialJoinInfo {
    pub join_type: JoinKind,
    pub min_left: RelSet,
    pub min_right: RelSet,
    pub quals: Vec<Predicate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetEntry {
    pub expr: ScalarExpr,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortKey {
    pub expr: ScalarExpr,
    pub desc: bool,
}

/// One SELECT scope. Range-table indices are local to the block.
#[derive(Debug, Clone)]
pub struct QueryBlock {
    pub block_id: u32,
    pub range_table: Vec<RangeTableEntry>,
    /// Implicitly inner-joined from-list.
    pub jointree: Vec<JoinNode>,
    /// WHERE conjuncts (and flattened INNER JOIN conditions).
    pub quals: Vec<Predicate>,
    pub target_list: Vec<TargetEntry>,
    pub group_by: Vec<ScalarExpr>,
    pub order_by: Vec<SortKey>,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
    pub distinct: bool,
    pub hints: Vec<HintSpec>,
}

/// Structural equality; block ids are labels and do not participate.
impl PartialEq for QueryBlock {
    fn eq(&self, other: &Self) -> bool {
        self.range_table == other.range_table
            && self.jointree == other.jointree
            && self.quals == other.quals
            && self.target_list == other.target_list
            && self.group_by == other.group_by
            && self.order_by == other.order_by
            && self.limit == other.limit
            && self.offset == other.offset
            && self.distinct == other.distinct
            && self.hints == other.hints
    }
}

impl QueryBlock {
    pub fn empty(block_id: u32) -> Self {
        Self {
            block_id,
            range_table: Vec::new(),
            jointree: Vec::new(),
            quals: Vec::new(),
            target_list: Vec::new(),
            group_by: Vec::new(),
            order_by: Vec::new(),
            limit: None,
            offset: None,
            distinct: false,
            hints: Vec::new(),
        }
    }

    pub fn rte(&self, rti: Rti) -> &RangeTableEntry {
        &self.range_table[rti - 1]
    }

    pub fn all_relids(&self) -> RelSet {
        (1..=self.range_table.len()).collect()
    }

    pub fn rti_of_alias(&self, alias: &str) -> Option<Rti> {
        self.range_table
            .iter()
            .position(|r| r.alias.eq_ignore_ascii_case(alias))
            .map(|i| i + 1)
    }

    pub fn has_aggregates(&self) -> bool {
        self.target_list.iter().any(|t| t.expr.has_aggregate())
            || self.order_by.iter().any(|s| s.expr.has_aggregate())
    }

    pub fn is_grouped(&self) -> bool {
        !self.group_by.is_empty() || self.has_aggregates()
    }

    /// Every top-level expression of the block (targets, quals, join quals, grouping, ordering).
    pub fn expressions(&self) -> Vec<&ScalarExpr> {
        let mut out: Vec<&ScalarExpr> = Vec::new();
        out.extend(self.target_list.iter().map(|t| &t.expr));
        out.extend(self.quals.iter().map(|q| &q.expr));
        for j in &self.jointree {
            j.visit_quals(&mut |q| out.push(&q.expr));
        }
        out.extend(self.group_by.iter());
        out.extend(self.order_by.iter().map(|s| &s.expr));
        out
    }

    /// Sub-links directly owned by this block.
    pub fn sublinks(&self) -> Vec<&SubLink> {
        self.expressions().into_iter().flat_map(|e| e.sublinks()).collect()
    }

    /// References to the enclosing block made by this block's own expressions.
    pub fn outer_refs(&self) -> Vec<ColumnRef> {
        let mut out = Vec::new();
        for e in self.expressions() {
            e.visit(&mut |n| {
                if let ScalarExpr::Outer(c) = n {
                    out.push(*c);
                }
            });
        }
        out
    }

    pub fn map_outer_refs(&mut self, map: &dyn Fn(ColumnRef) -> ColumnRef) {
        let f = |e: ScalarExpr| {
            e.transform(&mut |n| match n {
                ScalarExpr::Outer(c) => ScalarExpr::Outer(map(c)),
                other => other,
            })
        };
        self.map_exprs(&f);
    }

    /// Applies `f` to each top-level expression.
    pub fn map_exprs(&mut self, f: &dyn Fn(ScalarExpr) -> ScalarExpr) {
        for t in &mut self.target_list {
            t.expr = f(t.expr.clone());
        }
        for q in &mut self.quals {
            *q = Predicate::new(f(q.expr.clone()));
        }
        fn walk(node: &mut JoinNode, f: &dyn Fn(ScalarExpr) -> ScalarExpr) {
            if let JoinNode::Join { left, right, quals, .. } = node {
                walk(left, f);
                walk(right, f);
                for q in quals.iter_mut() {
                    *q = Predicate::new(f(q.expr.clone()));
                }
            }
        }
        for j in &mut self.jointree {
            walk(j, f);
        }
        for g in &mut self.group_by {
            *g = f(g.clone());
        }
        for s in &mut self.order_by {
            s.expr = f(s.expr.clone());
        }
    }

    /// Renumbers this block's range-table references (columns and jointree).
    pub fn map_own_columns(&mut self, map: &dyn Fn(ColumnRef) -> ColumnRef) {
        let f = |e: ScalarExpr| e.map_columns(map);
        self.map_exprs(&f);
        for j in &mut self.jointree {
            j.map_rtis(map);
        }
    }

    /// Outer, semi and anti join constraints from the join tree.
    pub fn special_joins(&self) -> Vec<SpecialJoinInfo> {
        fn walk(node: &JoinNode, out: &mut Vec<SpecialJoinInfo>) {
            if let JoinNode::Join { kind, left, right, quals } = node {
                walk(left, out);
                walk(right, out);
                if *kind != JoinKind::Inner {
                    let left_ids = left.relids();
                    let referenced = quals
                        .iter()
                        .fold(RelSet::EMPTY, |acc, q| acc.union(q.referenced_rtis))
                        .intersect(left_ids);
                    out.push(SpecialJoinInfo {
                        join_type: *kind,
                        min_left: if referenced.is_empty() { left_ids } else { referenced },
                        min_right: right.relids(),
                        quals: quals.clone(),
                    });
                }
            }
        }
        let mut out = Vec::new();
        for j in &self.jointree {
            walk(j, &mut out);
        }
        out
    }

    /// Quals attached to inner joins inside the join tree.
    pub fn inner_join_quals(&self) -> Vec<Predicate> {
        fn walk(node: &JoinNode, out: &mut Vec<Predicate>) {
            if let JoinNode::Join { kind, left, right, quals } = node {
                walk(left, out);
                walk(right, out);
                if *kind == JoinKind::Inner {
                    out.extend(quals.iter().cloned());
                }
            }
        }
        let mut out = Vec::new();
        for j in &self.jointree {
            walk(j, &mut out);
        }
        out
    }

    /// Canonical text without block ids; `outer` renders references to the enclosing block.
    pub fn canonical_with(&self, outer: &dyn Fn(ColumnRef) -> String) -> String {
        self.canonical_parts(outer, true)
    }

    /// Canonical text with the target list omitted (used for output-permutation matching).
    pub fn canonical_without_targets(&self, outer: &dyn Fn(ColumnRef) -> String) -> String {
        self.canonical_parts(outer, false)
    }

    fn canonical_parts(&self, outer: &dyn Fn(ColumnRef) -> String, with_targets: bool) -> String {
        let mut s = String::new();
        s.push_str("SELECT");
        if self.distinct {
            s.push_str(" DISTINCT");
        }
        if with_targets {
            for (i, t) in self.target_list.iter().enumerate() {
                let _ = write!(s, "{}{} AS {}", if i == 0 { " " } else { ", " }, t.expr.canonical_with(outer), t.name);
            }
        }
        s.push_str(" FROM ");
        for (i, r) in self.range_table.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            match &r.kind {
                RteKind::Base { oid, table_name } => {
                    let _ = write!(s, "{}:{table_name}#{oid} {}", i + 1, r.alias);
                }
                RteKind::Subquery { block, column_names } => {
                    let _ = write!(
                        s,
                        "{}:({}) {}({})",
                        i + 1,
                        block.canonical_with(&|c| format!("^{c}")),
                        r.alias,
                        column_names.join(",")
                    );
                }
            }
        }
        s.push_str(" JOINTREE ");
        for j in &self.jointree {
            write_join(j, &mut s, outer);
            s.push(' ');
        }
        if !self.quals.is_empty() {
            s.push_str(" WHERE ");
            for (i, q) in self.quals.iter().enumerate() {
                if i > 0 {
                    s.push_str(" AND ");
                }
                s.push_str(&q.expr.canonical_with(outer));
            }
        }
        if !self.group_by.is_empty() {
            s.push_str(" GROUP BY ");
            let parts: Vec<_> = self.group_by.iter().map(|g| g.canonical_with(outer)).collect();
            s.push_str(&parts.join(", "));
        }
        if !self.order_by.is_empty() {
            s.push_str(" ORDER BY ");
            let parts: Vec<_> = self
                .order_by
                .iter()
                .map(|o| format!("{}{}", o.expr.canonical_with(outer), if o.desc { " DESC" } else { "" }))
                .collect();
            s.push_str(&parts.join(", "));
        }
        if let Some(l) = self.limit {
            let _ = write!(s, " LIMIT {l}");
        }
        if let Some(o) = self.offset {
            let _ = write!(s, " OFFSET {o}");
        }
        for h in &self.hints {
            let _ = write!(s, " HINT {}({})", h.method.hint_name(), h.table_names.join(" "));
        }
        s
    }
}

fn write_join(node: &JoinNode, s: &mut String, outer: &dyn Fn(ColumnRef) -> String) {
    match node {
        JoinNode::Rel(r) => {
            let _ = write!(s, "{r}");
        }
        JoinNode::Join { kind, left, right, quals } => {
            s.push('(');
            write_join(left, s, outer);
            let _ = write!(s, " {} ", kind.name());
            write_join(right, s, outer);
            s.push_str(" ON ");
            let parts: Vec<_> = quals.iter().map(|q| q.expr.canonical_with(outer)).collect();
            s.push_str(&parts.join(" AND "));
            s.push(')');
        }
    }
}

/// A whole statement: the root block plus the block-id allocator.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryTree {
    pub root: QueryBlock,
    pub next_block_id: u32,
}

impl QueryTree {
    pub fn new(root: QueryBlock, next_block_id: u32) -> Self {
        Self { root, next_block_id }
    }

    pub fn alloc_block_id(&mut self) -> u32 {
        let id = self.next_block_id;
        self.next_block_id += 1;
        id
    }
}

/// Deep copy. A rewrite applies to the copy; the original stays available for costing.
pub fn clone_tree(tree: &QueryTree) -> QueryTree {
    tree.clone()
}
