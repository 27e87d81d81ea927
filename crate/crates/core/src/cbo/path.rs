use std::fmt::Write;

use xxhash_rust::xxh3::xxh3_64;

use super::cost::Cost;
use crate::catalog::Oid;
use crate::ir::{JoinKind, RelSet, Rti};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathOp {
    SeqScan,
    IndexScan,
    InListJoinScan,
    NestLoop,
    HashJoin,
    MergeJoin,
    Agg,
    Sort,
    Limit,
    Distinct,
    SubqueryScan,
}

impl PathOp {
    pub fn name(self) -> &'static str {
        match self {
            PathOp::SeqScan => "seqscan",
            PathOp::IndexScan => "indexscan",
            PathOp::InListJoinScan => "inlist_join_scan",
            PathOp::NestLoop => "nestloop",
            PathOp::HashJoin => "hashjoin",
            PathOp::MergeJoin => "mergejoin",
            PathOp::Agg => "agg",
            PathOp::Sort => "sort",
            PathOp::Limit => "limit",
            PathOp::Distinct => "distinct",
            PathOp::SubqueryScan => "subquery_scan",
        }
    }

    pub fn is_join(self) -> bool {
        matches!(self, PathOp::NestLoop | PathOp::HashJoin | PathOp::MergeJoin)
    }
}

/// Identity of an applied Bloom filter that survives range-table renumbering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BloomKey {
    pub source_oid: Oid,
    pub source_col: usize,
    pub key_col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathNode {
    pub op: PathOp,
    pub join_kind: Option<JoinKind>,
    /// Alias of the scanned relation; empty above scans.
    pub label: String,
    pub rti: Option<Rti>,
    pub index: Option<String>,
    pub relids: RelSet,
    pub children: Vec<PathNode>,
    /// Plans of sub-links evaluated by this node.
    pub subplans: Vec<PathNode>,
    pub est_rows: f64,
    pub cost: Cost,
    pub required_hint_ok: bool,
    pub bloom_filters_applied: Vec<BloomKey>,
}

impl PathNode {
    pub fn leaf(op: PathOp, rti: Rti, label: &str, rows: f64, cost: Cost) -> Self {
        Self {
            op,
            join_kind: None,
            label: label.to_string(),
            rti: Some(rti),
            index: None,
            relids: RelSet::single(rti),
            children: Vec::new(),
            subplans: Vec::new(),
            est_rows: rows,
            cost,
            required_hint_ok: true,
            bloom_filters_applied: Vec::new(),
        }
    }

    pub fn unary(op: PathOp, child: PathNode, rows: f64, cost: Cost) -> Self {
        Self {
            op,
            join_kind: None,
            label: String::new(),
            rti: None,
            index: None,
            relids: child.relids,
            required_hint_ok: child.required_hint_ok,
            children: vec![child],
            subplans: Vec::new(),
            est_rows: rows,
            cost,
            bloom_filters_applied: Vec::new(),
        }
    }

    /// Renumbers range-table references and relabels scans from the current block.
    pub fn remap(&mut self, map: &dyn Fn(Rti) -> Rti, label: &dyn Fn(Rti) -> String) {
        if let Some(r) = self.rti {
            let n = map(r);
            self.rti = Some(n);
            self.label = label(n);
        }
        self.relids = self.relids.iter().map(map).collect();
        // A subquery scan's child belongs to another block.
        if self.op != PathOp::SubqueryScan {
            for c in &mut self.children {
                c.remap(map, label);
            }
        }
    }

    /// Text line for one node (no children).
    pub fn line(&self) -> String {
        let mut s = String::from(self.op.name());
        if let Some(k) = self.join_kind {
            if k != JoinKind::Inner {
                let _ = write!(s, " {}", k.name());
            }
        }
        if !self.label.is_empty() {
            let _ = write!(s, " {}", self.label);
        }
        if let Some(i) = &self.index {
            let _ = write!(s, " using {i}");
        }
        if !self.bloom_filters_applied.is_empty() {
            let _ = write!(s, " bloom={}", self.bloom_filters_applied.len());
        }
        let _ = write!(s, " (cost={:.2}..{:.2} rows={:.0})", self.cost.startup, self.cost.total, self.est_rows);
        s
    }

    pub fn explain(&self) -> String {
        let mut out = String::new();
        self.explain_into(0, &mut out);
        out
    }

    fn explain_into(&self, depth: usize, out: &mut String) {
        let _ = writeln!(out, "{}{}", "  ".repeat(depth), self.line());
        for sp in &self.subplans {
            let _ = writeln!(out, "{}subplan", "  ".repeat(depth + 1));
            sp.explain_into(depth + 2, out);
        }
        for c in &self.children {
            c.explain_into(depth + 1, out);
        }
    }

    /// Exact structural text: costs and row counts at full precision.
    pub fn digest_text(&self) -> String {
        let mut out = String::new();
        self.digest_into(&mut out);
        out
    }

    fn digest_into(&self, out: &mut String) {
        let _ = write!(
            out,
            "({} {:?} {} {:?} r={:x} s={:x} t={:x} b={:?}",
            self.op.name(),
            self.join_kind,
            self.label,
            self.index,
            self.est_rows.to_bits(),
            self.cost.startup.to_bits(),
            self.cost.total.to_bits(),
            self.bloom_filters_applied
        );
        for sp in &self.subplans {
            out.push_str(" sub");
            sp.digest_into(out);
        }
        for c in &self.children {
            out.push(' ');
            c.digest_into(out);
        }
        out.push(')');
    }

    pub fn digest(&self) -> u64 {
        xxh3_64(self.digest_text().as_bytes())
    }

    pub fn count_nodes(&self) -> usize {
        1 + self.children.iter().map(|c| c.count_nodes()).sum::<usize>()
            + self.subplans.iter().map(|c| c.count_nodes()).sum::<usize>()
    }

    pub fn find(&self, pred: &dyn Fn(&PathNode) -> bool) -> Option<&PathNode> {
        if pred(self) {
            return Some(self);
        }
        self.children
            .iter()
            .chain(self.subplans.iter())
            .find_map(|c| c.find(pred))
    }
}
