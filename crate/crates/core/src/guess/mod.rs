//! Planner-free predictions of whether a cost-based rewrite will win.

use std::collections::HashMap;
use std::fmt;

use crate::catalog::hll::intersection_estimate;
use crate::catalog::{Catalog, HllSketch};
use crate::cbo::{BlockCtx, CostParams};
use crate::ir::{ColumnRef, QueryBlock, RteKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    PreferRewritten,
    PreferOriginal,
}

impl Prediction {
    pub fn name(self) -> &'static str {
        match self {
            Prediction::PreferRewritten => "prefer_rewritten",
            Prediction::PreferOriginal => "prefer_original",
        }
    }

    pub fn inverted(self) -> Self {
        match self {
            Prediction::PreferRewritten => Prediction::PreferOriginal,
            Prediction::PreferOriginal => Prediction::PreferRewritten,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rationale {
    Default,
    SpillRisk,
    NearLossless,
    LossyJoin,
}

impl Rationale {
    pub fn name(self) -> &'static str {
        match self {
            Rationale::Default => "default",
            Rationale::SpillRisk => "spill_risk",
            Rationale::NearLossless => "near_lossless",
            Rationale::LossyJoin => "lossy_join",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuessOutcome {
    pub prediction: Prediction,
    pub rationale: Rationale,
    /// Named quantities the prediction was based on.
    pub estimates: Vec<(&'static str, f64)>,
}

impl fmt::Display for GuessOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.prediction.name(), self.rationale.name())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GuessContext<'a> {
    pub catalog: &'a Catalog,
    pub params: CostParams,
    pub tau: f64,
    pub time_critical: bool,
}

/// Subquery merge: take the rewrite unless the DISTINCT it adds would spill.
/// `merged` is the rewritten block.
pub fn guess_subquery_merge(merged: &QueryBlock, ctx: &GuessContext) -> GuessOutcome {
    if !merged.distinct {
        return GuessOutcome { prediction: Prediction::PreferRewritten, rationale: Rationale::Default, estimates: vec![] };
    }
    let block_ctx = BlockCtx::new(
        merged,
        ctx.catalog,
        ctx.params,
        false,
        HashMap::new(),
        HashMap::new(),
        None,
    );
    let Ok(bc) = block_ctx else {
        return GuessOutcome { prediction: Prediction::PreferRewritten, rationale: Rationale::Default, estimates: vec![] };
    };
    let rows = bc.rel_rows(bc.all_relids());
    let width = bc.target_width();
    let bytes = rows * width;
    let estimates = vec![("join_rows", rows), ("row_width", width), ("hash_bytes", bytes), ("work_mem", ctx.params.work_mem)];
    if ctx.params.spills(rows, width) {
        GuessOutcome { prediction: Prediction::PreferOriginal, rationale: Rationale::SpillRisk, estimates }
    } else {
        GuessOutcome { prediction: Prediction::PreferRewritten, rationale: Rationale::Default, estimates }
    }
}

fn sketch<'c>(catalog: &'c Catalog, block: &QueryBlock, c: ColumnRef) -> Option<&'c HllSketch> {
    match &block.rte(c.rti).kind {
        RteKind::Base { oid, .. } => catalog.table_by_oid(*oid)?.column(c.col)?.stats.hll.as_ref(),
        RteKind::Subquery { .. } => None,
    }
}

/// Fraction of the aggregation side's join-key domain that also occurs on
/// the other side. `None` when either sketch is missing.
pub fn preserved_fraction(catalog: &Catalog, block: &QueryBlock, agg_key: ColumnRef, other_key: ColumnRef) -> Option<(f64, f64, f64)> {
    let a = sketch(catalog, block, agg_key)?;
    let b = sketch(catalog, block, other_key)?;
    let inter = intersection_estimate(a, b).ok()?;
    let est_a = a.estimate();
    let f = if est_a > 0.0 { (inter / est_a).clamp(0.0, 1.0) } else { 0.0 };
    Some((f, est_a, inter))
}

/// Eager aggregation: take the rewrite only when the join above the pushed
/// aggregate is near-lossless for the aggregated side.
pub fn guess_eager_agg(block: &QueryBlock, agg_key: ColumnRef, other_key: ColumnRef, ctx: &GuessContext) -> GuessOutcome {
    match preserved_fraction(ctx.catalog, block, agg_key, other_key) {
        None => GuessOutcome { prediction: Prediction::PreferOriginal, rationale: Rationale::LossyJoin, estimates: vec![] },
        Some((f, est_a, inter)) => {
            let estimates = vec![("preserved_fraction", f), ("agg_side_ndv", est_a), ("intersection", inter), ("tau", ctx.tau)];
            if f >= ctx.tau {
                GuessOutcome { prediction: Prediction::PreferRewritten, rationale: Rationale::NearLossless, estimates }
            } else {
                GuessOutcome { prediction: Prediction::PreferOriginal, rationale: Rationale::LossyJoin, estimates }
            }
        }
    }
}
