//! Bottom-up cost-based planner.

pub mod base;
pub mod context;
pub mod cost;
pub mod join;
pub mod path;
mod planner;
pub mod selectivity;

use crate::catalog::DataType;
use crate::ir::{ColumnRef, Predicate, RelSet};

pub use context::{BlockCtx, BloomCandidate};
pub use cost::{Cost, CostParams};
pub use path::{BloomKey, PathNode, PathOp};
pub use planner::{
    best_join_path, finish_upper, formable, plan_block, plan_tree, prepare_block, split_ok, BlockInputs,
};
pub use selectivity::estimate_selectivity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Base,
    Join,
    Block,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::Base => "Base Table",
            Level::Join => "Join Table",
            Level::Block => "Subquery",
        }
    }
}

/// Planning result for a base rel, a join rel, or a whole block.
#[derive(Debug, Clone, PartialEq)]
pub struct IntermediatePlan {
    pub level: Level,
    pub relids: RelSet,
    pub paths: Vec<PathNode>,
    pub cheapest_cost: Cost,
    pub restrictions: Vec<Predicate>,
    pub join_preds: Vec<Predicate>,
    pub output_cols: Vec<(ColumnRef, DataType)>,
    pub bloom_candidates: Vec<BloomCandidate>,
    pub cec_count: usize,
    pub subquery_count: usize,
    pub lateral_count: usize,
    /// Every complete plan cost more than the bound; `cheapest_cost` is then
    /// a lower witness, not an achievable cost.
    pub bound_exceeded: bool,
}

impl IntermediatePlan {
    pub fn best(&self) -> Option<&PathNode> {
        self.paths.first()
    }

    pub fn total_cost(&self) -> f64 {
        self.cheapest_cost.total
    }

    pub fn explain(&self) -> String {
        self.best().map(|p| p.explain()).unwrap_or_default()
    }

    pub fn digest(&self) -> u64 {
        self.best().map(|p| p.digest()).unwrap_or(0)
    }

    pub(crate) fn exceeded(level: Level, relids: RelSet, witness: Cost) -> Self {
        Self {
            level,
            relids,
            paths: Vec::new(),
            cheapest_cost: witness,
            restrictions: Vec::new(),
            join_preds: Vec::new(),
            output_cols: Vec::new(),
            bloom_candidates: Vec::new(),
            cec_count: 0,
            subquery_count: 0,
            lateral_count: 0,
            bound_exceeded: true,
        }
    }
}
