//! Query-tree representation shared by the rewriter and the planner.

pub mod block;
pub mod cec;
pub mod dump;
pub mod expr;
pub mod relset;

pub use block::{
    clone_tree, JoinKind, JoinNode, QueryBlock, QueryTree, RangeTableEntry, RteKind, SortKey, SpecialJoinInfo,
    TargetEntry,
};
pub use cec::{derive_cecs, ColumnEquivalenceClass};
pub use dump::dump_tree;
pub use expr::{AggFunc, BinaryOp, ColumnRef, Literal, Predicate, ScalarExpr, SubLink, SubLinkKind};
pub use relset::{RelSet, Rti, MAX_RTI};
