//! Exhaustive join-tree enumeration, the reference for the DP search.
//!
//! Every legal binary join tree over the block's rels is built with every
//! join method, in both orientations, with each base rel read through its
//! cheapest access path. No plan is discarded before the final comparison.

use std::collections::HashMap;

use optlab::cbo::base::base_paths;
use optlab::cbo::join::{join_candidates, path_cmp};
use optlab::cbo::{formable, split_ok, BlockCtx, PathNode};
use optlab::ir::RelSet;
use optlab::session::Counters;

fn submasks(s: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut l = s.wrapping_sub(1) & s;
    while l != 0 {
        out.push(l);
        l = (l - 1) & s;
    }
    out
}

struct Enumerator<'c, 'a> {
    ctx: &'c BlockCtx<'a>,
    allow_cross: bool,
    all: HashMap<u64, Vec<PathNode>>,
    counters: Counters,
    pub plans_seen: u64,
}

impl Enumerator<'_, '_> {
    fn plans(&mut self, s: u64) -> Vec<PathNode> {
        if let Some(p) = self.all.get(&s) {
            return p.clone();
        }
        let out = if s.count_ones() == 1 {
            let rti = s.trailing_zeros() as usize + 1;
            let mut paths = base_paths(self.ctx, rti, &mut self.counters);
            paths.sort_by(path_cmp);
            paths.truncate(1);
            paths
        } else {
            let mut out = Vec::new();
            let rows = self.ctx.rel_rows(RelSet::from_bits(s));
            for l in submasks(s) {
                let r = s ^ l;
                if !split_ok(self.ctx, RelSet::from_bits(l), RelSet::from_bits(r), self.allow_cross) {
                    continue;
                }
                let (lp, rp) = (self.plans(l), self.plans(r));
                for a in &lp {
                    for b in &rp {
                        out.extend(join_candidates(self.ctx, a, b, rows, &mut self.counters));
                    }
                }
            }
            out
        };
        self.plans_seen += out.len() as u64;
        self.all.insert(s, out.clone());
        out
    }
}

/// Cheapest plan over all join trees, plus the number of plans built.
pub fn exhaustive_best(ctx: &BlockCtx) -> (Option<PathNode>, u64) {
    let n = ctx.n_rels();
    let allow_cross = !formable(ctx, false);
    let mut e = Enumerator { ctx, allow_cross, all: HashMap::new(), counters: Counters::default(), plans_seen: 0 };
    let full = (1u64 << n) - 1;
    let best = e.plans(full).into_iter().min_by(path_cmp);
    (best, e.plans_seen)
}
