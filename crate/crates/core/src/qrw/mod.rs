//! Query rewrite: heuristic rules, then cost-based rules decided by the
//! planner, optionally steered by educated guesses and a cost upper bound.

pub mod eager;
pub mod heuristics;
pub mod merge;

use std::fmt::Write as _;

pub use heuristics::{apply_heuristic_rules, fold_expr};

use crate::cbo::{plan_tree, IntermediatePlan};
use crate::error::Result;
use crate::guess::{guess_eager_agg, guess_subquery_merge, GuessContext, GuessOutcome, Prediction};
use crate::catalog::Catalog;
use crate::ir::{ColumnRef, QueryTree};
use crate::session::{Mode, OptimizerSession};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Heuristic,
    CostBased,
}

/// A registered cost-based rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    SubqueryMerge,
    EagerAggregation,
}

/// Cost-based rules in application order.
pub const COST_BASED_RULES: [Rule; 2] = [Rule::SubqueryMerge, Rule::EagerAggregation];

/// A rule that matched, with its rewritten tree.
#[derive(Debug, Clone)]
pub struct RuleMatch {
    pub rule: Rule,
    pub rewritten: QueryTree,
    /// Join keys of the aggregation side and the other side, for R2.
    eager_keys: Option<(ColumnRef, ColumnRef)>,
}

impl RuleMatch {
    /// The planner-free prediction for this match; `original` is the matched tree.
    pub fn guess(&self, original: &QueryTree, ctx: &GuessContext) -> GuessOutcome {
        match (self.rule, self.eager_keys) {
            (Rule::EagerAggregation, Some((agg, other))) => guess_eager_agg(&original.root, agg, other, ctx),
            _ => guess_subquery_merge(&self.rewritten.root, ctx),
        }
    }
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::SubqueryMerge => "R1",
            Rule::EagerAggregation => "R2",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::SubqueryMerge => "subquery_merge",
            Rule::EagerAggregation => "eager_aggregation",
        }
    }

    pub fn kind(self) -> RuleKind {
        RuleKind::CostBased
    }

    /// Matches the rule against the root block and, if it applies, builds
    /// the rewritten tree.
    pub fn try_match(self, tree: &QueryTree, catalog: &Catalog) -> Option<RuleMatch> {
        match self {
            Rule::SubqueryMerge => {
                let rewritten = merge::subquery_merge(tree, catalog)?;
                Some(RuleMatch { rule: self, rewritten, eager_keys: None })
            }
            Rule::EagerAggregation => {
                let (rewritten, cand) = eager::eager_aggregation(tree, catalog)?;
                Some(RuleMatch { rule: self, rewritten, eager_keys: Some((cand.agg_key, cand.other_key)) })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteDecision {
    pub rule_id: &'static str,
    pub matched: bool,
    pub applied: bool,
    pub guess: Option<GuessOutcome>,
    pub cost_original: Option<f64>,
    pub cost_rewritten: Option<f64>,
    /// Which alternative, if any, was abandoned at the bound. Its cost is
    /// then a lower bound rather than the real cost.
    pub pruned: Option<&'static str>,
    pub cbo_invocations: u64,
}

impl RewriteDecision {
    fn unmatched(rule: Rule) -> Self {
        Self {
            rule_id: rule.id(),
            matched: false,
            applied: false,
            guess: None,
            cost_original: None,
            cost_rewritten: None,
            pruned: None,
            cbo_invocations: 0,
        }
    }
}

fn guess_context(session: &OptimizerSession) -> GuessContext<'_> {
    GuessContext {
        catalog: &session.catalog,
        params: session.config.params,
        tau: session.config.tau,
        time_critical: session.config.time_critical,
    }
}

fn predict(m: &RuleMatch, tree: &QueryTree, session: &OptimizerSession) -> GuessOutcome {
    let mut g = m.guess(tree, &guess_context(session));
    if session.config.invert_guesses {
        g.prediction = g.prediction.inverted();
    }
    g
}

fn plan_for_rewrite(session: &mut OptimizerSession, tree: &QueryTree, bound: Option<f64>) -> Result<IntermediatePlan> {
    session.counters.qrw_cbo_invocations += 1;
    plan_tree(session, tree, bound)
}

/// Applies the rule by its prediction alone.
pub fn costless_pass(tree: &QueryTree, rule: Rule, session: &mut OptimizerSession) -> (QueryTree, RewriteDecision) {
    let Some(m) = rule.try_match(tree, &session.catalog) else {
        return (tree.clone(), RewriteDecision::unmatched(rule));
    };
    let guess = predict(&m, tree, session);
    let apply = guess.prediction == Prediction::PreferRewritten;
    let decision = RewriteDecision {
        applied: apply,
        matched: true,
        guess: Some(guess),
        ..RewriteDecision::unmatched(rule)
    };
    (if apply { m.rewritten } else { tree.clone() }, decision)
}

/// Plans both trees fully and keeps the cheaper; ties keep the original.
pub fn naive_cost_based_pass(
    tree: &QueryTree,
    rule: Rule,
    session: &mut OptimizerSession,
) -> Result<(QueryTree, RewriteDecision)> {
    let Some(m) = rule.try_match(tree, &session.catalog) else {
        return Ok((tree.clone(), RewriteDecision::unmatched(rule)));
    };
    let before = session.counters.qrw_cbo_invocations;
    let original = plan_for_rewrite(session, tree, None)?.total_cost();
    let rewritten = plan_for_rewrite(session, &m.rewritten, None)?.total_cost();
    let apply = rewritten < original;
    let decision = RewriteDecision {
        rule_id: rule.id(),
        matched: true,
        applied: apply,
        guess: None,
        cost_original: Some(original),
        cost_rewritten: Some(rewritten),
        pruned: None,
        cbo_invocations: session.counters.qrw_cbo_invocations - before,
    };
    Ok((if apply { m.rewritten } else { tree.clone() }, decision))
}

/// Plans the predicted winner first and the alternative under its cost.
pub fn guided_cost_based_pass(
    tree: &QueryTree,
    rule: Rule,
    session: &mut OptimizerSession,
) -> Result<(QueryTree, RewriteDecision)> {
    let Some(m) = rule.try_match(tree, &session.catalog) else {
        return Ok((tree.clone(), RewriteDecision::unmatched(rule)));
    };
    let before = session.counters.qrw_cbo_invocations;
    let guess = predict(&m, tree, session);
    let prefer_rewritten = guess.prediction == Prediction::PreferRewritten;
    let (first, second) = if prefer_rewritten { (&m.rewritten, tree) } else { (tree, &m.rewritten) };

    let first_cost = plan_for_rewrite(session, first, None)?.total_cost();
    session.offer_bound(first_cost);
    let mut decision = RewriteDecision {
        rule_id: rule.id(),
        matched: true,
        applied: prefer_rewritten,
        guess: Some(guess),
        cost_original: None,
        cost_rewritten: None,
        pruned: None,
        cbo_invocations: 0,
    };

    if !session.config.time_critical {
        let bound = session.upper_bound;
        let mut second_plan = plan_for_rewrite(session, second, bound)?;
        if second_plan.bound_exceeded && bound.is_some_and(|b| b < first_cost) {
            // The bound came from an earlier, cheaper tree; settle exactly.
            second_plan = plan_for_rewrite(session, second, None)?;
        }
        let second_cost = second_plan.total_cost();
        if second_plan.bound_exceeded {
            decision.pruned = Some(if prefer_rewritten { "original" } else { "rewritten" });
        } else {
            session.offer_bound(second_cost);
        }
        let (original, rewritten) = if prefer_rewritten { (second_cost, first_cost) } else { (first_cost, second_cost) };
        decision.cost_original = Some(original);
        decision.cost_rewritten = Some(rewritten);
        decision.applied = rewritten < original;
    } else if prefer_rewritten {
        decision.cost_rewritten = Some(first_cost);
    } else {
        decision.cost_original = Some(first_cost);
    }
    decision.cbo_invocations = session.counters.qrw_cbo_invocations - before;
    Ok((if decision.applied { m.rewritten } else { tree.clone() }, decision))
}

/// Heuristic rules, then each cost-based rule in order on the current winner.
pub fn run_rewrite_phase(tree: &QueryTree, session: &mut OptimizerSession) -> Result<(QueryTree, Vec<RewriteDecision>)> {
    let mut current = apply_heuristic_rules(tree);
    let mut decisions = Vec::new();
    for rule in COST_BASED_RULES {
        let (next, d) = match session.config.mode {
            Mode::Off => costless_pass(&current, rule, session),
            Mode::Naive | Mode::Cache => naive_cost_based_pass(&current, rule, session)?,
            Mode::CacheGuess | Mode::GuessOnly => guided_cost_based_pass(&current, rule, session)?,
        };
        current = next;
        decisions.push(d);
    }
    Ok((current, decisions))
}

/// Outcome of compiling one query.
#[derive(Debug, Clone)]
pub struct Optimized {
    pub tree: QueryTree,
    pub plan: IntermediatePlan,
    pub decisions: Vec<RewriteDecision>,
}

/// Rewrite phase followed by the final planning of the chosen tree.
pub fn optimize(tree: &QueryTree, session: &mut OptimizerSession) -> Result<Optimized> {
    let (tree, decisions) = run_rewrite_phase(tree, session)?;
    let plan = plan_tree(session, &tree, None)?;
    Ok(Optimized { tree, plan, decisions })
}

fn opt_cost(c: Option<f64>) -> String {
    c.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

pub const DECISION_LOG_HEADER: &str =
    "query\trule_id\tmatched\tguess\trationale\tapplied\tcost_original\tcost_rewritten\tpruned\tcbo_invocations";

/// One tab-separated line per decision.
pub fn decision_log_lines(query_id: &str, decisions: &[RewriteDecision]) -> String {
    let mut out = String::new();
    for d in decisions {
        let (guess, rationale) = match &d.guess {
            Some(g) => (g.prediction.name(), g.rationale.name()),
            None => ("-", "-"),
        };
        let _ = writeln!(
            out,
            "{query_id}\t{}\t{}\t{guess}\t{rationale}\t{}\t{}\t{}\t{}\t{}",
            d.rule_id,
            d.matched,
            d.applied,
            opt_cost(d.cost_original),
            opt_cost(d.cost_rewritten),
            d.pruned.unwrap_or("-"),
            d.cbo_invocations
        );
    }
    out
}
