//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use optlab::bench::{
    improvement_ratio, run_suite, total_counter, verify_plan_equality, ImprovementReport, RunRecord, SuiteOptions,
    BENCH_MODES,
};
use optlab::catalog::{save_catalog, Datum, HllSketch};
use optlab::cbo::{best_join_path, finish_upper, plan_block, plan_tree, prepare_block};
use optlab::ir::{BinaryOp, ColumnRef, Literal, ScalarExpr};
use optlab::plancache::IdMapping;
use optlab::qrw::optimize;
use optlab::session::{Counters, Mode};

use common::eval::{eval, Value};
use common::oracle::exhaustive_best;

enum Outcome {
    Pass(String),
    Fail(String),
    /// Fails as stated, for a reason outside the implementation.
    KnownFail(String),
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn suite(opts: &SuiteOptions) -> Vec<RunRecord> {
    run_suite(&common::catalog(), &common::corpus(), &BENCH_MODES, 1, opts)
}

fn plan_preservation(records: &[RunRecord]) -> Outcome {
    let errors: Vec<_> = records.iter().filter(|r| !r.ok()).map(|r| r.query_id.clone()).collect();
    let diffs = verify_plan_equality(records);
    let queries = records.iter().filter(|r| r.mode == Mode::Naive).count();
    let detail = format!("{queries} queries, {} plan differences, {} failed runs", diffs.len(), errors.len());
    check(queries >= 50 && diffs.is_empty() && errors.is_empty(), detail)
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

/// Range of the ratio in percent when every input may be off by half a unit
/// in the last published digit.
fn ratio_range(i: f64, ii: f64, x: f64) -> (f64, f64) {
    let h = 0.0005;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for a in [-h, h] {
        for b in [-h, h] {
            for c in [-h, h] {
                let r = improvement_ratio(i + a, ii + b, x + c).expect("defined") * 100.0;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }
    (lo, hi)
}

fn ratio_arithmetic() -> Outcome {
    let text = include_str!("data/published_ratios.tsv");
    let (mut cells, mut off, mut unexplained) = (0, 0, Vec::new());
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let num = |k: usize| f[k].parse::<f64>().unwrap();
        let (i, ii, iii, iv, v, vi) = (num(2), num(3), num(4), num(5), num(6), num(7));
        for (x, published, col) in [(iii, iv, "IV"), (v, vi, "VI")] {
            cells += 1;
            let got = improvement_ratio(i, ii, x).expect("defined") * 100.0;
            if (got - published).abs() > 0.01 {
                off += 1;
                let (lo, hi) = ratio_range(i, ii, x);
                // Published ratios are themselves rounded to 0.01.
                if !within(published, lo - 0.005, hi + 0.005) {
                    unexplained.push(format!("{}:{}:{col}", f[0], f[1]));
                }
            }
        }
    }
    let detail = format!(
        "{off}/{cells} published cells differ from the recomputed ratio by more than 0.01 pp; \
         {} of them are not explained by the inputs being rounded to 0.001 ms",
        unexplained.len()
    );
    if off == 0 {
        Outcome::Pass(detail)
    } else if unexplained.is_empty() {
        Outcome::KnownFail(detail)
    } else {
        Outcome::Fail(format!("{detail}: {}", unexplained.join(", ")))
    }
}

fn work_reduction(records: &[RunRecord]) -> Outcome {
    let calls = |m| total_counter(records, m, |r| r.cost_path_calls) as f64;
    let naive = calls(Mode::Naive);
    let (cache, guess) = (calls(Mode::Cache) / naive, calls(Mode::CacheGuess) / naive);
    let detail = format!(
        "cost_path calls: naive {naive}, cache {:.3} x naive, cache-guess {:.3} x naive",
        cache, guess
    );
    check(cache <= 0.85 && guess <= 0.70, detail)
}

fn bucket_lengths(records: &[RunRecord]) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for mode in [Mode::Cache, Mode::CacheGuess] {
        let visits = total_counter(records, mode, |r| r.bucket_visits);
        let ones = total_counter(records, mode, |r| r.singleton_visits);
        let share = ones as f64 / visits.max(1) as f64;
        ok &= visits > 0 && share >= 0.70;
        parts.push(format!("{}: {ones}/{visits} = {:.1}%", mode.name(), share * 100.0));
    }
    check(ok, format!("length-1 bucket visits, {}", parts.join("; ")))
}

fn dp_oracle() -> Outcome {
    let cat = common::catalog();
    let mut blocks = 0;
    let mut failures = Vec::new();
    for q in common::corpus() {
        let tree = common::resolve(&cat, &q.sql);
        let mut s = common::session(&cat, Mode::Naive);
        let rewritten = optimize(&tree, &mut s).unwrap().tree;
        for root in [&tree.root, &rewritten.root] {
            common::walk_blocks(root, None, &mut |block, outer| {
                if block.range_table.len() > 6 {
                    return;
                }
                let mut session = common::session(&cat, Mode::Off);
                let ctx = prepare_block(&mut session, &cat, block, outer).unwrap();
                let dp = best_join_path(&mut session, &ctx);
                let (oracle, _) = exhaustive_best(&ctx);
                blocks += 1;
                let same = match (&dp, &oracle) {
                    (Ok(Some(a)), Some(b)) => a.cost.total.to_bits() == b.cost.total.to_bits(),
                    (Err(_), None) => true,
                    _ => false,
                };
                if !same {
                    failures.push(format!("{} join search", q.id));
                    return;
                }
                let Some(best) = oracle else { return };
                let top = finish_upper(&ctx, best, &mut Counters::default());
                let planned = plan_block(&mut session, block, None, outer).unwrap();
                if planned.total_cost().to_bits() != top.cost.total.to_bits() {
                    failures.push(format!("{} block total", q.id));
                }
            });
        }
    }
    let detail = format!("{blocks} blocks compared, {} differences {:?}", failures.len(), failures);
    check(blocks > 0 && failures.is_empty(), detail)
}

fn pruning_soundness() -> Outcome {
    let cat = common::catalog();
    let corpus = common::corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut above, mut below, mut failures) = (0, 0, Vec::new());
    let mut exact: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    let trees: Vec<_> = corpus.iter().map(|q| common::resolve(&cat, &q.sql)).collect();
    for pair in 0..200 {
        let qi = rng.gen_range(0..trees.len());
        let (digest, cost_bits) = *exact.entry(qi).or_insert_with(|| {
            let p = plan_tree(&mut common::session(&cat, Mode::Naive), &trees[qi], None).unwrap();
            (p.digest(), p.total_cost().to_bits())
        });
        let opt = f64::from_bits(cost_bits);
        let bound = match pair % 4 {
            0 => opt,
            1 => opt * (1.0 + rng.gen_range(0.0..1.0)),
            2 => f64::from_bits(cost_bits - 1),
            _ => opt * rng.gen_range(0.01..0.999),
        };
        let p = plan_tree(&mut common::session(&cat, Mode::Naive), &trees[qi], Some(bound)).unwrap();
        if bound >= opt {
            above += 1;
            if p.bound_exceeded || p.digest() != digest || p.total_cost().to_bits() != cost_bits {
                failures.push(format!("{} bound {bound} >= {opt}", corpus[qi].id));
            }
        } else {
            below += 1;
            if !p.bound_exceeded {
                failures.push(format!("{} bound {bound} < {opt}", corpus[qi].id));
            }
        }
    }
    let detail = format!("{above} bounds at or above the optimum, {below} below, {} failures {:?}", failures.len(), failures);
    check(failures.is_empty(), detail)
}

fn random_literal(rng: &mut ChaCha8Rng) -> Literal {
    match rng.gen_range(0..10) {
        0 => Literal::Null,
        1..=6 => Literal::Int(rng.gen_range(-3..4)),
        7 => Literal::Decimal(rng.gen_range(-3..4) as f64 + 0.5),
        _ => Literal::Text(["a", "b", "c"][rng.gen_range(0..3)].into()),
    }
}

fn random_value(rng: &mut ChaCha8Rng) -> Value {
    Value::from_literal(&random_literal(rng))
}

fn random_expr(rng: &mut ChaCha8Rng, cols: &[ColumnRef], depth: u32) -> ScalarExpr {
    let leaf = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.7) {
            ScalarExpr::Column(cols[rng.gen_range(0..cols.len())])
        } else {
            ScalarExpr::Literal(random_literal(rng))
        }
    };
    if depth == 0 {
        return leaf(rng);
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_expr(rng, cols, depth - 1));
    let ops = [
        BinaryOp::Eq,
        BinaryOp::NotEq,
        BinaryOp::Lt,
        BinaryOp::LtEq,
        BinaryOp::Gt,
        BinaryOp::GtEq,
        BinaryOp::Plus,
        BinaryOp::Minus,
        BinaryOp::Mul,
        BinaryOp::And,
        BinaryOp::Or,
    ];
    match rng.gen_range(0..8) {
        0 => leaf(rng),
        1 => ScalarExpr::Not(sub(rng)),
        2 => ScalarExpr::Neg(sub(rng)),
        3 => ScalarExpr::InList {
            expr: sub(rng),
            list: (0..rng.gen_range(1..4)).map(|_| random_literal(rng)).collect(),
            negated: rng.gen_bool(0.5),
        },
        _ => ScalarExpr::Binary { op: ops[rng.gen_range(0..ops.len())], left: sub(rng), right: sub(rng) },
    }
}

fn translation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = 0;
    let mut nontrivial = 0;
    for _ in 0..1000 {
        let n_rels = rng.gen_range(1..=6usize);
        let widths: Vec<usize> = (0..n_rels).map(|_| rng.gen_range(1..=5)).collect();
        let mut targets: Vec<usize> = (1..=8).collect();
        for i in (1..targets.len()).rev() {
            targets.swap(i, rng.gen_range(0..=i));
        }
        let mut mapping = IdMapping::default();
        for (i, &w) in widths.iter().enumerate() {
            mapping.rel_map.insert(i + 1, targets[i]);
            if rng.gen_bool(0.4) {
                let mut perm: Vec<usize> = (1..=w).collect();
                for k in (1..w).rev() {
                    perm.swap(k, rng.gen_range(0..=k));
                }
                mapping.col_maps.insert(i + 1, perm);
            }
        }
        let cols: Vec<ColumnRef> =
            widths.iter().enumerate().flat_map(|(i, &w)| (1..=w).map(move |c| ColumnRef::new(i + 1, c))).collect();
        let expr = random_expr(&mut rng, &cols, 4);
        let translated = mapping.translate_expr(&expr).unwrap();
        nontrivial += (translated != expr) as usize;

        let cached_row: BTreeMap<(usize, usize), Value> =
            cols.iter().map(|c| ((c.rti, c.col), random_value(&mut rng))).collect();
        let current_row: BTreeMap<(usize, usize), Value> = cached_row
            .iter()
            .map(|(&(r, c), v)| (mapping.map_column(ColumnRef::new(r, c)).unwrap(), v.clone()))
            .collect();
        let a = eval(&expr, &|c: ColumnRef| cached_row[&(c.rti, c.col)].clone());
        let b = eval(&translated, &|c: ColumnRef| current_row[&(c.rti, c.col)].clone());
        failures += (a != b) as usize;
    }
    check(failures == 0, format!("1000 predicate/mapping pairs, {nontrivial} renumbered, {failures} disagreements"))
}

fn hll_accuracy() -> Outcome {
    let n = 10_000i64;
    let rel_err = |mut s: HllSketch| {
        for v in 0..n {
            s.add(&Datum::Int(v));
        }
        (s.estimate() - n as f64).abs() / n as f64
    };
    let default_err = rel_err(HllSketch::new(12).unwrap());
    let limit = 3.0 * 1.04 / 64.0;
    let good = (0..100u64).filter(|&seed| rel_err(HllSketch::with_seed(12, seed).unwrap()) <= limit).count();
    check(
        default_err <= 0.05 && good >= 99,
        format!("default seed error {:.2}%, {good}/100 seeds within {:.2}%", default_err * 100.0, limit * 100.0),
    )
}

fn guess_robustness(records: &[RunRecord]) -> Outcome {
    let inverted = run_suite(
        &common::catalog(),
        &common::corpus(),
        &[Mode::CacheGuess, Mode::GuessOnly],
        1,
        &SuiteOptions { invert_guesses: true, ..Default::default() },
    );
    let plain: BTreeMap<&str, &RunRecord> =
        records.iter().filter(|r| r.mode == Mode::Naive).map(|r| (r.query_id.as_str(), r)).collect();
    let mut changed = Vec::new();
    for r in &inverted {
        let base = plain[r.query_id.as_str()];
        if !r.ok() || r.digest != base.digest || r.final_cost.to_bits() != base.final_cost.to_bits() {
            changed.push(format!("{}/{}", r.query_id, r.mode.name()));
        }
    }
    let prunes = |rs: &[RunRecord]| rs.iter().filter(|r| r.mode == Mode::CacheGuess).map(|r| r.prune_events).sum::<u64>();
    let detail = format!(
        "{} inverted runs, {} changed plans; prune events {} guided vs {} inverted",
        inverted.len(),
        changed.len(),
        prunes(records),
        prunes(&inverted)
    );
    check(changed.is_empty(), detail)
}

fn fault_injection() -> Outcome {
    let records = suite(&SuiteOptions { corrupt_cache: true, ..Default::default() });
    let caught = ImprovementReport::from_records(&records).mismatches().len();

    let dir = tempfile::tempdir().unwrap();
    let catalog = dir.path().join("tpch.json");
    let queries = dir.path().join("queries");
    save_catalog(&common::catalog(), &catalog).unwrap();
    optlab::bench::corpus::write_corpus(&queries, &common::corpus()).unwrap();
    let bench = |extra: &[&str], out: &str| {
        Command::new(env!("CARGO_BIN_EXE_optlab"))
            .args(["bench", "--reps", "1", "--catalog"])
            .arg(&catalog)
            .arg("--queries")
            .arg(&queries)
            .arg("--out")
            .arg(dir.path().join(out))
            .args(extra)
            .output()
            .unwrap()
            .status
            .code()
    };
    let clean = bench(&[], "clean.tsv");
    let faulty = bench(&["--inject-cache-fault"], "faulty.tsv");
    let verify = Command::new(env!("CARGO_BIN_EXE_optlab"))
        .arg("verify")
        .arg("--report")
        .arg(dir.path().join("faulty.tsv"))
        .output()
        .unwrap()
        .status
        .code();
    check(
        caught > 0 && clean == Some(0) && faulty == Some(2) && verify == Some(2),
        format!(
            "{caught} corrupted queries flagged in-process; cli exit codes clean {clean:?}, faulty {faulty:?}, verify {verify:?}"
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let records = suite(&SuiteOptions::default());
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("plan preservation", Box::new(|| plan_preservation(&records))),
        ("ratio arithmetic", Box::new(ratio_arithmetic)),
        ("work reduction", Box::new(|| work_reduction(&records))),
        ("bucket-length distribution", Box::new(|| bucket_lengths(&records))),
        ("dp oracle equivalence", Box::new(dp_oracle)),
        ("pruning soundness", Box::new(pruning_soundness)),
        ("translation oracle", Box::new(translation_oracle)),
        ("hll accuracy", Box::new(hll_accuracy)),
        ("guess robustness", Box::new(|| guess_robustness(&records))),
        ("fault injection", Box::new(fault_injection)),
    ];
    let mut hard_failures = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Outcome::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Outcome::Pass(d) => println!("criterion {:>2} {name}: PASS ({d}) [{secs:.1}s]", n + 1),
            Outcome::Fail(d) => {
                hard_failures += 1;
                println!("criterion {:>2} {name}: FAIL ({d}) [{secs:.1}s]", n + 1);
            }
            Outcome::KnownFail(d) => println!("criterion {:>2} {name}: FAIL ({d}) [{secs:.1}s]", n + 1),
        }
    }
    println!("acceptance finished in {:.1}s", started.elapsed().as_secs_f64());
    if hard_failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
