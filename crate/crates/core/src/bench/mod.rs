//! Experiment harness: runs a corpus under each mode, compares final plans
//! across modes and reports compile-time improvement ratios.

pub mod corpus;
pub mod fixture;
mod report;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

pub use corpus::{generate_corpus, CorpusQuery};
pub use report::{improvement_ratio, ImprovementReport, ReportRow};

use crate::catalog::{load_catalog, Catalog};
use crate::error::{Error, Result};
use crate::frontend::parse_and_resolve;
use crate::qrw::optimize;
use crate::session::{Mode, OptimizerSession, SessionConfig};

/// Modes a benchmark run covers, in report column order.
pub const BENCH_MODES: [Mode; 4] = [Mode::Off, Mode::Naive, Mode::Cache, Mode::CacheGuess];

/// Modes whose final plans must agree.
pub const COMPARED_MODES: [Mode; 3] = [Mode::Naive, Mode::Cache, Mode::CacheGuess];

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub query_id: String,
    pub mode: Mode,
    /// Seconds spent in `optimize`, averaged over the trailing repetitions.
    pub wall_time: f64,
    pub paths_built: u64,
    pub cost_path_calls: u64,
    pub cbo_invocations: u64,
    pub prune_events: u64,
    pub cache_probes: u64,
    pub cache_hits: u64,
    /// Probes that found a non-empty bucket, and those whose bucket held one entry.
    pub bucket_visits: u64,
    pub singleton_visits: u64,
    pub digest: u64,
    pub final_cost: f64,
    pub error: Option<String>,
}

impl RunRecord {
    fn failed(query_id: &str, mode: Mode, err: &Error) -> Self {
        Self {
            query_id: query_id.to_string(),
            mode,
            wall_time: 0.0,
            paths_built: 0,
            cost_path_calls: 0,
            cbo_invocations: 0,
            prune_events: 0,
            cache_probes: 0,
            cache_hits: 0,
            bucket_visits: 0,
            singleton_visits: 0,
            digest: 0,
            final_cost: 0.0,
            error: Some(err.to_string()),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Knobs shared by every session a suite creates.
#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub invert_guesses: bool,
    pub corrupt_cache: bool,
    /// Worker threads; 0 or 1 runs on the calling thread.
    pub workers: usize,
}

impl SuiteOptions {
    fn config(&self, mode: Mode) -> SessionConfig {
        let mut c = SessionConfig::new(mode);
        c.invert_guesses = self.invert_guesses;
        c.corrupt_cache = self.corrupt_cache;
        c
    }
}

/// Mean of the last `ceil(n/2)` samples.
pub fn trailing_mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let keep = samples.len().div_ceil(2);
    let tail = &samples[samples.len() - keep..];
    tail.iter().sum::<f64>() / keep as f64
}

fn run_one(catalog: &Arc<Catalog>, q: &CorpusQuery, mode: Mode, reps: usize, opts: &SuiteOptions) -> RunRecord {
    let tree = match parse_and_resolve(&q.sql, catalog) {
        Ok(t) => t,
        Err(e) => return RunRecord::failed(&q.id, mode, &e),
    };
    let mut times = Vec::with_capacity(reps);
    let mut first: Option<RunRecord> = None;
    for _ in 0..reps.max(1) {
        let mut session = OptimizerSession::new(catalog.clone(), opts.config(mode));
        let start = Instant::now();
        let out = optimize(&tree, &mut session);
        times.push(start.elapsed().as_secs_f64());
        let out = match out {
            Ok(o) => o,
            Err(e) => return RunRecord::failed(&q.id, mode, &e),
        };
        if first.is_none() {
            let cache = session.cache.stats.total();
            let visits = &session.cache.stats.visits;
            first = Some(RunRecord {
                query_id: q.id.clone(),
                mode,
                wall_time: 0.0,
                paths_built: session.counters.paths_built,
                cost_path_calls: session.counters.cost_path_calls,
                cbo_invocations: session.counters.cbo_invocations,
                prune_events: session.counters.prune_events,
                cache_probes: cache.probes,
                cache_hits: cache.full_matches,
                bucket_visits: visits.values().flat_map(|h| h.values()).sum(),
                singleton_visits: visits.values().filter_map(|h| h.get(&1)).sum(),
                digest: out.plan.digest(),
                final_cost: out.plan.total_cost(),
                error: None,
            });
        }
    }
    let mut rec = first.expect("at least one repetition ran");
    rec.wall_time = trailing_mean(&times);
    rec
}

/// Runs every query under every mode. Failures are recorded, not raised.
pub fn run_suite(
    catalog: &Arc<Catalog>,
    queries: &[CorpusQuery],
    modes: &[Mode],
    reps: usize,
    opts: &SuiteOptions,
) -> Vec<RunRecord> {
    let run_query =
        |q: &CorpusQuery| -> Vec<RunRecord> { modes.iter().map(|&m| run_one(catalog, q, m, reps, opts)).collect() };
    if opts.workers <= 1 || queries.len() <= 1 {
        return queries.iter().flat_map(run_query).collect();
    }
    let workers = opts.workers.min(queries.len());
    let mut per_query: Vec<Option<Vec<RunRecord>>> = vec![None; queries.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..queries.len())
                        .step_by(workers)
                        .map(|i| (i, run_query(&queries[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, recs) in h.join().expect("bench worker panicked") {
                per_query[i] = Some(recs);
            }
        }
    });
    per_query.into_iter().flatten().flatten().collect()
}

/// Reads `*.sql` files in name order; the file stem is the query id.
pub fn load_queries(dir: &Path) -> Result<Vec<CorpusQuery>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "sql"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let sql = std::fs::read_to_string(&p)?;
            let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(CorpusQuery { id, sql: sql.trim().trim_end_matches(';').to_string() })
        })
        .collect()
}

/// File-based entry point used by the CLI.
pub fn run_suite_from_paths(
    catalog_path: &Path,
    queries_dir: &Path,
    modes: &[Mode],
    reps: usize,
    opts: &SuiteOptions,
) -> Result<Vec<RunRecord>> {
    let catalog = Arc::new(load_catalog(catalog_path)?);
    let queries = load_queries(queries_dir)?;
    Ok(run_suite(&catalog, &queries, modes, reps, opts))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanDiff {
    pub query_id: String,
    /// (mode, digest, cost) for every compared mode.
    pub plans: Vec<(Mode, u64, f64)>,
}

/// Queries whose naive, cache and cache-guess plans are not identical.
///
/// Queries that failed in any compared mode are skipped here; callers see
/// them through `RunRecord::error`.
pub fn verify_plan_equality(records: &[RunRecord]) -> Vec<PlanDiff> {
    let mut by_query: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| COMPARED_MODES.contains(&r.mode)) {
        by_query.entry(&r.query_id).or_default().push(r);
    }
    by_query
        .into_iter()
        .filter(|(_, rs)| rs.iter().all(|r| r.ok()))
        .filter(|(_, rs)| {
            rs.windows(2)
                .any(|w| w[0].digest != w[1].digest || w[0].final_cost.to_bits() != w[1].final_cost.to_bits())
        })
        .map(|(id, rs)| PlanDiff {
            query_id: id.to_string(),
            plans: rs.iter().map(|r| (r.mode, r.digest, r.final_cost)).collect(),
        })
        .collect()
}

/// Sum of one counter over all records of a mode.
pub fn total_counter(records: &[RunRecord], mode: Mode, f: impl Fn(&RunRecord) -> u64) -> u64 {
    records.iter().filter(|r| r.mode == mode).map(f).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::fixture::tpch_catalog;

    fn q(id: &str, sql: &str) -> CorpusQuery {
        CorpusQuery { id: id.into(), sql: sql.into() }
    }

    #[test]
    fn trailing_mean_uses_last_half() {
        assert_eq!(trailing_mean(&[9.0, 9.0, 9.0, 1.0, 2.0, 3.0]), 2.0);
        assert_eq!(trailing_mean(&[5.0, 1.0, 3.0]), 2.0);
        assert_eq!(trailing_mean(&[4.0]), 4.0);
    }

    #[test]
    fn one_query_one_mode_one_record() {
        let cat = Arc::new(tpch_catalog());
        let recs = run_suite(&cat, &[q("a", "SELECT n_name FROM nation")], &[Mode::Naive], 6, &SuiteOptions::default());
        assert_eq!(recs.len(), 1);
        assert!(recs[0].ok());
        assert!(recs[0].cost_path_calls > 0);
    }

    #[test]
    fn empty_corpus_gives_no_records() {
        let cat = Arc::new(tpch_catalog());
        assert!(run_suite(&cat, &[], &BENCH_MODES, 2, &SuiteOptions::default()).is_empty());
    }

    #[test]
    fn parse_failure_is_isolated() {
        let cat = Arc::new(tpch_catalog());
        let qs = [q("bad", "SELEKT nope"), q("good", "SELECT r_name FROM region")];
        let recs = run_suite(&cat, &qs, &[Mode::Cache], 1, &SuiteOptions::default());
        assert!(recs[0].error.is_some());
        assert!(recs[1].ok());
    }

    #[test]
    fn workers_preserve_order() {
        let cat = Arc::new(tpch_catalog());
        let qs = generate_corpus(3, 10);
        let serial = run_suite(&cat, &qs, &COMPARED_MODES, 1, &SuiteOptions::default());
        let opts = SuiteOptions { workers: 3, ..Default::default() };
        let parallel = run_suite(&cat, &qs, &COMPARED_MODES, 1, &opts);
        let key = |r: &RunRecord| (r.query_id.clone(), r.mode, r.digest, r.cost_path_calls);
        assert_eq!(serial.iter().map(key).collect::<Vec<_>>(), parallel.iter().map(key).collect::<Vec<_>>());
    }

    #[test]
    fn off_mode_is_not_compared() {
        let mk = |mode, digest| RunRecord { digest, ..RunRecord::failed("x", mode, &Error::Io(String::new())) };
        let mut recs: Vec<RunRecord> =
            vec![mk(Mode::Off, 1), mk(Mode::Naive, 2), mk(Mode::Cache, 2), mk(Mode::CacheGuess, 2)];
        for r in &mut recs {
            r.error = None;
        }
        assert!(verify_plan_equality(&recs).is_empty());
        recs[3].digest = 3;
        assert_eq!(verify_plan_equality(&recs)[0].query_id, "x");
    }
}
