use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use optlab::bench::corpus::{generate_corpus, write_corpus, DEFAULT_SIZE};
use optlab::bench::fixture::tpch_catalog;
use optlab::bench::{run_suite_from_paths, ImprovementReport, SuiteOptions, BENCH_MODES};
use optlab::catalog::{load_catalog, save_catalog};
use optlab::frontend::parse_and_resolve;
use optlab::qrw::{decision_log_lines, optimize, DECISION_LOG_HEADER};
use optlab::session::{Mode, OptimizerSession, SessionConfig};

#[derive(Parser)]
#[command(name = "optlab", version, about = "Cost-based rewrite and plan-cache optimizer lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one query and print its plan digest and cost.
    Plan {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, default_value = "cache-guess")]
        mode: Mode,
        /// Print the plan tree.
        #[arg(long)]
        explain: bool,
        /// Print work counters, rewrite decisions and cache statistics.
        #[arg(long)]
        stats: bool,
    },
    /// Run a query directory under every mode and write a TSV report.
    Bench {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = 6)]
        reps: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, hide = true)]
        invert_guesses: bool,
        #[arg(long, hide = true)]
        inject_cache_fault: bool,
    },
    /// Check a bench report for plan differences between modes.
    Verify {
        #[arg(long)]
        report: PathBuf,
    },
    /// Write the seeded query corpus as .sql files.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SIZE)]
        size: usize,
        #[arg(long, env = "OPTLAB_SEED", default_value_t = optlab::bench::corpus::DEFAULT_SEED)]
        seed: u64,
    },
    /// Write the TPC-H fixture catalog.
    GenFixture {
        #[arg(long)]
        out: PathBuf,
    },
}

fn plan(catalog: PathBuf, query: PathBuf, mode: Mode, explain: bool, stats: bool) -> optlab::Result<()> {
    let catalog = Arc::new(load_catalog(&catalog)?);
    let sql = std::fs::read_to_string(&query)?;
    let tree = parse_and_resolve(&sql, &catalog)?;
    let mut session = OptimizerSession::new(catalog, SessionConfig::new(mode));
    let out = optimize(&tree, &mut session)?;
    println!("digest\t{:016x}", out.plan.digest());
    println!("cost\t{:.4}", out.plan.total_cost());
    if explain {
        print!("{}", out.plan.explain());
    }
    if stats {
        let c = &session.counters;
        println!("cbo_invocations\t{}", c.cbo_invocations);
        println!("paths_built\t{}", c.paths_built);
        println!("cost_path_calls\t{}", c.cost_path_calls);
        println!("prune_events\t{}", c.prune_events);
        println!("{DECISION_LOG_HEADER}");
        let id = query.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        print!("{}", decision_log_lines(&id, &out.decisions));
        print!("{}", session.cache.stats_tsv());
    }
    Ok(())
}

fn report_status(report: &ImprovementReport) -> ExitCode {
    for r in report.errors() {
        eprintln!("error\t{}\t{}", r.query_id, r.error.as_deref().unwrap_or_default());
    }
    for r in report.mismatches() {
        eprintln!("plan mismatch\t{}", r.query_id);
    }
    if !report.mismatches().is_empty() {
        ExitCode::from(2)
    } else if !report.errors().is_empty() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> optlab::Result<ExitCode> {
    match cli.command {
        Command::Plan { catalog, query, mode, explain, stats } => {
            plan(catalog, query, mode, explain, stats)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { catalog, queries, reps, out, workers, invert_guesses, inject_cache_fault } => {
            let opts = SuiteOptions { invert_guesses, corrupt_cache: inject_cache_fault, workers };
            let records = run_suite_from_paths(&catalog, &queries, &BENCH_MODES, reps, &opts)?;
            let report = ImprovementReport::from_records(&records);
            std::fs::write(&out, report.to_tsv())?;
            println!("wrote {} rows to {}", report.rows.len(), out.display());
            Ok(report_status(&report))
        }
        Command::Verify { report } => {
            let report = ImprovementReport::from_tsv(&std::fs::read_to_string(&report)?)?;
            let code = report_status(&report);
            if code == ExitCode::SUCCESS {
                println!("{} queries, plans identical across compared modes", report.rows.len());
            }
            Ok(code)
        }
        Command::GenCorpus { out, size, seed } => {
            let corpus = generate_corpus(seed, size);
            write_corpus(&out, &corpus)?;
            println!("wrote {} queries to {}", corpus.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::GenFixture { out } => {
            save_catalog(&tpch_catalog(), &out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("optlab: {e}");
            ExitCode::from(1)
        }
    }
}
