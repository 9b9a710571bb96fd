//! Benchmark harness CLI: verified single runs, repetitions, and crossed
//! parameter sweeps over the fork-join runtime's configuration space.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args as ClapArgs, Parser, Subcommand};

use simt_forkjoin::bench::{bench_config, run_bench, BenchName, BenchSpec};
use simt_forkjoin::metrics::export::{export_report, ReportFormat};
use simt_forkjoin::{CostModel, EngineKind, QueueAlg, RuntimeConfig, SchedulerKind, WorkerKind};

#[derive(Parser)]
#[command(
    name = "simt-forkjoin",
    about = "Fork-join task runtime on a modeled SIMT machine: benchmarks and ablations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark (optionally sweeping parameters) and emit a report.
    Bench(BenchArgs),
}

#[derive(ClapArgs, Debug, Clone)]
struct BenchArgs {
    /// Benchmark: fib, nqueens, mergesort, cilksort, ftree, ptree.
    #[arg(long)]
    bench: String,

    /// Problem size (fib/nqueens n, array length, or tree depth).
    #[arg(long)]
    n: Option<i64>,

    /// Worker count (warps at thread granularity, blocks at block level).
    #[arg(long, default_value_t = 4)]
    workers: usize,

    #[arg(long, default_value_t = 32)]
    warp_size: usize,

    /// Threads per block (block-level granularity).
    #[arg(long, default_value_t = 64)]
    block_size: usize,

    /// Queues per worker (1 disables path-aware routing).
    #[arg(long, default_value_t = 1)]
    queues: usize,

    /// Recursion cutoff (fib subproblem, nqueens depth, mergesort run).
    #[arg(long)]
    cutoff: Option<i64>,

    #[arg(long)]
    cutoff_sort: Option<i64>,

    #[arg(long)]
    cutoff_merge: Option<i64>,

    /// Pruned-tree branching factor.
    #[arg(long)]
    branching: Option<i64>,

    #[arg(long)]
    mem_ops: Option<i64>,

    #[arg(long)]
    compute_iters: Option<i64>,

    /// Scheduler: ws (work stealing) or gq (global queue).
    #[arg(long, default_value = "ws", value_parser = ["ws", "gq"])]
    sched: String,

    /// Queue algorithm: batched or seq-cl (sequential Chase-Lev ablation).
    #[arg(long, default_value = "batched", value_parser = ["batched", "seq-cl"])]
    queue_alg: String,

    /// Engine: det (deterministic modeled time) or concurrent.
    #[arg(long, default_value = "det", value_parser = ["det", "concurrent"])]
    engine: String,

    /// Worker granularity.
    #[arg(long, default_value = "thread", value_parser = ["thread", "block"])]
    granularity: String,

    /// Seed for the deterministic engine and input generation
    /// (falls back to SIMT_FJ_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,

    /// Repetitions per configuration.
    #[arg(long, default_value_t = 1)]
    reps: usize,

    /// Output path (.csv or .json); defaults to a stdout summary only.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Force the output format regardless of extension.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,

    /// Sweep axis=v1,v2,... (repeatable; axes are crossed). Axes: workers,
    /// n, cutoff, cutoff-sort, cutoff-merge, mem-ops, compute-iters,
    /// queues, sched, queue-alg.
    #[arg(long)]
    sweep: Vec<String>,

    /// Total task-record capacity override (divided across workers).
    #[arg(long)]
    total_tasks: Option<usize>,

    #[arg(long)]
    assume_no_taskwait: bool,

    #[arg(long)]
    epaq_pure_keep: bool,

    /// Thieves claim half of the available tasks instead of a full batch.
    #[arg(long)]
    steal_half: bool,

    /// Unit cost per invocation instead of instructions retired.
    #[arg(long)]
    unit_cost: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Bench(args) => match bench_command(&args) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::FAILURE,
            Err(e) => {
                eprintln!("simt-forkjoin: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}

fn env_seed() -> Option<u64> {
    std::env::var("SIMT_FJ_SEED").ok()?.parse().ok()
}

#[derive(Debug, Clone)]
struct Combo {
    spec: BenchSpec,
    workers: usize,
    queues: usize,
    sched: SchedulerKind,
    alg: QueueAlg,
}

fn parse_sched(s: &str) -> Result<SchedulerKind> {
    Ok(match s {
        "ws" => SchedulerKind::WorkStealing,
        "gq" => SchedulerKind::GlobalQueue,
        other => bail!("unknown scheduler `{other}`"),
    })
}

fn parse_alg(s: &str) -> Result<QueueAlg> {
    Ok(match s {
        "batched" => QueueAlg::Batched,
        "seq-cl" => QueueAlg::SequentialChaseLev,
        other => bail!("unknown queue algorithm `{other}`"),
    })
}

fn base_spec(args: &BenchArgs, seed: u64) -> Result<BenchSpec> {
    let name = BenchName::parse(&args.bench)
        .ok_or_else(|| anyhow!("unknown benchmark `{}`", args.bench))?;
    let mut spec = BenchSpec::new(name);
    spec.seed = seed;
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(c) = args.cutoff {
        spec.cutoff = c;
    }
    if let Some(c) = args.cutoff_sort {
        spec.cutoff_sort = c;
    }
    if let Some(c) = args.cutoff_merge {
        spec.cutoff_merge = c;
    }
    if let Some(b) = args.branching {
        spec.branching = b;
    }
    if let Some(m) = args.mem_ops {
        spec.mem_ops = m;
    }
    if let Some(c) = args.compute_iters {
        spec.compute_iters = c;
    }
    Ok(spec)
}

/// Cross the requested sweep axes into the full combination list.
fn combos(args: &BenchArgs, seed: u64) -> Result<Vec<Combo>> {
    let base = Combo {
        spec: base_spec(args, seed)?,
        workers: args.workers,
        queues: args.queues,
        sched: parse_sched(&args.sched)?,
        alg: parse_alg(&args.queue_alg)?,
    };
    let mut current = vec![base];
    for sweep in &args.sweep {
        let (axis, values) = sweep
            .split_once('=')
            .ok_or_else(|| anyhow!("--sweep expects axis=v1,v2,..., got `{sweep}`"))?;
        let values: Vec<&str> = values.split(',').filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            bail!("--sweep {axis}= has no values");
        }
        let mut next = Vec::new();
        for combo in &current {
            for value in &values {
                let mut c = combo.clone();
                match axis {
                    "workers" => c.workers = value.parse().context("workers value")?,
                    "n" | "depth" => c.spec.n = value.parse().context("n value")?,
                    "cutoff" => c.spec.cutoff = value.parse().context("cutoff value")?,
                    "cutoff-sort" => c.spec.cutoff_sort = value.parse().context("cutoff-sort")?,
                    "cutoff-merge" => {
                        c.spec.cutoff_merge = value.parse().context("cutoff-merge")?
                    }
                    "mem-ops" => c.spec.mem_ops = value.parse().context("mem-ops value")?,
                    "compute-iters" => {
                        c.spec.compute_iters = value.parse().context("compute-iters value")?
                    }
                    "queues" => c.queues = value.parse().context("queues value")?,
                    "sched" => c.sched = parse_sched(value)?,
                    "queue-alg" => c.alg = parse_alg(value)?,
                    other => bail!("unknown sweep axis `{other}`"),
                }
                next.push(c);
            }
        }
        current = next;
    }
    Ok(current)
}

fn runtime_config(args: &BenchArgs, combo: &Combo, seed: u64) -> RuntimeConfig {
    let engine = match args.engine.as_str() {
        "det" => EngineKind::Deterministic { seed },
        _ => EngineKind::Concurrent,
    };
    let worker_kind = if args.granularity == "block" {
        WorkerKind::BlockLevel
    } else {
        WorkerKind::ThreadLevel
    };
    let block_size = match worker_kind {
        WorkerKind::ThreadLevel => args.warp_size,
        WorkerKind::BlockLevel => args.block_size,
    };
    RuntimeConfig {
        grid_size: combo.workers,
        block_size,
        warp_size: args.warp_size,
        num_queues: combo.queues,
        scheduler: combo.sched,
        queue_alg: combo.alg,
        engine,
        worker_kind,
        assume_no_taskwait: args.assume_no_taskwait,
        epaq_pure_keep: args.epaq_pure_keep,
        steal_half: args.steal_half,
        cost_model: if args.unit_cost {
            CostModel::UnitPerInvocation
        } else {
            CostModel::Instructions
        },
        ..Default::default()
    }
}

const SWEEP_HEADER: &str = "bench,n,cutoff,cutoff_sort,cutoff_merge,branching,mem_ops,\
compute_iters,workers,queues,sched,queue_alg,engine,granularity,seed,rep,verdict,root_result,\
makespan,wall_time_ns,total_work,critical_path,invocations,batches,mean_distinct_paths,\
lane_utilization,pop_claims,steal_claims,push_publishes,lock_acquisitions,failed_steals,\
tasks_pushed,tasks_popped,tasks_stolen";

fn sweep_row(args: &BenchArgs, combo: &Combo, rep: usize, rep_seed: u64) -> (String, bool) {
    let base = runtime_config(args, combo, rep_seed);
    let config = bench_config(&combo.spec, &base, args.total_tasks);
    let sched = match combo.sched {
        SchedulerKind::WorkStealing => "ws",
        SchedulerKind::GlobalQueue => "gq",
    };
    let alg = match combo.alg {
        QueueAlg::Batched => "batched",
        QueueAlg::SequentialChaseLev => "seq-cl",
    };
    let prefix = format!(
        "{},{},{},{},{},{},{},{},{},{},{sched},{alg},{},{},{rep_seed},{rep}",
        combo.spec.name.as_str(),
        combo.spec.n,
        combo.spec.cutoff,
        combo.spec.cutoff_sort,
        combo.spec.cutoff_merge,
        combo.spec.branching,
        combo.spec.mem_ops,
        combo.spec.compute_iters,
        combo.workers,
        combo.queues,
        args.engine,
        args.granularity,
    );
    match run_bench(&combo.spec, &config) {
        Ok(outcome) => {
            let r = &outcome.report;
            let q = &r.queue_counters;
            let row = format!(
                "{prefix},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                if outcome.verdict.pass { "pass" } else { "fail" },
                r.root_result.map_or(String::new(), |v| v.to_string()),
                r.makespan,
                r.wall_time_ns.map_or(String::new(), |v| v.to_string()),
                r.work_span.total_work,
                r.work_span.critical_path,
                r.invocations,
                r.divergence.batches,
                r.divergence.mean_distinct_paths,
                r.divergence.lane_utilization,
                q.pop_claims,
                q.steal_claims,
                q.push_publishes,
                q.lock_acquisitions,
                q.failed_steals,
                q.tasks_pushed,
                q.tasks_popped,
                q.tasks_stolen,
            );
            (row, outcome.verdict.pass)
        }
        Err(e) => {
            eprintln!(
                "sweep point failed ({} workers={} queues={}): {e}",
                combo.spec.name.as_str(),
                combo.workers,
                combo.queues
            );
            (format!("{prefix},error,,,,,,,,,,,,,,,,,"), false)
        }
    }
}

fn bench_command(args: &BenchArgs) -> Result<bool> {
    let seed = args.seed.or_else(env_seed).unwrap_or(0);
    let combos = combos(args, seed)?;
    let sweeping = !args.sweep.is_empty() || args.reps > 1;
    let mut all_passed = true;

    if !sweeping {
        let combo = &combos[0];
        let base = runtime_config(args, combo, seed);
        let config = bench_config(&combo.spec, &base, args.total_tasks);
        let outcome = run_bench(&combo.spec, &config)?;
        all_passed &= outcome.verdict.pass;
        println!(
            "{} n={} workers={} queues={} sched={} alg={} engine={}: verdict={} makespan={}{}",
            combo.spec.name.as_str(),
            combo.spec.n,
            combo.workers,
            combo.queues,
            args.sched,
            args.queue_alg,
            args.engine,
            outcome.verdict,
            outcome.report.makespan,
            outcome
                .report
                .wall_time_ns
                .map(|ns| format!(" wall={:.3}ms", ns as f64 / 1e6))
                .unwrap_or_default(),
        );
        if let Some(path) = &args.out {
            let format = args.format.as_deref().map(|f| {
                if f == "json" {
                    ReportFormat::Json
                } else {
                    ReportFormat::Csv
                }
            });
            export_report(&outcome.report, path, format)?;
            println!("report written to {}", path.display());
        }
        return Ok(all_passed);
    }

    // Sweep mode: one CSV row per (combination, repetition). Failures are
    // recorded per row and the sweep continues.
    let mut csv = String::new();
    csv.push_str(SWEEP_HEADER);
    csv.push('\n');
    for combo in &combos {
        for rep in 0..args.reps.max(1) {
            let rep_seed = seed.wrapping_add(rep as u64);
            let (row, passed) = sweep_row(args, combo, rep, rep_seed);
            all_passed &= passed;
            csv.push_str(&row);
            csv.push('\n');
        }
    }

    match &args.out {
        Some(path) => {
            std::fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
            println!(
                "{} rows written to {}",
                combos.len() * args.reps.max(1),
                path.display()
            );
        }
        None => print!("{csv}"),
    }
    Ok(all_passed)
}
