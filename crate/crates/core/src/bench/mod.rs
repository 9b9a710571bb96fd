//! Benchmark corpus and harness: DSL sources, native oracles, verified runs,
//! and parameter sweeps.

pub mod oracles;

use std::fmt;

use crate::compiler::{compile_program, CompileOptions, Program};
use crate::config::{RuntimeConfig, WorkerKind};
use crate::error::{Result, RuntimeError};
use crate::metrics::RunReport;
use crate::rng::splitmix64;
use crate::sched::{run, FnRegistry, SpawnRequest};

pub const FIB_SRC: &str = include_str!("programs/fib.gt");
pub const FIB_CUTOFF_SRC: &str = include_str!("programs/fib_cutoff.gt");
pub const NQUEENS_SRC: &str = include_str!("programs/nqueens.gt");
pub const NQUEENS_ANT_SRC: &str = include_str!("programs/nqueens_ant.gt");
pub const MERGESORT_SRC: &str = include_str!("programs/mergesort.gt");
pub const CILKSORT_SRC: &str = include_str!("programs/cilksort.gt");
pub const FTREE_SRC: &str = include_str!("programs/ftree.gt");
pub const PTREE_SRC: &str = include_str!("programs/ptree.gt");

/// Size of the shared load target for the synthetic tree work body.
const TREE_POOL_LEN: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchName {
    Fib,
    Nqueens,
    Mergesort,
    Cilksort,
    Ftree,
    Ptree,
}

impl BenchName {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "fib" => BenchName::Fib,
            "nqueens" => BenchName::Nqueens,
            "mergesort" => BenchName::Mergesort,
            "cilksort" => BenchName::Cilksort,
            "ftree" => BenchName::Ftree,
            "ptree" => BenchName::Ptree,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BenchName::Fib => "fib",
            BenchName::Nqueens => "nqueens",
            BenchName::Mergesort => "mergesort",
            BenchName::Cilksort => "cilksort",
            BenchName::Ftree => "ftree",
            BenchName::Ptree => "ptree",
        }
    }

    /// Queues the benchmark's path-aware mapping expects when enabled.
    pub fn epaq_queues(self) -> Option<usize> {
        match self {
            BenchName::Fib => Some(3),
            BenchName::Nqueens => Some(2),
            BenchName::Cilksort => Some(3),
            BenchName::Mergesort | BenchName::Ftree | BenchName::Ptree => None,
        }
    }
}

/// One benchmark instance: sizes, cutoffs, tree parameters, input seed.
#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub name: BenchName,
    /// Problem size: fib/nqueens n, array length, or tree depth.
    pub n: i64,
    /// Recursion cutoff (fib subproblem size, nqueens depth, mergesort run).
    pub cutoff: i64,
    pub cutoff_sort: i64,
    pub cutoff_merge: i64,
    /// Pruned-tree branching factor.
    pub branching: i64,
    pub mem_ops: i64,
    pub compute_iters: i64,
    /// Input/shape seed (buffers and pruned-tree draws).
    pub seed: u64,
}

impl BenchSpec {
    pub fn new(name: BenchName) -> Self {
        let mut spec = Self {
            name,
            n: 0,
            cutoff: 0,
            cutoff_sort: 64,
            cutoff_merge: 256,
            branching: 3,
            mem_ops: 16,
            compute_iters: 64,
            seed: 0x5eed,
        };
        match name {
            BenchName::Fib => {
                spec.n = 25;
                spec.cutoff = 0; // spawn at every recursive call
            }
            BenchName::Nqueens => {
                spec.n = 8;
                spec.cutoff = 7;
            }
            BenchName::Mergesort => {
                spec.n = 100_000;
                spec.cutoff = 128;
            }
            BenchName::Cilksort => {
                spec.n = 100_000;
            }
            BenchName::Ftree => {
                spec.n = 12;
            }
            BenchName::Ptree => {
                spec.n = 12;
            }
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(RuntimeError::Config(msg));
        match self.name {
            BenchName::Fib => {
                if !(0..=40).contains(&self.n) {
                    return bad(format!("fib n={} outside 0..=40", self.n));
                }
            }
            BenchName::Nqueens => {
                if !(1..=14).contains(&self.n) {
                    return bad(format!("nqueens n={} outside 1..=14", self.n));
                }
                if self.cutoff < 1 {
                    return bad("nqueens cutoff depth must be >= 1".into());
                }
            }
            BenchName::Mergesort => {
                if !(1..=10_000_000).contains(&self.n) {
                    return bad(format!("mergesort n={} outside 1..=10^7", self.n));
                }
                if self.cutoff < 1 {
                    return bad("mergesort cutoff must be >= 1".into());
                }
            }
            BenchName::Cilksort => {
                if !(1..=10_000_000).contains(&self.n) {
                    return bad(format!("cilksort n={} outside 1..=10^7", self.n));
                }
                if self.cutoff_sort < 1 || self.cutoff_merge < 2 {
                    return bad("cilksort cutoffs must be >= 1 (sort) and >= 2 (merge)".into());
                }
            }
            BenchName::Ftree => {
                if !(0..=24).contains(&self.n) {
                    return bad(format!("ftree depth {} outside 0..=24", self.n));
                }
            }
            BenchName::Ptree => {
                if !(1..=36).contains(&self.n) {
                    return bad(format!("ptree depth {} outside 1..=36", self.n));
                }
                if !(1..=8).contains(&self.branching) {
                    return bad(format!("ptree branching {} outside 1..=8", self.branching));
                }
            }
        }
        if self.mem_ops < 0 || self.compute_iters < 0 {
            return bad("mem_ops and compute_iters must be >= 0".into());
        }
        Ok(())
    }

    fn source(&self, assume_no_taskwait: bool) -> Result<&'static str> {
        Ok(match self.name {
            BenchName::Fib => {
                if self.cutoff > 1 {
                    FIB_CUTOFF_SRC
                } else {
                    FIB_SRC
                }
            }
            BenchName::Nqueens => {
                if assume_no_taskwait {
                    NQUEENS_ANT_SRC
                } else {
                    NQUEENS_SRC
                }
            }
            BenchName::Mergesort => MERGESORT_SRC,
            BenchName::Cilksort => CILKSORT_SRC,
            BenchName::Ftree => FTREE_SRC,
            BenchName::Ptree => PTREE_SRC,
        })
    }

    fn root_task(&self) -> &'static str {
        match self.name {
            BenchName::Fib => "fib",
            BenchName::Nqueens => "nqueens",
            BenchName::Mergesort => "mergesort",
            BenchName::Cilksort => "cs",
            BenchName::Ftree => "ftree",
            BenchName::Ptree => "ptree",
        }
    }

    fn root_args(&self) -> Vec<i64> {
        match self.name {
            BenchName::Fib => {
                if self.cutoff > 1 {
                    vec![self.n, self.cutoff]
                } else {
                    vec![self.n]
                }
            }
            BenchName::Nqueens => vec![self.n, 0, 0, 0, 0, self.cutoff],
            BenchName::Mergesort => vec![0, self.n, self.cutoff],
            BenchName::Cilksort => vec![0, self.n, 0, self.cutoff_sort, self.cutoff_merge],
            BenchName::Ftree => vec![
                0,
                self.n,
                self.mem_ops,
                self.compute_iters,
                self.seed as i64,
                TREE_POOL_LEN as i64,
            ],
            BenchName::Ptree => vec![
                0,
                self.n,
                0,
                self.seed as i64,
                self.mem_ops,
                self.compute_iters,
                TREE_POOL_LEN as i64,
                self.branching,
            ],
        }
    }

    /// Random input array for the sorting benchmarks.
    pub fn input_array(&self) -> Vec<i64> {
        let mut state = self.seed ^ 0xa5a5_5a5a_0f0f_f0f0;
        (0..self.n as usize)
            .map(|_| {
                state = splitmix64(state);
                state as i64
            })
            .collect()
    }

    fn buffers(&self, program: &Program) -> Vec<Vec<i64>> {
        program
            .buffers
            .iter()
            .map(|name| match (self.name, name.as_str()) {
                (BenchName::Mergesort | BenchName::Cilksort, "data") => self.input_array(),
                (BenchName::Mergesort | BenchName::Cilksort, "tmp") => {
                    vec![0; self.n as usize]
                }
                (BenchName::Ftree | BenchName::Ptree, "pool") => {
                    let mut state = self.seed ^ 0x0ddb_a11d_dead_beef;
                    (0..TREE_POOL_LEN)
                        .map(|_| {
                            state = splitmix64(state);
                            (state >> 8) as i64
                        })
                        .collect()
                }
                (BenchName::Nqueens, "solutions") => vec![0],
                _ => Vec::new(),
            })
            .collect()
    }

    /// Tasks the pool must hold across the whole run, before dividing by the
    /// worker count. Sized for the worst case (global-queue FIFO order).
    pub fn default_total_tasks(&self) -> usize {
        match self.name {
            BenchName::Fib => 1 << 20,
            BenchName::Nqueens => 1 << 20,
            BenchName::Mergesort => 1 << 16,
            BenchName::Cilksort => 1 << 17,
            BenchName::Ftree => (4 * oracles::ftree_count(self.n).max(1) as usize)
                .next_power_of_two()
                .max(1 << 10),
            BenchName::Ptree => (4 * oracles::ptree_count(self.n, self.branching, self.seed as i64)
                .max(1) as usize)
                .next_power_of_two()
                .max(1 << 10),
        }
    }

    pub fn max_child_tasks(&self) -> usize {
        match self.name {
            BenchName::Nqueens => (self.n as usize).max(2),
            BenchName::Ptree => (self.branching as usize).max(2),
            _ => 2,
        }
    }
}

/// Oracle verdict for one run.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub pass: bool,
    pub expected: String,
    pub actual: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pass {
            write!(f, "pass ({})", self.actual)
        } else {
            write!(f, "FAIL: expected {}, got {}", self.expected, self.actual)
        }
    }
}

pub struct BenchOutcome {
    pub report: RunReport,
    pub verdict: Verdict,
}

/// Compile the benchmark for this config and run it.
pub fn run_bench(spec: &BenchSpec, config: &RuntimeConfig) -> Result<BenchOutcome> {
    spec.validate()?;
    if config.num_queues > 1 {
        match spec.name.epaq_queues() {
            Some(q) if q == config.num_queues => {}
            Some(q) => {
                return Err(RuntimeError::Config(format!(
                    "{} uses a {q}-queue mapping; got num_queues={}",
                    spec.name.as_str(),
                    config.num_queues
                )))
            }
            None => {
                return Err(RuntimeError::Config(format!(
                    "{} has no multi-queue mapping",
                    spec.name.as_str()
                )))
            }
        }
    }
    let opts = CompileOptions {
        max_task_data_size: config.max_task_data_size,
        assume_no_taskwait: config.assume_no_taskwait,
        block_level: config.worker_kind == WorkerKind::BlockLevel,
    };
    let source = spec.source(config.assume_no_taskwait)?;
    let program = compile_program(source, &opts)
        .map_err(|e| RuntimeError::Config(format!("benchmark failed to compile: {e}")))?;
    let registry = FnRegistry::from_program(&program);
    let fn_id = registry
        .lookup(spec.root_task())
        .ok_or_else(|| RuntimeError::Internal("missing root task".into()))?;
    let buffers = spec.buffers(&program);
    let report = run(
        registry,
        buffers,
        SpawnRequest::new(fn_id, spec.root_args()),
        config,
    )?;
    let verdict = oracle_check(spec, config, &report);
    Ok(BenchOutcome { report, verdict })
}

/// Compare a finished run against the benchmark's native oracle.
pub fn oracle_check(spec: &BenchSpec, config: &RuntimeConfig, report: &RunReport) -> Verdict {
    let simple = |expected: i64, actual: Option<i64>| {
        let pass = actual == Some(expected);
        Verdict {
            pass,
            expected: expected.to_string(),
            actual: actual.map_or("no result".to_string(), |v| v.to_string()),
        }
    };
    match spec.name {
        BenchName::Fib => simple(oracles::fib(spec.n), report.root_result),
        BenchName::Nqueens => {
            let expected = oracles::nqueens(spec.n);
            if config.assume_no_taskwait {
                // Counts accumulate in the `solutions` buffer.
                let actual = report.final_buffers.first().and_then(|b| b.first()).copied();
                let pass = actual == Some(expected);
                Verdict {
                    pass,
                    expected: expected.to_string(),
                    actual: actual.map_or("missing buffer".into(), |v| v.to_string()),
                }
            } else {
                simple(expected, report.root_result)
            }
        }
        BenchName::Mergesort | BenchName::Cilksort => {
            let input = spec.input_array();
            let output = report.final_buffers.first().cloned().unwrap_or_default();
            match oracles::check_sorted_permutation(&input, &output) {
                Ok(()) => Verdict {
                    pass: true,
                    expected: "sorted permutation".into(),
                    actual: format!("sorted {} values", output.len()),
                },
                Err(e) => Verdict {
                    pass: false,
                    expected: "sorted permutation".into(),
                    actual: e,
                },
            }
        }
        BenchName::Ftree => simple(oracles::ftree_count(spec.n), report.root_result),
        BenchName::Ptree => simple(
            oracles::ptree_count(spec.n, spec.branching, spec.seed as i64),
            report.root_result,
        ),
    }
}

/// Derive a per-benchmark runtime config from a base config: pool capacity
/// split across workers, child limit and data size from the benchmark.
pub fn bench_config(spec: &BenchSpec, base: &RuntimeConfig, total_tasks: Option<usize>) -> RuntimeConfig {
    let mut config = base.clone();
    let total = total_tasks.unwrap_or_else(|| spec.default_total_tasks());
    let workers = config.num_workers().max(1);
    let per_worker = total.div_ceil(workers).max(64);
    match config.worker_kind {
        WorkerKind::ThreadLevel => config.max_tasks_per_warp = per_worker,
        WorkerKind::BlockLevel => config.max_tasks_per_block = per_worker,
    }
    config.max_child_tasks = spec.max_child_tasks();
    config
}
