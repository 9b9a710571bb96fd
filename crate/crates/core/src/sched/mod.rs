//! Scheduler: persistent worker loops over the task pool and queues, with a
//! real-concurrency engine and a deterministic modeled-time engine.

pub mod concurrent;
pub mod deterministic;
pub mod dispatch;
pub mod registry;
pub mod worker;

pub use dispatch::NativeCtx;
pub use registry::{BufferSet, FnRegistry};
pub use worker::{select_queue_epaq, select_victim, WorkerCtx};

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::config::{EngineKind, RuntimeConfig, SchedulerKind};
use crate::error::{Result, RuntimeError};
use crate::metrics::{
    compute_work_span, fill_idle_gaps, DivergenceAccum, InvocationLog, PoolCounters, RunReport,
};
use crate::queues::QueueSet;
use crate::task::{FnId, TaskPool, Value};

/// Root-task request: function, arguments, and the queue the root lands on.
#[derive(Debug, Clone)]
pub struct SpawnRequest {
    pub fn_id: FnId,
    pub args: Vec<Value>,
    pub queue: u32,
}

impl SpawnRequest {
    pub fn new(fn_id: FnId, args: Vec<Value>) -> Self {
        Self {
            fn_id,
            args,
            queue: 0,
        }
    }
}

/// State shared by all workers of one run.
pub struct Shared {
    pub config: RuntimeConfig,
    pub pool: TaskPool,
    pub queues: QueueSet,
    pub registry: FnRegistry,
    pub buffers: BufferSet,
    pub dispatch_seq: AtomicU64,
    pub executing: AtomicUsize,
    failed: AtomicBool,
    failure: Mutex<Option<RuntimeError>>,
    watchdog_lock: AtomicBool,
}

impl Shared {
    pub fn new(
        config: &RuntimeConfig,
        registry: FnRegistry,
        buffer_init: Vec<Vec<i64>>,
    ) -> Result<Self> {
        Ok(Self {
            config: config.clone(),
            pool: TaskPool::new(config)?,
            queues: QueueSet::new(config),
            buffers: BufferSet::new(registry.buffer_names.clone(), buffer_init)?,
            registry,
            dispatch_seq: AtomicU64::new(0),
            executing: AtomicUsize::new(0),
            failed: AtomicBool::new(false),
            failure: Mutex::new(None),
            watchdog_lock: AtomicBool::new(false),
        })
    }

    pub fn fail(&self, err: RuntimeError) {
        let mut slot = self.failure.lock().unwrap();
        if slot.is_none() {
            *slot = Some(err);
        }
        self.failed.store(true, Ordering::Release);
    }

    pub fn failed(&self) -> bool {
        self.failed.load(Ordering::Acquire)
    }

    pub fn take_failure(&self) -> Option<RuntimeError> {
        self.failure.lock().unwrap().take()
    }
}

/// Raw engine output before report assembly.
pub struct EngineRaw {
    pub ctxs: Vec<WorkerCtx>,
    pub makespan: u64,
    pub wall_time_ns: Option<u64>,
}

fn validate(registry: &FnRegistry, root: &SpawnRequest, config: &RuntimeConfig) -> Result<()> {
    config.validate()?;
    if config.assume_no_taskwait && registry.has_taskwait {
        return Err(RuntimeError::Config(
            "assume_no_taskwait requires a program that never executes taskwait".into(),
        ));
    }
    if config.worker_kind == crate::config::WorkerKind::BlockLevel && registry.uses_queue_clauses
    {
        return Err(RuntimeError::Config(
            "the queue option is not supported for block-level workers".into(),
        ));
    }
    if config.scheduler == SchedulerKind::GlobalQueue && config.num_queues != 1 {
        return Err(RuntimeError::Config(
            "the global-queue scheduler has a single queue; num_queues must be 1".into(),
        ));
    }
    let entry = registry
        .entries
        .get(root.fn_id.0 as usize)
        .ok_or_else(|| RuntimeError::Usage(format!("unknown root function {:?}", root.fn_id)))?;
    if entry.arity != root.args.len() {
        return Err(RuntimeError::Usage(format!(
            "root `{}` expects {} arguments, got {}",
            entry.name,
            entry.arity,
            root.args.len()
        )));
    }
    if root.queue as usize >= config.queues_per_worker() {
        return Err(RuntimeError::Usage(format!(
            "root queue {} out of range",
            root.queue
        )));
    }
    Ok(())
}

/// Allocate the pool and queues, enqueue the root task on worker 0, run all
/// workers to termination, and assemble the run report.
pub fn run(
    registry: FnRegistry,
    buffer_init: Vec<Vec<i64>>,
    root: SpawnRequest,
    config: &RuntimeConfig,
) -> Result<RunReport> {
    validate(&registry, &root, config)?;
    let shared = Shared::new(config, registry, buffer_init)?;

    let root_id = shared.pool.alloc(0, root.fn_id, &root.args, None)?;
    unsafe {
        shared.pool.meta_mut(root_id).queue_tag = root.queue;
    }
    shared.pool.set_root(root_id);
    shared.queues.push(0, root.queue as usize, &[root_id])?;

    let raw = match config.engine {
        EngineKind::Deterministic { seed } => deterministic::run_deterministic(&shared, seed)?,
        EngineKind::Concurrent => concurrent::run_concurrent(&shared)?,
    };

    let mut log = InvocationLog::default();
    let mut divergence = DivergenceAccum::default();
    let mut timelines = Vec::new();
    for ctx in raw.ctxs {
        log.invocations.extend(ctx.invocations);
        log.spawns.extend(ctx.spawns);
        divergence.merge(&ctx.divergence);
        timelines.extend(ctx.segments);
    }
    log.invocations.sort_by_key(|r| r.seq);
    fill_idle_gaps(&mut timelines, config.num_workers(), raw.makespan);

    // Exactly-once fetch: at termination the queues are empty, so every
    // published task id was claimed exactly once.
    let counters = shared.queues.counters.snapshot();
    debug_assert_eq!(
        counters.tasks_pushed,
        counters.tasks_popped + counters.tasks_stolen,
        "queue fetch conservation violated"
    );

    let work_span = compute_work_span(&log)?;
    let stats = &shared.pool.stats;
    let report = RunReport {
        config: config.clone(),
        seed: config.seed(),
        root_result: shared.pool.root_result(),
        outstanding_at_exit: shared.pool.outstanding(),
        makespan: raw.makespan,
        wall_time_ns: raw.wall_time_ns,
        invocations: log.invocations.len() as u64,
        work_span,
        divergence: divergence.finish(config.lanes_per_worker()),
        queue_counters: shared.queues.counters.snapshot(),
        pool_counters: PoolCounters {
            allocs: stats.allocs.load(Ordering::Relaxed),
            finishes: stats.finishes.load(Ordering::Relaxed),
            join_rmw_ops: stats.join_rmw_ops.load(Ordering::Relaxed),
            child_result_writes: stats.child_result_writes.load(Ordering::Relaxed),
            zero_transitions: stats.zero_transitions.load(Ordering::Relaxed),
        },
        timelines,
        log,
        final_buffers: shared.buffers.snapshot(),
    };
    Ok(report)
}
