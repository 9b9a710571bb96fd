//! Run-time configuration: the compile-time constants of the modeled runtime
//! (grid/block geometry, pool capacities, queue count) plus engine selection.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RuntimeError};

/// Which load-balancing scheme the workers use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    /// Per-worker deques with random stealing.
    WorkStealing,
    /// One shared queue all workers push to and pop from.
    GlobalQueue,
}

/// Queue-management algorithm for thread-level workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueAlg {
    /// Warp-cooperative batched pop/steal on the claim-by-count deque.
    Batched,
    /// Ablation: Chase-Lev deque, one element per operation, repeated up to
    /// `warp_size` times.
    SequentialChaseLev,
}

/// Worker granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerKind {
    /// One task per lane; a warp executes up to `warp_size` tasks per cycle.
    ThreadLevel,
    /// One task per block; a leader lane performs queue operations.
    BlockLevel,
}

/// Which execution engine drives the workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    /// One OS thread per worker; timings are wall-clock.
    Concurrent,
    /// Single-threaded seeded stepper with a modeled clock; byte-stable output.
    Deterministic { seed: u64 },
}

/// How an invocation's modeled cost is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostModel {
    /// Cost = number of IR instructions retired (native tasks declare their own).
    #[default]
    Instructions,
    /// Every invocation costs one unit.
    UnitPerInvocation,
}

/// The modeled machine and runtime limits. Mirrors the constants a real build
/// would fix at compile time; here they are validated at run start.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuntimeConfig {
    pub grid_size: usize,
    pub block_size: usize,
    pub warp_size: usize,
    /// Pool + deque capacity per thread-level worker.
    pub max_tasks_per_warp: usize,
    /// Pool + deque capacity per block-level worker.
    pub max_tasks_per_block: usize,
    /// Maximum direct children per fork-join epoch.
    pub max_child_tasks: usize,
    /// Deques per thread-level worker (EPAQ uses >1). Default 1.
    pub num_queues: usize,
    /// Maximum per-task record payload in bytes (8 bytes per field).
    pub max_task_data_size: usize,
    /// Skip join-related metadata; only valid for programs with no taskwait.
    pub assume_no_taskwait: bool,
    pub worker_kind: WorkerKind,
    pub scheduler: SchedulerKind,
    pub queue_alg: QueueAlg,
    pub engine: EngineKind,
    /// Restrict the kept-for-next-cycle set to its most numerous queue class.
    pub epaq_pure_keep: bool,
    /// Thieves claim about half of the victim's available tasks instead of up
    /// to `warp_size`.
    pub steal_half: bool,
    /// Random victims probed per cycle before re-polling termination.
    pub steal_attempts: usize,
    pub cost_model: CostModel,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        Self {
            grid_size: 1,
            block_size: 32,
            warp_size: 32,
            max_tasks_per_warp: 1024,
            max_tasks_per_block: 1024,
            max_child_tasks: 16,
            num_queues: 1,
            max_task_data_size: 256,
            assume_no_taskwait: false,
            worker_kind: WorkerKind::ThreadLevel,
            scheduler: SchedulerKind::WorkStealing,
            queue_alg: QueueAlg::Batched,
            engine: EngineKind::Deterministic { seed: 0 },
            epaq_pure_keep: false,
            steal_half: false,
            steal_attempts: 4,
            cost_model: CostModel::Instructions,
        }
    }
}

impl RuntimeConfig {
    /// Number of workers for the configured granularity.
    pub fn num_workers(&self) -> usize {
        match self.worker_kind {
            WorkerKind::ThreadLevel => self.grid_size * self.block_size / self.warp_size,
            WorkerKind::BlockLevel => self.grid_size,
        }
    }

    /// Lanes a single worker executes in lockstep.
    pub fn lanes_per_worker(&self) -> usize {
        match self.worker_kind {
            WorkerKind::ThreadLevel => self.warp_size,
            WorkerKind::BlockLevel => self.block_size,
        }
    }

    /// Task records owned by one worker.
    pub fn tasks_per_worker(&self) -> usize {
        match self.worker_kind {
            WorkerKind::ThreadLevel => self.max_tasks_per_warp,
            WorkerKind::BlockLevel => self.max_tasks_per_block,
        }
    }

    /// Total record-pool capacity.
    pub fn pool_capacity(&self) -> usize {
        self.num_workers() * self.tasks_per_worker()
    }

    /// Deques per worker. Block-level workers always have exactly one.
    pub fn queues_per_worker(&self) -> usize {
        match self.worker_kind {
            WorkerKind::ThreadLevel => self.num_queues,
            WorkerKind::BlockLevel => 1,
        }
    }

    /// Maximum 64-bit fields in a task-data record.
    pub fn max_data_fields(&self) -> usize {
        self.max_task_data_size / 8
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(value: usize, name: &str) -> Result<()> {
            if value == 0 {
                Err(RuntimeError::Config(format!("{name} must be > 0")))
            } else {
                Ok(())
            }
        }
        positive(self.grid_size, "grid_size")?;
        positive(self.block_size, "block_size")?;
        positive(self.warp_size, "warp_size")?;
        positive(self.max_tasks_per_warp, "max_tasks_per_warp")?;
        positive(self.max_tasks_per_block, "max_tasks_per_block")?;
        positive(self.max_child_tasks, "max_child_tasks")?;
        positive(self.num_queues, "num_queues")?;
        positive(self.steal_attempts, "steal_attempts")?;
        if !self.block_size.is_multiple_of(self.warp_size) {
            return Err(RuntimeError::Config(format!(
                "block_size ({}) must be a multiple of warp_size ({})",
                self.block_size, self.warp_size
            )));
        }
        if !self.max_task_data_size.is_multiple_of(8) || self.max_task_data_size == 0 {
            return Err(RuntimeError::Config(format!(
                "max_task_data_size ({}) must be a positive multiple of 8",
                self.max_task_data_size
            )));
        }
        if self.worker_kind == WorkerKind::BlockLevel && self.num_queues != 1 {
            return Err(RuntimeError::Config(
                "the queue option is not supported for block-level workers".into(),
            ));
        }
        // Task handles pack the slot index into 32 bits; u32::MAX is the
        // reserved nil/canary pattern.
        let capacity = self
            .num_workers()
            .checked_mul(self.tasks_per_worker())
            .filter(|&c| c < u32::MAX as usize)
            .ok_or_else(|| {
                RuntimeError::Config("pool capacity overflows the task-handle width".into())
            })?;
        if capacity == 0 {
            return Err(RuntimeError::Config("pool capacity is zero".into()));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        match self.engine {
            EngineKind::Deterministic { seed } => seed,
            EngineKind::Concurrent => 0,
        }
    }
}
