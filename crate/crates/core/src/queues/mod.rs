//! Runnable-task containers: the batched claim-by-count warp deque, the
//! fixed-capacity Chase-Lev deque, and the serialized global-queue baseline,
//! behind one facade the scheduler drives.

mod chase_lev;
mod global_queue;
mod warp_deque;

pub use chase_lev::{ChaseLevDeque, PopOneOp, StealOneOp};
pub use global_queue::GlobalQueue;
pub use warp_deque::{PopBatchOp, PushBatchOp, StealBatchOp, Step, WarpDeque};

use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::config::{QueueAlg, RuntimeConfig, SchedulerKind, WorkerKind};
use crate::error::Result;
use crate::task::TaskId;

/// Queue instrumentation exported to the run report.
#[derive(Debug, Default)]
pub struct QueueCounters {
    /// Successful owner claims (count-CAS or Chase-Lev bottom claims).
    pub pop_claims: AtomicU64,
    /// Successful thief claims.
    pub steal_claims: AtomicU64,
    /// Publication operations (count increments / per-element pushes).
    pub push_publishes: AtomicU64,
    /// Steal-lock and global-lock acquisitions.
    pub lock_acquisitions: AtomicU64,
    /// Steal attempts that returned nothing (contended or empty).
    pub failed_steals: AtomicU64,
    pub tasks_pushed: AtomicU64,
    pub tasks_popped: AtomicU64,
    pub tasks_stolen: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct QueueCountersSnapshot {
    pub pop_claims: u64,
    pub steal_claims: u64,
    pub push_publishes: u64,
    pub lock_acquisitions: u64,
    pub failed_steals: u64,
    pub tasks_pushed: u64,
    pub tasks_popped: u64,
    pub tasks_stolen: u64,
}

impl QueueCounters {
    pub fn snapshot(&self) -> QueueCountersSnapshot {
        QueueCountersSnapshot {
            pop_claims: self.pop_claims.load(Ordering::Relaxed),
            steal_claims: self.steal_claims.load(Ordering::Relaxed),
            push_publishes: self.push_publishes.load(Ordering::Relaxed),
            lock_acquisitions: self.lock_acquisitions.load(Ordering::Relaxed),
            failed_steals: self.failed_steals.load(Ordering::Relaxed),
            tasks_pushed: self.tasks_pushed.load(Ordering::Relaxed),
            tasks_popped: self.tasks_popped.load(Ordering::Relaxed),
            tasks_stolen: self.tasks_stolen.load(Ordering::Relaxed),
        }
    }
}

impl QueueCountersSnapshot {
    /// Claim-side and publish-side synchronization operations; the
    /// batched-vs-sequential ablation compares this per acquired task.
    pub fn sync_ops(&self) -> u64 {
        self.pop_claims + self.steal_claims + self.push_publishes + self.lock_acquisitions
    }

    pub fn tasks_acquired(&self) -> u64 {
        self.tasks_popped + self.tasks_stolen
    }
}

enum Containers {
    /// One batched warp deque per (worker, queue index).
    Batched(Vec<Vec<WarpDeque>>),
    /// Chase-Lev per (worker, queue index): block-level workers and the
    /// sequentialized thread-level ablation.
    ChaseLev(Vec<Vec<ChaseLevDeque>>),
    Global(GlobalQueue),
}

/// All runnable-task queues of one run.
pub struct QueueSet {
    containers: Containers,
    pub counters: QueueCounters,
}

impl QueueSet {
    pub fn new(config: &RuntimeConfig) -> Self {
        let workers = config.num_workers();
        let queues = config.queues_per_worker();
        let per_queue_capacity = config.tasks_per_worker();
        let containers = match (config.scheduler, config.queue_alg, config.worker_kind) {
            (SchedulerKind::GlobalQueue, _, _) => {
                Containers::Global(GlobalQueue::new(config.pool_capacity()))
            }
            (_, _, WorkerKind::BlockLevel) | (_, QueueAlg::SequentialChaseLev, _) => {
                Containers::ChaseLev(
                    (0..workers)
                        .map(|_| {
                            (0..queues)
                                .map(|_| ChaseLevDeque::new(per_queue_capacity))
                                .collect()
                        })
                        .collect(),
                )
            }
            (_, QueueAlg::Batched, _) => Containers::Batched(
                (0..workers)
                    .map(|_| {
                        (0..queues)
                            .map(|_| WarpDeque::new(per_queue_capacity))
                            .collect()
                    })
                    .collect(),
            ),
        };
        Self {
            containers,
            counters: QueueCounters::default(),
        }
    }

    pub fn is_global(&self) -> bool {
        matches!(self.containers, Containers::Global(_))
    }

    /// Owner enqueue of a spawn/resume batch; returns sync ops performed.
    pub fn push(&self, worker: usize, queue: usize, ids: &[TaskId]) -> Result<u32> {
        match &self.containers {
            Containers::Batched(per_worker) => {
                per_worker[worker][queue].push_batch(worker, queue, ids, &self.counters)
            }
            Containers::ChaseLev(per_worker) => {
                let q = &per_worker[worker][queue];
                for id in ids {
                    q.push(worker, queue, *id, &self.counters)?;
                }
                Ok(ids.len() as u32)
            }
            Containers::Global(q) => q.enqueue_batch(ids, &self.counters),
        }
    }

    /// Owner acquire of up to `max` tasks; returns (tasks, sync ops).
    pub fn pop(&self, worker: usize, queue: usize, max: usize) -> (Vec<TaskId>, u32) {
        match &self.containers {
            Containers::Batched(per_worker) => {
                per_worker[worker][queue].pop_batch(max, &self.counters)
            }
            Containers::ChaseLev(per_worker) => {
                let q = &per_worker[worker][queue];
                let mut ids = Vec::new();
                let mut sync_ops = 0;
                for _ in 0..max {
                    match q.pop(&self.counters) {
                        Some(id) => {
                            ids.push(id);
                            sync_ops += 1;
                        }
                        None => break,
                    }
                }
                (ids, sync_ops)
            }
            Containers::Global(q) => q.dequeue_batch(max, &self.counters),
        }
    }

    /// Thief acquire from `victim`'s queue. Non-blocking; empty on
    /// contention. Meaningless for the global queue (workers share it).
    pub fn steal(
        &self,
        victim: usize,
        queue: usize,
        max: usize,
        steal_half: bool,
    ) -> (Vec<TaskId>, u32) {
        match &self.containers {
            Containers::Batched(per_worker) => {
                per_worker[victim][queue].steal_batch(max, steal_half, &self.counters)
            }
            Containers::ChaseLev(per_worker) => {
                let q = &per_worker[victim][queue];
                let mut ids = Vec::new();
                let mut sync_ops = 0;
                let budget = if steal_half {
                    max.min(q.len().div_ceil(2)).max(1)
                } else {
                    max
                };
                for _ in 0..budget {
                    match q.steal(&self.counters) {
                        Some(id) => {
                            ids.push(id);
                            sync_ops += 1;
                        }
                        None => break,
                    }
                }
                (ids, sync_ops)
            }
            Containers::Global(_) => (Vec::new(), 0),
        }
    }

    /// Published availability of one queue (EPAQ probe).
    pub fn available(&self, worker: usize, queue: usize) -> usize {
        match &self.containers {
            Containers::Batched(per_worker) => per_worker[worker][queue].available(),
            Containers::ChaseLev(per_worker) => per_worker[worker][queue].len(),
            Containers::Global(q) => q.len(),
        }
    }

    /// Total tasks sitting in queues (deadlock detection).
    pub fn total_queued(&self) -> usize {
        match &self.containers {
            Containers::Batched(per_worker) => per_worker
                .iter()
                .flat_map(|qs| qs.iter().map(|q| q.available()))
                .sum(),
            Containers::ChaseLev(per_worker) => per_worker
                .iter()
                .flat_map(|qs| qs.iter().map(|q| q.len()))
                .sum(),
            Containers::Global(q) => q.len(),
        }
    }
}
