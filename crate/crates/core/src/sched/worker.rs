//! The persistent worker cycle, shared by both engines:
//!   1. acquire: kept tasks, then a batched pop from the selected local
//!      queue, then batched steals from random victims;
//!   2. execute: dispatch each acquired task once;
//!   3. distribute: keep up to a lane-count of new work, push the rest.
//!
//! Engines drive these phases and observe them through [`EngineHooks`]
//! (modeled-time charging in the deterministic engine; no-ops in the
//! concurrent one).

use std::sync::atomic::Ordering;

use crate::config::{CostModel, WorkerKind};
use crate::error::{Result, RuntimeError};
use crate::metrics::{
    DivergenceAccum, InvocationRecord, PathSignature, SpawnRecord, TimelineSegment,
};
use crate::rng::WorkerRng;
use crate::task::{JoinOutcome, TaskAction, TaskId, WorkerId};

use super::dispatch::{dispatch, SpawnedChild};
use super::Shared;

/// A serialization point in the modeled machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resource {
    /// One deque's shared metadata (count/lock).
    Queue { owner: usize, queue: usize },
    /// The global queue's lock.
    Global,
}

pub trait EngineHooks {
    /// `ops` successful synchronization operations against `resource`.
    fn charge(&mut self, resource: Resource, ops: u32);
    /// Unshared busy-work (failed probes, idle backoff).
    fn local_cost(&mut self, amount: u64);
    /// Tasks entering this worker's batch (causality lower bound).
    fn acquired(&mut self, ids: &[TaskId]);
    /// Tasks becoming runnable for other workers.
    fn published(&mut self, ids: &[TaskId]);
}

/// Hooks for the concurrent engine: real time passes by itself.
pub struct NoopHooks;

impl EngineHooks for NoopHooks {
    fn charge(&mut self, _resource: Resource, _ops: u32) {}
    fn local_cost(&mut self, _amount: u64) {}
    fn acquired(&mut self, _ids: &[TaskId]) {}
    fn published(&mut self, _ids: &[TaskId]) {}
}

/// Per-worker state owned by its engine.
pub struct WorkerCtx {
    pub worker: WorkerId,
    /// Tasks held for immediate execution next cycle.
    pub kept: Vec<TaskId>,
    /// Last-used queue index (EPAQ round-robin start).
    pub last_queue: usize,
    pub rng: WorkerRng,
    pub invocations: Vec<InvocationRecord>,
    pub spawns: Vec<SpawnRecord>,
    pub divergence: DivergenceAccum,
    pub segments: Vec<TimelineSegment>,
}

impl WorkerCtx {
    pub fn new(worker: WorkerId, seed: u64) -> Self {
        Self {
            worker,
            kept: Vec::new(),
            last_queue: 0,
            rng: WorkerRng::for_worker(seed, worker),
            invocations: Vec::new(),
            spawns: Vec::new(),
            divergence: DivergenceAccum::default(),
            segments: Vec::new(),
        }
    }
}

/// Everything one cycle produced, ready for the distribute phase.
pub struct CycleOut {
    pub resumes: Vec<(TaskId, u32)>,
    pub spawned: Vec<SpawnedChild>,
    /// Modeled batch cost under the SIMT serialization model.
    pub batch_cost: u64,
    pub batch_size: u32,
}

/// Round-robin probe starting at the previously used queue; first non-empty
/// wins, else the last probed.
pub fn select_queue_epaq(shared: &Shared, ctx: &WorkerCtx) -> usize {
    let nq = shared.config.queues_per_worker();
    let mut selected = ctx.last_queue % nq;
    for probe in 0..nq {
        let q = (ctx.last_queue + probe) % nq;
        selected = q;
        if shared.queues.available(ctx.worker, q) > 0 {
            return q;
        }
    }
    selected
}

/// Uniform random victim other than this worker.
pub fn select_victim(workers: usize, ctx: &mut WorkerCtx) -> Option<WorkerId> {
    if workers < 2 {
        return None;
    }
    let r = ctx.rng.next_below(workers - 1);
    Some(if r >= ctx.worker { r + 1 } else { r })
}

pub fn phase_acquire(
    shared: &Shared,
    ctx: &mut WorkerCtx,
    hooks: &mut impl EngineHooks,
) -> Vec<TaskId> {
    let max = match shared.config.worker_kind {
        WorkerKind::ThreadLevel => shared.config.warp_size,
        WorkerKind::BlockLevel => 1,
    };
    let mut batch = std::mem::take(&mut ctx.kept);

    if shared.queues.is_global() {
        if batch.len() < max {
            let (got, ops) = shared.queues.pop(ctx.worker, 0, max - batch.len());
            if ops > 0 {
                hooks.charge(Resource::Global, ops);
            }
            batch.extend(got);
        }
        hooks.acquired(&batch);
        return batch;
    }

    // Top up from the selected local queue.
    if batch.len() < max {
        let q = select_queue_epaq(shared, ctx);
        let (got, ops) = shared.queues.pop(ctx.worker, q, max - batch.len());
        if ops > 0 {
            hooks.charge(
                Resource::Queue {
                    owner: ctx.worker,
                    queue: q,
                },
                ops,
            );
        }
        if !got.is_empty() {
            ctx.last_queue = q;
        }
        batch.extend(got);
    }

    // Steal only when otherwise idle.
    if batch.is_empty() {
        let workers = shared.config.num_workers();
        let nq = shared.config.queues_per_worker();
        'attempts: for _ in 0..shared.config.steal_attempts {
            let Some(victim) = select_victim(workers, ctx) else {
                break;
            };
            for probe in 0..nq {
                let vq = (ctx.last_queue + probe) % nq;
                let (got, ops) =
                    shared
                        .queues
                        .steal(victim, vq, max, shared.config.steal_half);
                if ops > 0 {
                    hooks.charge(
                        Resource::Queue {
                            owner: victim,
                            queue: vq,
                        },
                        ops,
                    );
                } else {
                    hooks.local_cost(1);
                }
                if !got.is_empty() {
                    ctx.last_queue = vq;
                    batch = got;
                    break 'attempts;
                }
            }
        }
    }

    hooks.acquired(&batch);
    batch
}

pub fn phase_execute(shared: &Shared, ctx: &mut WorkerCtx, batch: &[TaskId]) -> Result<CycleOut> {
    let mut resumes: Vec<(TaskId, u32)> = Vec::new();
    let mut spawned_all: Vec<SpawnedChild> = Vec::new();
    let mut sig_costs: Vec<(PathSignature, u64)> = Vec::with_capacity(batch.len());

    for &id in batch {
        let meta = shared.pool.meta(id)?;
        let sig = PathSignature {
            fn_id: meta.fn_id.0,
            entry_state: meta.state,
            class_tag: meta.queue_tag,
        };
        let result = dispatch(shared, ctx.worker, id)?;
        let cost = match shared.config.cost_model {
            CostModel::Instructions => result.cost.max(1),
            CostModel::UnitPerInvocation => 1,
        };
        let seq = shared.dispatch_seq.fetch_add(1, Ordering::Relaxed);
        for child in &result.spawned {
            let child_meta = shared.pool.meta(child.id)?;
            ctx.spawns.push(SpawnRecord {
                parent: id.index,
                parent_gen: id.generation,
                parent_state: meta.state,
                child: child.id.index,
                child_gen: child.id.generation,
                ordinal: child_meta.ordinal,
            });
        }
        let suspended_to = match result.action {
            TaskAction::Suspend { next_state, .. } => Some(next_state),
            TaskAction::Finished(_) => None,
        };
        ctx.invocations.push(InvocationRecord {
            task: id.index,
            generation: id.generation,
            fn_id: meta.fn_id.0,
            state: meta.state,
            worker: ctx.worker as u32,
            cost,
            suspended_to,
            seq,
        });

        let outcome = match result.action {
            TaskAction::Finished(v) => shared.pool.finish_task(id, v, ctx.worker)?,
            TaskAction::Suspend {
                next_state,
                resume_queue,
            } => {
                if shared.config.assume_no_taskwait {
                    return Err(RuntimeError::Usage(
                        "task suspended under assume_no_taskwait".into(),
                    ));
                }
                shared.pool.suspend_task(id, next_state, resume_queue)?
            }
        };
        if let JoinOutcome::ResumeParent { task, queue } = outcome {
            // The continuation's class tag was set when it suspended.
            resumes.push((task, queue));
        }
        spawned_all.extend(result.spawned);
        sig_costs.push((sig, cost));
    }

    let batch_cost = match shared.config.worker_kind {
        WorkerKind::ThreadLevel => {
            let (cost, distinct) = crate::metrics::simt_batch_cost(&sig_costs);
            ctx.divergence.record_batch(distinct, batch.len() as u32);
            cost
        }
        WorkerKind::BlockLevel => {
            let lanes = shared.config.block_size as u64;
            sig_costs
                .iter()
                .map(|&(_, c)| c.div_ceil(lanes).max(1))
                .sum()
        }
    };

    Ok(CycleOut {
        resumes,
        spawned: spawned_all,
        batch_cost,
        batch_size: batch.len() as u32,
    })
}

pub fn phase_distribute(
    shared: &Shared,
    ctx: &mut WorkerCtx,
    hooks: &mut impl EngineHooks,
    out: CycleOut,
) -> Result<()> {
    let keep_cap = match shared.config.worker_kind {
        WorkerKind::ThreadLevel => shared.config.warp_size,
        WorkerKind::BlockLevel => 0,
    };

    // Newly generated tasks are keep candidates, most recent first.
    // Continuations are always re-enqueued on their selected queue: that is
    // what the re-entry queue clause selects, and a resumed parent rarely
    // shares a path with fresh children.
    let mut candidates: Vec<(TaskId, u32)> = Vec::with_capacity(out.spawned.len());
    candidates.extend(out.spawned.iter().rev().map(|c| (c.id, c.queue)));

    type Tagged = Vec<(TaskId, u32)>;
    let (kept, mut rest): (Tagged, Tagged) =
        if shared.config.epaq_pure_keep && !candidates.is_empty() {
            // Keep only the most numerous queue class so the next batch
            // shares one path.
            let nq = shared.config.queues_per_worker();
            let mut counts = vec![0usize; nq];
            for &(_, q) in &candidates {
                counts[q as usize] += 1;
            }
            let majority = counts
                .iter()
                .enumerate()
                .max_by_key(|&(i, c)| (*c, usize::MAX - i))
                .map(|(i, _)| i as u32)
                .unwrap_or(0);
            let mut kept = Vec::new();
            let mut rest = Vec::new();
            for cand in candidates {
                if cand.1 == majority && kept.len() < keep_cap {
                    kept.push(cand);
                } else {
                    rest.push(cand);
                }
            }
            (kept, rest)
        } else {
            let split = candidates.len().min(keep_cap);
            let rest = candidates.split_off(split);
            (candidates, rest)
        };

    ctx.kept = kept.iter().map(|&(id, _)| id).collect();
    rest.extend(out.resumes);

    if shared.queues.is_global() {
        let ids: Vec<TaskId> = rest.iter().map(|&(id, _)| id).collect();
        if !ids.is_empty() {
            let ops = shared.queues.push(ctx.worker, 0, &ids)?;
            hooks.charge(Resource::Global, ops);
            hooks.published(&ids);
        }
        return Ok(());
    }

    let nq = shared.config.queues_per_worker();
    for q in 0..nq {
        let ids: Vec<TaskId> = rest
            .iter()
            .filter(|&&(_, tag)| tag as usize == q)
            .map(|&(id, _)| id)
            .collect();
        if ids.is_empty() {
            continue;
        }
        let ops = shared.queues.push(ctx.worker, q, &ids)?;
        hooks.charge(
            Resource::Queue {
                owner: ctx.worker,
                queue: q,
            },
            ops,
        );
        hooks.published(&ids);
    }
    Ok(())
}
