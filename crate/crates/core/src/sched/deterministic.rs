//! Deterministic engine: a single-threaded stepper that interleaves workers
//! at queue-operation and dispatch boundaries under a seeded scheduler, and
//! charges a modeled SIMT clock:
//!
//!   - an executed batch costs the sum over distinct path signatures of the
//!     most expensive member (lockstep within a class, classes serialized);
//!   - every claim/lock acquisition reserves one unit on the queue's
//!     serialization resource; a worker arriving while another worker's
//!     reservation is pending waits, which is what makes the global-queue
//!     baseline exhibit contention;
//!   - a popped or stolen task cannot start before the modeled time it was
//!     published.
//!
//! Identical (config, seed) yields a byte-identical report.

use std::collections::HashMap;

use crate::error::{Result, RuntimeError};
use crate::metrics::{SegmentKind, TimelineSegment};
use crate::rng::{splitmix64, WorkerRng};
use crate::task::TaskId;

use super::worker::{
    phase_acquire, phase_distribute, phase_execute, CycleOut, EngineHooks, Resource, WorkerCtx,
};
use super::{EngineRaw, Shared};

struct ResourceState {
    available_at: u64,
    last_user: usize,
}

struct DetHooks<'a> {
    worker: usize,
    clock: &'a mut u64,
    resources: &'a mut HashMap<u64, ResourceState>,
    ready: &'a mut HashMap<u64, u64>,
}

fn resource_key(resource: Resource) -> u64 {
    match resource {
        Resource::Global => u64::MAX,
        Resource::Queue { owner, queue } => ((owner as u64) << 16) | queue as u64,
    }
}

impl EngineHooks for DetHooks<'_> {
    fn charge(&mut self, resource: Resource, ops: u32) {
        // First touch establishes ownership for free (the queues start in
        // their owner's cache, and the root enqueue belongs to worker 0).
        let entry = self
            .resources
            .entry(resource_key(resource))
            .or_insert(ResourceState {
                available_at: 0,
                last_user: self.worker,
            });
        // Taking over metadata another worker touched last costs an
        // ownership transfer (the coherence round-trip) and waits behind
        // that worker's pending reservations. Back-to-back operations by
        // the same worker pipeline freely, so an uncontended run pays
        // nothing for its own queues.
        if entry.last_user != self.worker {
            *self.clock = (*self.clock).max(entry.available_at) + 1;
        }
        entry.available_at = entry.available_at.max(*self.clock) + ops as u64;
        entry.last_user = self.worker;
    }

    fn local_cost(&mut self, amount: u64) {
        *self.clock += amount;
    }

    fn acquired(&mut self, ids: &[TaskId]) {
        for id in ids {
            if let Some(t) = self.ready.remove(&id.pack()) {
                *self.clock = (*self.clock).max(t);
            }
        }
    }

    fn published(&mut self, ids: &[TaskId]) {
        for id in ids {
            self.ready.insert(id.pack(), *self.clock);
        }
    }
}

enum Phase {
    Acquire,
    Execute(Vec<TaskId>),
    Distribute(CycleOut),
}

struct DetWorker {
    ctx: WorkerCtx,
    clock: u64,
    phase: Phase,
    done: bool,
}

pub fn run_deterministic(shared: &Shared, seed: u64) -> Result<EngineRaw> {
    let n = shared.config.num_workers();
    let mut workers: Vec<DetWorker> = (0..n)
        .map(|w| DetWorker {
            ctx: WorkerCtx::new(w, seed),
            clock: 0,
            phase: Phase::Acquire,
            done: false,
        })
        .collect();
    let mut resources: HashMap<u64, ResourceState> = HashMap::new();
    let mut ready: HashMap<u64, u64> = HashMap::new();
    let mut tie_break = WorkerRng::new(splitmix64(seed ^ 0x5eed_51ee_dd1c_00e5u64));
    let mut empty_acquires = 0usize;
    let liveness_threshold = 4 * n * (shared.config.steal_attempts + 1) + 16;

    loop {
        // Pick the live worker with the smallest clock; seeded tie-break.
        let mut min_clock = u64::MAX;
        for w in workers.iter().filter(|w| !w.done) {
            min_clock = min_clock.min(w.clock);
        }
        if min_clock == u64::MAX {
            break; // all done
        }
        let candidates: Vec<usize> = workers
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.done && w.clock == min_clock)
            .map(|(i, _)| i)
            .collect();
        let pick = candidates[tie_break.next_below(candidates.len())];

        let phase = std::mem::replace(&mut workers[pick].phase, Phase::Acquire);
        let worker = &mut workers[pick];
        match phase {
            Phase::Acquire => {
                if shared.pool.outstanding() == 0 {
                    worker.done = true;
                    continue;
                }
                let mut hooks = DetHooks {
                    worker: pick,
                    clock: &mut worker.clock,
                    resources: &mut resources,
                    ready: &mut ready,
                };
                let batch = phase_acquire(shared, &mut worker.ctx, &mut hooks);
                if batch.is_empty() {
                    if shared.pool.outstanding() == 0 {
                        worker.done = true;
                        continue;
                    }
                    // Bounded backoff before the next sweep.
                    worker.clock += 1;
                    empty_acquires += 1;
                    if empty_acquires > liveness_threshold {
                        let all_idle = workers
                            .iter()
                            .all(|w| matches!(w.phase, Phase::Acquire) && w.ctx.kept.is_empty());
                        if all_idle && shared.queues.total_queued() == 0 {
                            return Err(RuntimeError::LivenessFailure {
                                outstanding: shared.pool.outstanding(),
                            });
                        }
                        empty_acquires = 0;
                    }
                } else {
                    empty_acquires = 0;
                    worker.phase = Phase::Execute(batch);
                }
            }
            Phase::Execute(batch) => {
                let out = phase_execute(shared, &mut worker.ctx, &batch)?;
                let t0 = worker.clock;
                worker.clock += out.batch_cost;
                worker.ctx.segments.push(TimelineSegment {
                    worker: pick as u32,
                    t_start: t0,
                    t_end: worker.clock,
                    kind: SegmentKind::TaskExec,
                    active_lanes: out.batch_size,
                });
                worker.phase = Phase::Distribute(out);
            }
            Phase::Distribute(out) => {
                let mut hooks = DetHooks {
                    worker: pick,
                    clock: &mut worker.clock,
                    resources: &mut resources,
                    ready: &mut ready,
                };
                phase_distribute(shared, &mut worker.ctx, &mut hooks, out)?;
                worker.phase = Phase::Acquire;
            }
        }
    }

    let makespan = workers
        .iter()
        .flat_map(|w| w.ctx.segments.iter().map(|s| s.t_end))
        .max()
        .unwrap_or(0);
    Ok(EngineRaw {
        ctxs: workers.into_iter().map(|w| w.ctx).collect(),
        makespan,
        wall_time_ns: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RuntimeConfig;
    use crate::error::RuntimeError;
    use crate::sched::{FnRegistry, Shared};
    use crate::task::FnId;

    #[test]
    fn stranded_outstanding_task_is_a_liveness_failure() {
        // A record that exists but is never enqueued: no runnable work,
        // outstanding > 0, every sweep comes up empty.
        let config = RuntimeConfig {
            grid_size: 2,
            block_size: 32,
            warp_size: 32,
            max_tasks_per_warp: 8,
            ..Default::default()
        };
        let shared = Shared::new(&config, FnRegistry::empty(), vec![]).unwrap();
        shared.pool.alloc(0, FnId(0), &[], None).unwrap();
        match run_deterministic(&shared, 7) {
            Err(RuntimeError::LivenessFailure { outstanding }) => assert_eq!(outstanding, 1),
            Err(other) => panic!("expected liveness failure, got {other:?}"),
            Ok(_) => panic!("expected liveness failure, run terminated"),
        }
    }
}
