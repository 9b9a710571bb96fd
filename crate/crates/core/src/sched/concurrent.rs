//! Concurrent engine: one OS thread per worker; all cross-worker interaction
//! flows through the queues and the task pool's atomics. Timelines are
//! wall-clock nanoseconds from run start.

use std::sync::atomic::Ordering;
use std::time::{Duration, Instant};

use crate::error::RuntimeError;
use crate::metrics::{SegmentKind, TimelineSegment};

use super::worker::{phase_acquire, phase_distribute, phase_execute, NoopHooks, WorkerCtx};
use super::{EngineRaw, Shared};

pub fn run_concurrent(shared: &Shared) -> crate::error::Result<EngineRaw> {
    let n = shared.config.num_workers();
    let start = Instant::now();
    let ctxs: Vec<WorkerCtx> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n)
            .map(|w| scope.spawn(move || worker_loop(shared, w, start)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker thread panicked"))
            .collect()
    });
    if let Some(err) = shared.take_failure() {
        return Err(err);
    }
    let elapsed = start.elapsed().as_nanos() as u64;
    Ok(EngineRaw {
        ctxs,
        makespan: elapsed.max(1),
        wall_time_ns: Some(elapsed.max(1)),
    })
}

fn now_ns(start: Instant) -> u64 {
    start.elapsed().as_nanos() as u64
}

fn worker_loop(shared: &Shared, worker: usize, start: Instant) -> WorkerCtx {
    let mut ctx = WorkerCtx::new(worker, shared.config.seed());
    let mut hooks = NoopHooks;
    let mut idle_rounds = 0u32;

    loop {
        if shared.failed() || shared.pool.outstanding() == 0 {
            break;
        }
        let batch = phase_acquire(shared, &mut ctx, &mut hooks);
        if batch.is_empty() {
            idle_rounds += 1;
            if idle_rounds > 128 {
                if watchdog(shared) {
                    break;
                }
                std::thread::sleep(Duration::from_micros(50));
            } else {
                std::hint::spin_loop();
                std::thread::yield_now();
            }
            continue;
        }
        idle_rounds = 0;

        shared.executing.fetch_add(1, Ordering::AcqRel);
        let t0 = now_ns(start);
        let result = phase_execute(shared, &mut ctx, &batch);
        let t1 = now_ns(start).max(t0 + 1);
        shared.executing.fetch_sub(1, Ordering::AcqRel);

        match result {
            Ok(out) => {
                ctx.segments.push(TimelineSegment {
                    worker: worker as u32,
                    t_start: t0,
                    t_end: t1,
                    kind: SegmentKind::TaskExec,
                    active_lanes: out.batch_size,
                });
                if let Err(e) = phase_distribute(shared, &mut ctx, &mut hooks, out) {
                    shared.fail(e);
                    break;
                }
            }
            Err(e) => {
                shared.fail(e);
                break;
            }
        }
    }
    ctx
}

/// Deadlock net: nothing executing, nothing queued, tasks still outstanding,
/// stable across repeated samples. Returns true when the run should stop.
fn watchdog(shared: &Shared) -> bool {
    if shared
        .watchdog_lock
        .compare_exchange(false, true, Ordering::Acquire, Ordering::Relaxed)
        .is_err()
    {
        return shared.failed();
    }
    let mut stuck = true;
    for _ in 0..5 {
        let outstanding = shared.pool.outstanding();
        if outstanding == 0 {
            stuck = false;
            break;
        }
        let quiet = shared.executing.load(Ordering::Acquire) == 0
            && shared.queues.total_queued() == 0;
        let allocs = shared.pool.stats.allocs.load(Ordering::Relaxed);
        let finishes = shared.pool.stats.finishes.load(Ordering::Relaxed);
        std::thread::sleep(Duration::from_millis(40));
        let progressed = shared.pool.stats.allocs.load(Ordering::Relaxed) != allocs
            || shared.pool.stats.finishes.load(Ordering::Relaxed) != finishes;
        if !quiet || progressed {
            stuck = false;
            break;
        }
    }
    if stuck && shared.pool.outstanding() > 0 {
        shared.fail(RuntimeError::LivenessFailure {
            outstanding: shared.pool.outstanding(),
        });
    }
    shared.watchdog_lock.store(false, Ordering::Release);
    shared.failed()
}
