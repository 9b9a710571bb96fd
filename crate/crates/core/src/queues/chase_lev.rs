//! Fixed-capacity Chase-Lev work-stealing deque: lock-free owner push/pop at
//! the bottom, concurrent single-element steals at the top resolved by CAS.
//!
//! Used by block-level workers (one task per operation) and as the
//! sequentialized queue-management ablation for thread-level workers.

use std::sync::atomic::{fence, AtomicI64, AtomicU64, Ordering};

use crate::error::{Result, RuntimeError};
use crate::task::TaskId;

use super::QueueCounters;

pub struct ChaseLevDeque {
    entries: Box<[AtomicU64]>,
    capacity: usize,
    /// Steal index; only ever grows.
    top: AtomicI64,
    /// Owner index; grows on push, retreats transiently during pop.
    bottom: AtomicI64,
}

impl ChaseLevDeque {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            entries: (0..capacity).map(|_| AtomicU64::new(u64::MAX)).collect(),
            capacity,
            top: AtomicI64::new(0),
            bottom: AtomicI64::new(0),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        let b = self.bottom.load(Ordering::Relaxed);
        let t = self.top.load(Ordering::Relaxed);
        (b - t).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn slot(&self, logical: i64) -> &AtomicU64 {
        &self.entries[(logical.rem_euclid(self.capacity as i64)) as usize]
    }

    /// Owner-only push at the bottom; errors when the ring is full.
    pub fn push(
        &self,
        worker: usize,
        queue: usize,
        id: TaskId,
        counters: &QueueCounters,
    ) -> Result<()> {
        let b = self.bottom.load(Ordering::Relaxed);
        let t = self.top.load(Ordering::Acquire);
        if (b - t) as usize >= self.capacity {
            return Err(RuntimeError::QueueOverflow {
                worker,
                queue,
                capacity: self.capacity,
            });
        }
        self.slot(b).store(id.pack(), Ordering::Relaxed);
        self.bottom.store(b + 1, Ordering::Release);
        counters.push_publishes.fetch_add(1, Ordering::Relaxed);
        counters.tasks_pushed.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Owner-only pop at the bottom (LIFO); the size-one race against a thief
    /// is resolved by CAS on `top`.
    pub fn pop(&self, counters: &QueueCounters) -> Option<TaskId> {
        let mut op = PopOneOp::new();
        while !op.step(self, counters).is_done() {}
        op.result
    }

    /// Steal one task from the top (FIFO). Lost race or empty -> None.
    pub fn steal(&self, counters: &QueueCounters) -> Option<TaskId> {
        let mut op = StealOneOp::new();
        while !op.step(self, counters).is_done() {}
        op.result
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Pending,
    Done,
}

impl Step {
    pub fn is_done(self) -> bool {
        self == Step::Done
    }
}

enum PopPhase {
    TakeBottom,
    ReadTop,
    Resolve,
    Done,
}

/// Owner pop as an explicit state machine (for interleaving enumeration).
pub struct PopOneOp {
    b: i64,
    t: i64,
    phase: PopPhase,
    pub result: Option<TaskId>,
    pub sync_ops: u32,
}

impl PopOneOp {
    pub fn new() -> Self {
        Self {
            b: 0,
            t: 0,
            phase: PopPhase::TakeBottom,
            result: None,
            sync_ops: 0,
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self.phase, PopPhase::Done)
    }

    pub fn step(&mut self, q: &ChaseLevDeque, counters: &QueueCounters) -> Step {
        match self.phase {
            PopPhase::TakeBottom => {
                self.b = q.bottom.load(Ordering::Relaxed) - 1;
                q.bottom.store(self.b, Ordering::Relaxed);
                self.sync_ops += 1;
                self.phase = PopPhase::ReadTop;
                Step::Pending
            }
            PopPhase::ReadTop => {
                fence(Ordering::SeqCst);
                self.t = q.top.load(Ordering::Relaxed);
                self.phase = PopPhase::Resolve;
                Step::Pending
            }
            PopPhase::Resolve => {
                if self.t <= self.b {
                    let raw = q.slot(self.b).load(Ordering::Relaxed);
                    if self.t == self.b {
                        // Last element: race a concurrent steal for it.
                        if q.top
                            .compare_exchange(
                                self.t,
                                self.t + 1,
                                Ordering::SeqCst,
                                Ordering::Relaxed,
                            )
                            .is_ok()
                        {
                            self.result = Some(TaskId::unpack(raw));
                        }
                        self.sync_ops += 1;
                        q.bottom.store(self.b + 1, Ordering::Relaxed);
                    } else {
                        self.result = Some(TaskId::unpack(raw));
                    }
                } else {
                    // Empty; restore bottom.
                    q.bottom.store(self.b + 1, Ordering::Relaxed);
                }
                if self.result.is_some() {
                    counters.pop_claims.fetch_add(1, Ordering::Relaxed);
                    counters.tasks_popped.fetch_add(1, Ordering::Relaxed);
                }
                self.phase = PopPhase::Done;
                Step::Done
            }
            PopPhase::Done => Step::Done,
        }
    }
}

enum StealPhase {
    ReadTop,
    ReadBottom,
    Race,
    Done,
}

/// Thief steal as an explicit state machine.
pub struct StealOneOp {
    t: i64,
    b: i64,
    phase: StealPhase,
    pub result: Option<TaskId>,
    pub sync_ops: u32,
}

impl StealOneOp {
    pub fn new() -> Self {
        Self {
            t: 0,
            b: 0,
            phase: StealPhase::ReadTop,
            result: None,
            sync_ops: 0,
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self.phase, StealPhase::Done)
    }

    pub fn step(&mut self, q: &ChaseLevDeque, counters: &QueueCounters) -> Step {
        match self.phase {
            StealPhase::ReadTop => {
                self.t = q.top.load(Ordering::Acquire);
                self.phase = StealPhase::ReadBottom;
                Step::Pending
            }
            StealPhase::ReadBottom => {
                fence(Ordering::SeqCst);
                self.b = q.bottom.load(Ordering::Acquire);
                self.phase = StealPhase::Race;
                Step::Pending
            }
            StealPhase::Race => {
                if self.t < self.b {
                    // Read before the CAS: once top advances the slot may be
                    // recycled by the owner.
                    let raw = q.slot(self.t).load(Ordering::Relaxed);
                    self.sync_ops += 1;
                    if q.top
                        .compare_exchange(self.t, self.t + 1, Ordering::SeqCst, Ordering::Relaxed)
                        .is_ok()
                    {
                        self.result = Some(TaskId::unpack(raw));
                        counters.steal_claims.fetch_add(1, Ordering::Relaxed);
                        counters.tasks_stolen.fetch_add(1, Ordering::Relaxed);
                    } else {
                        counters.failed_steals.fetch_add(1, Ordering::Relaxed);
                    }
                } else {
                    counters.failed_steals.fetch_add(1, Ordering::Relaxed);
                }
                self.phase = StealPhase::Done;
                Step::Done
            }
            StealPhase::Done => Step::Done,
        }
    }
}

impl Default for PopOneOp {
    fn default() -> Self {
        Self::new()
    }
}

impl Default for StealOneOp {
    fn default() -> Self {
        Self::new()
    }
}
