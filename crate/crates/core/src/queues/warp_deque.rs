//! Warp-level batched work-stealing deque (claim-by-count protocol).
//!
//! Fixed ring buffer with logical 64-bit indices (`head` steal end, `tail`
//! owner end) and `count`, the number of available not-yet-claimed tasks.
//! Claims reserve entries by CAS-decrementing `count` before any entry is
//! read; `head`/`tail` advance only after the claimed entries were loaded.
//! Push publishes entries with a release increment of `count`, so a consumer
//! that claims never reads an unwritten slot. A per-deque `lock` serializes
//! thieves; the owner never takes it.
//!
//! Operations are small explicit state machines (`PushBatchOp`, `PopBatchOp`,
//! `StealBatchOp`): the runtime drives them to completion, and the
//! deterministic interleaving tests drive the same code one step at a time.

use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU64, Ordering};

use crate::error::{Result, RuntimeError};
use crate::task::TaskId;

use super::QueueCounters;

pub struct WarpDeque {
    entries: Box<[AtomicU64]>,
    capacity: usize,
    /// Steal-end logical index (shared).
    head: AtomicU64,
    /// Available, not-yet-claimed tasks (shared).
    count: AtomicI64,
    /// Steal mutual exclusion (shared).
    lock: AtomicBool,
    /// Owner-end logical index; only the owner updates or reads it.
    tail: AtomicU64,
}

impl WarpDeque {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            entries: (0..capacity).map(|_| AtomicU64::new(u64::MAX)).collect(),
            capacity,
            head: AtomicU64::new(0),
            count: AtomicI64::new(0),
            lock: AtomicBool::new(false),
            tail: AtomicU64::new(0),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Published availability; what a prospective consumer can claim now.
    pub fn available(&self) -> usize {
        self.count.load(Ordering::Acquire).max(0) as usize
    }

    fn slot(&self, logical: u64) -> &AtomicU64 {
        &self.entries[(logical % self.capacity as u64) as usize]
    }

    /// Owner fast path: run a push to completion.
    pub fn push_batch(
        &self,
        worker: usize,
        queue: usize,
        ids: &[TaskId],
        counters: &QueueCounters,
    ) -> Result<u32> {
        let mut op = PushBatchOp::new(ids.to_vec());
        let mut sync_ops = 0;
        while !op.step(self, worker, queue, counters)?.is_done() {}
        sync_ops += op.sync_ops;
        Ok(sync_ops)
    }

    /// Owner fast path: claim up to `max` tasks from the tail end,
    /// most-recent first.
    pub fn pop_batch(&self, max: usize, counters: &QueueCounters) -> (Vec<TaskId>, u32) {
        let mut op = PopBatchOp::new(max);
        while !op.step(self, counters).is_done() {}
        let sync_ops = op.sync_ops;
        (op.into_ids(), sync_ops)
    }

    /// Thief path: non-blocking; claims up to `max` tasks from the head
    /// (FIFO) end. `steal_half` limits the claim to half the availability.
    pub fn steal_batch(
        &self,
        max: usize,
        steal_half: bool,
        counters: &QueueCounters,
    ) -> (Vec<TaskId>, u32) {
        let mut op = StealBatchOp::new(max, steal_half);
        while !op.step(self, counters).is_done() {}
        let sync_ops = op.sync_ops;
        (op.into_ids(), sync_ops)
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

enum PushPhase {
    WriteEntries,
    Publish,
    Done,
}

/// PushBatch: store entries, then publish availability by incrementing
/// `count`. Nothing is claimable until the publish step runs.
pub struct PushBatchOp {
    ids: Vec<TaskId>,
    tail: u64,
    phase: PushPhase,
    pub sync_ops: u32,
}

impl PushBatchOp {
    pub fn new(ids: Vec<TaskId>) -> Self {
        Self {
            ids,
            tail: 0,
            phase: PushPhase::WriteEntries,
            sync_ops: 0,
        }
    }

    pub fn step(
        &mut self,
        q: &WarpDeque,
        worker: usize,
        queue: usize,
        counters: &QueueCounters,
    ) -> Result<Step> {
        match self.phase {
            PushPhase::WriteEntries => {
                if self.ids.is_empty() {
                    self.phase = PushPhase::Done;
                    return Ok(Step::Done);
                }
                let tail = q.tail.load(Ordering::Relaxed);
                let head = q.head.load(Ordering::Acquire);
                // head only moves forward, so a stale read can only make this
                // check more conservative.
                if (tail - head) as usize + self.ids.len() > q.capacity {
                    return Err(RuntimeError::QueueOverflow {
                        worker,
                        queue,
                        capacity: q.capacity,
                    });
                }
                for (i, id) in self.ids.iter().enumerate() {
                    q.slot(tail + i as u64).store(id.pack(), Ordering::Relaxed);
                }
                self.tail = tail;
                self.phase = PushPhase::Publish;
                Ok(Step::Pending)
            }
            PushPhase::Publish => {
                let n = self.ids.len() as u64;
                q.tail.store(self.tail + n, Ordering::Relaxed);
                q.count.fetch_add(n as i64, Ordering::Release);
                counters.push_publishes.fetch_add(1, Ordering::Relaxed);
                counters.tasks_pushed.fetch_add(n, Ordering::Relaxed);
                self.sync_ops += 1;
                self.phase = PushPhase::Done;
                Ok(Step::Done)
            }
            PushPhase::Done => Ok(Step::Done),
        }
    }
}

enum PopPhase {
    Claim,
    Load,
    Advance,
    Done,
}

/// PopBatch: claim `c = min(count, max)` by CAS on `count`, load the claimed
/// entries from the tail end, then retreat `tail` (owner-local).
pub struct PopBatchOp {
    max: usize,
    claimed: usize,
    ids: Vec<TaskId>,
    phase: PopPhase,
    pub sync_ops: u32,
}

impl PopBatchOp {
    pub fn new(max: usize) -> Self {
        Self {
            max,
            claimed: 0,
            ids: Vec::new(),
            phase: PopPhase::Claim,
            sync_ops: 0,
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self.phase, PopPhase::Done)
    }

    pub fn into_ids(self) -> Vec<TaskId> {
        self.ids
    }

    pub fn step(&mut self, q: &WarpDeque, counters: &QueueCounters) -> Step {
        match self.phase {
            PopPhase::Claim => {
                let available = q.count.load(Ordering::Acquire);
                let claim = available.min(self.max as i64);
                if claim <= 0 {
                    self.phase = PopPhase::Done;
                    return Step::Done;
                }
                match q.count.compare_exchange(
                    available,
                    available - claim,
                    Ordering::AcqRel,
                    Ordering::Acquire,
                ) {
                    Ok(_) => {
                        self.claimed = claim as usize;
                        self.sync_ops += 1;
                        counters.pop_claims.fetch_add(1, Ordering::Relaxed);
                        self.phase = PopPhase::Load;
                        Step::Pending
                    }
                    // Raced with a thief's claim; retry with the fresh count.
                    Err(_) => Step::Pending,
                }
            }
            PopPhase::Load => {
                let tail = q.tail.load(Ordering::Relaxed);
                // Most recently pushed first: tail-1 down to tail-claimed.
                for i in 1..=self.claimed as u64 {
                    let raw = q.slot(tail - i).load(Ordering::Relaxed);
                    self.ids.push(TaskId::unpack(raw));
                }
                self.phase = PopPhase::Advance;
                Step::Pending
            }
            PopPhase::Advance => {
                let tail = q.tail.load(Ordering::Relaxed);
                q.tail.store(tail - self.claimed as u64, Ordering::Relaxed);
                counters
                    .tasks_popped
                    .fetch_add(self.claimed as u64, Ordering::Relaxed);
                self.phase = PopPhase::Done;
                Step::Done
            }
            PopPhase::Done => Step::Done,
        }
    }
}

enum StealPhase {
    TryLock,
    Claim,
    Load,
    AdvanceHead,
    Unlock,
    Done,
}

/// StealBatch: try-lock, claim via CAS on `count`, load from the head end,
/// advance `head` only after the loads, unlock. Contended or empty -> [].
pub struct StealBatchOp {
    max: usize,
    steal_half: bool,
    claimed: usize,
    ids: Vec<TaskId>,
    phase: StealPhase,
    pub sync_ops: u32,
}

impl StealBatchOp {
    pub fn new(max: usize, steal_half: bool) -> Self {
        Self {
            max,
            steal_half,
            claimed: 0,
            ids: Vec::new(),
            phase: StealPhase::TryLock,
            sync_ops: 0,
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self.phase, StealPhase::Done)
    }

    pub fn into_ids(self) -> Vec<TaskId> {
        self.ids
    }

    pub fn step(&mut self, q: &WarpDeque, counters: &QueueCounters) -> Step {
        match self.phase {
            StealPhase::TryLock => {
                if q.lock
                    .compare_exchange(false, true, Ordering::Acquire, Ordering::Relaxed)
                    .is_err()
                {
                    counters.failed_steals.fetch_add(1, Ordering::Relaxed);
                    self.phase = StealPhase::Done;
                    return Step::Done;
                }
                counters.lock_acquisitions.fetch_add(1, Ordering::Relaxed);
                self.sync_ops += 1;
                self.phase = StealPhase::Claim;
                Step::Pending
            }
            StealPhase::Claim => {
                let available = q.count.load(Ordering::Acquire);
                let bound = if self.steal_half {
                    ((available + 1) / 2).min(self.max as i64)
                } else {
                    available.min(self.max as i64)
                };
                if bound <= 0 {
                    counters.failed_steals.fetch_add(1, Ordering::Relaxed);
                    self.phase = StealPhase::Unlock;
                    return Step::Pending;
                }
                match q.count.compare_exchange(
                    available,
                    available - bound,
                    Ordering::AcqRel,
                    Ordering::Acquire,
                ) {
                    Ok(_) => {
                        self.claimed = bound as usize;
                        self.sync_ops += 1;
                        counters.steal_claims.fetch_add(1, Ordering::Relaxed);
                        self.phase = StealPhase::Load;
                        Step::Pending
                    }
                    Err(_) => Step::Pending,
                }
            }
            StealPhase::Load => {
                let head = q.head.load(Ordering::Relaxed);
                // Oldest first.
                for i in 0..self.claimed as u64 {
                    let raw = q.slot(head + i).load(Ordering::Relaxed);
                    self.ids.push(TaskId::unpack(raw));
                }
                self.phase = StealPhase::AdvanceHead;
                Step::Pending
            }
            StealPhase::AdvanceHead => {
                let head = q.head.load(Ordering::Relaxed);
                // Release: the loads above are ordered before this store, so
                // the owner's room check cannot recycle slots still being read.
                q.head
                    .store(head + self.claimed as u64, Ordering::Release);
                counters
                    .tasks_stolen
                    .fetch_add(self.claimed as u64, Ordering::Relaxed);
                self.phase = StealPhase::Unlock;
                Step::Pending
            }
            StealPhase::Unlock => {
                q.lock.store(false, Ordering::Release);
                self.phase = StealPhase::Done;
                Step::Done
            }
            StealPhase::Done => Step::Done,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(i: u32) -> TaskId {
        TaskId {
            index: i,
            generation: 0,
        }
    }

    fn ids(range: std::ops::Range<u32>) -> Vec<TaskId> {
        range.map(id).collect()
    }

    #[test]
    fn push_publishes_count_and_tail() {
        let q = WarpDeque::new(8);
        let c = QueueCounters::default();
        q.push_batch(0, 0, &ids(0..3), &c).unwrap();
        assert_eq!(q.available(), 3);
        assert_eq!(q.tail.load(Ordering::Relaxed), 3);
    }

    #[test]
    fn empty_push_is_noop() {
        let q = WarpDeque::new(4);
        let c = QueueCounters::default();
        q.push_batch(0, 0, &[], &c).unwrap();
        assert_eq!(q.available(), 0);
        assert_eq!(c.push_publishes.load(Ordering::Relaxed), 0);
    }

    #[test]
    fn push_beyond_capacity_overflows() {
        let q = WarpDeque::new(4);
        let c = QueueCounters::default();
        q.push_batch(0, 0, &ids(0..4), &c).unwrap();
        match q.push_batch(7, 2, &ids(4..5), &c) {
            Err(RuntimeError::QueueOverflow {
                worker,
                queue,
                capacity,
            }) => {
                assert_eq!((worker, queue, capacity), (7, 2, 4));
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn pop_claims_up_to_max_from_tail_end() {
        let q = WarpDeque::new(64);
        let c = QueueCounters::default();
        q.push_batch(0, 0, &ids(0..40), &c).unwrap();
        let (got, _) = q.pop_batch(32, &c);
        assert_eq!(got.len(), 32);
        assert_eq!(q.available(), 8);
        // Most recent first.
        assert_eq!(got[0], id(39));
        assert_eq!(got[31], id(8));
    }

    #[test]
    fn pop_on_empty_returns_nothing() {
        let q = WarpDeque::new(4);
        let c = QueueCounters::default();
        let (got, sync_ops) = q.pop_batch(32, &c);
        assert!(got.is_empty());
        assert_eq!(sync_ops, 0);
    }

    #[test]
    fn pop_of_five_is_lifo_most_recent_first() {
        // Cross-checked against a plain stack: pushes 0..5 then pop(max 32)
        // must yield 4,3,2,1,0.
        let q = WarpDeque::new(8);
        let c = QueueCounters::default();
        q.push_batch(0, 0, &ids(0..5), &c).unwrap();
        let (got, _) = q.pop_batch(32, &c);
        let mut reference: Vec<TaskId> = ids(0..5);
        reference.reverse();
        assert_eq!(got, reference);
    }

    #[test]
    fn steal_takes_oldest_from_head() {
        let q = WarpDeque::new(64);
        let c = QueueCounters::default();
        q.push_batch(0, 0, &ids(0..40), &c).unwrap();
        let (got, _) = q.steal_batch(32, false, &c);
        assert_eq!(got.len(), 32);
        assert_eq!(got[0], id(0));
        assert_eq!(got[31], id(31));
        assert_eq!(q.available(), 8);
    }

    #[test]
    fn steal_while_locked_returns_empty() {
        let q = WarpDeque::new(8);
        let c = QueueCounters::default();
        q.push_batch(0, 0, &ids(0..4), &c).unwrap();
        q.lock.store(true, Ordering::Release);
        let (got, _) = q.steal_batch(32, false, &c);
        assert!(got.is_empty());
        assert_eq!(c.failed_steals.load(Ordering::Relaxed), 1);
        q.lock.store(false, Ordering::Release);
        let (got, _) = q.steal_batch(32, false, &c);
        assert_eq!(got.len(), 4);
    }

    #[test]
    fn steal_half_leaves_work_behind() {
        let q = WarpDeque::new(16);
        let c = QueueCounters::default();
        q.push_batch(0, 0, &ids(0..10), &c).unwrap();
        let (got, _) = q.steal_batch(32, true, &c);
        assert_eq!(got.len(), 5);
        assert_eq!(q.available(), 5);
    }

    #[test]
    fn ring_wraps_through_logical_indices() {
        let q = WarpDeque::new(4);
        let c = QueueCounters::default();
        for round in 0..10u32 {
            q.push_batch(0, 0, &ids(round * 3..round * 3 + 3), &c).unwrap();
            let (got, _) = q.pop_batch(3, &c);
            assert_eq!(got.len(), 3);
        }
        assert_eq!(q.available(), 0);
    }

    #[test]
    fn concurrent_owner_and_thieves_claim_each_task_once() {
        use std::sync::Arc;

        let q = Arc::new(WarpDeque::new(1 << 12));
        let counters = Arc::new(QueueCounters::default());
        let total = 1 << 11;
        q.push_batch(0, 0, &ids(0..total), &QueueCounters::default())
            .unwrap();

        let mut handles = Vec::new();
        for _ in 0..3 {
            let q = Arc::clone(&q);
            let counters = Arc::clone(&counters);
            handles.push(std::thread::spawn(move || {
                let mut got = Vec::new();
                loop {
                    let (batch, _) = q.steal_batch(8, false, &counters);
                    if batch.is_empty() && q.available() == 0 {
                        break;
                    }
                    got.extend(batch);
                }
                got
            }));
        }
        let mut owner_got = Vec::new();
        loop {
            let (batch, _) = q.pop_batch(8, &counters);
            if batch.is_empty() {
                break;
            }
            owner_got.extend(batch);
        }
        let mut all = owner_got;
        for h in handles {
            all.extend(h.join().unwrap());
        }
        let mut seen = vec![false; total as usize];
        for t in &all {
            assert!(!seen[t.index as usize], "task {t:?} fetched twice");
            seen[t.index as usize] = true;
        }
        assert_eq!(all.len() + q.available(), total as usize);
    }
}
