//! Task identity, record storage, and the join/continuation protocol.
//!
//! Every task lives in a slot of a bulk-allocated pool. A slot is reused
//! across tasks; its generation counter is bumped on each free so stale
//! handles become deterministic errors instead of silent aliasing.
//!
//! Join discipline: `join_counter` starts at 1 (the parent's own token) at
//! the beginning of every invocation, gains 1 per spawned child and loses 1
//! per finished child and 1 when the parent suspends. Whoever decrements it
//! to zero re-enqueues the continuation. A child's result write is ordered
//! before its decrement (release), and the zero observer reads with acquire,
//! so the resumed parent sees all child results.

use std::cell::UnsafeCell;
use std::sync::atomic::{AtomicI32, AtomicI64, AtomicU32, AtomicU64, Ordering};

use crate::config::RuntimeConfig;
use crate::error::{Result, RuntimeError};

/// Uniform 64-bit value: the only data type tasks and buffers carry.
pub type Value = i64;

/// Identifier of a registered task function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FnId(pub u32);

/// Worker index within the configured topology.
pub type WorkerId = usize;

const NIL: u32 = u32::MAX;

/// Handle to a pooled task record. Valid only while its generation matches
/// the slot's current generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaskId {
    pub index: u32,
    pub generation: u32,
}

impl TaskId {
    /// Packed form used inside queues; `u64::MAX` never encodes a valid id
    /// and doubles as the unpublished-entry canary in queue tests.
    pub fn pack(self) -> u64 {
        ((self.generation as u64) << 32) | self.index as u64
    }

    pub fn unpack(raw: u64) -> Self {
        Self {
            index: raw as u32,
            generation: (raw >> 32) as u32,
        }
    }
}

/// What a single dispatch of a task function produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskAction {
    /// The invocation ran to a return; the value is routed to the parent's
    /// result slot (or the root result cell).
    Finished(Value),
    /// The invocation reached a join point: record the resumption state and
    /// release the parent token.
    Suspend { next_state: u32, resume_queue: u32 },
}

/// Result of releasing a join token (child finish or parent suspend).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinOutcome {
    None,
    /// The epoch is complete: the continuation is runnable on `queue`.
    ResumeParent { task: TaskId, queue: u32 },
}

/// Mutable per-task bookkeeping. Accessed only by the single worker that is
/// currently executing (or allocating/freeing) the task, except for the
/// documented reads in `finish_task` that are ordered by the join counter.
#[derive(Debug, Clone)]
pub struct TaskMeta {
    pub fn_id: FnId,
    /// Resumption state; 0 is the entry state.
    pub state: u32,
    pub parent: Option<TaskId>,
    /// Child position within the parent's epoch.
    pub ordinal: u32,
    /// Queue index for the re-enqueued continuation.
    pub resume_queue: u32,
    /// Owner of the slot's free list (fixed by the pool partition).
    pub home_worker: u32,
    /// Queue index the task was last routed to; the divergence class tag.
    pub queue_tag: u32,
    /// Children registered in the current epoch.
    pub epoch_children: u32,
    /// Children of the most recently joined epoch (readable via load_result).
    pub joined_children: u32,
}

struct Slot {
    generation: AtomicU32,
    join_counter: AtomicI32,
    next_free: AtomicU32,
    meta: UnsafeCell<TaskMeta>,
}

// Slots are shared across worker threads; all cross-thread access flows
// through the atomics or the join-ordered windows described above.
unsafe impl Sync for Slot {}

struct OwnerCell<T>(UnsafeCell<T>);

impl<T> OwnerCell<T> {
    fn new(value: T) -> Self {
        Self(UnsafeCell::new(value))
    }

    /// Caller must be the unique owner for the duration of the borrow.
    #[allow(clippy::mut_from_ref)]
    unsafe fn get_mut(&self) -> &mut T {
        &mut *self.0.get()
    }
}

unsafe impl<T: Send> Sync for OwnerCell<T> {}

/// Pool instrumentation; all counters are monotone.
#[derive(Debug, Default)]
pub struct PoolStats {
    pub allocs: AtomicU64,
    pub finishes: AtomicU64,
    /// Read-modify-writes of any join counter (must stay 0 with
    /// assume_no_taskwait).
    pub join_rmw_ops: AtomicU64,
    /// Writes into any parent's child-result slots (ditto).
    pub child_result_writes: AtomicU64,
    /// Times the outstanding counter returned to zero.
    pub zero_transitions: AtomicU64,
}

/// Bulk-allocated task storage partitioned into per-worker free lists plus
/// a shared fallback segment that absorbs allocation skew.
pub struct TaskPool {
    slots: Box<[Slot]>,
    /// Flat task-data region, `fields_per_task` values per slot.
    data: Box<[UnsafeCell<Value>]>,
    /// Flat child-result region, `max_child_tasks` values per slot.
    child_results: Box<[AtomicI64]>,
    /// Owner-only free stacks, one per worker.
    local_free: Box<[OwnerCell<Vec<u32>>]>,
    /// Multi-producer return stacks drained only by the owning worker.
    return_heads: Box<[AtomicU32]>,
    /// Shared overflow records, handed out by an atomic bump when a
    /// worker's own partition is spent.
    fallback_next: AtomicU32,
    outstanding: AtomicI64,
    root: AtomicU64,
    root_result: AtomicI64,
    root_finished: AtomicU32,
    pub stats: PoolStats,
    capacity: usize,
    fields_per_task: usize,
    max_child_tasks: usize,
    assume_no_taskwait: bool,
}

unsafe impl Sync for TaskPool {}
unsafe impl Send for TaskPool {}

impl TaskPool {
    /// Bulk-allocate `num_workers * tasks_per_worker` records, all free at
    /// generation 0, partitioned into per-worker free lists.
    pub fn new(config: &RuntimeConfig) -> Result<Self> {
        config.validate()?;
        let per_worker = config.tasks_per_worker();
        let workers = config.num_workers();
        let capacity = config.pool_capacity();
        let fields = config.max_data_fields();

        let local_share_for_home = if workers > 1 {
            per_worker - per_worker / 4
        } else {
            per_worker
        };
        let slots: Box<[Slot]> = (0..capacity)
            .map(|i| Slot {
                generation: AtomicU32::new(0),
                join_counter: AtomicI32::new(0),
                next_free: AtomicU32::new(NIL),
                meta: UnsafeCell::new(TaskMeta {
                    fn_id: FnId(0),
                    state: 0,
                    parent: None,
                    ordinal: 0,
                    resume_queue: 0,
                    // Fallback slots adopt their first allocator as home.
                    home_worker: ((i / local_share_for_home).min(workers - 1)) as u32,
                    queue_tag: 0,
                    epoch_children: 0,
                    joined_children: 0,
                }),
            })
            .collect();

        let data = (0..capacity * fields)
            .map(|_| UnsafeCell::new(0))
            .collect();
        let child_results = (0..capacity * config.max_child_tasks)
            .map(|_| AtomicI64::new(0))
            .collect();

        // Three quarters of each worker's share seeds its own LIFO free
        // list; the rest forms the shared fallback segment at the top of
        // the pool. High indices are pushed first so allocation starts at
        // the low end of each partition.
        let local_share = if workers > 1 {
            per_worker - per_worker / 4
        } else {
            per_worker
        };
        let fallback_base = (workers * local_share) as u32;
        let local_free = (0..workers)
            .map(|w| {
                let lo = w * local_share;
                OwnerCell::new((lo..lo + local_share).rev().map(|i| i as u32).collect())
            })
            .collect();
        let return_heads = (0..workers).map(|_| AtomicU32::new(NIL)).collect();

        Ok(Self {
            slots,
            data,
            child_results,
            local_free,
            return_heads,
            fallback_next: AtomicU32::new(fallback_base),
            outstanding: AtomicI64::new(0),
            root: AtomicU64::new(u64::MAX),
            root_result: AtomicI64::new(0),
            root_finished: AtomicU32::new(0),
            stats: PoolStats::default(),
            capacity,
            fields_per_task: fields,
            max_child_tasks: config.max_child_tasks,
            assume_no_taskwait: config.assume_no_taskwait,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn outstanding(&self) -> i64 {
        self.outstanding.load(Ordering::Acquire)
    }

    pub fn set_root(&self, id: TaskId) {
        self.root.store(id.pack(), Ordering::Release);
    }

    pub fn root_result(&self) -> Option<Value> {
        if self.root_finished.load(Ordering::Acquire) != 0 {
            Some(self.root_result.load(Ordering::Acquire))
        } else {
            None
        }
    }

    fn slot(&self, id: TaskId) -> Result<&Slot> {
        let slot = &self.slots[id.index as usize];
        let current = slot.generation.load(Ordering::Acquire);
        if current != id.generation {
            return Err(RuntimeError::InvalidHandle {
                index: id.index as usize,
                current,
                handle: id.generation,
            });
        }
        Ok(slot)
    }

    /// Exclusive access to a task's metadata. Caller must be the worker that
    /// currently owns the record (its executor, allocator, or freer).
    #[allow(clippy::mut_from_ref)]
    pub(crate) unsafe fn meta_mut(&self, id: TaskId) -> &mut TaskMeta {
        &mut *self.slots[id.index as usize].meta.get()
    }

    /// Checked metadata snapshot (test and harness use).
    pub fn meta(&self, id: TaskId) -> Result<TaskMeta> {
        self.slot(id)?;
        Ok(unsafe { (*self.slots[id.index as usize].meta.get()).clone() })
    }

    pub fn join_counter(&self, id: TaskId) -> Result<i32> {
        Ok(self.slot(id)?.join_counter.load(Ordering::Acquire))
    }

    pub(crate) fn data_read(&self, id: TaskId, field: usize) -> Value {
        debug_assert!(field < self.fields_per_task);
        unsafe { *self.data[id.index as usize * self.fields_per_task + field].get() }
    }

    pub(crate) fn data_write(&self, id: TaskId, field: usize, value: Value) {
        debug_assert!(field < self.fields_per_task);
        unsafe {
            *self.data[id.index as usize * self.fields_per_task + field].get() = value;
        }
    }

    fn take_free(&self, worker: WorkerId) -> Option<u32> {
        let local = unsafe { self.local_free[worker].get_mut() };
        if let Some(index) = local.pop() {
            return Some(index);
        }
        // Drain the records other workers freed back to us.
        let mut head = self.return_heads[worker].swap(NIL, Ordering::Acquire);
        while head != NIL {
            let next = self.slots[head as usize].next_free.load(Ordering::Relaxed);
            local.push(head);
            head = next;
        }
        if let Some(index) = local.pop() {
            return Some(index);
        }
        // Shared fallback segment; the slot adopts this worker as its home.
        let index = self.fallback_next.fetch_add(1, Ordering::AcqRel);
        if (index as usize) < self.capacity {
            unsafe {
                (*self.slots[index as usize].meta.get()).home_worker = worker as u32;
            }
            Some(index)
        } else {
            // Undo the overshoot so repeated failures cannot wrap.
            self.fallback_next.fetch_sub(1, Ordering::AcqRel);
            None
        }
    }

    fn release_slot(&self, index: u32, freeing_worker: WorkerId) {
        let slot = &self.slots[index as usize];
        let home = unsafe { (*slot.meta.get()).home_worker } as usize;
        if home == freeing_worker {
            // Owner fast path: straight back onto the local LIFO list.
            unsafe { self.local_free[home].get_mut() }.push(index);
            return;
        }
        loop {
            let head = self.return_heads[home].load(Ordering::Acquire);
            slot.next_free.store(head, Ordering::Relaxed);
            if self.return_heads[home]
                .compare_exchange_weak(head, index, Ordering::Release, Ordering::Acquire)
                .is_ok()
            {
                break;
            }
        }
    }

    /// Allocate and initialize a record: state 0, join counter 0, arguments
    /// copied by value, remaining data fields zeroed.
    pub fn alloc(
        &self,
        worker: WorkerId,
        fn_id: FnId,
        args: &[Value],
        parent: Option<(TaskId, u32)>,
    ) -> Result<TaskId> {
        if args.len() > self.fields_per_task {
            return Err(RuntimeError::Usage(format!(
                "{} arguments exceed the task-data limit of {} fields",
                args.len(),
                self.fields_per_task
            )));
        }
        let index = self.take_free(worker).ok_or(RuntimeError::PoolExhausted {
            capacity: self.capacity,
        })?;
        let slot = &self.slots[index as usize];
        let generation = slot.generation.load(Ordering::Relaxed);
        slot.join_counter.store(0, Ordering::Relaxed);
        let (parent_id, ordinal) = match parent {
            Some((p, o)) => (Some(p), o),
            None => (None, 0),
        };
        unsafe {
            let meta = &mut *slot.meta.get();
            meta.fn_id = fn_id;
            meta.state = 0;
            meta.parent = parent_id;
            meta.ordinal = ordinal;
            meta.resume_queue = 0;
            meta.queue_tag = 0;
            meta.epoch_children = 0;
            meta.joined_children = 0;
        }
        let base = index as usize * self.fields_per_task;
        for (i, cell) in self.data[base..base + self.fields_per_task].iter().enumerate() {
            unsafe { *cell.get() = args.get(i).copied().unwrap_or(0) };
        }
        self.outstanding.fetch_add(1, Ordering::AcqRel);
        self.stats.allocs.fetch_add(1, Ordering::Relaxed);
        Ok(TaskId { index, generation })
    }

    /// Start an invocation: the parent takes its own join token and the
    /// epoch's child-ordinal counter resets.
    pub fn begin_epoch(&self, id: TaskId) -> Result<()> {
        let slot = self.slot(id)?;
        if !self.assume_no_taskwait {
            slot.join_counter.store(1, Ordering::Relaxed);
        }
        unsafe {
            (*slot.meta.get()).epoch_children = 0;
        }
        Ok(())
    }

    /// Account a new child in the current epoch; returns its ordinal.
    pub fn register_child(&self, parent: TaskId) -> Result<u32> {
        let slot = self.slot(parent)?;
        let meta = unsafe { &mut *slot.meta.get() };
        if meta.epoch_children as usize >= self.max_child_tasks {
            return Err(RuntimeError::ChildLimitExceeded {
                max: self.max_child_tasks,
            });
        }
        let ordinal = meta.epoch_children;
        meta.epoch_children += 1;
        slot.join_counter.fetch_add(1, Ordering::AcqRel);
        self.stats.join_rmw_ops.fetch_add(1, Ordering::Relaxed);
        Ok(ordinal)
    }

    /// Complete a task: route its result, release its join token at the
    /// parent, and free the record to its home worker. `worker` is the
    /// worker performing the finish (owner frees take the fast path).
    pub fn finish_task(&self, id: TaskId, result: Value, worker: WorkerId) -> Result<JoinOutcome> {
        let slot = self.slot(id)?;
        let (parent, ordinal) = {
            let meta = unsafe { &*slot.meta.get() };
            (meta.parent, meta.ordinal)
        };

        let mut outcome = JoinOutcome::None;
        match parent {
            Some(parent_id) if !self.assume_no_taskwait => {
                let parent_slot = self.slot(parent_id)?;
                self.child_results
                    [parent_id.index as usize * self.max_child_tasks + ordinal as usize]
                    .store(result, Ordering::Relaxed);
                self.stats.child_result_writes.fetch_add(1, Ordering::Relaxed);
                self.stats.join_rmw_ops.fetch_add(1, Ordering::Relaxed);
                if parent_slot.join_counter.fetch_sub(1, Ordering::AcqRel) == 1 {
                    // Last token: the parent already suspended, so its
                    // resume_queue is stable and safe to read.
                    let queue = unsafe { (*parent_slot.meta.get()).resume_queue };
                    outcome = JoinOutcome::ResumeParent {
                        task: parent_id,
                        queue,
                    };
                }
            }
            _ => {
                if self.root.load(Ordering::Acquire) == id.pack() {
                    self.root_result.store(result, Ordering::Release);
                    self.root_finished.store(1, Ordering::Release);
                }
            }
        }

        // Free: bump the generation first so any straggler handle errors out.
        slot.generation.fetch_add(1, Ordering::AcqRel);
        self.release_slot(id.index, worker);
        self.stats.finishes.fetch_add(1, Ordering::Relaxed);
        if self.outstanding.fetch_sub(1, Ordering::AcqRel) == 1 {
            self.stats.zero_transitions.fetch_add(1, Ordering::Relaxed);
        }
        Ok(outcome)
    }

    /// Suspend at a join: record the continuation, then release the parent
    /// token. If all children already finished the continuation is
    /// immediately runnable.
    pub fn suspend_task(
        &self,
        id: TaskId,
        next_state: u32,
        resume_queue: u32,
    ) -> Result<JoinOutcome> {
        let slot = self.slot(id)?;
        let meta = unsafe { &mut *slot.meta.get() };
        if next_state <= meta.state {
            return Err(RuntimeError::Usage(format!(
                "suspend must advance the resumption state ({} -> {})",
                meta.state, next_state
            )));
        }
        meta.state = next_state;
        meta.resume_queue = resume_queue;
        meta.joined_children = meta.epoch_children;
        self.stats.join_rmw_ops.fetch_add(1, Ordering::Relaxed);
        if slot.join_counter.fetch_sub(1, Ordering::AcqRel) == 1 {
            Ok(JoinOutcome::ResumeParent {
                task: id,
                queue: resume_queue,
            })
        } else {
            Ok(JoinOutcome::None)
        }
    }

    /// Read a child result of the epoch just joined.
    pub fn load_result(&self, id: TaskId, ordinal: u32) -> Result<Value> {
        let slot = self.slot(id)?;
        let joined = unsafe { (*slot.meta.get()).joined_children };
        if ordinal >= joined {
            return Err(RuntimeError::Usage(format!(
                "load_result ordinal {ordinal} out of range: {joined} children joined"
            )));
        }
        Ok(self.child_results[id.index as usize * self.max_child_tasks + ordinal as usize]
            .load(Ordering::Relaxed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> RuntimeConfig {
        RuntimeConfig {
            grid_size: 2,
            block_size: 32,
            warp_size: 32,
            max_tasks_per_warp: 4,
            max_child_tasks: 2,
            max_task_data_size: 64,
            ..Default::default()
        }
    }

    #[test]
    fn alloc_initializes_record() {
        let pool = TaskPool::new(&small_config()).unwrap();
        let id = pool.alloc(0, FnId(0), &[40], None).unwrap();
        let meta = pool.meta(id).unwrap();
        assert_eq!(meta.state, 0);
        assert_eq!(pool.data_read(id, 0), 40);
        assert_eq!(pool.join_counter(id).unwrap(), 0);
        assert_eq!(pool.outstanding(), 1);
    }

    #[test]
    fn generation_bumps_on_reuse() {
        let pool = TaskPool::new(&small_config()).unwrap();
        let first = pool.alloc(0, FnId(0), &[], None).unwrap();
        assert_eq!(first.generation, 0);
        let first_index = first.index;
        pool.finish_task(first, 0, 0).unwrap();
        // LIFO free list hands the same slot back.
        let second = pool.alloc(0, FnId(0), &[], None).unwrap();
        assert_eq!(second.index, first_index);
        assert_eq!(second.generation, 1);
    }

    #[test]
    fn exhaustion_reports_capacity() {
        // 2 workers x 4 records: 3 per local partition, 2 in the shared
        // fallback segment.
        let pool = TaskPool::new(&small_config()).unwrap();
        for _ in 0..5 {
            pool.alloc(0, FnId(0), &[], None).unwrap();
        }
        // Worker 0 exhausted its partition and the fallback; nothing was
        // freed back.
        match pool.alloc(0, FnId(0), &[], None) {
            Err(RuntimeError::PoolExhausted { capacity }) => assert_eq!(capacity, 8),
            other => panic!("expected exhaustion, got {other:?}"),
        }
        // Worker 1's own partition is still intact.
        for _ in 0..3 {
            pool.alloc(1, FnId(0), &[], None).unwrap();
        }
        assert!(pool.alloc(1, FnId(0), &[], None).is_err());
    }

    #[test]
    fn begin_epoch_sets_parent_token() {
        let pool = TaskPool::new(&small_config()).unwrap();
        let id = pool.alloc(0, FnId(0), &[], None).unwrap();
        pool.begin_epoch(id).unwrap();
        assert_eq!(pool.join_counter(id).unwrap(), 1);
        // A completed join resets to 1 again on the next epoch.
        pool.suspend_task(id, 1, 0).unwrap();
        pool.begin_epoch(id).unwrap();
        assert_eq!(pool.join_counter(id).unwrap(), 1);
    }

    #[test]
    fn stale_handle_is_rejected() {
        let pool = TaskPool::new(&small_config()).unwrap();
        let id = pool.alloc(0, FnId(0), &[], None).unwrap();
        pool.finish_task(id, 7, 0).unwrap();
        assert!(matches!(
            pool.begin_epoch(id),
            Err(RuntimeError::InvalidHandle { .. })
        ));
        assert!(matches!(
            pool.finish_task(id, 7, 0),
            Err(RuntimeError::InvalidHandle { .. })
        ));
    }

    #[test]
    fn two_children_join_like_fib() {
        let pool = TaskPool::new(&small_config()).unwrap();
        let parent = pool.alloc(0, FnId(0), &[3], None).unwrap();
        pool.set_root(parent);
        pool.begin_epoch(parent).unwrap();

        let o0 = pool.register_child(parent).unwrap();
        let a = pool.alloc(0, FnId(0), &[2], Some((parent, o0))).unwrap();
        let o1 = pool.register_child(parent).unwrap();
        let b = pool.alloc(0, FnId(0), &[1], Some((parent, o1))).unwrap();
        assert_eq!((o0, o1), (0, 1));
        assert_eq!(pool.join_counter(parent).unwrap(), 3);

        // Parent suspends with both children pending.
        assert_eq!(pool.suspend_task(parent, 1, 2).unwrap(), JoinOutcome::None);
        // First child finishes: 3 -> 2 -> not last.
        assert_eq!(pool.finish_task(a, 1, 0).unwrap(), JoinOutcome::None);
        // Last child finishes: resume the parent on its recorded queue.
        assert_eq!(
            pool.finish_task(b, 1, 0).unwrap(),
            JoinOutcome::ResumeParent {
                task: parent,
                queue: 2
            }
        );
        assert_eq!(pool.load_result(parent, 0).unwrap(), 1);
        assert_eq!(pool.load_result(parent, 1).unwrap(), 1);

        pool.finish_task(parent, 2, 0).unwrap();
        assert_eq!(pool.outstanding(), 0);
        assert_eq!(pool.root_result(), Some(2));
        assert_eq!(pool.stats.zero_transitions.load(Ordering::Relaxed), 1);
    }

    #[test]
    fn empty_join_resumes_immediately() {
        let pool = TaskPool::new(&small_config()).unwrap();
        let id = pool.alloc(0, FnId(0), &[], None).unwrap();
        pool.begin_epoch(id).unwrap();
        assert_eq!(
            pool.suspend_task(id, 1, 0).unwrap(),
            JoinOutcome::ResumeParent { task: id, queue: 0 }
        );
    }

    #[test]
    fn children_finished_before_suspend_resume_parent_at_suspend() {
        let pool = TaskPool::new(&small_config()).unwrap();
        let parent = pool.alloc(0, FnId(0), &[], None).unwrap();
        pool.begin_epoch(parent).unwrap();
        let o = pool.register_child(parent).unwrap();
        let child = pool.alloc(0, FnId(0), &[], Some((parent, o))).unwrap();
        assert_eq!(pool.finish_task(child, 5, 0).unwrap(), JoinOutcome::None);
        assert_eq!(
            pool.suspend_task(parent, 1, 1).unwrap(),
            JoinOutcome::ResumeParent {
                task: parent,
                queue: 1
            }
        );
        assert_eq!(pool.load_result(parent, 0).unwrap(), 5);
    }

    #[test]
    fn child_limit_is_enforced() {
        let pool = TaskPool::new(&small_config()).unwrap();
        let parent = pool.alloc(0, FnId(0), &[], None).unwrap();
        pool.begin_epoch(parent).unwrap();
        pool.register_child(parent).unwrap();
        pool.register_child(parent).unwrap();
        assert!(matches!(
            pool.register_child(parent),
            Err(RuntimeError::ChildLimitExceeded { max: 2 })
        ));
    }

    #[test]
    fn load_result_on_zero_child_epoch_is_usage_error() {
        let pool = TaskPool::new(&small_config()).unwrap();
        let id = pool.alloc(0, FnId(0), &[], None).unwrap();
        pool.begin_epoch(id).unwrap();
        assert!(matches!(
            pool.load_result(id, 0),
            Err(RuntimeError::Usage(_))
        ));
    }

    #[test]
    fn assume_no_taskwait_never_touches_join_state() {
        let mut config = small_config();
        config.assume_no_taskwait = true;
        let pool = TaskPool::new(&config).unwrap();
        let parent = pool.alloc(0, FnId(0), &[], None).unwrap();
        pool.begin_epoch(parent).unwrap();
        // Children are allocated without a parent link in this mode.
        let child = pool.alloc(0, FnId(0), &[], None).unwrap();
        pool.finish_task(child, 9, 0).unwrap();
        pool.finish_task(parent, 1, 0).unwrap();
        assert_eq!(pool.stats.join_rmw_ops.load(Ordering::Relaxed), 0);
        assert_eq!(pool.stats.child_result_writes.load(Ordering::Relaxed), 0);
        assert!(matches!(
            pool.alloc(0, FnId(0), &[0; 9], None),
            Err(RuntimeError::Usage(_))
        ));
    }

    #[test]
    fn cross_worker_free_returns_home() {
        let pool = TaskPool::new(&small_config()).unwrap();
        // Fill worker 0's partition.
        let ids: Vec<_> = (0..4)
            .map(|_| pool.alloc(0, FnId(0), &[], None).unwrap())
            .collect();
        // A thief (worker 1) finishes one of them; the slot must come back to
        // worker 0's pool, not worker 1's.
        pool.finish_task(ids[0], 0, 1).unwrap();
        let again = pool.alloc(0, FnId(0), &[], None).unwrap();
        assert_eq!(again.index, ids[0].index);
        assert!(pool.alloc(1, FnId(0), &[], None).is_ok());
    }
}
