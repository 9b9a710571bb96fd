//! Global-queue baseline: one serialized FIFO all workers push to and pop
//! from. Every operation takes the single lock, which is exactly the
//! contention the work-stealing comparison is designed to expose.

use std::collections::VecDeque;
use std::sync::atomic::Ordering;
use std::sync::Mutex;

use crate::error::{Result, RuntimeError};
use crate::task::TaskId;

use super::QueueCounters;

pub struct GlobalQueue {
    inner: Mutex<VecDeque<u64>>,
    capacity: usize,
}

impl GlobalQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            inner: Mutex::new(VecDeque::with_capacity(capacity.min(1 << 16))),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn enqueue_batch(&self, ids: &[TaskId], counters: &QueueCounters) -> Result<u32> {
        if ids.is_empty() {
            return Ok(0);
        }
        let mut q = self.inner.lock().unwrap();
        counters.lock_acquisitions.fetch_add(1, Ordering::Relaxed);
        if q.len() + ids.len() > self.capacity {
            return Err(RuntimeError::QueueOverflow {
                worker: 0,
                queue: 0,
                capacity: self.capacity,
            });
        }
        for id in ids {
            q.push_back(id.pack());
        }
        counters
            .tasks_pushed
            .fetch_add(ids.len() as u64, Ordering::Relaxed);
        Ok(1)
    }

    pub fn dequeue_batch(&self, max: usize, counters: &QueueCounters) -> (Vec<TaskId>, u32) {
        let mut q = self.inner.lock().unwrap();
        counters.lock_acquisitions.fetch_add(1, Ordering::Relaxed);
        let take = max.min(q.len());
        let ids: Vec<TaskId> = (0..take)
            .map(|_| TaskId::unpack(q.pop_front().unwrap()))
            .collect();
        counters
            .tasks_popped
            .fetch_add(ids.len() as u64, Ordering::Relaxed);
        (ids, 1)
    }
}
