//! Property tests: random operation sequences against reference models.
//!
//! Single-threaded model checking: the warp deque must behave like a
//! deque (owner end LIFO, steal end FIFO) under any interleaving of
//! batched pushes, pops, and steals; the Chase-Lev deque likewise with
//! single-element operations.

use std::collections::VecDeque;

use proptest::prelude::*;

use simt_forkjoin::queues::{ChaseLevDeque, QueueCounters, WarpDeque};
use simt_forkjoin::task::TaskId;

#[derive(Debug, Clone)]
enum ModelOp {
    Push(u8),
    Pop(u8),
    Steal(u8),
}

fn op_strategy() -> impl Strategy<Value = ModelOp> {
    prop_oneof![
        (1u8..12).prop_map(ModelOp::Push),
        (1u8..12).prop_map(ModelOp::Pop),
        (1u8..12).prop_map(ModelOp::Steal),
    ]
}

fn id(i: u32) -> TaskId {
    TaskId {
        index: i,
        generation: 0,
    }
}

proptest! {
    #[test]
    fn warp_deque_matches_reference_deque(ops in proptest::collection::vec(op_strategy(), 1..80)) {
        let capacity = 32;
        let q = WarpDeque::new(capacity);
        let counters = QueueCounters::default();
        let mut model: VecDeque<u32> = VecDeque::new();
        let mut next = 0u32;

        for op in ops {
            match op {
                ModelOp::Push(n) => {
                    let batch: Vec<TaskId> = (0..n as u32).map(|k| id(next + k)).collect();
                    match q.push_batch(0, 0, &batch, &counters) {
                        Ok(_) => {
                            prop_assert!(model.len() + n as usize <= capacity);
                            for t in &batch {
                                model.push_back(t.index);
                            }
                            next += n as u32;
                        }
                        Err(_) => prop_assert!(model.len() + n as usize > capacity),
                    }
                }
                ModelOp::Pop(max) => {
                    let (got, _) = q.pop_batch(max as usize, &counters);
                    // Owner end: most recent first.
                    let expect = model.len().min(max as usize);
                    prop_assert_eq!(got.len(), expect);
                    for t in got {
                        prop_assert_eq!(t.index, model.pop_back().unwrap());
                    }
                }
                ModelOp::Steal(max) => {
                    let (got, _) = q.steal_batch(max as usize, false, &counters);
                    // Steal end: oldest first.
                    let expect = model.len().min(max as usize);
                    prop_assert_eq!(got.len(), expect);
                    for t in got {
                        prop_assert_eq!(t.index, model.pop_front().unwrap());
                    }
                }
            }
        }
        // Published availability equals what the model still holds.
        prop_assert_eq!(q.available(), model.len());
    }

    #[test]
    fn chase_lev_matches_reference_deque(ops in proptest::collection::vec(op_strategy(), 1..80)) {
        let capacity = 16;
        let q = ChaseLevDeque::new(capacity);
        let counters = QueueCounters::default();
        let mut model: VecDeque<u32> = VecDeque::new();
        let mut next = 0u32;

        for op in ops {
            match op {
                ModelOp::Push(n) => {
                    for _ in 0..n {
                        match q.push(0, 0, id(next), &counters) {
                            Ok(()) => {
                                model.push_back(next);
                                next += 1;
                            }
                            Err(_) => prop_assert_eq!(model.len(), capacity),
                        }
                    }
                }
                ModelOp::Pop(n) => {
                    for _ in 0..n {
                        match q.pop(&counters) {
                            Some(t) => prop_assert_eq!(t.index, model.pop_back().unwrap()),
                            None => prop_assert!(model.is_empty()),
                        }
                    }
                }
                ModelOp::Steal(n) => {
                    for _ in 0..n {
                        match q.steal(&counters) {
                            Some(t) => prop_assert_eq!(t.index, model.pop_front().unwrap()),
                            None => prop_assert!(model.is_empty()),
                        }
                    }
                }
            }
        }
        prop_assert_eq!(q.len(), model.len());
    }

    // Claim accounting: however pops and steals interleave, total claims
    // never exceed total publishes and availability never goes negative.
    #[test]
    fn claims_never_exceed_publishes(ops in proptest::collection::vec(op_strategy(), 1..60)) {
        let q = WarpDeque::new(64);
        let counters = QueueCounters::default();
        let mut pushed = 0u64;
        let mut claimed = 0u64;
        let mut next = 0u32;
        for op in ops {
            match op {
                ModelOp::Push(n) => {
                    let batch: Vec<TaskId> = (0..n as u32).map(|k| id(next + k)).collect();
                    if q.push_batch(0, 0, &batch, &counters).is_ok() {
                        pushed += n as u64;
                        next += n as u32;
                    }
                }
                ModelOp::Pop(max) => {
                    claimed += q.pop_batch(max as usize, &counters).0.len() as u64;
                }
                ModelOp::Steal(max) => {
                    claimed += q.steal_batch(max as usize, false, &counters).0.len() as u64;
                }
            }
            prop_assert!(claimed <= pushed);
            prop_assert_eq!(pushed - claimed, q.available() as u64);
        }
    }
}
