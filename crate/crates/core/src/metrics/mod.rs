//! Timeline recording, divergence statistics, work/span accounting over the
//! executed task DAG, and the run report.

pub mod export;

use std::collections::HashMap;

use serde::Serialize;

use crate::config::RuntimeConfig;
use crate::error::{Result, RuntimeError};
use crate::queues::QueueCountersSnapshot;

/// Execution-path class of one dispatched invocation: tasks with equal
/// signatures take the same switch case from the same queue class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathSignature {
    pub fn_id: u32,
    pub entry_state: u32,
    /// Queue index the task was routed to (its class at fetch time).
    pub class_tag: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    TaskExec,
    Idle,
}

/// One contiguous span of a worker's time, in modeled units (deterministic
/// engine) or nanoseconds (concurrent engine).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimelineSegment {
    pub worker: u32,
    pub t_start: u64,
    pub t_end: u64,
    pub kind: SegmentKind,
    pub active_lanes: u32,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DivergenceStats {
    pub batches: u64,
    pub mean_distinct_paths: f64,
    pub lane_utilization: f64,
    /// (distinct path count, batch frequency), sorted.
    pub histogram: Vec<(u32, u64)>,
}

/// Accumulates divergence per executed batch.
#[derive(Debug, Clone, Default)]
pub struct DivergenceAccum {
    batches: u64,
    distinct_total: u64,
    lanes_total: u64,
    histogram: HashMap<u32, u64>,
}

impl DivergenceAccum {
    pub fn record_batch(&mut self, distinct: u32, batch_size: u32) {
        self.batches += 1;
        self.distinct_total += distinct as u64;
        self.lanes_total += batch_size as u64;
        *self.histogram.entry(distinct).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &DivergenceAccum) {
        self.batches += other.batches;
        self.distinct_total += other.distinct_total;
        self.lanes_total += other.lanes_total;
        for (&k, &v) in &other.histogram {
            *self.histogram.entry(k).or_insert(0) += v;
        }
    }

    pub fn finish(&self, warp_size: usize) -> DivergenceStats {
        let mut histogram: Vec<(u32, u64)> = self.histogram.iter().map(|(&k, &v)| (k, v)).collect();
        histogram.sort_unstable();
        DivergenceStats {
            batches: self.batches,
            mean_distinct_paths: if self.batches == 0 {
                0.0
            } else {
                self.distinct_total as f64 / self.batches as f64
            },
            lane_utilization: if self.batches == 0 {
                0.0
            } else {
                self.lanes_total as f64 / (self.batches as f64 * warp_size as f64)
            },
            histogram,
        }
    }
}

/// SIMT serialization model for one executed batch: lanes within a path
/// class run in lockstep (the class costs its slowest member), distinct
/// classes serialize. Returns (modeled batch cost, distinct classes).
pub fn simt_batch_cost(sig_costs: &[(PathSignature, u64)]) -> (u64, u32) {
    let mut classes: Vec<(PathSignature, u64)> = Vec::new();
    for &(sig, cost) in sig_costs {
        match classes.iter_mut().find(|(s, _)| *s == sig) {
            Some((_, max_cost)) => *max_cost = (*max_cost).max(cost),
            None => classes.push((sig, cost)),
        }
    }
    (
        classes.iter().map(|(_, c)| c).sum(),
        classes.len() as u32,
    )
}

/// Total work and critical path over the spawn/join DAG.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct WorkSpan {
    pub total_work: u64,
    pub critical_path: u64,
}

/// One dispatched invocation of a task's state.
#[derive(Debug, Clone, Copy)]
pub struct InvocationRecord {
    pub task: u32,
    pub generation: u32,
    pub fn_id: u32,
    pub state: u32,
    pub worker: u32,
    pub cost: u64,
    /// Next state when the invocation suspended; None when it finished.
    pub suspended_to: Option<u32>,
    /// Order in which the dispatching worker observed the invocation.
    pub seq: u64,
}

/// Parent/child edge captured at spawn time.
#[derive(Debug, Clone, Copy)]
pub struct SpawnRecord {
    pub parent: u32,
    pub parent_gen: u32,
    /// Parent state that performed the spawn (the epoch's pre-join state).
    pub parent_state: u32,
    pub child: u32,
    pub child_gen: u32,
    pub ordinal: u32,
}

#[derive(Debug, Clone, Default)]
pub struct InvocationLog {
    pub invocations: Vec<InvocationRecord>,
    pub spawns: Vec<SpawnRecord>,
}

impl InvocationLog {
    pub fn merge(&mut self, mut other: InvocationLog) {
        self.invocations.append(&mut other.invocations);
        self.spawns.append(&mut other.spawns);
    }
}

/// T1 = sum of invocation costs; T_inf = longest path where a continuation
/// depends on its task's previous segment and on every child of the epoch
/// it joined.
pub fn compute_work_span(log: &InvocationLog) -> Result<WorkSpan> {
    type Key = (u32, u32, u32); // (slot, generation, state)
    let total_work: u64 = log.invocations.iter().map(|r| r.cost).sum();

    let mut index: HashMap<Key, usize> = HashMap::new();
    for (i, r) in log.invocations.iter().enumerate() {
        index.insert((r.task, r.generation, r.state), i);
    }

    // Final (finishing) invocation per task.
    let mut final_state: HashMap<(u32, u32), u32> = HashMap::new();
    for r in &log.invocations {
        if r.suspended_to.is_none() {
            final_state.insert((r.task, r.generation), r.state);
        }
    }

    // Dependency edges: preds[continuation] <- children of the joined epoch.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); log.invocations.len()];
    for r in &log.invocations {
        if let Some(next) = r.suspended_to {
            let cont = index
                .get(&(r.task, r.generation, next))
                .copied()
                .ok_or_else(|| {
                    RuntimeError::Internal("suspended invocation never resumed".into())
                })?;
            let seg = index[&(r.task, r.generation, r.state)];
            preds[cont].push(seg);
        }
    }
    for s in &log.spawns {
        let child_final = final_state
            .get(&(s.child, s.child_gen))
            .copied()
            .ok_or_else(|| RuntimeError::Internal("spawned child never finished".into()))?;
        let child_idx = index[&(s.child, s.child_gen, child_final)];
        let parent_pre = index
            .get(&(s.parent, s.parent_gen, s.parent_state))
            .copied()
            .ok_or_else(|| RuntimeError::Internal("spawn from unknown invocation".into()))?;
        // A child starts after the segment that spawned it.
        if let Some(&child_first) = index.get(&(s.child, s.child_gen, 0)) {
            preds[child_first].push(parent_pre);
        }
        // The parent's post-join segment follows this epoch's children.
        if let Some(next) = log.invocations[parent_pre].suspended_to {
            let cont = index[&(s.parent, s.parent_gen, next)];
            preds[cont].push(child_idx);
        }
    }

    // Longest path via DFS with memoization; a cycle means the log is
    // corrupt.
    let n = log.invocations.len();
    let mut depth: Vec<u64> = vec![0; n];
    let mut mark: Vec<u8> = vec![0; n]; // 0 unvisited, 1 in progress, 2 done
    let mut critical = 0u64;
    for start in 0..n {
        if mark[start] == 2 {
            continue;
        }
        // Iterative DFS.
        let mut stack = vec![(start, 0usize)];
        while let Some(top) = stack.last_mut() {
            let node = top.0;
            if mark[node] == 2 {
                stack.pop();
                continue;
            }
            mark[node] = 1;
            if top.1 < preds[node].len() {
                let p = preds[node][top.1];
                top.1 += 1;
                if mark[p] == 1 {
                    return Err(RuntimeError::Internal(
                        "cycle in the invocation DAG".into(),
                    ));
                }
                if mark[p] != 2 {
                    stack.push((p, 0));
                }
            } else {
                let best = preds[node].iter().map(|&p| depth[p]).max().unwrap_or(0);
                depth[node] = best + log.invocations[node].cost;
                critical = critical.max(depth[node]);
                mark[node] = 2;
                stack.pop();
            }
        }
    }

    Ok(WorkSpan {
        total_work,
        critical_path: critical,
    })
}

/// Snapshot of pool instrumentation for the report.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct PoolCounters {
    pub allocs: u64,
    pub finishes: u64,
    pub join_rmw_ops: u64,
    pub child_result_writes: u64,
    pub zero_transitions: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: RuntimeConfig,
    pub seed: u64,
    pub root_result: Option<i64>,
    pub outstanding_at_exit: i64,
    /// Modeled end time (deterministic) or wall nanoseconds (concurrent).
    pub makespan: u64,
    pub wall_time_ns: Option<u64>,
    pub invocations: u64,
    pub work_span: WorkSpan,
    pub divergence: DivergenceStats,
    pub queue_counters: QueueCountersSnapshot,
    pub pool_counters: PoolCounters,
    pub timelines: Vec<TimelineSegment>,
    #[serde(skip)]
    pub log: InvocationLog,
    #[serde(skip)]
    pub final_buffers: Vec<Vec<i64>>,
}

/// Insert idle segments so each worker's segments partition [0, makespan).
pub fn fill_idle_gaps(segments: &mut Vec<TimelineSegment>, workers: usize, makespan: u64) {
    let mut filled = Vec::with_capacity(segments.len() * 2);
    for w in 0..workers as u32 {
        let mut worker_segments: Vec<&TimelineSegment> =
            segments.iter().filter(|s| s.worker == w).collect();
        worker_segments.sort_by_key(|s| s.t_start);
        let mut cursor = 0u64;
        for s in worker_segments {
            if s.t_start > cursor {
                filled.push(TimelineSegment {
                    worker: w,
                    t_start: cursor,
                    t_end: s.t_start,
                    kind: SegmentKind::Idle,
                    active_lanes: 0,
                });
            }
            filled.push(*s);
            cursor = cursor.max(s.t_end);
        }
        if cursor < makespan {
            filled.push(TimelineSegment {
                worker: w,
                t_start: cursor,
                t_end: makespan,
                kind: SegmentKind::Idle,
                active_lanes: 0,
            });
        }
    }
    *segments = filled;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv(task: u32, state: u32, cost: u64, suspended_to: Option<u32>) -> InvocationRecord {
        InvocationRecord {
            task,
            generation: 0,
            fn_id: 0,
            state,
            worker: 0,
            cost,
            suspended_to,
            seq: 0,
        }
    }

    #[test]
    fn single_task_work_equals_span() {
        let log = InvocationLog {
            invocations: vec![inv(0, 0, 7, None)],
            spawns: vec![],
        };
        let ws = compute_work_span(&log).unwrap();
        assert_eq!(ws.total_work, 7);
        assert_eq!(ws.critical_path, 7);
    }

    #[test]
    fn fork_join_diamond_span() {
        // Parent state 0 (cost 1) spawns children 1 and 2 (costs 5 and 2),
        // then resumes in state 1 (cost 1): span = 1 + 5 + 1.
        let log = InvocationLog {
            invocations: vec![
                inv(0, 0, 1, Some(1)),
                inv(1, 0, 5, None),
                inv(2, 0, 2, None),
                inv(0, 1, 1, None),
            ],
            spawns: vec![
                SpawnRecord {
                    parent: 0,
                    parent_gen: 0,
                    parent_state: 0,
                    child: 1,
                    child_gen: 0,
                    ordinal: 0,
                },
                SpawnRecord {
                    parent: 0,
                    parent_gen: 0,
                    parent_state: 0,
                    child: 2,
                    child_gen: 0,
                    ordinal: 1,
                },
            ],
        };
        let ws = compute_work_span(&log).unwrap();
        assert_eq!(ws.total_work, 9);
        assert_eq!(ws.critical_path, 7);
    }

    #[test]
    fn divergence_accumulates_serialization_classes() {
        let mut acc = DivergenceAccum::default();
        acc.record_batch(1, 32);
        acc.record_batch(2, 16);
        let stats = acc.finish(32);
        assert_eq!(stats.batches, 2);
        assert!((stats.mean_distinct_paths - 1.5).abs() < 1e-12);
        assert!((stats.lane_utilization - 0.75).abs() < 1e-12);
        assert_eq!(stats.histogram, vec![(1, 1), (2, 1)]);
    }

    #[test]
    fn idle_gaps_partition_time() {
        let mut segments = vec![TimelineSegment {
            worker: 0,
            t_start: 5,
            t_end: 10,
            kind: SegmentKind::TaskExec,
            active_lanes: 4,
        }];
        fill_idle_gaps(&mut segments, 1, 12);
        let total: u64 = segments.iter().map(|s| s.t_end - s.t_start).sum();
        assert_eq!(total, 12);
        assert_eq!(segments.len(), 3);
    }
}

#[cfg(test)]
mod simt_cost_tests {
    use super::*;

    fn sig(tag: u32) -> PathSignature {
        PathSignature {
            fn_id: 0,
            entry_state: 0,
            class_tag: tag,
        }
    }

    #[test]
    fn lockstep_batch_costs_one_member() {
        let pairs: Vec<_> = (0..32).map(|_| (sig(0), 5)).collect();
        assert_eq!(simt_batch_cost(&pairs), (5, 1));
    }

    #[test]
    fn two_paths_serialize_their_maxima() {
        let pairs = vec![(sig(0), 3), (sig(0), 5), (sig(1), 9), (sig(1), 2)];
        assert_eq!(simt_batch_cost(&pairs), (14, 2));
    }

    #[test]
    fn full_divergence_serializes_everyone() {
        let pairs: Vec<_> = (0..32).map(|t| (sig(t), 1)).collect();
        assert_eq!(simt_batch_cost(&pairs), (32, 32));
    }
}
