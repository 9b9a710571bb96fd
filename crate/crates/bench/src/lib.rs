//! Shared setup for the criterion benches.

use simt_forkjoin::{EngineKind, RuntimeConfig};

pub fn det_config(workers: usize, queues: usize, seed: u64) -> RuntimeConfig {
    RuntimeConfig {
        grid_size: workers,
        block_size: 32,
        warp_size: 32,
        max_tasks_per_warp: 1 << 14,
        num_queues: queues,
        max_child_tasks: 2,
        engine: EngineKind::Deterministic { seed },
        ..Default::default()
    }
}
