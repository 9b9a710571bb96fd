use thiserror::Error;

/// Errors surfaced by the runtime (pool, queues, scheduler).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("task pool exhausted (capacity {capacity})")]
    PoolExhausted { capacity: usize },

    #[error("queue overflow on worker {worker} queue {queue} (capacity {capacity})")]
    QueueOverflow {
        worker: usize,
        queue: usize,
        capacity: usize,
    },

    #[error("child limit exceeded: task already spawned {max} children this epoch")]
    ChildLimitExceeded { max: usize },

    #[error("stale task handle: slot {index} is at generation {current}, handle has {handle}")]
    InvalidHandle {
        index: usize,
        current: u32,
        handle: u32,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("liveness failure: no runnable work but {outstanding} tasks outstanding")]
    LivenessFailure { outstanding: i64 },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, RuntimeError>;
