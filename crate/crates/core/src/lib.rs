//! Host-model fork-join task runtime for a simulated SIMT machine.
//!
//! The runtime executes compiled task DSL programs (or registered native
//! task functions) as switch-dispatched state machines over a pre-allocated
//! record pool, scheduled by warp- or block-granular workers with batched
//! work-stealing deques, an optional multi-queue routing policy (EPAQ), and
//! two engines: real threads, or a deterministic single-threaded stepper
//! with a modeled SIMT cost clock.

pub mod bench;
pub mod compiler;
pub mod config;
pub mod error;
pub mod metrics;
pub mod queues;
pub mod rng;
pub mod sched;
pub mod task;

pub use config::{CostModel, EngineKind, QueueAlg, RuntimeConfig, SchedulerKind, WorkerKind};
pub use error::{Result, RuntimeError};
pub use metrics::{RunReport, WorkSpan};
pub use sched::{run, FnRegistry, SpawnRequest};
pub use task::{FnId, JoinOutcome, TaskAction, TaskId, TaskPool, Value, WorkerId};
