//! Function registry (compiled + native task functions) and named buffers.

use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use crate::compiler::ir::{HelperIr, Program, StateMachineIr};
use crate::error::{Result, RuntimeError};
use crate::task::{FnId, TaskAction, Value};

use super::dispatch::NativeCtx;

pub type NativeRun = Arc<dyn Fn(&mut NativeCtx<'_>) -> Result<TaskAction> + Send + Sync>;
/// Modeled cost of one invocation: (state, args) -> cost units.
pub type NativeCost = Arc<dyn Fn(u32, &[Value]) -> u64 + Send + Sync>;

#[derive(Clone)]
pub struct NativeFn {
    pub run: NativeRun,
    pub cost: NativeCost,
}

pub enum FnKind {
    Compiled(StateMachineIr),
    Native(NativeFn),
}

pub struct FnEntry {
    pub name: String,
    pub arity: usize,
    pub returns_value: bool,
    pub kind: FnKind,
}

/// Registry of task functions a run can dispatch. Compiled programs and
/// native functions share FnId space and the state-machine protocol.
pub struct FnRegistry {
    pub entries: Vec<FnEntry>,
    pub helpers: Vec<HelperIr>,
    pub buffer_names: Vec<String>,
    pub has_taskwait: bool,
    pub uses_queue_clauses: bool,
}

impl FnRegistry {
    pub fn empty() -> Self {
        Self {
            entries: Vec::new(),
            helpers: Vec::new(),
            buffer_names: Vec::new(),
            has_taskwait: false,
            uses_queue_clauses: false,
        }
    }

    pub fn from_program(program: &Program) -> Self {
        Self {
            entries: program
                .tasks
                .iter()
                .map(|t| FnEntry {
                    name: t.name.clone(),
                    arity: t.arity,
                    returns_value: t.returns_value,
                    kind: FnKind::Compiled(t.clone()),
                })
                .collect(),
            helpers: program.helpers.clone(),
            buffer_names: program.buffers.clone(),
            has_taskwait: program.has_taskwait,
            uses_queue_clauses: program.uses_queue_clauses,
        }
    }

    /// Register a native task function. It receives the same invocation
    /// context as compiled tasks and must obey the state-machine protocol
    /// (suspend with increasing states, finish exactly once).
    pub fn register_native(
        &mut self,
        name: &str,
        arity: usize,
        returns_value: bool,
        run: NativeRun,
        cost: NativeCost,
    ) -> FnId {
        let id = FnId(self.entries.len() as u32);
        self.entries.push(FnEntry {
            name: name.to_string(),
            arity,
            returns_value,
            kind: FnKind::Native(NativeFn { run, cost }),
        });
        id
    }

    pub fn add_buffer(&mut self, name: &str) {
        self.buffer_names.push(name.to_string());
    }

    pub fn lookup(&self, name: &str) -> Option<FnId> {
        self.entries
            .iter()
            .position(|e| e.name == name)
            .map(|i| FnId(i as u32))
    }

    pub fn entry(&self, id: FnId) -> &FnEntry {
        &self.entries[id.0 as usize]
    }

    /// Marks the registry as containing suspension points (native functions
    /// that suspend should set this so assume_no_taskwait is rejected).
    pub fn mark_has_taskwait(&mut self) {
        self.has_taskwait = true;
    }
}

/// Named shared 64-bit buffers; all accesses are atomic so data-racy user
/// programs stay well-defined at the value level.
pub struct BufferSet {
    names: Vec<String>,
    data: Vec<Box<[AtomicI64]>>,
}

impl BufferSet {
    pub fn new(names: Vec<String>, init: Vec<Vec<i64>>) -> Result<Self> {
        if names.len() != init.len() {
            return Err(RuntimeError::Config(format!(
                "program declares {} buffers but {} were initialized",
                names.len(),
                init.len()
            )));
        }
        let data = init
            .into_iter()
            .map(|v| v.into_iter().map(AtomicI64::new).collect())
            .collect();
        Ok(Self { names, data })
    }

    pub fn len_of(&self, buffer: usize) -> usize {
        self.data[buffer].len()
    }

    fn check(&self, buffer: usize, index: i64) -> Result<usize> {
        let len = self.data[buffer].len();
        if index < 0 || index as usize >= len {
            return Err(RuntimeError::Usage(format!(
                "buffer `{}` index {index} out of bounds (len {len})",
                self.names[buffer]
            )));
        }
        Ok(index as usize)
    }

    pub fn load(&self, buffer: usize, index: i64) -> Result<i64> {
        let i = self.check(buffer, index)?;
        Ok(self.data[buffer][i].load(Ordering::Relaxed))
    }

    pub fn store(&self, buffer: usize, index: i64, value: i64) -> Result<()> {
        let i = self.check(buffer, index)?;
        self.data[buffer][i].store(value, Ordering::Relaxed);
        Ok(())
    }

    pub fn fetch_add(&self, buffer: usize, index: i64, delta: i64) -> Result<i64> {
        let i = self.check(buffer, index)?;
        Ok(self.data[buffer][i].fetch_add(delta, Ordering::Relaxed))
    }

    pub fn fetch_min(&self, buffer: usize, index: i64, value: i64) -> Result<i64> {
        let i = self.check(buffer, index)?;
        Ok(self.data[buffer][i].fetch_min(value, Ordering::Relaxed))
    }

    pub fn snapshot(&self) -> Vec<Vec<i64>> {
        self.data
            .iter()
            .map(|b| b.iter().map(|v| v.load(Ordering::Relaxed)).collect())
            .collect()
    }
}
