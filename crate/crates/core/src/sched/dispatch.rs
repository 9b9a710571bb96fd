//! One dispatch = one invocation of a task's current state: interpret the
//! compiled state machine (or call the native function) until it finishes or
//! suspends, collecting spawns and the retired-instruction cost.

use crate::compiler::ast::{eval_binop, eval_unop, lcg_next};
use crate::compiler::ir::{Intrinsic, IrBlock, IrInstr, IrTerm, StateMachineIr};
use crate::config::WorkerKind;
use crate::error::{Result, RuntimeError};
use crate::task::{FnId, TaskAction, TaskId, Value, WorkerId};

use super::registry::FnKind;
use super::Shared;

const HELPER_DEPTH_LIMIT: usize = 1024;

/// A child allocated during the invocation, tagged with its queue index.
#[derive(Debug, Clone, Copy)]
pub struct SpawnedChild {
    pub id: TaskId,
    pub queue: u32,
}

pub struct DispatchResult {
    pub action: TaskAction,
    /// Instructions retired (unscaled by worker granularity or cost model).
    pub cost: u64,
    pub spawned: Vec<SpawnedChild>,
}

/// Execute one invocation of `id` at its current state.
pub fn dispatch(shared: &Shared, worker: WorkerId, id: TaskId) -> Result<DispatchResult> {
    let meta = shared.pool.meta(id)?;
    if !shared.config.assume_no_taskwait {
        shared.pool.begin_epoch(id)?;
    }
    let entry = shared.registry.entry(meta.fn_id);
    match &entry.kind {
        FnKind::Compiled(ir) => run_compiled(shared, worker, id, ir, meta.state),
        FnKind::Native(native) => {
            let args: Vec<Value> = (0..entry.arity)
                .map(|i| shared.pool.data_read(id, i))
                .collect();
            let cost = (native.cost)(meta.state, &args);
            let mut ctx = NativeCtx {
                shared,
                worker,
                id,
                state: meta.state,
                spawned: Vec::new(),
            };
            let action = (native.run)(&mut ctx)?;
            let spawned = ctx.spawned;
            if let TaskAction::Suspend { resume_queue, .. } = action {
                unsafe {
                    shared.pool.meta_mut(id).queue_tag = resume_queue;
                }
            }
            Ok(DispatchResult {
                action,
                cost,
                spawned,
            })
        }
    }
}

fn validate_queue_index(shared: &Shared, q: i64) -> Result<u32> {
    if shared.config.worker_kind == WorkerKind::BlockLevel {
        if q != 0 {
            return Err(RuntimeError::Usage(
                "the queue option is not supported for block-level workers".into(),
            ));
        }
        return Ok(0);
    }
    let limit = shared.config.queues_per_worker() as i64;
    if limit == 1 {
        // A single queue disables path-aware routing; annotations collapse
        // to queue 0 so the same source runs with and without it.
        return Ok(0);
    }
    if q < 0 || q >= limit {
        return Err(RuntimeError::Usage(format!(
            "queue index {q} out of range: {limit} queue(s) configured"
        )));
    }
    Ok(q as u32)
}

/// Allocate and link one child; shared by compiled and native spawns.
/// `class` is the raw queue-expression value (the execution-path class the
/// divergence statistics group by); `queue` is the routed index.
fn spawn_child(
    shared: &Shared,
    worker: WorkerId,
    parent: TaskId,
    callee: FnId,
    args: &[Value],
    class: i64,
    queue: u32,
) -> Result<SpawnedChild> {
    let entry = shared.registry.entry(callee);
    if args.len() != entry.arity {
        return Err(RuntimeError::Usage(format!(
            "`{}` expects {} arguments, got {}",
            entry.name,
            entry.arity,
            args.len()
        )));
    }
    let link = if shared.config.assume_no_taskwait {
        None
    } else {
        let ordinal = shared.pool.register_child(parent)?;
        Some((parent, ordinal))
    };
    let child = shared.pool.alloc(worker, callee, args, link)?;
    unsafe {
        shared.pool.meta_mut(child).queue_tag = class as u32;
    }
    Ok(SpawnedChild { id: child, queue })
}

fn run_compiled(
    shared: &Shared,
    worker: WorkerId,
    id: TaskId,
    ir: &StateMachineIr,
    state: u32,
) -> Result<DispatchResult> {
    let body = ir.states.get(state as usize).ok_or_else(|| {
        RuntimeError::Internal(format!("`{}` dispatched at unknown state {state}", ir.name))
    })?;
    let mut regs = vec![0i64; body.reg_count];
    let mut spawned = Vec::new();
    let mut cost = 0u64;
    let mut block = 0usize;

    loop {
        let b: &IrBlock = &body.blocks[block];
        for instr in &b.instrs {
            cost += 1;
            match instr {
                IrInstr::Const { dst, value } => regs[*dst as usize] = *value,
                IrInstr::Copy { dst, src } => regs[*dst as usize] = regs[*src as usize],
                IrInstr::Unary { op, dst, src } => {
                    regs[*dst as usize] = eval_unop(*op, regs[*src as usize])
                }
                IrInstr::Binary { op, dst, lhs, rhs } => {
                    regs[*dst as usize] =
                        eval_binop(*op, regs[*lhs as usize], regs[*rhs as usize])
                            .map_err(RuntimeError::Usage)?
                }
                IrInstr::LoadField { dst, field } => {
                    regs[*dst as usize] = shared.pool.data_read(id, *field)
                }
                IrInstr::StoreField { field, src } => {
                    shared.pool.data_write(id, *field, regs[*src as usize])
                }
                IrInstr::LoadBuf { dst, buffer, index } => {
                    regs[*dst as usize] = shared.buffers.load(*buffer, regs[*index as usize])?
                }
                IrInstr::StoreBuf {
                    buffer,
                    index,
                    value,
                } => shared
                    .buffers
                    .store(*buffer, regs[*index as usize], regs[*value as usize])?,
                IrInstr::AtomicAdd {
                    dst,
                    buffer,
                    index,
                    value,
                } => {
                    regs[*dst as usize] = shared.buffers.fetch_add(
                        *buffer,
                        regs[*index as usize],
                        regs[*value as usize],
                    )?
                }
                IrInstr::Intrinsic { op, dst, args } => {
                    let a = regs[args[0] as usize];
                    regs[*dst as usize] = match op {
                        Intrinsic::Min => a.min(regs[args[1] as usize]),
                        Intrinsic::Max => a.max(regs[args[1] as usize]),
                        Intrinsic::LcgNext => lcg_next(a),
                    };
                }
                IrInstr::ChildResult { dst, ordinal } => {
                    let ord = regs[*ordinal as usize];
                    if ord < 0 {
                        return Err(RuntimeError::Usage(format!(
                            "child_result({ord}) is negative"
                        )));
                    }
                    regs[*dst as usize] = shared.pool.load_result(id, ord as u32)?;
                }
                IrInstr::CallHelper { dst, helper, args } => {
                    let arg_vals: Vec<Value> =
                        args.iter().map(|&r| regs[r as usize]).collect();
                    regs[*dst as usize] =
                        run_helper(shared, *helper, &arg_vals, &mut cost, 0)?;
                }
                IrInstr::Spawn {
                    callee,
                    args,
                    queue,
                    bind: _,
                } => {
                    let arg_vals: Vec<Value> =
                        args.iter().map(|&r| regs[r as usize]).collect();
                    let class = queue.map(|r| regs[r as usize]).unwrap_or(0);
                    let routed = validate_queue_index(shared, class)?;
                    spawned.push(spawn_child(
                        shared,
                        worker,
                        id,
                        FnId(*callee as u32),
                        &arg_vals,
                        class,
                        routed,
                    )?);
                }
            }
        }
        cost += 1; // terminator retires too
        match &b.term {
            IrTerm::Jump(t) => block = *t,
            IrTerm::Branch {
                cond,
                then_b,
                else_b,
            } => {
                block = if regs[*cond as usize] != 0 {
                    *then_b
                } else {
                    *else_b
                };
            }
            IrTerm::Finish { value } => {
                let v = value.map(|r| regs[r as usize]).unwrap_or(0);
                return Ok(DispatchResult {
                    action: TaskAction::Finished(v),
                    cost,
                    spawned,
                });
            }
            IrTerm::SuspendJoin { next_state, queue } => {
                let class = queue.map(|r| regs[r as usize]).unwrap_or(0);
                let routed = validate_queue_index(shared, class)?;
                // The continuation's path class is decided here, at re-entry
                // selection time.
                unsafe {
                    shared.pool.meta_mut(id).queue_tag = class as u32;
                }
                return Ok(DispatchResult {
                    action: TaskAction::Suspend {
                        next_state: *next_state,
                        resume_queue: routed,
                    },
                    cost,
                    spawned,
                });
            }
        }
    }
}

fn run_helper(
    shared: &Shared,
    helper: usize,
    args: &[Value],
    cost: &mut u64,
    depth: usize,
) -> Result<Value> {
    if depth >= HELPER_DEPTH_LIMIT {
        return Err(RuntimeError::Usage(
            "helper recursion limit exceeded".into(),
        ));
    }
    let ir = &shared.registry.helpers[helper];
    let mut regs = vec![0i64; ir.reg_count];
    regs[..args.len()].copy_from_slice(args);
    let mut block = 0usize;
    loop {
        let b = &ir.blocks[block];
        for instr in &b.instrs {
            *cost += 1;
            match instr {
                IrInstr::Const { dst, value } => regs[*dst as usize] = *value,
                IrInstr::Copy { dst, src } => regs[*dst as usize] = regs[*src as usize],
                IrInstr::Unary { op, dst, src } => {
                    regs[*dst as usize] = eval_unop(*op, regs[*src as usize])
                }
                IrInstr::Binary { op, dst, lhs, rhs } => {
                    regs[*dst as usize] =
                        eval_binop(*op, regs[*lhs as usize], regs[*rhs as usize])
                            .map_err(RuntimeError::Usage)?
                }
                IrInstr::LoadBuf { dst, buffer, index } => {
                    regs[*dst as usize] = shared.buffers.load(*buffer, regs[*index as usize])?
                }
                IrInstr::StoreBuf {
                    buffer,
                    index,
                    value,
                } => shared
                    .buffers
                    .store(*buffer, regs[*index as usize], regs[*value as usize])?,
                IrInstr::AtomicAdd {
                    dst,
                    buffer,
                    index,
                    value,
                } => {
                    regs[*dst as usize] = shared.buffers.fetch_add(
                        *buffer,
                        regs[*index as usize],
                        regs[*value as usize],
                    )?
                }
                IrInstr::Intrinsic { op, dst, args } => {
                    let a = regs[args[0] as usize];
                    regs[*dst as usize] = match op {
                        Intrinsic::Min => a.min(regs[args[1] as usize]),
                        Intrinsic::Max => a.max(regs[args[1] as usize]),
                        Intrinsic::LcgNext => lcg_next(a),
                    };
                }
                IrInstr::CallHelper { dst, helper, args } => {
                    let arg_vals: Vec<Value> =
                        args.iter().map(|&r| regs[r as usize]).collect();
                    regs[*dst as usize] =
                        run_helper(shared, *helper, &arg_vals, cost, depth + 1)?;
                }
                IrInstr::LoadField { .. }
                | IrInstr::StoreField { .. }
                | IrInstr::ChildResult { .. }
                | IrInstr::Spawn { .. } => {
                    return Err(RuntimeError::Internal(
                        "task-only instruction in helper".into(),
                    ))
                }
            }
        }
        *cost += 1;
        match &b.term {
            IrTerm::Jump(t) => block = *t,
            IrTerm::Branch {
                cond,
                then_b,
                else_b,
            } => {
                block = if regs[*cond as usize] != 0 {
                    *then_b
                } else {
                    *else_b
                };
            }
            IrTerm::Finish { value } => {
                return Ok(value.map(|r| regs[r as usize]).unwrap_or(0));
            }
            IrTerm::SuspendJoin { .. } => {
                return Err(RuntimeError::Internal("suspend in helper".into()))
            }
        }
    }
}

/// Invocation context handed to native task functions. Mirrors what the
/// compiled route can do: argument/field access, spawning, child results,
/// buffer access, and block-cooperative iteration.
pub struct NativeCtx<'a> {
    shared: &'a Shared,
    worker: WorkerId,
    id: TaskId,
    state: u32,
    spawned: Vec<SpawnedChild>,
}

impl NativeCtx<'_> {
    pub fn state(&self) -> u32 {
        self.state
    }

    pub fn arg(&self, i: usize) -> Value {
        self.shared.pool.data_read(self.id, i)
    }

    /// Persistent per-task scratch fields (the native task's spill space).
    pub fn field(&self, i: usize) -> Value {
        self.shared.pool.data_read(self.id, i)
    }

    pub fn set_field(&mut self, i: usize, value: Value) {
        self.shared.pool.data_write(self.id, i, value)
    }

    pub fn spawn(&mut self, callee: FnId, args: &[Value], queue: u32) -> Result<()> {
        let routed = validate_queue_index(self.shared, queue as i64)?;
        let child = spawn_child(
            self.shared,
            self.worker,
            self.id,
            callee,
            args,
            queue as i64,
            routed,
        )?;
        self.spawned.push(child);
        Ok(())
    }

    /// Fire-and-forget spawn: the child carries no parent link, is never
    /// joined, and its result is discarded. Safe regardless of lifetimes
    /// because nothing ever references this task's record from the child.
    pub fn spawn_detached(&mut self, callee: FnId, args: &[Value], queue: u32) -> Result<()> {
        let routed = validate_queue_index(self.shared, queue as i64)?;
        let entry = self.shared.registry.entry(callee);
        if args.len() != entry.arity {
            return Err(RuntimeError::Usage(format!(
                "`{}` expects {} arguments, got {}",
                entry.name,
                entry.arity,
                args.len()
            )));
        }
        let child = self.shared.pool.alloc(self.worker, callee, args, None)?;
        unsafe {
            self.shared.pool.meta_mut(child).queue_tag = queue;
        }
        self.spawned.push(SpawnedChild { id: child, queue: routed });
        Ok(())
    }

    pub fn child_result(&self, ordinal: u32) -> Result<Value> {
        self.shared.pool.load_result(self.id, ordinal)
    }

    pub fn buffer(&self, name: &str) -> Result<usize> {
        self.shared
            .registry
            .buffer_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| RuntimeError::Usage(format!("unknown buffer `{name}`")))
    }

    pub fn buf_load(&self, buffer: usize, index: i64) -> Result<Value> {
        self.shared.buffers.load(buffer, index)
    }

    pub fn buf_store(&mut self, buffer: usize, index: i64, value: Value) -> Result<()> {
        self.shared.buffers.store(buffer, index, value)
    }

    pub fn buf_fetch_add(&mut self, buffer: usize, index: i64, delta: Value) -> Result<Value> {
        self.shared.buffers.fetch_add(buffer, index, delta)
    }

    pub fn buf_fetch_min(&mut self, buffer: usize, index: i64, value: Value) -> Result<Value> {
        self.shared.buffers.fetch_min(buffer, index, value)
    }

    /// Lanes cooperating on this task (warp_size or block_size).
    pub fn lane_count(&self) -> usize {
        self.shared.config.lanes_per_worker()
    }

    /// Block-cooperative iteration: visits `start..end` in the lane-strided
    /// order a block would (lane k handles start+k, start+k+lanes, ...).
    /// Host execution is sequential; semantics, not timing, are preserved.
    pub fn for_each_lane_strided(
        &mut self,
        start: i64,
        end: i64,
        mut body: impl FnMut(&mut Self, i64) -> Result<()>,
    ) -> Result<()> {
        if self.shared.config.worker_kind != WorkerKind::BlockLevel {
            // Thread-level tasks iterate plainly; one task per lane already.
            let mut i = start;
            while i < end {
                body(self, i)?;
                i += 1;
            }
            return Ok(());
        }
        let lanes = self.lane_count() as i64;
        for lane in 0..lanes {
            let mut i = start + lane;
            while i < end {
                body(self, i)?;
                i += lanes;
            }
        }
        Ok(())
    }
}
