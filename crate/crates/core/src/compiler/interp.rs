//! Reference interpreter: direct recursive AST evaluation where spawn is an
//! immediate call and taskwait is a no-op. The compiled state-machine route
//! is checked against this for every shipped program and the generated fuzz
//! corpus.

use std::collections::HashMap;

use super::ast::{eval_binop, eval_unop, lcg_next};
use super::resolve::{Builtin, RExpr, RStmt, ResolvedFn, ResolvedProgram};

pub struct InterpOutcome {
    pub result: Option<i64>,
    pub buffers: Vec<Vec<i64>>,
    pub stats: InterpStats,
}

/// Execution-shape counters: with unit cost per invocation, the runtime
/// dispatches `calls + taskwaits` invocations with total work equal to that
/// count and critical path `critical_path`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InterpStats {
    /// Task calls (spawns plus the root).
    pub calls: u64,
    /// Taskwaits executed; each one splits an invocation in two.
    pub taskwaits: u64,
    /// Longest dependency chain in unit costs: within a task, segments are
    /// sequential; a continuation additionally waits for the slowest child
    /// of the epoch it joins.
    pub critical_path: u64,
}

pub struct Interp<'a> {
    program: &'a ResolvedProgram,
    buffers: Vec<Vec<i64>>,
    max_depth: usize,
    stats: InterpStats,
}

enum Flow {
    Normal,
    Return(Option<i64>),
}

struct Frame {
    vars: Vec<i64>,
    /// Results of children spawned since the last taskwait, in spawn order.
    epoch_results: Vec<i64>,
    /// Results of the epoch most recently joined.
    joined_results: Vec<i64>,
    /// Unit-cost critical paths of the current epoch's children.
    epoch_spans: Vec<u64>,
    /// Unit-cost critical path of this task so far (segments + joins).
    span: u64,
}

impl<'a> Interp<'a> {
    pub fn new(program: &'a ResolvedProgram, buffers: Vec<Vec<i64>>) -> Self {
        assert_eq!(buffers.len(), program.buffers.len());
        Self {
            program,
            buffers,
            max_depth: 400,
            stats: InterpStats::default(),
        }
    }

    pub fn buffers_from_sizes(program: &'a ResolvedProgram, sizes: &HashMap<String, usize>) -> Vec<Vec<i64>> {
        program
            .buffers
            .iter()
            .map(|name| vec![0; sizes.get(name).copied().unwrap_or(0)])
            .collect()
    }

    /// Run a root task to completion.
    pub fn run(mut self, task: &str, args: &[i64]) -> Result<InterpOutcome, String> {
        let idx = self
            .program
            .tasks
            .iter()
            .position(|t| t.name == task)
            .ok_or_else(|| format!("unknown task `{task}`"))?;
        let (result, span) = self.call_task(idx, args, 0)?;
        self.stats.critical_path = span;
        Ok(InterpOutcome {
            result,
            buffers: self.buffers,
            stats: self.stats,
        })
    }

    /// Returns (result, unit-cost critical path of this call tree).
    fn call_task(
        &mut self,
        idx: usize,
        args: &[i64],
        depth: usize,
    ) -> Result<(Option<i64>, u64), String> {
        if depth > self.max_depth {
            return Err("reference interpreter recursion limit exceeded".into());
        }
        self.stats.calls += 1;
        let f = &self.program.tasks[idx];
        let mut frame = Frame {
            vars: vec![0; f.vars.len()],
            epoch_results: Vec::new(),
            joined_results: Vec::new(),
            epoch_spans: Vec::new(),
            span: 1,
        };
        for (i, &p) in f.params.iter().enumerate() {
            frame.vars[p] = args.get(i).copied().unwrap_or(0);
        }
        let result = match self.exec_block(f, &f.body, &mut frame, depth)? {
            Flow::Return(v) => v,
            Flow::Normal => None,
        };
        Ok((result, frame.span))
    }

    fn call_helper(&mut self, idx: usize, args: &[i64], depth: usize) -> Result<i64, String> {
        if depth > self.max_depth {
            return Err("reference interpreter recursion limit exceeded".into());
        }
        let f = &self.program.helpers[idx];
        let mut frame = Frame {
            vars: vec![0; f.vars.len()],
            epoch_results: Vec::new(),
            joined_results: Vec::new(),
            epoch_spans: Vec::new(),
            span: 0,
        };
        for (i, &p) in f.params.iter().enumerate() {
            frame.vars[p] = args.get(i).copied().unwrap_or(0);
        }
        match self.exec_block(f, &f.body, &mut frame, depth)? {
            Flow::Return(v) => Ok(v.unwrap_or(0)),
            Flow::Normal => Ok(0),
        }
    }

    fn exec_block(
        &mut self,
        f: &ResolvedFn,
        stmts: &[RStmt],
        frame: &mut Frame,
        depth: usize,
    ) -> Result<Flow, String> {
        for stmt in stmts {
            match stmt {
                RStmt::Define { var, init } => {
                    frame.vars[*var] = match init {
                        Some(e) => self.eval(f, e, frame, depth)?,
                        None => 0,
                    };
                }
                RStmt::Assign { var, value } => {
                    frame.vars[*var] = self.eval(f, value, frame, depth)?;
                }
                RStmt::Eval { expr } => {
                    self.eval(f, expr, frame, depth)?;
                }
                RStmt::If {
                    cond,
                    then_block,
                    else_block,
                } => {
                    let c = self.eval(f, cond, frame, depth)?;
                    let flow = if c != 0 {
                        self.exec_block(f, then_block, frame, depth)?
                    } else {
                        self.exec_block(f, else_block, frame, depth)?
                    };
                    if let Flow::Return(v) = flow {
                        return Ok(Flow::Return(v));
                    }
                }
                RStmt::While { cond, body } => {
                    while self.eval(f, cond, frame, depth)? != 0 {
                        if let Flow::Return(v) = self.exec_block(f, body, frame, depth)? {
                            return Ok(Flow::Return(v));
                        }
                    }
                }
                RStmt::Return { value, .. } => {
                    let v = match value {
                        Some(e) => Some(self.eval(f, e, frame, depth)?),
                        None => None,
                    };
                    return Ok(Flow::Return(v));
                }
                RStmt::Spawn {
                    queue,
                    target,
                    callee,
                    args,
                    ..
                } => {
                    let mut arg_vals = Vec::with_capacity(args.len());
                    for a in args {
                        arg_vals.push(self.eval(f, a, frame, depth)?);
                    }
                    // The queue expression is evaluated at spawn time even
                    // though it only routes scheduling.
                    if let Some(q) = queue {
                        self.eval(f, q, frame, depth)?;
                    }
                    let (result, child_span) = self.call_task(*callee, &arg_vals, depth + 1)?;
                    let value = result.unwrap_or(0);
                    frame.epoch_results.push(value);
                    frame.epoch_spans.push(child_span);
                    if let Some(t) = target {
                        frame.vars[*t] = value;
                    }
                }
                RStmt::Taskwait { queue, .. } => {
                    if let Some(q) = queue {
                        self.eval(f, q, frame, depth)?;
                    }
                    self.stats.taskwaits += 1;
                    frame.joined_results = std::mem::take(&mut frame.epoch_results);
                    // Continuation segment: starts after the slowest child.
                    let slowest = frame.epoch_spans.drain(..).max().unwrap_or(0);
                    frame.span += slowest + 1;
                }
            }
        }
        Ok(Flow::Normal)
    }

    #[allow(clippy::only_used_in_recursion)]
    fn eval(
        &mut self,
        f: &ResolvedFn,
        expr: &RExpr,
        frame: &mut Frame,
        depth: usize,
    ) -> Result<i64, String> {
        Ok(match expr {
            RExpr::Literal(v) => *v,
            RExpr::Var(v) => frame.vars[*v],
            RExpr::Unary { op, operand } => {
                let a = self.eval(f, operand, frame, depth)?;
                eval_unop(*op, a)
            }
            RExpr::Binary { op, lhs, rhs } => {
                let a = self.eval(f, lhs, frame, depth)?;
                let b = self.eval(f, rhs, frame, depth)?;
                eval_binop(*op, a, b)?
            }
            RExpr::Ternary {
                cond,
                then_val,
                else_val,
            } => {
                if self.eval(f, cond, frame, depth)? != 0 {
                    self.eval(f, then_val, frame, depth)?
                } else {
                    self.eval(f, else_val, frame, depth)?
                }
            }
            RExpr::BuiltinCall {
                builtin,
                buffer,
                args,
            } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(f, a, frame, depth)?);
                }
                match builtin {
                    Builtin::Load => self.buf_read(*buffer, vals[0])?,
                    Builtin::Store => {
                        self.buf_write(*buffer, vals[0], vals[1])?;
                        vals[1]
                    }
                    Builtin::AtomicAdd => {
                        let old = self.buf_read(*buffer, vals[0])?;
                        self.buf_write(*buffer, vals[0], old.wrapping_add(vals[1]))?;
                        old
                    }
                    Builtin::Min => vals[0].min(vals[1]),
                    Builtin::Max => vals[0].max(vals[1]),
                    Builtin::LcgNext => lcg_next(vals[0]),
                    Builtin::ChildResult => {
                        let i = vals[0];
                        if i < 0 || i as usize >= frame.joined_results.len() {
                            return Err(format!(
                                "child_result({i}) out of range: {} children joined",
                                frame.joined_results.len()
                            ));
                        }
                        frame.joined_results[i as usize]
                    }
                }
            }
            RExpr::HelperCall { helper, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(f, a, frame, depth)?);
                }
                self.call_helper(*helper, &vals, depth + 1)?
            }
        })
    }

    fn buf_read(&self, buffer: Option<usize>, index: i64) -> Result<i64, String> {
        let b = buffer.expect("resolved buffer");
        let buf = &self.buffers[b];
        if index < 0 || index as usize >= buf.len() {
            return Err(format!(
                "buffer `{}` index {index} out of bounds (len {})",
                self.program.buffers[b],
                buf.len()
            ));
        }
        Ok(buf[index as usize])
    }

    fn buf_write(&mut self, buffer: Option<usize>, index: i64, value: i64) -> Result<(), String> {
        let b = buffer.expect("resolved buffer");
        let len = self.buffers[b].len();
        if index < 0 || index as usize >= len {
            return Err(format!(
                "buffer `{}` index {index} out of bounds (len {len})",
                self.program.buffers[b]
            ));
        }
        self.buffers[b][index as usize] = value;
        Ok(())
    }
}


#[cfg(test)]
mod span_tests {
    use super::*;
    use crate::compiler::parser::parse;
    use crate::compiler::resolve::resolve;

    #[test]
    fn fib3_unit_cost_work_and_span() {
        // Independent oracle for the work/span law: calls {3,2,1,1,0} with
        // the two spawning calls split in two by their taskwait gives
        // T1 = 5 + 2 = 7, and the chain
        // fib3:s0 -> fib2:s0 -> fib1 -> fib2:s1 -> fib3:s1 gives T_inf = 5.
        let src = r#"
task fib(n) {
  if (n < 2) { return n; }
  let a = 0;
  let b = 0;
  spawn a = fib(n - 1);
  spawn b = fib(n - 2);
  taskwait;
  return a + b;
}
"#;
        let resolved = resolve(&parse(src).unwrap()).unwrap();
        let outcome = Interp::new(&resolved, vec![]).run("fib", &[3]).unwrap();
        assert_eq!(outcome.result, Some(2));
        assert_eq!(outcome.stats.calls, 5);
        assert_eq!(outcome.stats.taskwaits, 2);
        assert_eq!(outcome.stats.calls + outcome.stats.taskwaits, 7);
        assert_eq!(outcome.stats.critical_path, 5);
    }
}
