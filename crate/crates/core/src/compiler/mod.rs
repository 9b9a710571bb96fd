//! Compiler for the task DSL: parse, resolve, build CFGs, run backward
//! liveness, compute spill sets, and partition control flow at taskwait into
//! switch-dispatched state machines. The grammar is documented in
//! `docs/dsl.md`; the IR text format in `docs/ir-format.md`.

pub mod ast;
pub mod cfg;
pub mod interp;
pub mod ir;
pub mod lexer;
pub mod liveness;
pub mod parser;
pub mod resolve;
pub mod transform;

pub use ast::Span;
pub use interp::Interp;
pub use ir::{HelperIr, Program, StateMachineIr, TaskDataLayout};
pub use parser::parse;
pub use resolve::{ResolvedProgram, MAX_TASK_ARGS};

use cfg::lower_to_cfg;
use resolve::resolve;
use transform::{compile_helper, transform_to_state_machine};

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn new(span: Span, message: String) -> Self {
        Self { span, message }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: error: {}", self.span, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct CompileError {
    pub diagnostics: Vec<Diagnostic>,
}

impl std::fmt::Display for CompileError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for CompileError {}

impl From<Diagnostic> for CompileError {
    fn from(d: Diagnostic) -> Self {
        CompileError {
            diagnostics: vec![d],
        }
    }
}

/// Compile-time limits and mode flags.
#[derive(Debug, Clone)]
pub struct CompileOptions {
    /// Maximum task-data record size in bytes; compilation fails beyond it.
    pub max_task_data_size: usize,
    /// Reject taskwait/child_result and permit unjoined spawns.
    pub assume_no_taskwait: bool,
    /// Reject queue clauses (block-level workers have a single queue).
    pub block_level: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            max_task_data_size: 256,
            assume_no_taskwait: false,
            block_level: false,
        }
    }
}

/// Parse, analyze, and transform a whole program. Any diagnostic aborts; all
/// collected diagnostics are reported together.
pub fn compile_program(source: &str, opts: &CompileOptions) -> Result<Program, CompileError> {
    let parsed = parse(source)?;
    let resolved = resolve(&parsed)?;
    compile_resolved(&resolved, opts)
}

/// Compile an already-resolved program (shared by the fuzz harness, which
/// needs the resolved form for the reference interpreter too).
pub fn compile_resolved(
    resolved: &ResolvedProgram,
    opts: &CompileOptions,
) -> Result<Program, CompileError> {
    let mut diagnostics = Vec::new();
    let mut tasks = Vec::new();
    let mut has_taskwait = false;
    let mut uses_queue_clauses = false;

    for f in &resolved.tasks {
        let cfg = match lower_to_cfg(f) {
            Ok(c) => c,
            Err(e) => {
                diagnostics.extend(e.diagnostics);
                continue;
            }
        };
        has_taskwait |= cfg.n_taskwaits > 0;
        let queue_use = scan_queue_clauses(&cfg);
        uses_queue_clauses |= queue_use.is_some();
        if opts.block_level {
            if let Some(span) = queue_use {
                diagnostics.push(Diagnostic::new(
                    span,
                    format!(
                        "in `{}`: the queue option is not supported for block-level workers",
                        f.name
                    ),
                ));
            }
        }
        match transform_to_state_machine(f, &cfg, opts) {
            Ok((ir, _layout)) => tasks.push(ir),
            Err(e) => diagnostics.extend(e.diagnostics),
        }
    }

    let mut helpers = Vec::new();
    for f in &resolved.helpers {
        match lower_to_cfg(f) {
            Ok(cfg) => helpers.push(compile_helper(f, &cfg)),
            Err(e) => diagnostics.extend(e.diagnostics),
        }
    }

    if !diagnostics.is_empty() {
        return Err(CompileError { diagnostics });
    }
    Ok(Program {
        tasks,
        helpers,
        buffers: resolved.buffers.clone(),
        has_taskwait,
        uses_queue_clauses,
    })
}

fn scan_queue_clauses(cfg: &cfg::Cfg) -> Option<Span> {
    for block in &cfg.blocks {
        for stmt in &block.stmts {
            if let cfg::CfgStmt::Spawn {
                queue: Some(_),
                span,
                ..
            } = stmt
            {
                return Some(*span);
            }
        }
        if let cfg::Term::Taskwait {
            queue: Some(_),
            span,
            ..
        } = block.term
        {
            return Some(span);
        }
    }
    None
}

/// Human-readable CFG dump (`taskc --emit cfg`).
pub fn cfg_text(source: &str) -> Result<String, CompileError> {
    let parsed = parse(source)?;
    let resolved = resolve(&parsed)?;
    let mut out = String::new();
    for f in resolved.tasks.iter().chain(resolved.helpers.iter()) {
        let cfg = lower_to_cfg(f)?;
        out.push_str(&format!(
            "{} {}({})\n",
            if f.is_task { "task" } else { "fn" },
            f.name,
            f.params
                .iter()
                .map(|&p| f.vars[p].name.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ));
        for (i, block) in cfg.blocks.iter().enumerate() {
            out.push_str(&format!("  b{i}:\n"));
            for stmt in &block.stmts {
                let line = match stmt {
                    cfg::CfgStmt::Define { var, .. } => format!("define {}", f.vars[*var].name),
                    cfg::CfgStmt::Assign { var, .. } => format!("assign {}", f.vars[*var].name),
                    cfg::CfgStmt::Eval { .. } => "eval".to_string(),
                    cfg::CfgStmt::Spawn { callee, target, .. } => format!(
                        "spawn {}{}",
                        resolved.tasks[*callee].name,
                        match target {
                            Some(t) => format!(" -> {}", f.vars[*t].name),
                            None => String::new(),
                        }
                    ),
                };
                out.push_str(&format!("    {line}\n"));
            }
            let term = match &block.term {
                cfg::Term::Jump(t) => format!("jump b{t}"),
                cfg::Term::Branch { then_b, else_b, .. } => format!("br b{then_b}, b{else_b}"),
                cfg::Term::Return { value, .. } => {
                    if value.is_some() {
                        "return value".to_string()
                    } else {
                        "return".to_string()
                    }
                }
                cfg::Term::Taskwait { index, cont, .. } => {
                    format!("taskwait {index} -> b{cont}")
                }
            };
            out.push_str(&format!("    {term}\n"));
        }
    }
    Ok(out)
}

/// Layout table dump (`taskc --emit layout`).
pub fn layout_text(program: &Program) -> String {
    let mut out = String::new();
    for task in &program.tasks {
        out.push_str(&format!(
            "task {}: {} fields, {} bytes\n",
            task.name,
            task.layout.fields.len(),
            task.layout.size_bytes()
        ));
        for (i, field) in task.layout.fields.iter().enumerate() {
            let kind = match field.kind {
                ir::FieldKind::Arg => "arg",
                ir::FieldKind::Spill => "spill",
                ir::FieldKind::Result => "result",
            };
            out.push_str(&format!("  [{i}] {} ({kind})\n", field.name));
        }
    }
    out
}
