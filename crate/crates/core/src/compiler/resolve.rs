//! Name resolution: alpha-renames locals to dense `VarId`s, resolves calls to
//! builtins/helpers/task functions, infers return kinds, and enforces the
//! call-form restrictions.

use std::collections::HashMap;

use super::ast::*;
use super::{CompileError, Diagnostic};

pub type VarId = usize;
pub type BufId = usize;
/// Index into the resolved task list (becomes the runtime FnId).
pub type TaskIdx = usize;
/// Index into the resolved helper list.
pub type HelperIdx = usize;

pub const MAX_TASK_ARGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Load,
    Store,
    AtomicAdd,
    Min,
    Max,
    LcgNext,
    ChildResult,
}

impl Builtin {
    fn lookup(name: &str) -> Option<(Builtin, usize)> {
        Some(match name {
            "load" => (Builtin::Load, 2),
            "store" => (Builtin::Store, 3),
            "atomic_add" => (Builtin::AtomicAdd, 3),
            "min" => (Builtin::Min, 2),
            "max" => (Builtin::Max, 2),
            "lcg_next" => (Builtin::LcgNext, 1),
            "child_result" => (Builtin::ChildResult, 1),
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Load => "load",
            Builtin::Store => "store",
            Builtin::AtomicAdd => "atomic_add",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::LcgNext => "lcg_next",
            Builtin::ChildResult => "child_result",
        }
    }
}

#[derive(Debug, Clone)]
pub enum RExpr {
    Literal(i64),
    Var(VarId),
    Unary {
        op: UnOp,
        operand: Box<RExpr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<RExpr>,
        rhs: Box<RExpr>,
    },
    Ternary {
        cond: Box<RExpr>,
        then_val: Box<RExpr>,
        else_val: Box<RExpr>,
    },
    BuiltinCall {
        builtin: Builtin,
        /// Load/Store/AtomicAdd name a buffer in their first argument; it is
        /// resolved here and removed from `args`.
        buffer: Option<BufId>,
        args: Vec<RExpr>,
    },
    HelperCall {
        helper: HelperIdx,
        args: Vec<RExpr>,
    },
}

#[derive(Debug, Clone)]
pub enum RStmt {
    Define {
        var: VarId,
        init: Option<RExpr>,
    },
    Assign {
        var: VarId,
        value: RExpr,
    },
    If {
        cond: RExpr,
        then_block: Vec<RStmt>,
        else_block: Vec<RStmt>,
    },
    While {
        cond: RExpr,
        body: Vec<RStmt>,
    },
    Return {
        value: Option<RExpr>,
        span: Span,
    },
    Spawn {
        queue: Option<RExpr>,
        target: Option<VarId>,
        callee: TaskIdx,
        args: Vec<RExpr>,
        span: Span,
    },
    Taskwait {
        queue: Option<RExpr>,
        span: Span,
    },
    Eval {
        expr: RExpr,
    },
}

#[derive(Debug, Clone)]
pub struct VarInfo {
    /// Display name; shadowed duplicates get a numeric suffix.
    pub name: String,
    pub is_param: bool,
}

#[derive(Debug, Clone)]
pub struct ResolvedFn {
    pub name: String,
    pub params: Vec<VarId>,
    pub vars: Vec<VarInfo>,
    pub body: Vec<RStmt>,
    pub returns_value: bool,
    pub is_task: bool,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct ResolvedProgram {
    pub buffers: Vec<String>,
    pub tasks: Vec<ResolvedFn>,
    pub helpers: Vec<ResolvedFn>,
}

#[derive(Debug, Clone, Copy)]
struct Signature {
    arity: usize,
    returns_value: bool,
    is_task: bool,
    index: usize,
}

pub fn resolve(program: &SourceProgram) -> Result<ResolvedProgram, CompileError> {
    let mut diags = Vec::new();

    let mut buffers = Vec::new();
    let mut buffer_index = HashMap::new();
    for decl in &program.buffers {
        if buffer_index.contains_key(&decl.name) {
            diags.push(Diagnostic::new(
                decl.span,
                format!("duplicate buffer `{}`", decl.name),
            ));
            continue;
        }
        buffer_index.insert(decl.name.clone(), buffers.len());
        buffers.push(decl.name.clone());
    }

    // Pass 1: signatures (return kind inferred from the body).
    let mut signatures: HashMap<String, Signature> = HashMap::new();
    let mut task_count = 0usize;
    let mut helper_count = 0usize;
    for f in &program.functions {
        if signatures.contains_key(&f.name) {
            diags.push(Diagnostic::new(
                f.span,
                format!("duplicate function `{}`", f.name),
            ));
            continue;
        }
        let returns_value = match scan_return_kind(&f.body) {
            Ok(r) => r,
            Err(d) => {
                diags.push(d);
                false
            }
        };
        let index = if f.is_task {
            task_count += 1;
            task_count - 1
        } else {
            helper_count += 1;
            helper_count - 1
        };
        if f.is_task && f.params.len() > MAX_TASK_ARGS {
            diags.push(Diagnostic::new(
                f.span,
                format!(
                    "task `{}` has {} parameters; the limit is {MAX_TASK_ARGS}",
                    f.name,
                    f.params.len()
                ),
            ));
        }
        signatures.insert(
            f.name.clone(),
            Signature {
                arity: f.params.len(),
                returns_value,
                is_task: f.is_task,
                index,
            },
        );
    }

    // Pass 2: bodies.
    let mut tasks = Vec::new();
    let mut helpers = Vec::new();
    for f in &program.functions {
        let mut ctx = FnResolver {
            signatures: &signatures,
            buffer_index: &buffer_index,
            diags: &mut diags,
            vars: Vec::new(),
            scopes: vec![HashMap::new()],
            in_task: f.is_task,
        };
        let params: Vec<VarId> = f.params.iter().map(|p| ctx.declare(p, true)).collect();
        let body = ctx.block(&f.body);
        let vars = ctx.vars;
        let resolved = ResolvedFn {
            name: f.name.clone(),
            params,
            vars,
            body,
            returns_value: signatures.get(&f.name).map(|s| s.returns_value).unwrap_or(false),
            is_task: f.is_task,
            span: f.span,
        };
        if f.is_task {
            tasks.push(resolved);
        } else {
            helpers.push(resolved);
        }
    }

    if diags.is_empty() {
        Ok(ResolvedProgram {
            buffers,
            tasks,
            helpers,
        })
    } else {
        Err(CompileError { diagnostics: diags })
    }
}

/// Infer whether a function returns a value; mixing `return;` with
/// `return e;` is an error.
fn scan_return_kind(body: &Block) -> Result<bool, Diagnostic> {
    fn scan(block: &Block, found: &mut Option<bool>) -> Result<(), Diagnostic> {
        for stmt in &block.stmts {
            match &stmt.kind {
                StmtKind::Return { value } => {
                    let has = value.is_some();
                    match *found {
                        None => *found = Some(has),
                        Some(prev) if prev != has => {
                            return Err(Diagnostic::new(
                                stmt.span,
                                "function mixes `return;` with `return <value>;`".into(),
                            ))
                        }
                        _ => {}
                    }
                }
                StmtKind::If {
                    then_block,
                    else_block,
                    ..
                } => {
                    scan(then_block, found)?;
                    if let Some(e) = else_block {
                        scan(e, found)?;
                    }
                }
                StmtKind::While { body, .. } => scan(body, found)?,
                _ => {}
            }
        }
        Ok(())
    }
    let mut found = None;
    scan(body, &mut found)?;
    Ok(found.unwrap_or(false))
}

struct FnResolver<'a> {
    signatures: &'a HashMap<String, Signature>,
    buffer_index: &'a HashMap<String, BufId>,
    diags: &'a mut Vec<Diagnostic>,
    vars: Vec<VarInfo>,
    scopes: Vec<HashMap<String, VarId>>,
    in_task: bool,
}

impl FnResolver<'_> {
    fn declare(&mut self, name: &str, is_param: bool) -> VarId {
        let id = self.vars.len();
        let dupes = self.vars.iter().filter(|v| v.name == name || v.name.starts_with(&format!("{name}__"))).count();
        let display = if self.vars.iter().any(|v| v.name == name) {
            format!("{name}__{}", dupes + 1)
        } else {
            name.to_string()
        };
        self.vars.push(VarInfo {
            name: display,
            is_param,
        });
        self.scopes.last_mut().unwrap().insert(name.to_string(), id);
        id
    }

    fn lookup(&mut self, name: &str, span: Span) -> Option<VarId> {
        for scope in self.scopes.iter().rev() {
            if let Some(&id) = scope.get(name) {
                return Some(id);
            }
        }
        self.diags.push(Diagnostic::new(
            span,
            format!("undeclared variable `{name}`"),
        ));
        None
    }

    fn block(&mut self, block: &Block) -> Vec<RStmt> {
        self.scopes.push(HashMap::new());
        let stmts = block.stmts.iter().filter_map(|s| self.stmt(s)).collect();
        self.scopes.pop();
        stmts
    }

    fn stmt(&mut self, stmt: &Stmt) -> Option<RStmt> {
        match &stmt.kind {
            StmtKind::Let { name, init } => {
                let init = init.as_ref().map(|e| self.expr(e));
                let var = self.declare(name, false);
                Some(RStmt::Define {
                    var,
                    init: init.flatten(),
                })
            }
            StmtKind::Assign { name, value } => {
                let value = self.expr(value)?;
                let var = self.lookup(name, stmt.span)?;
                Some(RStmt::Assign { var, value })
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let cond = self.expr(cond)?;
                let then_block = self.block(then_block);
                let else_block = else_block.as_ref().map(|b| self.block(b)).unwrap_or_default();
                Some(RStmt::If {
                    cond,
                    then_block,
                    else_block,
                })
            }
            StmtKind::While { cond, body } => {
                let cond = self.expr(cond)?;
                let body = self.block(body);
                Some(RStmt::While { cond, body })
            }
            StmtKind::Return { value } => {
                let value = match value {
                    Some(e) => Some(self.expr(e)?),
                    None => None,
                };
                Some(RStmt::Return {
                    value,
                    span: stmt.span,
                })
            }
            StmtKind::Spawn {
                queue,
                target,
                callee,
                args,
            } => {
                if !self.in_task {
                    self.diags.push(Diagnostic::new(
                        stmt.span,
                        "spawn is only allowed inside task functions".into(),
                    ));
                    return None;
                }
                let signature = match self.signatures.get(callee) {
                    Some(s) if s.is_task => *s,
                    Some(_) => {
                        self.diags.push(Diagnostic::new(
                            stmt.span,
                            format!(
                                "spawn must call a task function, but `{callee}` is a helper"
                            ),
                        ));
                        return None;
                    }
                    None => {
                        self.diags.push(Diagnostic::new(
                            stmt.span,
                            format!("spawn must call a declared task function; `{callee}` is unknown"),
                        ));
                        return None;
                    }
                };
                if args.len() != signature.arity {
                    self.diags.push(Diagnostic::new(
                        stmt.span,
                        format!(
                            "`{callee}` expects {} arguments, got {}",
                            signature.arity,
                            args.len()
                        ),
                    ));
                }
                if target.is_some() && !signature.returns_value {
                    self.diags.push(Diagnostic::new(
                        stmt.span,
                        format!("`{callee}` returns no value; spawn assignment is invalid"),
                    ));
                }
                let queue = queue.as_ref().and_then(|e| self.expr(e));
                let args: Vec<RExpr> = args.iter().filter_map(|a| self.expr(a)).collect();
                let target = match target {
                    Some(name) => Some(self.lookup(name, stmt.span)?),
                    None => None,
                };
                Some(RStmt::Spawn {
                    queue,
                    target,
                    callee: signature.index,
                    args,
                    span: stmt.span,
                })
            }
            StmtKind::Taskwait { queue } => {
                if !self.in_task {
                    self.diags.push(Diagnostic::new(
                        stmt.span,
                        "taskwait is only allowed inside task functions".into(),
                    ));
                    return None;
                }
                let queue = queue.as_ref().and_then(|e| self.expr(e));
                Some(RStmt::Taskwait {
                    queue,
                    span: stmt.span,
                })
            }
            StmtKind::Expr { expr } => {
                let expr = self.expr(expr)?;
                Some(RStmt::Eval { expr })
            }
        }
    }

    fn expr(&mut self, expr: &Expr) -> Option<RExpr> {
        match &expr.kind {
            ExprKind::Literal(v) => Some(RExpr::Literal(*v)),
            ExprKind::Var(name) => self.lookup(name, expr.span).map(RExpr::Var),
            ExprKind::Unary { op, operand } => {
                let operand = self.expr(operand)?;
                Some(RExpr::Unary {
                    op: *op,
                    operand: Box::new(operand),
                })
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let lhs = self.expr(lhs)?;
                let rhs = self.expr(rhs)?;
                Some(RExpr::Binary {
                    op: *op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                })
            }
            ExprKind::Ternary {
                cond,
                then_val,
                else_val,
            } => {
                let cond = self.expr(cond)?;
                let then_val = self.expr(then_val)?;
                let else_val = self.expr(else_val)?;
                Some(RExpr::Ternary {
                    cond: Box::new(cond),
                    then_val: Box::new(then_val),
                    else_val: Box::new(else_val),
                })
            }
            ExprKind::Call { callee, args } => self.call(callee, args, expr.span),
        }
    }

    fn call(&mut self, callee: &str, args: &[Expr], span: Span) -> Option<RExpr> {
        if let Some((builtin, arity)) = Builtin::lookup(callee) {
            if args.len() != arity {
                self.diags.push(Diagnostic::new(
                    span,
                    format!("builtin `{callee}` expects {arity} arguments, got {}", args.len()),
                ));
                return None;
            }
            if builtin == Builtin::ChildResult && !self.in_task {
                self.diags.push(Diagnostic::new(
                    span,
                    "child_result is only allowed inside task functions".into(),
                ));
                return None;
            }
            let takes_buffer =
                matches!(builtin, Builtin::Load | Builtin::Store | Builtin::AtomicAdd);
            let (buffer, rest) = if takes_buffer {
                let ExprKind::Var(buf_name) = &args[0].kind else {
                    self.diags.push(Diagnostic::new(
                        args[0].span,
                        format!("`{callee}` expects a buffer name as its first argument"),
                    ));
                    return None;
                };
                match self.buffer_index.get(buf_name) {
                    Some(&id) => (Some(id), &args[1..]),
                    None => {
                        self.diags.push(Diagnostic::new(
                            args[0].span,
                            format!("unknown buffer `{buf_name}`"),
                        ));
                        return None;
                    }
                }
            } else {
                (None, args)
            };
            let args: Vec<RExpr> = rest.iter().filter_map(|a| self.expr(a)).collect();
            return Some(RExpr::BuiltinCall {
                builtin,
                buffer,
                args,
            });
        }

        match self.signatures.get(callee) {
            Some(s) if s.is_task => {
                self.diags.push(Diagnostic::new(
                    span,
                    format!("task function `{callee}` may only be called via spawn"),
                ));
                None
            }
            Some(s) => {
                if args.len() != s.arity {
                    self.diags.push(Diagnostic::new(
                        span,
                        format!("`{callee}` expects {} arguments, got {}", s.arity, args.len()),
                    ));
                }
                let helper = s.index;
                let args: Vec<RExpr> = args.iter().filter_map(|a| self.expr(a)).collect();
                Some(RExpr::HelperCall { helper, args })
            }
            None => {
                self.diags.push(Diagnostic::new(
                    span,
                    format!("unknown function `{callee}`"),
                ));
                None
            }
        }
    }
}
