//! Lowering of structured bodies to control-flow graphs. Each taskwait
//! becomes a dedicated node whose single successor is its continuation point.

use super::ast::Span;
use super::resolve::{RExpr, RStmt, ResolvedFn, TaskIdx, VarId};
use super::{CompileError, Diagnostic};

pub type BlockId = usize;

#[derive(Debug, Clone)]
pub enum CfgStmt {
    /// Variable declaration; `None` initializer defaults to zero.
    Define { var: VarId, init: Option<RExpr> },
    Assign { var: VarId, value: RExpr },
    Eval { expr: RExpr },
    Spawn {
        queue: Option<RExpr>,
        target: Option<VarId>,
        callee: TaskIdx,
        args: Vec<RExpr>,
        span: Span,
    },
}

#[derive(Debug, Clone)]
pub enum Term {
    Jump(BlockId),
    Branch {
        cond: RExpr,
        then_b: BlockId,
        else_b: BlockId,
    },
    Return {
        value: Option<RExpr>,
        span: Span,
    },
    /// Taskwait node: `index` is the lexical taskwait number, `cont` its
    /// unique successor.
    Taskwait {
        queue: Option<RExpr>,
        index: usize,
        cont: BlockId,
        span: Span,
    },
}

#[derive(Debug, Clone)]
pub struct BasicBlock {
    pub stmts: Vec<CfgStmt>,
    pub term: Term,
}

#[derive(Debug, Clone)]
pub struct Cfg {
    pub fn_name: String,
    pub blocks: Vec<BasicBlock>,
    pub n_taskwaits: usize,
}

impl Cfg {
    pub const ENTRY: BlockId = 0;

    pub fn successors(&self, b: BlockId) -> Vec<BlockId> {
        match &self.blocks[b].term {
            Term::Jump(t) => vec![*t],
            Term::Branch { then_b, else_b, .. } => vec![*then_b, *else_b],
            Term::Return { .. } => vec![],
            Term::Taskwait { cont, .. } => vec![*cont],
        }
    }

    /// Blocks whose terminator is a taskwait, in lexical order.
    pub fn taskwait_blocks(&self) -> Vec<BlockId> {
        let mut found: Vec<(usize, BlockId)> = self
            .blocks
            .iter()
            .enumerate()
            .filter_map(|(id, b)| match b.term {
                Term::Taskwait { index, .. } => Some((index, id)),
                _ => None,
            })
            .collect();
        found.sort_unstable();
        found.into_iter().map(|(_, id)| id).collect()
    }

    /// Reverse postorder from the entry (deterministic iteration order for
    /// the dataflow fixpoint).
    pub fn reverse_postorder(&self) -> Vec<BlockId> {
        let mut visited = vec![false; self.blocks.len()];
        let mut order = Vec::with_capacity(self.blocks.len());
        fn dfs(cfg: &Cfg, b: BlockId, visited: &mut [bool], order: &mut Vec<BlockId>) {
            visited[b] = true;
            for s in cfg.successors(b) {
                if !visited[s] {
                    dfs(cfg, s, visited, order);
                }
            }
            order.push(b);
        }
        dfs(self, Cfg::ENTRY, &mut visited, &mut order);
        order.reverse();
        order
    }
}

struct Builder {
    blocks: Vec<BasicBlock>,
    current: BlockId,
    /// Current block's statements (moved into `blocks` when sealed).
    stmts: Vec<CfgStmt>,
    sealed: bool,
    n_taskwaits: usize,
}

impl Builder {
    fn new() -> Self {
        Self {
            blocks: vec![BasicBlock {
                stmts: Vec::new(),
                term: Term::Return {
                    value: None,
                    span: Span::default(),
                },
            }],
            current: 0,
            stmts: Vec::new(),
            sealed: false,
            n_taskwaits: 0,
        }
    }

    fn fresh_block(&mut self) -> BlockId {
        self.blocks.push(BasicBlock {
            stmts: Vec::new(),
            term: Term::Return {
                value: None,
                span: Span::default(),
            },
        });
        self.blocks.len() - 1
    }

    fn seal(&mut self, term: Term) {
        if !self.sealed {
            self.blocks[self.current].stmts = std::mem::take(&mut self.stmts);
            self.blocks[self.current].term = term;
            self.sealed = true;
        }
    }

    fn start(&mut self, block: BlockId) {
        self.current = block;
        self.stmts = Vec::new();
        self.sealed = false;
    }

    fn push(&mut self, stmt: CfgStmt) {
        if !self.sealed {
            self.stmts.push(stmt);
        }
    }

    fn lower_block(&mut self, stmts: &[RStmt]) {
        for stmt in stmts {
            if self.sealed {
                // Unreachable code after a return; drop it.
                return;
            }
            match stmt {
                RStmt::Define { var, init } => self.push(CfgStmt::Define {
                    var: *var,
                    init: init.clone(),
                }),
                RStmt::Assign { var, value } => self.push(CfgStmt::Assign {
                    var: *var,
                    value: value.clone(),
                }),
                RStmt::Eval { expr } => self.push(CfgStmt::Eval { expr: expr.clone() }),
                RStmt::Spawn {
                    queue,
                    target,
                    callee,
                    args,
                    span,
                } => self.push(CfgStmt::Spawn {
                    queue: queue.clone(),
                    target: *target,
                    callee: *callee,
                    args: args.clone(),
                    span: *span,
                }),
                RStmt::Return { value, span } => {
                    self.seal(Term::Return {
                        value: value.clone(),
                        span: *span,
                    });
                }
                RStmt::Taskwait { queue, span } => {
                    let wait_block = self.fresh_block();
                    let cont_block = self.fresh_block();
                    self.seal(Term::Jump(wait_block));
                    let index = self.n_taskwaits;
                    self.n_taskwaits += 1;
                    self.blocks[wait_block].term = Term::Taskwait {
                        queue: queue.clone(),
                        index,
                        cont: cont_block,
                        span: *span,
                    };
                    self.start(cont_block);
                }
                RStmt::If {
                    cond,
                    then_block,
                    else_block,
                } => {
                    let then_b = self.fresh_block();
                    let else_b = self.fresh_block();
                    let join_b = self.fresh_block();
                    self.seal(Term::Branch {
                        cond: cond.clone(),
                        then_b,
                        else_b,
                    });
                    self.start(then_b);
                    self.lower_block(then_block);
                    self.seal(Term::Jump(join_b));
                    self.start(else_b);
                    self.lower_block(else_block);
                    self.seal(Term::Jump(join_b));
                    self.start(join_b);
                }
                RStmt::While { cond, body } => {
                    let cond_b = self.fresh_block();
                    let body_b = self.fresh_block();
                    let exit_b = self.fresh_block();
                    self.seal(Term::Jump(cond_b));
                    self.start(cond_b);
                    self.seal(Term::Branch {
                        cond: cond.clone(),
                        then_b: body_b,
                        else_b: exit_b,
                    });
                    self.start(body_b);
                    self.lower_block(body);
                    self.seal(Term::Jump(cond_b));
                    self.start(exit_b);
                }
            }
        }
    }
}

/// Lower one resolved function to its CFG. The fall-off end of a void
/// function becomes an implicit `return;`.
pub fn lower_to_cfg(f: &ResolvedFn) -> Result<Cfg, CompileError> {
    let mut builder = Builder::new();
    builder.lower_block(&f.body);
    builder.seal(Term::Return {
        value: None,
        span: f.span,
    });
    let cfg = Cfg {
        fn_name: f.name.clone(),
        blocks: builder.blocks,
        n_taskwaits: builder.n_taskwaits,
    };

    let mut diags = Vec::new();

    // A taskwait on a CFG cycle means a loop iteration crosses the wait;
    // the one-state-per-taskwait numbering cannot express re-entrant loop
    // states, so reject it. (Recursive decomposition is the workaround.)
    for wait_block in cfg.taskwait_blocks() {
        if reaches(&cfg, cfg.successors(wait_block)[0], wait_block) {
            if let Term::Taskwait { span, .. } = cfg.blocks[wait_block].term {
                diags.push(Diagnostic::new(
                    span,
                    format!(
                        "in `{}`: taskwait inside a loop is unsupported; \
                         restructure the loop body into a recursive task function",
                        f.name
                    ),
                ));
            }
        }
    }

    // Non-void functions must not fall off the end.
    if f.returns_value {
        for b in reachable_set(&cfg) {
            if let Term::Return { value: None, .. } = cfg.blocks[b].term {
                diags.push(Diagnostic::new(
                    f.span,
                    format!(
                        "`{}` returns a value on some paths but can fall off the end",
                        f.name
                    ),
                ));
                break;
            }
        }
    }

    if diags.is_empty() {
        Ok(cfg)
    } else {
        Err(CompileError { diagnostics: diags })
    }
}

pub fn reachable_set(cfg: &Cfg) -> Vec<BlockId> {
    let mut visited = vec![false; cfg.blocks.len()];
    let mut stack = vec![Cfg::ENTRY];
    while let Some(b) = stack.pop() {
        if visited[b] {
            continue;
        }
        visited[b] = true;
        stack.extend(cfg.successors(b));
    }
    (0..cfg.blocks.len()).filter(|&b| visited[b]).collect()
}

fn reaches(cfg: &Cfg, from: BlockId, target: BlockId) -> bool {
    let mut visited = vec![false; cfg.blocks.len()];
    let mut stack = vec![from];
    while let Some(b) = stack.pop() {
        if b == target {
            return true;
        }
        if visited[b] {
            continue;
        }
        visited[b] = true;
        stack.extend(cfg.successors(b));
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::parser::parse;
    use crate::compiler::resolve::resolve;

    fn cfg_of(src: &str) -> Cfg {
        let resolved = resolve(&parse(src).unwrap()).unwrap();
        let f = resolved
            .tasks
            .first()
            .or_else(|| resolved.helpers.first())
            .unwrap();
        lower_to_cfg(f).unwrap()
    }

    #[test]
    fn straight_line_body_is_one_block() {
        let cfg = cfg_of("fn f(x) { let y = x + 1; return y; }");
        assert_eq!(cfg.blocks.len(), 1);
    }

    #[test]
    fn if_else_is_a_diamond_of_four_blocks() {
        let cfg = cfg_of("fn f(x) { let y = 0; if (x) { y = 1; } else { y = 2; } return y; }");
        assert_eq!(cfg.blocks.len(), 4);
    }

    #[test]
    fn fib_taskwait_node_has_single_continuation_successor() {
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
        let cfg = cfg_of(src);
        let waits = cfg.taskwait_blocks();
        assert_eq!(waits.len(), 1);
        let succs = cfg.successors(waits[0]);
        assert_eq!(succs.len(), 1);
        // The continuation block holds `return a + b`.
        assert!(matches!(
            cfg.blocks[succs[0]].term,
            Term::Return { value: Some(_), .. }
        ));
    }

    #[test]
    fn taskwait_inside_loop_is_rejected() {
        let src = r#"
task t(n) {
  let i = 0;
  while (i < n) {
    spawn t(n - 1);
    taskwait;
    i = i + 1;
  }
  return 0;
}
"#;
        let resolved = resolve(&parse(src).unwrap()).unwrap();
        let err = lower_to_cfg(&resolved.tasks[0]).unwrap_err();
        assert!(err.to_string().contains("taskwait inside a loop"));
    }

    #[test]
    fn spawn_in_loop_without_wait_in_loop_is_fine() {
        let src = r#"
task t(n) {
  let i = 0;
  while (i < n) {
    spawn t(n - 1);
    i = i + 1;
  }
  taskwait;
  return 0;
}
"#;
        let resolved = resolve(&parse(src).unwrap()).unwrap();
        assert!(lower_to_cfg(&resolved.tasks[0]).is_ok());
    }

    #[test]
    fn missing_return_on_a_path_is_rejected_for_value_functions() {
        let src = "fn f(x) { if (x) { return 1; } }";
        let resolved = resolve(&parse(src).unwrap()).unwrap();
        let err = lower_to_cfg(&resolved.helpers[0]).unwrap_err();
        assert!(err.to_string().contains("fall off"));
    }
}
