//! Shared test support: the queue-interleaving enumeration harness, the
//! DSL program generator, the liveness path-enumeration oracle, and golden
//! strings. Used by the focused suites and re-driven by the acceptance
//! suite.
#![allow(dead_code)]

use std::collections::BTreeSet;

use simt_forkjoin::compiler::cfg::{BasicBlock, Cfg, CfgStmt, Term};
use simt_forkjoin::compiler::liveness::{stmt_use_def, term_uses};
use simt_forkjoin::compiler::resolve::RExpr;
use simt_forkjoin::metrics::RunReport;
use simt_forkjoin::queues::{PopBatchOp, PushBatchOp, QueueCounters, StealBatchOp, WarpDeque};
use simt_forkjoin::task::TaskId;

pub const FIB_GOLDEN: &str = "\
task fib(n) returns value
layout {n@0, a@1, b@2, result@3} size 32
state 0:
  b0:
    r0 = field[0]
    r1 = const 2
    r2 = lt r0, r1
    br r2, b1, b2
  b1:
    r3 = field[0]
    field[3] = r3
    finish r3
  b2:
    jump b3
  b3:
    r4 = const 0
    field[1] = r4
    r5 = const 0
    field[2] = r5
    r6 = field[0]
    r7 = const 1
    r8 = sub r6, r7
    r10 = field[0]
    r11 = const 1
    r12 = sub r10, r11
    r13 = const 2
    r14 = lt r12, r13
    br r14, b4, b5
  b4:
    r15 = const 1
    r9 = copy r15
    jump b6
  b5:
    r16 = const 0
    r9 = copy r16
    jump b6
  b6:
    spawn fib(r8) queue r9 bind 0
    r17 = field[0]
    r18 = const 2
    r19 = sub r17, r18
    r21 = field[0]
    r22 = const 2
    r23 = sub r21, r22
    r24 = const 2
    r25 = lt r23, r24
    br r25, b7, b8
  b7:
    r26 = const 1
    r20 = copy r26
    jump b9
  b8:
    r27 = const 0
    r20 = copy r27
    jump b9
  b9:
    spawn fib(r19) queue r20 bind 1
    jump b10
  b10:
    r28 = const 2
    suspend state 1 queue r28
state 1:
  b0:
    r0 = const 0
    r1 = child r0
    field[1] = r1
    r2 = const 1
    r3 = child r2
    field[2] = r3
    r4 = field[1]
    r5 = field[2]
    r6 = add r4, r5
    field[3] = r6
    finish r6
";


const CANARY: u64 = u64::MAX;

fn id(i: u32) -> TaskId {
    TaskId {
        index: i,
        generation: 0,
    }
}

/// One actor's script: a sequence of deque operations.
#[derive(Clone)]
pub enum Op {
    Push(Vec<TaskId>),
    Pop { max: usize },
    Steal { max: usize },
}

pub struct Actor {
    pub script: Vec<Op>,
    pub current: usize,
    push: Option<PushBatchOp>,
    pop: Option<PopBatchOp>,
    steal: Option<StealBatchOp>,
    pub got: Vec<TaskId>,
}

impl Actor {
    fn new(script: Vec<Op>) -> Self {
        Self {
            script,
            current: 0,
            push: None,
            pop: None,
            steal: None,
            got: Vec::new(),
        }
    }

    fn done(&self) -> bool {
        self.current >= self.script.len()
            && self.push.is_none()
            && self.pop.is_none()
            && self.steal.is_none()
    }

    /// Run one step of the current operation; start the next op if needed.
    fn step(&mut self, q: &WarpDeque, counters: &QueueCounters) {
        if self.push.is_none() && self.pop.is_none() && self.steal.is_none() {
            match self.script.get(self.current) {
                None => return,
                Some(Op::Push(ids)) => self.push = Some(PushBatchOp::new(ids.clone())),
                Some(Op::Pop { max }) => self.pop = Some(PopBatchOp::new(*max)),
                Some(Op::Steal { max }) => self.steal = Some(StealBatchOp::new(*max, false)),
            }
        }
        if let Some(op) = self.push.as_mut() {
            if op.step(q, 0, 0, counters).unwrap().is_done() {
                self.push = None;
                self.current += 1;
            }
            return;
        }
        if let Some(op) = self.pop.as_mut() {
            op.step(q, counters);
            if op.is_done() {
                let op = self.pop.take().unwrap();
                self.got.extend(op.into_ids());
                self.current += 1;
            }
            return;
        }
        if let Some(op) = self.steal.as_mut() {
            op.step(q, counters);
            if op.is_done() {
                let op = self.steal.take().unwrap();
                self.got.extend(op.into_ids());
                self.current += 1;
            }
        }
    }
}

pub struct Replay {
    pub owner: Actor,
    pub thief: Actor,
    pub deque: WarpDeque,
    pub counters: QueueCounters,
}

/// Apply a schedule (true = owner step, false = thief step) from scratch.
pub fn replay(
    capacity: usize,
    preload: &[TaskId],
    owner_script: &[Op],
    thief_script: &[Op],
    schedule: &[bool],
) -> Replay {
    let deque = WarpDeque::new(capacity);
    let counters = QueueCounters::default();
    if !preload.is_empty() {
        deque.push_batch(0, 0, preload, &counters).unwrap();
    }
    let mut owner = Actor::new(owner_script.to_vec());
    let mut thief = Actor::new(thief_script.to_vec());
    for &is_owner in schedule {
        if is_owner {
            owner.step(&deque, &counters);
        } else {
            thief.step(&deque, &counters);
        }
    }
    Replay {
        owner,
        thief,
        deque,
        counters,
    }
}

/// Enumerate all schedules and verify the safety properties on each.
pub fn enumerate_all(capacity: usize, preload: &[TaskId], owner_script: &[Op], thief_script: &[Op]) -> u64 {
    let mut schedules = 0u64;
    let mut stack: Vec<Vec<bool>> = vec![Vec::new()];
    while let Some(schedule) = stack.pop() {
        let state = replay(capacity, preload, owner_script, thief_script, &schedule);
        let owner_done = state.owner.done();
        let thief_done = state.thief.done();
        if owner_done && thief_done {
            schedules += 1;
            verify(state, preload, &schedule);
            continue;
        }
        if !owner_done {
            let mut next = schedule.clone();
            next.push(true);
            stack.push(next);
        }
        if !thief_done {
            let mut next = schedule.clone();
            next.push(false);
            stack.push(next);
        }
    }
    schedules
}

pub fn verify(state: Replay, preload: &[TaskId], schedule: &[bool]) {
    let mut inventory: Vec<u32> = Vec::new();
    let mut pushed: Vec<u32> = preload.iter().map(|t| t.index).collect();
    for op in &state.owner.script {
        if let Op::Push(ids) = op {
            pushed.extend(ids.iter().map(|t| t.index));
        }
    }

    // No unpublished entry may ever have been claimed.
    for t in state.owner.got.iter().chain(state.thief.got.iter()) {
        assert_ne!(
            t.pack(),
            CANARY,
            "unpublished entry read in schedule {schedule:?}"
        );
        inventory.push(t.index);
    }

    // Drain what is left through the owner path.
    loop {
        let (rest, _) = state.deque.pop_batch(64, &state.counters);
        if rest.is_empty() {
            break;
        }
        inventory.extend(rest.iter().map(|t| t.index));
    }

    // Disjoint claims, complete union.
    inventory.sort_unstable();
    pushed.sort_unstable();
    assert_eq!(
        inventory, pushed,
        "claims not a partition of pushes in schedule {schedule:?} \
         (owner got {:?}, thief got {:?})",
        state.owner.got, state.thief.got
    );
}

pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 11
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    pub fn chance(&mut self, pct: u64) -> bool {
        self.below(100) < pct
    }
}

// ---------------------------------------------------------------------------
// Liveness vs path enumeration
// ---------------------------------------------------------------------------

pub fn random_cfg(rng: &mut Lcg) -> Cfg {
    let n_blocks = 2 + rng.below(10) as usize; // <= 12 nodes
    let n_vars = 3 + rng.below(4) as usize;
    let mut blocks = Vec::new();
    for b in 0..n_blocks {
        let mut stmts = Vec::new();
        for _ in 0..rng.below(4) {
            let dst = rng.below(n_vars as u64) as usize;
            let u1 = rng.below(n_vars as u64) as usize;
            let u2 = rng.below(n_vars as u64) as usize;
            let value = RExpr::Binary {
                op: simt_forkjoin::compiler::ast::BinOp::Add,
                lhs: Box::new(RExpr::Var(u1)),
                rhs: Box::new(RExpr::Var(u2)),
            };
            if rng.chance(25) {
                stmts.push(CfgStmt::Define {
                    var: dst,
                    init: Some(value),
                });
            } else {
                stmts.push(CfgStmt::Assign { var: dst, value });
            }
        }
        // Forward edges only: acyclic by construction.
        let term = if b + 1 >= n_blocks || rng.chance(20) {
            let value = if rng.chance(50) {
                Some(RExpr::Var(rng.below(n_vars as u64) as usize))
            } else {
                None
            };
            Term::Return {
                value,
                span: Default::default(),
            }
        } else if rng.chance(50) && b + 2 < n_blocks {
            let lo = b + 1;
            let t = lo + rng.below((n_blocks - lo) as u64) as usize;
            let e = lo + rng.below((n_blocks - lo) as u64) as usize;
            Term::Branch {
                cond: RExpr::Var(rng.below(n_vars as u64) as usize),
                then_b: t,
                else_b: e,
            }
        } else {
            let lo = b + 1;
            Term::Jump(lo + rng.below((n_blocks - lo) as u64) as usize)
        };
        blocks.push(BasicBlock { stmts, term });
    }
    Cfg {
        fn_name: "random".into(),
        blocks,
        n_taskwaits: 0,
    }
}

/// Path-enumeration oracle: v is live into `from` iff some path from `from`
/// uses v before defining it.
pub fn oracle_live_in(cfg: &Cfg, from: usize) -> BTreeSet<usize> {
    let all_vars: BTreeSet<usize> = (0..16).collect();
    let mut live = BTreeSet::new();
    for &v in &all_vars {
        if path_uses_before_def(cfg, from, v, &mut vec![false; cfg.blocks.len()]) {
            live.insert(v);
        }
    }
    live
}

pub fn path_uses_before_def(cfg: &Cfg, block: usize, v: usize, visiting: &mut Vec<bool>) -> bool {
    // Walk this block's statements in order.
    for stmt in &cfg.blocks[block].stmts {
        let (uses, defs) = stmt_use_def(stmt);
        if uses.contains(&v) {
            return true;
        }
        if defs.contains(&v) {
            return false;
        }
    }
    if term_uses(&cfg.blocks[block].term).contains(&v) {
        return true;
    }
    // Acyclic CFGs never revisit, but guard anyway.
    if visiting[block] {
        return false;
    }
    visiting[block] = true;
    let result = cfg
        .successors(block)
        .into_iter()
        .any(|s| path_uses_before_def(cfg, s, v, visiting));
    visiting[block] = false;
    result
}

pub struct ProgramGen {
    rng: Lcg,
    /// Variables currently in scope (all i64).
    vars: Vec<String>,
    src: String,
    indent: usize,
    fresh: usize,
    /// Whether this task may write buffers. Only the never-spawned root
    /// writes: sibling tasks would race, and the equivalence property is
    /// stated for data-race-free programs.
    effects: bool,
}

impl ProgramGen {
    fn line(&mut self, text: &str) {
        for _ in 0..self.indent {
            self.src.push_str("  ");
        }
        self.src.push_str(text);
        self.src.push('\n');
    }

    fn fresh_name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    /// Random expression over in-scope variables; depth-bounded, total, and
    /// in-bounds for buffer accesses.
    fn expr(&mut self, depth: usize) -> String {
        if depth == 0 || self.rng.chance(30) {
            return if self.rng.chance(50) && !self.vars.is_empty() {
                let i = self.rng.below(self.vars.len() as u64) as usize;
                self.vars[i].clone()
            } else {
                format!("{}", self.rng.below(200) as i64 - 100)
            };
        }
        match self.rng.below(10) {
            0 => {
                let a = self.expr(depth - 1);
                let b = self.expr(depth - 1);
                format!("({a} + {b})")
            }
            1 => {
                let a = self.expr(depth - 1);
                let b = self.expr(depth - 1);
                format!("({a} - {b})")
            }
            2 => {
                let a = self.expr(depth - 1);
                let b = self.expr(depth - 1);
                format!("({a} * {b})")
            }
            // Non-zero constant divisors keep division total.
            3 => {
                let a = self.expr(depth - 1);
                let d = 1 + self.rng.below(7);
                if self.rng.chance(50) {
                    format!("({a} / {d})")
                } else {
                    format!("({a} % {d})")
                }
            }
            4 => {
                let a = self.expr(depth - 1);
                let b = self.expr(depth - 1);
                let op = ["&", "|", "^"][self.rng.below(3) as usize];
                format!("({a} {op} {b})")
            }
            5 => {
                let a = self.expr(depth - 1);
                let s = self.rng.below(8);
                let op = if self.rng.chance(50) { "<<" } else { ">>" };
                format!("({a} {op} {s})")
            }
            6 => {
                let a = self.expr(depth - 1);
                let b = self.expr(depth - 1);
                let op = ["<", "<=", ">", ">=", "==", "!="][self.rng.below(6) as usize];
                format!("({a} {op} {b})")
            }
            7 => {
                let c = self.expr(depth - 1);
                let a = self.expr(depth - 1);
                let b = self.expr(depth - 1);
                format!("({c} ? {a} : {b})")
            }
            8 => {
                let a = self.expr(depth - 1);
                let b = self.expr(depth - 1);
                match self.rng.below(3) {
                    0 => format!("min({a}, {b})"),
                    1 => format!("max({a}, {b})"),
                    _ => format!("lcg_next({a})"),
                }
            }
            _ => {
                let a = self.expr(depth - 1);
                format!("load(buf, ({a} & 15))")
            }
        }
    }

    /// Straight-line filler statements (no spawns).
    fn pure_stmts(&mut self, budget: usize) {
        for _ in 0..budget {
            match self.rng.below(5) {
                0 => {
                    let e = self.expr(2);
                    let name = self.fresh_name("v");
                    self.line(&format!("let {name} = {e};"));
                    self.vars.push(name);
                }
                1 if self.vars.len() > 1 => {
                    // Never reassign `n`: it bounds the recursion.
                    let i = 1 + self.rng.below(self.vars.len() as u64 - 1) as usize;
                    let target = self.vars[i].clone();
                    let e = self.expr(2);
                    self.line(&format!("{target} = {e};"));
                }
                2 if self.effects => {
                    let idx = self.expr(1);
                    let val = self.expr(2);
                    if self.rng.chance(70) {
                        self.line(&format!("store(buf, ({idx} & 15), {val});"));
                    } else {
                        self.line(&format!("atomic_add(buf, ({idx} & 15), {val});"));
                    }
                }
                2 => {
                    let e = self.expr(2);
                    let name = self.fresh_name("v");
                    self.line(&format!("let {name} = {e};"));
                    self.vars.push(name);
                }
                3 => {
                    let c = self.expr(1);
                    let e = self.expr(2);
                    let name = self.fresh_name("c");
                    self.line(&format!("let {name} = 0;"));
                    self.line(&format!("if ({c}) {{"));
                    self.indent += 1;
                    self.line(&format!("{name} = {e};"));
                    self.indent -= 1;
                    if self.rng.chance(50) {
                        let e2 = self.expr(2);
                        self.line("} else {");
                        self.indent += 1;
                        self.line(&format!("{name} = {e2};"));
                        self.indent -= 1;
                    }
                    self.line("}");
                    self.vars.push(name);
                }
                _ => {
                    let bound = 1 + self.rng.below(4);
                    let i = self.fresh_name("i");
                    let acc = self.fresh_name("s");
                    let e = self.expr(2);
                    self.line(&format!("let {acc} = 0;"));
                    self.line(&format!("let {i} = 0;"));
                    self.line(&format!("while ({i} < {bound}) {{"));
                    self.indent += 1;
                    self.line(&format!("{acc} = {acc} + {e} + {i};"));
                    self.line(&format!("{i} = {i} + 1;"));
                    self.indent -= 1;
                    self.line("}");
                    self.vars.push(acc);
                }
            }
        }
    }

    /// One fork-join epoch: assignment spawns, optional loop spawns, a
    /// taskwait, then consumers of the children's results.
    fn epoch(&mut self, callees: &[String]) {
        let n_bound = 1 + self.rng.below(3);
        let mut targets = Vec::new();
        for _ in 0..n_bound {
            let callee = &callees[self.rng.below(callees.len() as u64) as usize];
            let arg = self.expr(1);
            let name = self.fresh_name("r");
            self.line(&format!("let {name} = 0;"));
            let queue = if self.rng.chance(40) {
                let q = self.expr(1);
                format!("queue(({q}) & 1) ")
            } else {
                String::new()
            };
            self.line(&format!("spawn {queue}{name} = {callee}(n - 1, {arg});"));
            targets.push(name);
        }
        // Optional dynamic tail: plain spawns in a bounded loop after every
        // bound spawn (ordinals stay statically known for the bound ones).
        let mut loop_spawned = None;
        if self.rng.chance(35) {
            let callee = &callees[self.rng.below(callees.len() as u64) as usize];
            let bound = 1 + self.rng.below(3);
            let i = self.fresh_name("k");
            self.line(&format!("let {i} = 0;"));
            self.line(&format!("while ({i} < {bound}) {{"));
            self.indent += 1;
            let arg = self.expr(1);
            self.line(&format!("spawn {callee}(n - 1, {arg});"));
            self.line(&format!("{i} = {i} + 1;"));
            self.indent -= 1;
            self.line("}");
            loop_spawned = Some((n_bound, bound));
        }
        self.line("taskwait;");
        self.vars.extend(targets.clone());
        // Consume results.
        for t in &targets {
            if self.rng.chance(60) {
                let name = self.fresh_name("u");
                self.line(&format!("let {name} = {t} * 2 + 1;"));
                self.vars.push(name);
            }
        }
        if let Some((base, count)) = loop_spawned {
            let name = self.fresh_name("d");
            let i = self.fresh_name("j");
            self.line(&format!("let {name} = 0;"));
            self.line(&format!("let {i} = 0;"));
            self.line(&format!("while ({i} < {count}) {{"));
            self.indent += 1;
            self.line(&format!(
                "{name} = {name} + child_result({base} + {i});"
            ));
            self.line(&format!("{i} = {i} + 1;"));
            self.indent -= 1;
            self.line("}");
            self.vars.push(name);
        }
    }

    fn task_body(&mut self, callees: &[String]) {
        self.line("if (n <= 0) {");
        self.indent += 1;
        let base = self.expr(2);
        self.line(&format!("return {base};"));
        self.indent -= 1;
        self.line("}");
        let filler = 1 + self.rng.below(3) as usize;
        self.pure_stmts(filler);
        let epochs = 1 + self.rng.below(3); // <= 3 taskwaits
        for _ in 0..epochs {
            self.epoch(callees);
            let filler = self.rng.below(2) as usize;
            self.pure_stmts(filler);
        }
        let result = self.expr(2);
        self.line(&format!("return {result};"));
    }
}

pub fn generate_program(seed: u64) -> String {
    let mut out = String::from("buffer buf;\n");
    let mut rng = Lcg(seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1));
    let n_tasks = 1 + rng.below(2) as usize;
    let callees: Vec<String> = (0..n_tasks).map(|i| format!("f{i}")).collect();
    // Root task: unique instance, so its buffer writes are ordered against
    // every child by spawn publication and join completion.
    let mut g = ProgramGen {
        rng: Lcg(rng.next()),
        vars: vec!["n".into(), "x".into()],
        src: String::new(),
        indent: 1,
        fresh: 0,
        effects: true,
    };
    g.task_body(&callees);
    out.push_str(&format!("task main(n, x) {{\n{}}}\n", g.src));
    for name in &callees {
        let mut g = ProgramGen {
            rng: Lcg(rng.next()),
            vars: vec!["n".into(), "x".into()],
            src: String::new(),
            indent: 1,
            fresh: 0,
            effects: false,
        };
        g.task_body(&callees);
        out.push_str(&format!("task {name}(n, x) {{\n{}}}\n", g.src));
    }
    out
}


/// Deterministic-engine work/span law: makespan * lanes >= T1 and
/// makespan >= T_inf.
pub fn check_makespan_bound(report: &RunReport, label: &str) {
    let lanes =
        (report.config.num_workers() * report.config.lanes_per_worker()) as u64;
    assert!(
        report.makespan.saturating_mul(lanes) >= report.work_span.total_work,
        "{label}: makespan {} * {lanes} lanes < T1 {}",
        report.makespan,
        report.work_span.total_work
    );
    assert!(
        report.makespan >= report.work_span.critical_path,
        "{label}: makespan {} < T_inf {}",
        report.makespan,
        report.work_span.critical_path
    );
    // Timeline coverage: each worker's segments partition [0, makespan).
    for w in 0..report.config.num_workers() as u32 {
        let total: u64 = report
            .timelines
            .iter()
            .filter(|s| s.worker == w)
            .map(|s| s.t_end - s.t_start)
            .sum();
        assert_eq!(
            total, report.makespan,
            "{label}: worker {w} timeline does not cover the makespan"
        );
    }
}
