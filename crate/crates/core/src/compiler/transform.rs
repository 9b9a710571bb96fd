//! Spill-set computation and the taskwait state-machine conversion.
//!
//! The k-th taskwait (lexical order) gets resumption state k+1. Code up to a
//! taskwait lands in the states that reach it; the taskwait itself becomes a
//! SuspendJoin terminator, every return becomes Finish, and accesses to
//! arguments and join-crossing locals are rewritten as task-data field
//! loads/stores. Assignment spawns record their static child ordinal so the
//! continuation state starts by loading child results into their fields.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::ast::Span;
use super::cfg::{BlockId, Cfg, CfgStmt, Term};
use super::ir::*;
use super::liveness::{
    block_references, dominators, liveness, reachable_from, Liveness, VarSet,
};
use super::resolve::{Builtin, RExpr, ResolvedFn, VarId};
use super::{CompileError, CompileOptions, Diagnostic};

/// Join-crossing locals: variables live immediately after a taskwait, plus
/// variables declared before a taskwait and referenced anywhere after it
/// (the conservative rule that keeps the generated switch well-formed).
pub fn spill_set(f: &ResolvedFn, cfg: &Cfg, live: &Liveness) -> VarSet {
    let mut spill = VarSet::new();
    let waits = cfg.taskwait_blocks();
    if waits.is_empty() {
        return spill;
    }
    let dom = dominators(cfg);
    let refs: Vec<VarSet> = (0..cfg.blocks.len())
        .map(|b| block_references(cfg, b))
        .collect();
    let mut decl_block: HashMap<VarId, BlockId> = HashMap::new();
    for (b, block) in cfg.blocks.iter().enumerate() {
        for stmt in &block.stmts {
            if let CfgStmt::Define { var, .. } = stmt {
                decl_block.entry(*var).or_insert(b);
            }
        }
    }
    let is_local = |v: VarId| !f.vars[v].is_param;

    for &t in &waits {
        let cont = cfg.successors(t)[0];
        // (i) live immediately after the wait
        for &v in &live.live_in[cont] {
            if is_local(v) {
                spill.insert(v);
            }
        }
        // (ii) declared before (dominating) the wait, referenced after it
        let reach = reachable_from(cfg, cont);
        for (&v, &db) in &decl_block {
            if is_local(v)
                && dom[t].contains(&db)
                && reach.iter().any(|&b| refs[b].contains(&v))
            {
                spill.insert(v);
            }
        }
    }
    spill
}

/// Layout: one field per argument, one per spilled local, a result field for
/// value-returning tasks.
pub fn build_layout(
    f: &ResolvedFn,
    spills: &VarSet,
) -> (TaskDataLayout, HashMap<VarId, usize>, Option<usize>) {
    let mut fields = Vec::new();
    let mut var_field = HashMap::new();
    for &p in &f.params {
        var_field.insert(p, fields.len());
        fields.push(LayoutField {
            name: f.vars[p].name.clone(),
            kind: FieldKind::Arg,
        });
    }
    for &v in spills {
        var_field.insert(v, fields.len());
        fields.push(LayoutField {
            name: f.vars[v].name.clone(),
            kind: FieldKind::Spill,
        });
    }
    let result_field = if f.returns_value {
        let mut name = "result".to_string();
        while fields.iter().any(|ex| ex.name == name) {
            name.push('_');
        }
        let idx = fields.len();
        fields.push(LayoutField {
            name,
            kind: FieldKind::Result,
        });
        Some(idx)
    } else {
        None
    };
    (TaskDataLayout { fields }, var_field, result_field)
}

const ORD_TOP: u64 = u64::MAX;

#[derive(Clone, Copy, PartialEq, Eq)]
struct OrdInterval {
    lo: u64,
    hi: u64,
}

impl OrdInterval {
    fn widen(self, other: OrdInterval) -> OrdInterval {
        OrdInterval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    fn bump(self, n: u64) -> OrdInterval {
        OrdInterval {
            lo: self.lo.saturating_add(n),
            hi: if self.hi == ORD_TOP {
                ORD_TOP
            } else {
                self.hi.saturating_add(n)
            },
        }
    }
}

/// First-join analysis result for one spawn site.
struct SpawnInfo {
    /// Static ordinal if uniquely determined.
    ordinal: Option<u64>,
    /// Taskwait indices that can join this spawn first.
    first_waits: BTreeSet<usize>,
    /// Some path returns before any taskwait.
    reaches_return: bool,
}

/// State-region analysis: blocks reachable from `entry` without crossing a
/// taskwait terminator.
fn region_of(cfg: &Cfg, entry: BlockId) -> Vec<BlockId> {
    let mut visited = vec![false; cfg.blocks.len()];
    let mut stack = vec![entry];
    while let Some(b) = stack.pop() {
        if visited[b] {
            continue;
        }
        visited[b] = true;
        if matches!(cfg.blocks[b].term, Term::Taskwait { .. }) {
            continue; // region exit; do not follow the continuation
        }
        stack.extend(cfg.successors(b));
    }
    (0..cfg.blocks.len()).filter(|&b| visited[b]).collect()
}

const FW_RETURN: usize = usize::MAX;

fn analyze_region(cfg: &Cfg, entry: BlockId) -> HashMap<(BlockId, usize), SpawnInfo> {
    let region = region_of(cfg, entry);
    let in_region = |b: BlockId| region.contains(&b);

    // Ordinal intervals at block entry.
    let mut at_entry: HashMap<BlockId, OrdInterval> = HashMap::new();
    at_entry.insert(entry, OrdInterval { lo: 0, hi: 0 });
    let cap = 2 * region.len() + 2;
    let mut stable = false;
    for round in 0..cap {
        let mut changed = false;
        for &b in &region {
            let Some(&start) = at_entry.get(&b) else {
                continue;
            };
            let spawns = cfg.blocks[b]
                .stmts
                .iter()
                .filter(|s| matches!(s, CfgStmt::Spawn { .. }))
                .count() as u64;
            let out = start.bump(spawns);
            if matches!(cfg.blocks[b].term, Term::Taskwait { .. }) {
                continue;
            }
            for s in cfg.successors(b) {
                if !in_region(s) {
                    continue;
                }
                let next = match at_entry.get(&s) {
                    Some(&prev) => prev.widen(out),
                    None => out,
                };
                if at_entry.get(&s) != Some(&next) {
                    at_entry.insert(s, next);
                    changed = true;
                }
            }
        }
        if !changed {
            stable = true;
            break;
        }
        // Still growing near the cap: a spawn sits on a cycle.
        if round + 2 >= cap {
            for v in at_entry.values_mut() {
                if v.lo != v.hi {
                    v.hi = ORD_TOP;
                }
            }
        }
    }
    if !stable {
        for v in at_entry.values_mut() {
            v.hi = ORD_TOP;
        }
    }

    // First-wait sets per block (which taskwait, or return, terminates the
    // epoch started at `entry` from this point on).
    let mut fw: HashMap<BlockId, BTreeSet<usize>> = HashMap::new();
    let mut changed = true;
    while changed {
        changed = false;
        for &b in &region {
            let mut set = BTreeSet::new();
            match &cfg.blocks[b].term {
                Term::Taskwait { index, .. } => {
                    set.insert(*index);
                }
                Term::Return { .. } => {
                    set.insert(FW_RETURN);
                }
                _ => {
                    for s in cfg.successors(b) {
                        if let Some(succ_set) = fw.get(&s) {
                            set.extend(succ_set.iter().copied());
                        }
                    }
                }
            }
            if fw.get(&b) != Some(&set) {
                fw.insert(b, set);
                changed = true;
            }
        }
    }

    let mut out = HashMap::new();
    for &b in &region {
        let Some(&start) = at_entry.get(&b) else {
            continue;
        };
        let mut seen = 0u64;
        for (i, stmt) in cfg.blocks[b].stmts.iter().enumerate() {
            if let CfgStmt::Spawn { .. } = stmt {
                let at = start.bump(seen);
                let waits = fw.get(&b).cloned().unwrap_or_default();
                out.insert(
                    (b, i),
                    SpawnInfo {
                        ordinal: if at.lo == at.hi && at.hi != ORD_TOP {
                            Some(at.lo)
                        } else {
                            None
                        },
                        reaches_return: waits.contains(&FW_RETURN),
                        first_waits: waits
                            .into_iter()
                            .filter(|&w| w != FW_RETURN)
                            .collect(),
                    },
                );
                seen += 1;
            }
        }
    }
    out
}

/// References to `target` between the spawn at (block, stmt) and the epoch's
/// taskwait: rejected statically.
#[allow(clippy::too_many_arguments)]
fn check_read_before_join(
    cfg: &Cfg,
    region: &[BlockId],
    block: BlockId,
    stmt_idx: usize,
    target: VarId,
    f: &ResolvedFn,
    span: Span,
    diags: &mut Vec<Diagnostic>,
) {
    use super::liveness::{stmt_use_def, term_uses};
    let mut offenders = false;
    // Rest of the spawn's own block.
    for s in &cfg.blocks[block].stmts[stmt_idx + 1..] {
        let (u, d) = stmt_use_def(s);
        if u.contains(&target) || d.contains(&target) {
            offenders = true;
        }
        if let CfgStmt::Spawn {
            target: Some(t), ..
        } = s
        {
            if *t == target {
                offenders = true;
            }
        }
    }
    if term_uses(&cfg.blocks[block].term).contains(&target) {
        offenders = true;
    }
    // Blocks reachable before the join (the region never crosses a wait).
    let mut visited: BTreeSet<BlockId> = BTreeSet::new();
    let mut stack: Vec<BlockId> = if matches!(cfg.blocks[block].term, Term::Taskwait { .. }) {
        Vec::new()
    } else {
        cfg.successors(block)
    };
    while let Some(b) = stack.pop() {
        if !visited.insert(b) || !region.contains(&b) {
            continue;
        }
        if block_references(cfg, b).contains(&target) {
            offenders = true;
        }
        if !matches!(cfg.blocks[b].term, Term::Taskwait { .. }) {
            stack.extend(cfg.successors(b));
        }
    }
    if offenders {
        diags.push(Diagnostic::new(
            span,
            format!(
                "in `{}`: `{}` is a spawn result and must not be referenced \
                 until the corresponding taskwait completes",
                f.name, f.vars[target].name
            ),
        ));
    }
}

struct StateBuilder<'a> {
    cfg: &'a Cfg,
    var_field: &'a HashMap<VarId, usize>,
    result_field: Option<usize>,
    binds: &'a HashMap<(BlockId, usize), u32>,
    blocks: Vec<IrBlock>,
    current: usize,
    sealed: bool,
    next_reg: Reg,
    local_reg: HashMap<VarId, Reg>,
    block_map: HashMap<BlockId, usize>,
    worklist: VecDeque<BlockId>,
}

impl<'a> StateBuilder<'a> {
    fn fresh(&mut self) -> Reg {
        let r = self.next_reg;
        self.next_reg += 1;
        r
    }

    fn new_block(&mut self) -> usize {
        self.blocks.push(IrBlock {
            instrs: Vec::new(),
            term: IrTerm::Finish { value: None },
        });
        self.blocks.len() - 1
    }

    fn emit(&mut self, instr: IrInstr) {
        if !self.sealed {
            self.blocks[self.current].instrs.push(instr);
        }
    }

    fn seal(&mut self, term: IrTerm) {
        if !self.sealed {
            self.blocks[self.current].term = term;
            self.sealed = true;
        }
    }

    fn switch_to(&mut self, block: usize) {
        self.current = block;
        self.sealed = false;
    }

    fn map_block(&mut self, src: BlockId) -> usize {
        if let Some(&b) = self.block_map.get(&src) {
            return b;
        }
        let b = self.new_block();
        self.block_map.insert(src, b);
        self.worklist.push_back(src);
        b
    }

    fn read_var(&mut self, v: VarId) -> Reg {
        if let Some(&field) = self.var_field.get(&v) {
            let dst = self.fresh();
            self.emit(IrInstr::LoadField { dst, field });
            dst
        } else {
            match self.local_reg.get(&v) {
                Some(&r) => r,
                None => {
                    // First touch is a read: registers start at zero.
                    let r = self.fresh();
                    self.local_reg.insert(v, r);
                    r
                }
            }
        }
    }

    fn write_var(&mut self, v: VarId, src: Reg) {
        if let Some(&field) = self.var_field.get(&v) {
            self.emit(IrInstr::StoreField { field, src });
        } else {
            let dst = match self.local_reg.get(&v) {
                Some(&r) => r,
                None => {
                    let r = self.fresh();
                    self.local_reg.insert(v, r);
                    r
                }
            };
            if dst != src {
                self.emit(IrInstr::Copy { dst, src });
            }
        }
    }

    fn eval(&mut self, e: &RExpr) -> Reg {
        match e {
            RExpr::Literal(v) => {
                let dst = self.fresh();
                self.emit(IrInstr::Const { dst, value: *v });
                dst
            }
            RExpr::Var(v) => self.read_var(*v),
            RExpr::Unary { op, operand } => {
                let src = self.eval(operand);
                let dst = self.fresh();
                self.emit(IrInstr::Unary {
                    op: *op,
                    dst,
                    src,
                });
                dst
            }
            RExpr::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs);
                let r = self.eval(rhs);
                let dst = self.fresh();
                self.emit(IrInstr::Binary {
                    op: *op,
                    dst,
                    lhs: l,
                    rhs: r,
                });
                dst
            }
            RExpr::Ternary {
                cond,
                then_val,
                else_val,
            } => {
                // Lowered to control flow: only the taken arm evaluates.
                let result = self.fresh();
                let c = self.eval(cond);
                let then_b = self.new_block();
                let else_b = self.new_block();
                let join_b = self.new_block();
                self.seal(IrTerm::Branch {
                    cond: c,
                    then_b,
                    else_b,
                });
                self.switch_to(then_b);
                let t = self.eval(then_val);
                self.emit(IrInstr::Copy { dst: result, src: t });
                self.seal(IrTerm::Jump(join_b));
                self.switch_to(else_b);
                let e2 = self.eval(else_val);
                self.emit(IrInstr::Copy {
                    dst: result,
                    src: e2,
                });
                self.seal(IrTerm::Jump(join_b));
                self.switch_to(join_b);
                result
            }
            RExpr::BuiltinCall {
                builtin,
                buffer,
                args,
            } => {
                let arg_regs: Vec<Reg> = args.iter().map(|a| self.eval(a)).collect();
                let dst = self.fresh();
                match builtin {
                    Builtin::Load => self.emit(IrInstr::LoadBuf {
                        dst,
                        buffer: buffer.unwrap(),
                        index: arg_regs[0],
                    }),
                    Builtin::Store => {
                        self.emit(IrInstr::StoreBuf {
                            buffer: buffer.unwrap(),
                            index: arg_regs[0],
                            value: arg_regs[1],
                        });
                        // A store expression yields the stored value.
                        self.emit(IrInstr::Copy {
                            dst,
                            src: arg_regs[1],
                        });
                    }
                    Builtin::AtomicAdd => self.emit(IrInstr::AtomicAdd {
                        dst,
                        buffer: buffer.unwrap(),
                        index: arg_regs[0],
                        value: arg_regs[1],
                    }),
                    Builtin::Min => self.emit(IrInstr::Intrinsic {
                        op: Intrinsic::Min,
                        dst,
                        args: arg_regs,
                    }),
                    Builtin::Max => self.emit(IrInstr::Intrinsic {
                        op: Intrinsic::Max,
                        dst,
                        args: arg_regs,
                    }),
                    Builtin::LcgNext => self.emit(IrInstr::Intrinsic {
                        op: Intrinsic::LcgNext,
                        dst,
                        args: arg_regs,
                    }),
                    Builtin::ChildResult => self.emit(IrInstr::ChildResult {
                        dst,
                        ordinal: arg_regs[0],
                    }),
                }
                dst
            }
            RExpr::HelperCall { helper, args } => {
                let arg_regs: Vec<Reg> = args.iter().map(|a| self.eval(a)).collect();
                let dst = self.fresh();
                self.emit(IrInstr::CallHelper {
                    dst,
                    helper: *helper,
                    args: arg_regs,
                });
                dst
            }
        }
    }

    fn translate_block(&mut self, src: BlockId) {
        for (i, stmt) in self.cfg.blocks[src].stmts.iter().enumerate() {
            match stmt {
                CfgStmt::Define { var, init } => {
                    let value = match init {
                        Some(e) => self.eval(e),
                        None => {
                            let dst = self.fresh();
                            self.emit(IrInstr::Const { dst, value: 0 });
                            dst
                        }
                    };
                    self.write_var(*var, value);
                }
                CfgStmt::Assign { var, value } => {
                    let value = self.eval(value);
                    self.write_var(*var, value);
                }
                CfgStmt::Eval { expr } => {
                    let _ = self.eval(expr);
                }
                CfgStmt::Spawn {
                    queue,
                    callee,
                    args,
                    ..
                } => {
                    let arg_regs: Vec<Reg> = args.iter().map(|a| self.eval(a)).collect();
                    let queue_reg = queue.as_ref().map(|q| self.eval(q));
                    let bind = self.binds.get(&(src, i)).copied();
                    self.emit(IrInstr::Spawn {
                        callee: *callee,
                        args: arg_regs,
                        queue: queue_reg,
                        bind,
                    });
                }
            }
        }
        match self.cfg.blocks[src].term.clone() {
            Term::Jump(t) => {
                let b = self.map_block(t);
                self.seal(IrTerm::Jump(b));
            }
            Term::Branch {
                cond,
                then_b,
                else_b,
            } => {
                let c = self.eval(&cond);
                let tb = self.map_block(then_b);
                let eb = self.map_block(else_b);
                self.seal(IrTerm::Branch {
                    cond: c,
                    then_b: tb,
                    else_b: eb,
                });
            }
            Term::Return { value, .. } => {
                let reg = value.map(|v| self.eval(&v));
                if let (Some(r), Some(field)) = (reg, self.result_field) {
                    self.emit(IrInstr::StoreField { field, src: r });
                }
                self.seal(IrTerm::Finish { value: reg });
            }
            Term::Taskwait { queue, index, .. } => {
                let q = queue.map(|e| self.eval(&e));
                self.seal(IrTerm::SuspendJoin {
                    next_state: index as u32 + 1,
                    queue: q,
                });
            }
        }
    }
}

/// Transform a task function into its state machine and data layout.
pub fn transform_to_state_machine(
    f: &ResolvedFn,
    cfg: &Cfg,
    opts: &CompileOptions,
) -> Result<(StateMachineIr, TaskDataLayout), CompileError> {
    let mut diags = Vec::new();
    let live = liveness(cfg);
    let spills = spill_set(f, cfg, &live);
    let (layout, var_field, result_field) = build_layout(f, &spills);

    let max_fields = opts.max_task_data_size / 8;
    if layout.fields.len() > max_fields {
        diags.push(Diagnostic::new(
            f.span,
            format!(
                "task data for `{}` needs {} bytes, exceeding the {}-byte limit",
                f.name,
                layout.size_bytes(),
                opts.max_task_data_size
            ),
        ));
    }

    // Per-state entry points: state 0 at the CFG entry, state k+1 at the
    // continuation of taskwait k.
    let waits = cfg.taskwait_blocks();
    let mut entries = vec![Cfg::ENTRY];
    for &t in &waits {
        entries.push(cfg.successors(t)[0]);
    }

    if opts.assume_no_taskwait && !waits.is_empty() {
        if let Term::Taskwait { span, .. } = cfg.blocks[waits[0]].term {
            diags.push(Diagnostic::new(
                span,
                format!(
                    "`{}` uses taskwait, which is not allowed with assume_no_taskwait",
                    f.name
                ),
            ));
        }
    }

    // Spawn analyses per state region; bindings are shared across states and
    // must agree.
    let mut spawn_binds: HashMap<(BlockId, usize), u32> = HashMap::new();
    let mut wait_bindings: HashMap<usize, BTreeMap<u32, VarId>> = HashMap::new();
    for &entry in &entries {
        let infos = analyze_region(cfg, entry);
        let region = region_of(cfg, entry);
        for ((block, stmt_idx), info) in infos {
            let CfgStmt::Spawn { target, span, .. } = &cfg.blocks[block].stmts[stmt_idx] else {
                continue;
            };
            if info.reaches_return && !opts.assume_no_taskwait {
                diags.push(Diagnostic::new(
                    *span,
                    format!(
                        "in `{}`: spawned child may outlive its parent; every spawn must be \
                         joined by a taskwait before returning (or compile with \
                         assume_no_taskwait)",
                        f.name
                    ),
                ));
            }
            let Some(target) = target else { continue };
            let Some(ordinal) = info.ordinal else {
                diags.push(Diagnostic::new(
                    *span,
                    format!(
                        "in `{}`: spawn result binding requires a statically unique child \
                         position; this spawn's position depends on control flow",
                        f.name
                    ),
                ));
                continue;
            };
            if info.first_waits.len() != 1 {
                diags.push(Diagnostic::new(
                    *span,
                    format!(
                        "in `{}`: spawn result binding requires a unique joining taskwait",
                        f.name
                    ),
                ));
                continue;
            }
            let wait = *info.first_waits.iter().next().unwrap();
            let ordinal = ordinal as u32;
            if let Some(prev) = spawn_binds.insert((block, stmt_idx), ordinal) {
                if prev != ordinal {
                    diags.push(Diagnostic::new(
                        *span,
                        format!(
                            "in `{}`: spawn result position differs between resumption paths",
                            f.name
                        ),
                    ));
                }
            }
            let slot = wait_bindings.entry(wait).or_default();
            if let Some(&prev_var) = slot.get(&ordinal) {
                if prev_var != *target {
                    diags.push(Diagnostic::new(
                        *span,
                        format!(
                            "in `{}`: conflicting result bindings for child {ordinal} at \
                             taskwait {wait}",
                            f.name
                        ),
                    ));
                }
            }
            slot.insert(ordinal, *target);
            check_read_before_join(cfg, &region, block, stmt_idx, *target, f, *span, &mut diags);
        }
    }

    if !diags.is_empty() {
        return Err(CompileError { diagnostics: diags });
    }

    let mut states = Vec::new();
    for (s, &entry) in entries.iter().enumerate() {
        let mut builder = StateBuilder {
            cfg,
            var_field: &var_field,
            result_field,
            binds: &spawn_binds,
            blocks: Vec::new(),
            current: 0,
            sealed: false,
            next_reg: 0,
            local_reg: HashMap::new(),
            block_map: HashMap::new(),
            worklist: VecDeque::new(),
        };
        let entry_block = builder.map_block(entry);
        debug_assert_eq!(entry_block, 0);

        // Continuation states load the joined children's results into their
        // fields first, as in the transformed listing.
        if s > 0 {
            builder.switch_to(entry_block);
            if let Some(bindings) = wait_bindings.get(&(s - 1)) {
                for (&ordinal, &var) in bindings {
                    if let Some(&field) = var_field.get(&var) {
                        let ord_reg = builder.fresh();
                        builder.emit(IrInstr::Const {
                            dst: ord_reg,
                            value: ordinal as i64,
                        });
                        let val = builder.fresh();
                        builder.emit(IrInstr::ChildResult {
                            dst: val,
                            ordinal: ord_reg,
                        });
                        builder.emit(IrInstr::StoreField { field, src: val });
                    }
                }
            }
        }

        // The continuation prefix stays at the top of the entry block; the
        // worklist appends each region block's translation after it.
        while let Some(src) = builder.worklist.pop_front() {
            let out = builder.block_map[&src];
            builder.switch_to(out);
            builder.translate_block(src);
        }

        states.push(StateBody {
            reg_count: builder.next_reg as usize,
            blocks: builder.blocks,
        });
    }

    Ok((
        StateMachineIr {
            name: f.name.clone(),
            arity: f.params.len(),
            returns_value: f.returns_value,
            layout: layout.clone(),
            states,
        },
        layout,
    ))
}

/// Compile a helper: same lowering, no fields, parameters in r0..arity.
pub fn compile_helper(f: &ResolvedFn, cfg: &Cfg) -> HelperIr {
    let empty_fields = HashMap::new();
    let empty_binds = HashMap::new();
    let mut builder = StateBuilder {
        cfg,
        var_field: &empty_fields,
        result_field: None,
        binds: &empty_binds,
        blocks: Vec::new(),
        current: 0,
        sealed: false,
        next_reg: f.params.len() as Reg,
        local_reg: f
            .params
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i as Reg))
            .collect(),
        block_map: HashMap::new(),
        worklist: VecDeque::new(),
    };
    builder.map_block(Cfg::ENTRY);
    while let Some(src) = builder.worklist.pop_front() {
        let out = builder.block_map[&src];
        builder.switch_to(out);
        builder.translate_block(src);
    }
    HelperIr {
        name: f.name.clone(),
        arity: f.params.len(),
        returns_value: f.returns_value,
        reg_count: builder.next_reg as usize,
        blocks: builder.blocks,
    }
}
