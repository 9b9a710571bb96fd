//! Backward liveness dataflow on the CFG, plus the dominator and
//! reachability queries the spill rule needs.

use std::collections::BTreeSet;

use super::cfg::{BlockId, Cfg, CfgStmt, Term};
use super::resolve::{RExpr, VarId};

pub type VarSet = BTreeSet<VarId>;

pub fn expr_vars(expr: &RExpr, out: &mut VarSet) {
    match expr {
        RExpr::Literal(_) => {}
        RExpr::Var(v) => {
            out.insert(*v);
        }
        RExpr::Unary { operand, .. } => expr_vars(operand, out),
        RExpr::Binary { lhs, rhs, .. } => {
            expr_vars(lhs, out);
            expr_vars(rhs, out);
        }
        RExpr::Ternary {
            cond,
            then_val,
            else_val,
        } => {
            expr_vars(cond, out);
            expr_vars(then_val, out);
            expr_vars(else_val, out);
        }
        RExpr::BuiltinCall { args, .. } | RExpr::HelperCall { args, .. } => {
            for a in args {
                expr_vars(a, out);
            }
        }
    }
}

/// (use, def) of one statement.
pub fn stmt_use_def(stmt: &CfgStmt) -> (VarSet, VarSet) {
    let mut uses = VarSet::new();
    let mut defs = VarSet::new();
    match stmt {
        CfgStmt::Define { var, init } => {
            if let Some(e) = init {
                expr_vars(e, &mut uses);
            }
            defs.insert(*var);
        }
        CfgStmt::Assign { var, value } => {
            expr_vars(value, &mut uses);
            defs.insert(*var);
        }
        CfgStmt::Eval { expr } => expr_vars(expr, &mut uses),
        CfgStmt::Spawn {
            queue,
            target,
            args,
            ..
        } => {
            for a in args {
                expr_vars(a, &mut uses);
            }
            if let Some(q) = queue {
                expr_vars(q, &mut uses);
            }
            // The target is written by the join machinery at the
            // continuation, not here; treating it as a def would erase its
            // liveness across the wait.
            let _ = target;
        }
    }
    (uses, defs)
}

pub fn term_uses(term: &Term) -> VarSet {
    let mut uses = VarSet::new();
    match term {
        Term::Jump(_) => {}
        Term::Branch { cond, .. } => expr_vars(cond, &mut uses),
        Term::Return { value, .. } => {
            if let Some(e) = value {
                expr_vars(e, &mut uses);
            }
        }
        Term::Taskwait { queue, .. } => {
            if let Some(e) = queue {
                expr_vars(e, &mut uses);
            }
        }
    }
    uses
}

/// Per-block upward-exposed uses and defs.
fn block_use_def(cfg: &Cfg, b: BlockId) -> (VarSet, VarSet) {
    let mut uses = VarSet::new();
    let mut defs = VarSet::new();
    for stmt in &cfg.blocks[b].stmts {
        let (u, d) = stmt_use_def(stmt);
        for v in u {
            if !defs.contains(&v) {
                uses.insert(v);
            }
        }
        defs.extend(d);
    }
    for v in term_uses(&cfg.blocks[b].term) {
        if !defs.contains(&v) {
            uses.insert(v);
        }
    }
    (uses, defs)
}

#[derive(Debug, Clone)]
pub struct Liveness {
    pub live_in: Vec<VarSet>,
    pub live_out: Vec<VarSet>,
}

/// Round-robin fixpoint over reverse postorder:
///   live-out(B) = union of live-in(succ)
///   live-in(B)  = use(B) | (live-out(B) - def(B))
pub fn liveness(cfg: &Cfg) -> Liveness {
    let n = cfg.blocks.len();
    let use_def: Vec<(VarSet, VarSet)> = (0..n).map(|b| block_use_def(cfg, b)).collect();
    let order = cfg.reverse_postorder();

    let mut live_in = vec![VarSet::new(); n];
    let mut live_out = vec![VarSet::new(); n];
    let mut changed = true;
    while changed {
        changed = false;
        for &b in order.iter().rev() {
            let mut new_out = VarSet::new();
            for s in cfg.successors(b) {
                new_out.extend(live_in[s].iter().copied());
            }
            let (uses, defs) = &use_def[b];
            let mut new_in = uses.clone();
            new_in.extend(new_out.difference(defs).copied());
            if new_out != live_out[b] {
                live_out[b] = new_out;
                changed = true;
            }
            if new_in != live_in[b] {
                live_in[b] = new_in;
                changed = true;
            }
        }
    }
    Liveness { live_in, live_out }
}

/// Iterative dominator sets (small CFGs; the O(n^2) set version is fine).
pub fn dominators(cfg: &Cfg) -> Vec<BTreeSet<BlockId>> {
    let n = cfg.blocks.len();
    let mut preds: Vec<Vec<BlockId>> = vec![Vec::new(); n];
    for b in 0..n {
        for s in cfg.successors(b) {
            preds[s].push(b);
        }
    }
    let all: BTreeSet<BlockId> = (0..n).collect();
    let mut dom: Vec<BTreeSet<BlockId>> = (0..n).map(|_| all.clone()).collect();
    dom[Cfg::ENTRY] = BTreeSet::from([Cfg::ENTRY]);
    let order = cfg.reverse_postorder();
    let mut changed = true;
    while changed {
        changed = false;
        for &b in &order {
            if b == Cfg::ENTRY {
                continue;
            }
            let mut new_dom: Option<BTreeSet<BlockId>> = None;
            for &p in &preds[b] {
                new_dom = Some(match new_dom {
                    None => dom[p].clone(),
                    Some(acc) => acc.intersection(&dom[p]).copied().collect(),
                });
            }
            let mut new_dom = new_dom.unwrap_or_default();
            new_dom.insert(b);
            if new_dom != dom[b] {
                dom[b] = new_dom;
                changed = true;
            }
        }
    }
    dom
}

/// All variables referenced (read or written) per block.
pub fn block_references(cfg: &Cfg, b: BlockId) -> VarSet {
    let mut refs = VarSet::new();
    for stmt in &cfg.blocks[b].stmts {
        let (u, d) = stmt_use_def(stmt);
        refs.extend(u);
        refs.extend(d);
        if let CfgStmt::Spawn {
            target: Some(t), ..
        } = stmt
        {
            refs.insert(*t);
        }
    }
    refs.extend(term_uses(&cfg.blocks[b].term));
    refs
}

/// Blocks reachable from `from` (inclusive).
pub fn reachable_from(cfg: &Cfg, from: BlockId) -> Vec<BlockId> {
    let mut visited = vec![false; cfg.blocks.len()];
    let mut stack = vec![from];
    while let Some(b) = stack.pop() {
        if visited[b] {
            continue;
        }
        visited[b] = true;
        stack.extend(cfg.successors(b));
    }
    (0..cfg.blocks.len()).filter(|&b| visited[b]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::cfg::lower_to_cfg;
    use crate::compiler::parser::parse;
    use crate::compiler::resolve::resolve;

    fn analyzed(src: &str) -> (Cfg, Liveness) {
        let resolved = resolve(&parse(src).unwrap()).unwrap();
        let f = resolved
            .tasks
            .first()
            .or_else(|| resolved.helpers.first())
            .unwrap();
        let cfg = lower_to_cfg(f).unwrap();
        let l = liveness(&cfg);
        (cfg, l)
    }

    #[test]
    fn value_live_between_def_and_use() {
        // Block 0 contains both def and use: `a` is not live into the block.
        let (_, l) = analyzed("fn f() { let a = 1; return a; }");
        assert!(l.live_in[0].is_empty());
    }

    #[test]
    fn dead_def_is_not_live_afterward() {
        let src = "fn f(x) { let unused = x + 1; let y = 2; return y; }";
        let (cfg, l) = analyzed(src);
        // Nothing is live out of the single block.
        assert!(l.live_out[0].is_empty());
        let _ = cfg;
    }

    #[test]
    fn branch_merges_liveness() {
        // `a` is used only on the then-path, `b` only after the join; both
        // must be live into the branch head.
        let src = "fn f(c) { let a = 1; let b = 2; if (c) { b = a; } return b; }";
        let (_, l) = analyzed(src);
        // Block 0 defines a and b; live_out must contain both (a feeds the
        // then-branch, b feeds the join).
        assert!(l.live_out[0].len() == 2);
    }

    #[test]
    fn loop_carries_liveness_around_back_edge() {
        let src = "fn f(n) { let s = 0; let i = 0; while (i < n) { s = s + i; i = i + 1; } return s; }";
        let (cfg, l) = analyzed(src);
        // The condition block keeps s, i, n live around the loop.
        let cond_block = 1;
        assert_eq!(l.live_in[cond_block].len(), 3);
        let _ = cfg;
    }

    #[test]
    fn entry_dominates_everything() {
        let src = "fn f(c) { let a = 0; if (c) { a = 1; } else { a = 2; } return a; }";
        let (cfg, _) = analyzed(src);
        let dom = dominators(&cfg);
        for d in &dom {
            assert!(d.contains(&Cfg::ENTRY));
        }
        // Neither branch arm dominates the join.
        let join = 3;
        assert!(!dom[join].contains(&1) && !dom[join].contains(&2));
    }
}
