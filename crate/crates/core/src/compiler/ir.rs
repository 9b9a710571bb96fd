//! Interpretable state-machine IR and the per-function task-data layout.
//!
//! Each task function compiles to numbered states (0 = entry; one extra state
//! per taskwait). A state holds basic blocks over a register machine whose
//! spilled-variable and argument accesses are loads/stores on task-data
//! fields. The text form printed by [`StateMachineIr::to_text`] is stable and
//! golden-tested.

use super::ast::{BinOp, UnOp};
use super::resolve::{BufId, HelperIdx, TaskIdx};

pub type Reg = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Arg,
    Spill,
    Result,
}

#[derive(Debug, Clone)]
pub struct LayoutField {
    pub name: String,
    pub kind: FieldKind,
}

/// Ordered 64-bit fields of one task's record: arguments, spilled locals,
/// then the result field for value-returning tasks.
#[derive(Debug, Clone, Default)]
pub struct TaskDataLayout {
    pub fields: Vec<LayoutField>,
}

impl TaskDataLayout {
    pub fn size_bytes(&self) -> usize {
        self.fields.len() * 8
    }

    pub fn field_names(&self) -> Vec<&str> {
        self.fields.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn result_field(&self) -> Option<usize> {
        self.fields.iter().position(|f| f.kind == FieldKind::Result)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intrinsic {
    Min,
    Max,
    LcgNext,
}

impl Intrinsic {
    pub fn name(self) -> &'static str {
        match self {
            Intrinsic::Min => "min",
            Intrinsic::Max => "max",
            Intrinsic::LcgNext => "lcg_next",
        }
    }
}

#[derive(Debug, Clone)]
pub enum IrInstr {
    Const { dst: Reg, value: i64 },
    Copy { dst: Reg, src: Reg },
    Unary { op: UnOp, dst: Reg, src: Reg },
    Binary { op: BinOp, dst: Reg, lhs: Reg, rhs: Reg },
    LoadField { dst: Reg, field: usize },
    StoreField { field: usize, src: Reg },
    LoadBuf { dst: Reg, buffer: BufId, index: Reg },
    StoreBuf { buffer: BufId, index: Reg, value: Reg },
    AtomicAdd { dst: Reg, buffer: BufId, index: Reg, value: Reg },
    Intrinsic { op: Intrinsic, dst: Reg, args: Vec<Reg> },
    /// Child result of the epoch just joined, by dynamic ordinal.
    ChildResult { dst: Reg, ordinal: Reg },
    CallHelper { dst: Reg, helper: HelperIdx, args: Vec<Reg> },
    /// Arguments are evaluated into registers before the spawn (copied at
    /// spawn time). `bind` is the static child ordinal of an assignment
    /// spawn; the continuation state loads it back into the target field.
    Spawn {
        callee: TaskIdx,
        args: Vec<Reg>,
        queue: Option<Reg>,
        bind: Option<u32>,
    },
}

#[derive(Debug, Clone)]
pub enum IrTerm {
    Jump(usize),
    Branch { cond: Reg, then_b: usize, else_b: usize },
    /// Task: route the value and finish. Helper: return.
    Finish { value: Option<Reg> },
    SuspendJoin { next_state: u32, queue: Option<Reg> },
}

#[derive(Debug, Clone)]
pub struct IrBlock {
    pub instrs: Vec<IrInstr>,
    pub term: IrTerm,
}

#[derive(Debug, Clone)]
pub struct StateBody {
    pub blocks: Vec<IrBlock>,
    pub reg_count: usize,
}

#[derive(Debug, Clone)]
pub struct StateMachineIr {
    pub name: String,
    pub arity: usize,
    pub returns_value: bool,
    pub layout: TaskDataLayout,
    pub states: Vec<StateBody>,
}

#[derive(Debug, Clone)]
pub struct HelperIr {
    pub name: String,
    pub arity: usize,
    pub returns_value: bool,
    pub blocks: Vec<IrBlock>,
    pub reg_count: usize,
}

/// A compiled program: the function registry plus buffer declarations.
#[derive(Debug, Clone)]
pub struct Program {
    pub tasks: Vec<StateMachineIr>,
    pub helpers: Vec<HelperIr>,
    pub buffers: Vec<String>,
    pub has_taskwait: bool,
    pub uses_queue_clauses: bool,
}

impl Program {
    pub fn task_index(&self, name: &str) -> Option<TaskIdx> {
        self.tasks.iter().position(|t| t.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for buffer in &self.buffers {
            out.push_str(&format!("buffer {buffer}\n"));
        }
        for task in &self.tasks {
            out.push_str(&task.to_text(self));
        }
        for helper in &self.helpers {
            out.push_str(&helper.to_text(self));
        }
        out
    }
}

fn fmt_block(out: &mut String, block: &IrBlock, index: usize, program: &Program) {
    out.push_str(&format!("  b{index}:\n"));
    for instr in &block.instrs {
        out.push_str("    ");
        out.push_str(&fmt_instr(instr, program));
        out.push('\n');
    }
    out.push_str("    ");
    out.push_str(&fmt_term(&block.term));
    out.push('\n');
}

fn fmt_instr(instr: &IrInstr, program: &Program) -> String {
    match instr {
        IrInstr::Const { dst, value } => format!("r{dst} = const {value}"),
        IrInstr::Copy { dst, src } => format!("r{dst} = copy r{src}"),
        IrInstr::Unary { op, dst, src } => format!("r{dst} = {} r{src}", op.name()),
        IrInstr::Binary { op, dst, lhs, rhs } => {
            format!("r{dst} = {} r{lhs}, r{rhs}", op.name())
        }
        IrInstr::LoadField { dst, field } => format!("r{dst} = field[{field}]"),
        IrInstr::StoreField { field, src } => format!("field[{field}] = r{src}"),
        IrInstr::LoadBuf { dst, buffer, index } => {
            format!("r{dst} = load {}, r{index}", program.buffers[*buffer])
        }
        IrInstr::StoreBuf {
            buffer,
            index,
            value,
        } => format!("store {}, r{index}, r{value}", program.buffers[*buffer]),
        IrInstr::AtomicAdd {
            dst,
            buffer,
            index,
            value,
        } => format!(
            "r{dst} = atomic_add {}, r{index}, r{value}",
            program.buffers[*buffer]
        ),
        IrInstr::Intrinsic { op, dst, args } => {
            let args: Vec<String> = args.iter().map(|r| format!("r{r}")).collect();
            format!("r{dst} = {} {}", op.name(), args.join(", "))
        }
        IrInstr::ChildResult { dst, ordinal } => format!("r{dst} = child r{ordinal}"),
        IrInstr::CallHelper { dst, helper, args } => {
            let args: Vec<String> = args.iter().map(|r| format!("r{r}")).collect();
            format!(
                "r{dst} = call {}({})",
                program.helpers[*helper].name,
                args.join(", ")
            )
        }
        IrInstr::Spawn {
            callee,
            args,
            queue,
            bind,
        } => {
            let args: Vec<String> = args.iter().map(|r| format!("r{r}")).collect();
            let mut s = format!("spawn {}({})", program.tasks[*callee].name, args.join(", "));
            if let Some(q) = queue {
                s.push_str(&format!(" queue r{q}"));
            }
            if let Some(o) = bind {
                s.push_str(&format!(" bind {o}"));
            }
            s
        }
    }
}

fn fmt_term(term: &IrTerm) -> String {
    match term {
        IrTerm::Jump(b) => format!("jump b{b}"),
        IrTerm::Branch {
            cond,
            then_b,
            else_b,
        } => format!("br r{cond}, b{then_b}, b{else_b}"),
        IrTerm::Finish { value: Some(r) } => format!("finish r{r}"),
        IrTerm::Finish { value: None } => "finish".to_string(),
        IrTerm::SuspendJoin {
            next_state,
            queue: Some(q),
        } => format!("suspend state {next_state} queue r{q}"),
        IrTerm::SuspendJoin {
            next_state,
            queue: None,
        } => format!("suspend state {next_state}"),
    }
}

impl StateMachineIr {
    pub fn to_text(&self, program: &Program) -> String {
        let mut out = String::new();
        let params: Vec<&str> = self
            .layout
            .fields
            .iter()
            .take(self.arity)
            .map(|f| f.name.as_str())
            .collect();
        out.push_str(&format!(
            "task {}({}){}\n",
            self.name,
            params.join(", "),
            if self.returns_value {
                " returns value"
            } else {
                ""
            }
        ));
        let fields: Vec<String> = self
            .layout
            .fields
            .iter()
            .enumerate()
            .map(|(i, f)| format!("{}@{i}", f.name))
            .collect();
        out.push_str(&format!(
            "layout {{{}}} size {}\n",
            fields.join(", "),
            self.layout.size_bytes()
        ));
        for (s, state) in self.states.iter().enumerate() {
            out.push_str(&format!("state {s}:\n"));
            for (i, block) in state.blocks.iter().enumerate() {
                fmt_block(&mut out, block, i, program);
            }
        }
        out
    }
}

impl HelperIr {
    pub fn to_text(&self, program: &Program) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "fn {}/{}{}\n",
            self.name,
            self.arity,
            if self.returns_value {
                " returns value"
            } else {
                ""
            }
        ));
        for (i, block) in self.blocks.iter().enumerate() {
            fmt_block(&mut out, block, i, program);
        }
        out
    }
}
