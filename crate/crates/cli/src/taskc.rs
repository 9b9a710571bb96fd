//! Task DSL compiler driver: check a source file and emit IR text, the
//! task-data layout table, or the control-flow graphs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use simt_forkjoin::compiler::{cfg_text, compile_program, layout_text, CompileOptions};

#[derive(Parser)]
#[command(name = "taskc", about = "Compile task DSL sources to state-machine IR")]
struct Args {
    /// Source file (.gt).
    file: PathBuf,

    /// What to print on success.
    #[arg(long, value_parser = ["ir", "layout", "cfg"], default_value = "ir")]
    emit: String,

    /// Check only; print nothing on success.
    #[arg(long)]
    check: bool,

    /// Maximum task-data record size in bytes.
    #[arg(long, default_value_t = 256)]
    max_task_data_size: usize,

    /// Compile for programs that never execute taskwait.
    #[arg(long)]
    assume_no_taskwait: bool,

    /// Compile for block-level workers (rejects queue clauses).
    #[arg(long)]
    block_level: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let source = match std::fs::read_to_string(&args.file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("taskc: cannot read {}: {e}", args.file.display());
            return ExitCode::FAILURE;
        }
    };
    let opts = CompileOptions {
        max_task_data_size: args.max_task_data_size,
        assume_no_taskwait: args.assume_no_taskwait,
        block_level: args.block_level,
    };

    if args.emit == "cfg" && !args.check {
        return match cfg_text(&source) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::FAILURE
            }
        };
    }

    match compile_program(&source, &opts) {
        Ok(program) => {
            if !args.check {
                match args.emit.as_str() {
                    "ir" => print!("{}", program.to_text()),
                    "layout" => print!("{}", layout_text(&program)),
                    _ => {}
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
