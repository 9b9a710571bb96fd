//! End-to-end pipeline checks: DSL source -> compiler -> runtime, on both
//! engines, against the reference interpreter.

use simt_forkjoin::compiler::{compile_program, CompileOptions, Interp};
use simt_forkjoin::sched::{run, FnRegistry, SpawnRequest};
use simt_forkjoin::{EngineKind, QueueAlg, RuntimeConfig, SchedulerKind};

const FIB: &str = r#"
task fib(n) {
  if (n < 2) { return n; }
  let a = 0;
  let b = 0;
  spawn queue((n - 1) < 2 ? 1 : 0) a = fib(n - 1);
  spawn queue((n - 2) < 2 ? 1 : 0) b = fib(n - 2);
  taskwait queue(2);
  return a + b;
}
"#;

fn fib_config(workers: usize, queues: usize, engine: EngineKind) -> RuntimeConfig {
    RuntimeConfig {
        grid_size: workers,
        block_size: 32,
        warp_size: 32,
        max_tasks_per_warp: (1 << 16) / workers,
        max_child_tasks: 2,
        max_task_data_size: 64,
        num_queues: queues,
        engine,
        ..Default::default()
    }
}

fn run_fib(n: i64, workers: usize, queues: usize, engine: EngineKind) -> i64 {
    let program = compile_program(FIB, &CompileOptions::default()).unwrap();
    let registry = FnRegistry::from_program(&program);
    let fn_id = registry.lookup("fib").unwrap();
    let config = fib_config(workers, queues, engine);
    let report = run(registry, vec![], SpawnRequest::new(fn_id, vec![n]), &config).unwrap();
    assert_eq!(report.outstanding_at_exit, 0);
    report.root_result.expect("root finished")
}

#[test]
fn fib_deterministic_single_worker() {
    assert_eq!(run_fib(10, 1, 3, EngineKind::Deterministic { seed: 1 }), 55);
}

#[test]
fn fib_deterministic_many_workers() {
    assert_eq!(run_fib(12, 8, 3, EngineKind::Deterministic { seed: 7 }), 144);
}

#[test]
fn fib_concurrent() {
    assert_eq!(run_fib(14, 4, 3, EngineKind::Concurrent), 377);
}

#[test]
fn fib_single_queue_matches_reference_interpreter() {
    let program = simt_forkjoin::compiler::parse(&fib_without_queue_clauses()).unwrap();
    let resolved = simt_forkjoin::compiler::resolve::resolve(&program).unwrap();
    let expected = Interp::new(&resolved, vec![])
        .run("fib", &[11])
        .unwrap()
        .result
        .unwrap();
    let compiled =
        simt_forkjoin::compiler::compile_resolved(&resolved, &CompileOptions::default()).unwrap();
    let registry = FnRegistry::from_program(&compiled);
    let fn_id = registry.lookup("fib").unwrap();
    let config = fib_config(2, 1, EngineKind::Deterministic { seed: 3 });
    let report = run(registry, vec![], SpawnRequest::new(fn_id, vec![11]), &config).unwrap();
    assert_eq!(report.root_result, Some(expected));
}

#[test]
fn deterministic_runs_are_reproducible() {
    let program = compile_program(FIB, &CompileOptions::default()).unwrap();
    let registry = FnRegistry::from_program(&program);
    let fn_id = registry.lookup("fib").unwrap();
    let config = fib_config(4, 3, EngineKind::Deterministic { seed: 42 });
    let a = run(
        FnRegistry::from_program(&program),
        vec![],
        SpawnRequest::new(fn_id, vec![13]),
        &config,
    )
    .unwrap();
    let b = run(registry, vec![], SpawnRequest::new(fn_id, vec![13]), &config).unwrap();
    assert_eq!(
        simt_forkjoin::metrics::export::report_to_json(&a),
        simt_forkjoin::metrics::export::report_to_json(&b)
    );
    assert_eq!(
        simt_forkjoin::metrics::export::report_to_csv(&a),
        simt_forkjoin::metrics::export::report_to_csv(&b)
    );
}

fn fib_without_queue_clauses() -> String {
    FIB.replace("queue((n - 1) < 2 ? 1 : 0) ", "")
        .replace("queue((n - 2) < 2 ? 1 : 0) ", "")
        .replace(" queue(2)", "")
}

#[test]
fn global_queue_scheduler_matches() {
    let program = compile_program(&fib_without_queue_clauses(), &CompileOptions::default()).unwrap();
    let registry = FnRegistry::from_program(&program);
    let fn_id = registry.lookup("fib").unwrap();
    let mut config = fib_config(4, 1, EngineKind::Deterministic { seed: 5 });
    config.scheduler = SchedulerKind::GlobalQueue;
    let report = run(registry, vec![], SpawnRequest::new(fn_id, vec![12]), &config).unwrap();
    assert_eq!(report.root_result, Some(144));
}

#[test]
fn sequential_chase_lev_ablation_matches() {
    let program = compile_program(FIB, &CompileOptions::default()).unwrap();
    let registry = FnRegistry::from_program(&program);
    let fn_id = registry.lookup("fib").unwrap();
    let mut config = fib_config(4, 3, EngineKind::Deterministic { seed: 5 });
    config.queue_alg = QueueAlg::SequentialChaseLev;
    let report = run(registry, vec![], SpawnRequest::new(fn_id, vec![12]), &config).unwrap();
    assert_eq!(report.root_result, Some(144));
}

#[test]
fn makespan_respects_work_span_bound() {
    let program = compile_program(FIB, &CompileOptions::default()).unwrap();
    for workers in [1usize, 4] {
        let registry = FnRegistry::from_program(&program);
        let fn_id = registry.lookup("fib").unwrap();
        let config = fib_config(workers, 3, EngineKind::Deterministic { seed: 2 });
        let report = run(registry, vec![], SpawnRequest::new(fn_id, vec![12]), &config).unwrap();
        let lanes = (workers * 32) as u64;
        let lower = report.work_span.total_work.div_ceil(lanes);
        assert!(
            report.makespan >= lower.max(report.work_span.critical_path),
            "makespan {} below bound max({lower}, {})",
            report.makespan,
            report.work_span.critical_path
        );
    }
}
