//! Harness smoke checks: every shipped benchmark passes its oracle on a
//! small instance, on representative configurations.

use simt_forkjoin::bench::{bench_config, run_bench, BenchName, BenchSpec};
use simt_forkjoin::{EngineKind, QueueAlg, RuntimeConfig, SchedulerKind, WorkerKind};

fn det_config(workers: usize, queues: usize) -> RuntimeConfig {
    RuntimeConfig {
        grid_size: workers,
        block_size: 32,
        warp_size: 32,
        num_queues: queues,
        engine: EngineKind::Deterministic { seed: 9 },
        ..Default::default()
    }
}

fn check(spec: BenchSpec, base: RuntimeConfig) {
    let config = bench_config(&spec, &base, None);
    let outcome = run_bench(&spec, &config).unwrap();
    assert!(
        outcome.verdict.pass,
        "{} failed: {}",
        spec.name.as_str(),
        outcome.verdict
    );
    assert_eq!(outcome.report.outstanding_at_exit, 0);
}

#[test]
fn fib_small() {
    let mut spec = BenchSpec::new(BenchName::Fib);
    spec.n = 15;
    check(spec, det_config(4, 1));
}

#[test]
fn fib_epaq_mapping() {
    let mut spec = BenchSpec::new(BenchName::Fib);
    spec.n = 15;
    spec.cutoff = 5;
    check(spec, det_config(4, 3));
}

#[test]
fn nqueens_small() {
    let mut spec = BenchSpec::new(BenchName::Nqueens);
    spec.n = 6;
    spec.cutoff = 3;
    check(spec.clone(), det_config(2, 1));
    check(spec, det_config(2, 2));
}

#[test]
fn nqueens_assume_no_taskwait() {
    let mut spec = BenchSpec::new(BenchName::Nqueens);
    spec.n = 7;
    spec.cutoff = 4;
    let mut base = det_config(4, 1);
    base.assume_no_taskwait = true;
    check(spec, base);
}

#[test]
fn mergesort_small() {
    let mut spec = BenchSpec::new(BenchName::Mergesort);
    spec.n = 2000;
    spec.cutoff = 32;
    check(spec, det_config(4, 1));
}

#[test]
fn cilksort_small() {
    let mut spec = BenchSpec::new(BenchName::Cilksort);
    spec.n = 2000;
    spec.cutoff_sort = 16;
    spec.cutoff_merge = 64;
    check(spec.clone(), det_config(4, 1));
    check(spec, det_config(4, 3));
}

#[test]
fn ftree_small() {
    let mut spec = BenchSpec::new(BenchName::Ftree);
    spec.n = 8;
    spec.mem_ops = 4;
    spec.compute_iters = 8;
    check(spec, det_config(4, 1));
}

#[test]
fn ptree_small() {
    let mut spec = BenchSpec::new(BenchName::Ptree);
    spec.n = 8;
    spec.mem_ops = 2;
    spec.compute_iters = 4;
    check(spec, det_config(4, 1));
}

#[test]
fn trees_block_level() {
    let mut spec = BenchSpec::new(BenchName::Ftree);
    spec.n = 7;
    spec.mem_ops = 2;
    spec.compute_iters = 4;
    let mut base = det_config(4, 1);
    base.worker_kind = WorkerKind::BlockLevel;
    base.block_size = 64;
    check(spec, base);
}

#[test]
fn sequential_chase_lev_and_global_queue() {
    let mut spec = BenchSpec::new(BenchName::Fib);
    spec.n = 12;
    let mut seq = det_config(4, 1);
    seq.queue_alg = QueueAlg::SequentialChaseLev;
    check(spec.clone(), seq);
    let mut gq = det_config(4, 1);
    gq.scheduler = SchedulerKind::GlobalQueue;
    check(spec, gq);
}

#[test]
fn concurrent_engine_benchmarks() {
    let mut spec = BenchSpec::new(BenchName::Fib);
    spec.n = 16;
    let mut base = det_config(4, 1);
    base.engine = EngineKind::Concurrent;
    check(spec, base);

    let mut spec = BenchSpec::new(BenchName::Mergesort);
    spec.n = 3000;
    spec.cutoff = 64;
    let mut base = det_config(4, 1);
    base.engine = EngineKind::Concurrent;
    check(spec, base);
}
