//! Compiler equivalence fuzzing and the liveness path-enumeration oracle
//! (generator and oracle live in common/mod.rs).

mod common;

use common::{generate_program, oracle_live_in, random_cfg, Lcg};
use simt_forkjoin::compiler::liveness::liveness;
use simt_forkjoin::compiler::{compile_resolved, parse, resolve::resolve, CompileOptions, Interp};
use simt_forkjoin::sched::{run, FnRegistry, SpawnRequest};
use simt_forkjoin::{EngineKind, RuntimeConfig};

#[test]
fn liveness_matches_path_enumeration_on_500_random_cfgs() {
    let mut rng = Lcg(0x11ce_55ee_d001);
    for case in 0..500 {
        let cfg = random_cfg(&mut rng);
        let computed = liveness(&cfg);
        // Compare on blocks reachable from the entry; unreachable blocks
        // have no defined meet-over-paths solution.
        for b in simt_forkjoin::compiler::cfg::reachable_set(&cfg) {
            let expected = oracle_live_in(&cfg, b);
            assert_eq!(
                computed.live_in[b], expected,
                "case {case}, block {b}: dataflow != path enumeration"
            );
        }
    }
}

#[test]
fn generated_programs_match_reference_interpreter() {
    let total = 200;
    let mut ran = 0;
    for seed in 0..total {
        let source = generate_program(seed);
        let parsed = parse(&source)
            .unwrap_or_else(|e| panic!("seed {seed}: generator made unparseable source: {e}\n{source}"));
        let resolved = resolve(&parsed)
            .unwrap_or_else(|e| panic!("seed {seed}: resolve failed: {e}\n{source}"));
        let depth = 1 + (seed % 3) as i64;
        let root_args = vec![depth, (seed as i64) % 17 - 8];

        let interp = Interp::new(&resolved, vec![vec![0; 16]]);
        let expected = interp
            .run("main", &root_args)
            .unwrap_or_else(|e| panic!("seed {seed}: interpreter failed: {e}\n{source}"));

        let program = compile_resolved(&resolved, &CompileOptions::default())
            .unwrap_or_else(|e| panic!("seed {seed}: compile failed: {e}\n{source}"));

        for workers in [1usize, 4] {
            let registry = FnRegistry::from_program(&program);
            let fn_id = registry.lookup("main").unwrap();
            let config = RuntimeConfig {
                grid_size: workers,
                block_size: 32,
                warp_size: 32,
                max_tasks_per_warp: 1 << 12,
                max_child_tasks: 8,
                engine: EngineKind::Deterministic {
                    seed: seed ^ 0xabcd,
                },
                ..Default::default()
            };
            let report = run(
                registry,
                vec![vec![0; 16]],
                SpawnRequest::new(fn_id, root_args.clone()),
                &config,
            )
            .unwrap_or_else(|e| panic!("seed {seed}: runtime failed: {e}\n{source}"));
            assert_eq!(
                report.root_result,
                expected.result,
                "seed {seed} P={workers}: root result diverged\n{source}"
            );
            assert_eq!(
                report.final_buffers[0],
                expected.buffers[0],
                "seed {seed} P={workers}: buffers diverged\n{source}"
            );
            assert_eq!(report.outstanding_at_exit, 0);
        }

        // Every tenth program also exercises the concurrent engine.
        if seed % 10 == 0 {
            let registry = FnRegistry::from_program(&program);
            let fn_id = registry.lookup("main").unwrap();
            let config = RuntimeConfig {
                grid_size: 4,
                block_size: 32,
                warp_size: 32,
                max_tasks_per_warp: 1 << 12,
                max_child_tasks: 8,
                engine: EngineKind::Concurrent,
                ..Default::default()
            };
            let report = run(
                registry,
                vec![vec![0; 16]],
                SpawnRequest::new(fn_id, root_args.clone()),
                &config,
            )
            .unwrap();
            assert_eq!(report.root_result, expected.result, "seed {seed} concurrent");
            assert_eq!(report.final_buffers[0], expected.buffers[0]);
        }
        ran += 1;
    }
    assert_eq!(ran, total);
}
