//! Compiler benchmarks: full pipeline on the shipped sources.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use simt_forkjoin::compiler::{compile_program, CompileOptions};

fn bench_compile(c: &mut Criterion) {
    let mut group = c.benchmark_group("compile");
    for (name, src) in [
        ("fib", simt_forkjoin::bench::FIB_SRC),
        ("cilksort", simt_forkjoin::bench::CILKSORT_SRC),
        ("nqueens", simt_forkjoin::bench::NQUEENS_SRC),
    ] {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| compile_program(src, &CompileOptions::default()).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_compile);
criterion_main!(benches);
