use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spheremin_core::{expand_kernel, gauss_gegenbauer_rule, Kernel};
use std::hint::black_box;

fn gauss_rule(c: &mut Criterion) {
    let mut group = c.benchmark_group("gauss_gegenbauer_rule");
    for m in [32, 64, 128] {
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| gauss_gegenbauer_rule(black_box(m), 0.5).unwrap())
        });
    }
    group.finish();
}

fn expansion(c: &mut Criterion) {
    let mut group = c.benchmark_group("expand_kernel");
    let kernels = [("poly", Kernel::polynomial(vec![0.1, 0.0, 1.0, 0.3]).unwrap()), ("pframe3", Kernel::pframe(3.0).unwrap())];
    for (name, k) in &kernels {
        group.bench_function(*name, |b| b.iter(|| expand_kernel(black_box(k), 3, 16, 64).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, gauss_rule, expansion);
criterion_main!(benches);
