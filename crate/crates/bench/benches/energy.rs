use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spheremin_core::measures::probe_grid;
use spheremin_core::optimizer::energy_gradient;
use spheremin_core::{discrete_energy, Kernel, SphericalConfig};
use std::hint::black_box;

fn config(n: usize) -> SphericalConfig {
    SphericalConfig::uniform(3, probe_grid(3, n, 7)).unwrap()
}

fn energy(c: &mut Criterion) {
    let k = Kernel::pframe(3.0).unwrap();
    let mut group = c.benchmark_group("discrete_energy");
    for n in [20, 100, 400] {
        let cfg = config(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            b.iter(|| discrete_energy(black_box(cfg), &k))
        });
    }
    group.finish();
}

fn gradient(c: &mut Criterion) {
    let k = Kernel::pframe(3.0).unwrap();
    let mut group = c.benchmark_group("energy_gradient");
    for n in [20, 100, 400] {
        let cfg = config(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            b.iter(|| energy_gradient(black_box(cfg), &k))
        });
    }
    group.finish();
}

criterion_group!(benches, energy, gradient);
criterion_main!(benches);
