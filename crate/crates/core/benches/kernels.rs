use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use subspec::exec;
use subspec::fields::FieldFamily;
use subspec::functionals::{self, inequalities::Inequality};
use subspec::metric::{build_moves, cc_distances, sample_sources};
use subspec::{apply_x, DiscreteDomain, GridFunction};

fn pools() -> Vec<(&'static str, usize)> {
    vec![("one_thread", 1), ("pool", 0)]
}

fn kernels(c: &mut Criterion) {
    let dom = DiscreteDomain::uniform(FieldFamily::grushin(2, 1).unwrap(), 256).unwrap();
    let u = GridFunction::from_fn(&dom, |x| (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]) * (1.0 + x[0]));
    let mut g = c.benchmark_group("grushin_256");
    for (name, threads) in pools() {
        g.bench_function(BenchmarkId::new("apply_x", name), |b| {
            exec::with_threads(threads, || b.iter(|| black_box(apply_x(&u))))
        });
        g.bench_function(BenchmarkId::new("grad_g_p3", name), |b| {
            exec::with_threads(threads, || b.iter(|| black_box(functionals::grad_g(&u, 3.0, 0.0).unwrap())))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("inequalities");
    g.sample_size(10);
    for (name, threads) in pools() {
        g.bench_function(BenchmarkId::new("fuzz_5_1_1e5", name), |b| {
            exec::with_threads(threads, || b.iter(|| black_box(functionals::inequalities::fuzz(Inequality::I51, 1.5, 100_000, 1).unwrap())))
        });
    }
    g.finish();

    let small = DiscreteDomain::uniform(FieldFamily::grushin(2, 1).unwrap(), 96).unwrap();
    let moves = build_moves(&small, 3).unwrap();
    let sources = sample_sources(&small, 8);
    let mut g = c.benchmark_group("metric_96");
    g.sample_size(10);
    for (name, threads) in pools() {
        g.bench_function(BenchmarkId::new("build_moves", name), |b| {
            exec::with_threads(threads, || b.iter(|| black_box(build_moves(&small, 3).unwrap())))
        });
        g.bench_function(BenchmarkId::new("dijkstra_8_sources", name), |b| {
            exec::with_threads(threads, || b.iter(|| black_box(cc_distances(&moves, &sources).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
