use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dkhac::bandwidths::{joint_plugin, PluginOptions};
use dkhac::{classical_hac, dk_hac, LagKernel, SmoothingPlan, TimeKernel};
use lrv_bench::ar1_scores;
use std::hint::black_box;

fn bench_dk_hac(c: &mut Criterion) {
    let mut g = c.benchmark_group("dk_hac");
    for t in [200usize, 800, 3200] {
        let v = ar1_scores(t, 2, 1);
        let plan = SmoothingPlan::new(0.1, 0.4, SmoothingPlan::default_block_len(t));
        g.bench_with_input(BenchmarkId::from_parameter(t), &v, |b, v| {
            b.iter(|| dk_hac(black_box(v), &plan, LagKernel::QuadraticSpectral, TimeKernel::Parabolic).unwrap())
        });
    }
    g.finish();
}

fn bench_classical(c: &mut Criterion) {
    let mut g = c.benchmark_group("classical_hac");
    for t in [200usize, 800, 3200] {
        let v = ar1_scores(t, 2, 2);
        g.bench_with_input(BenchmarkId::from_parameter(t), &v, |b, v| {
            b.iter(|| classical_hac(black_box(v), 0.1, LagKernel::QuadraticSpectral, true).unwrap())
        });
    }
    g.finish();
}

fn bench_plugin(c: &mut Criterion) {
    let mut g = c.benchmark_group("joint_plugin");
    let opts = PluginOptions::default();
    for t in [200usize, 800, 3200] {
        let v = ar1_scores(t, 2, 3);
        g.bench_with_input(BenchmarkId::from_parameter(t), &v, |b, v| b.iter(|| joint_plugin(black_box(v), &opts).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_dk_hac, bench_classical, bench_plugin);
criterion_main!(benches);
