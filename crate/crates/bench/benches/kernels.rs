use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tiara_bench::fixture;
use tiara_core::diffusion::{self, DiffusionConfig, DiffusionState};
use tiara_core::sparse::{self, extract_block};

fn spmm(c: &mut Criterion) {
    let mut group = c.benchmark_group("spmm");
    for n in [1_000, 4_000] {
        let seq = fixture(n, n / 2, 1);
        let a = sparse::row_normalize(seq.snapshot(0)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| sparse::spmm(black_box(a), black_box(a)).unwrap())
        });
    }
    group.finish();
}

fn power_iteration(c: &mut Criterion) {
    let mut group = c.benchmark_group("power_iteration");
    let cfg = DiffusionConfig::default();
    for n_t in [250, 500] {
        let seq = fixture(10_000, n_t, 1);
        let act = seq.activated(0);
        let a = sparse::row_normalize(seq.snapshot(0)).unwrap();
        let block = extract_block(&a, act, act).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n_t), &block, |b, block| {
            b.iter(|| diffusion::power_iteration(black_box(block), &cfg))
        });
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.sample_size(10);
    let cfg = DiffusionConfig::default();
    for n in [10_000, 20_000] {
        let seq = fixture(n, 500, 2);
        let (_, warm) = diffusion::step(
            seq.snapshot(0),
            seq.activated(0),
            DiffusionState::new(n),
            &cfg,
        )
        .unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &warm, |b, warm| {
            b.iter(|| {
                diffusion::step(seq.snapshot(1), seq.activated(1), warm.clone(), &cfg).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, spmm, power_iteration, step);
criterion_main!(benches);
