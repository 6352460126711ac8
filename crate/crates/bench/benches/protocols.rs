use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use locc_core::gates;
use locc_core::markov;
use locc_core::protocols::{self, Mode};
use locc_core::typicality;

fn single_shot(c: &mut Criterion) {
    let input = protocols::plus_plus();
    let mut trial = 0u64;
    c.bench_function("composite sampled", |b| {
        b.iter(|| {
            trial += 1;
            protocols::composite_single_shot(1.0, 1.0, black_box(&input), Mode::Sampled { seed: 1, trial }).unwrap()
        })
    });
    c.bench_function("composite exhaustive", |b| {
        b.iter(|| protocols::composite_single_shot(1.0, 1.0, black_box(&input), Mode::Exhaustive).unwrap())
    });
}

fn nshot(c: &mut Criterion) {
    let inputs = vec![protocols::plus_plus(); 100];
    let mut trial = 0u64;
    c.bench_function("nshot n=100", |b| {
        b.iter(|| {
            trial += 1;
            protocols::nshot_run(1.0, 100, 0.15, black_box(&inputs), 1, trial).unwrap()
        })
    });
    c.bench_function("epsilon exact n=10000", |b| {
        b.iter(|| protocols::epsilon_exact(black_box(1.0), 10_000, 0.15).unwrap())
    });
}

fn channels(c: &mut Criterion) {
    let u = gates::u_tilde_theta(1.0);
    c.bench_function("markov cost d=2", |b| {
        b.iter(|| markov::markov_cost(black_box(&u), 2).unwrap())
    });
}

fn typical(c: &mut Criterion) {
    let lambda = typicality::source(1.0).unwrap();
    c.bench_function("typical set n=1024", |b| {
        b.iter(|| typicality::typical_set(black_box(lambda), 1024, 0.15).unwrap())
    });
    let mut group = c.benchmark_group("full_mn");
    group.sample_size(10);
    group.bench_function("exact n=3", |b| {
        b.iter(|| protocols::full_mn_exact(1.0, 3, 0.2).unwrap())
    });
    group.finish();
}

criterion_group!(benches, single_shot, nshot, channels, typical);
criterion_main!(benches);
