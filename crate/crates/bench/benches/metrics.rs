use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dcsynth_bench::{fixture, scored_labels};
use dcsynth_core::generators::{fit_generator, GeneratorKind, GeneratorSpec};
use dcsynth_core::metrics::{auroc, inverse_kl, mmd_rbf, spearman, wasserstein_mean, MMD_MAX_ROWS};

fn bench_ranking(c: &mut Criterion) {
    let mut group = c.benchmark_group("ranking");
    for n in [1_000, 100_000] {
        let (scores, labels) = scored_labels(n);
        group.bench_with_input(BenchmarkId::new("auroc", n), &n, |b, _| {
            b.iter(|| auroc(black_box(&scores), black_box(&labels)).unwrap());
        });
        let other: Vec<f64> = scores.iter().rev().copied().collect();
        group.bench_with_input(BenchmarkId::new("spearman", n), &n, |b, _| {
            b.iter(|| spearman(black_box(&scores), black_box(&other)).unwrap());
        });
    }
    group.finish();
}

fn bench_fidelity(c: &mut Criterion) {
    let real = fixture(10, 2000, 3);
    let synth = fixture(10, 2000, 4);
    let mut group = c.benchmark_group("fidelity_d10_n2000");
    group.sample_size(10);
    group.bench_function("inverse_kl", |b| {
        b.iter(|| inverse_kl(black_box(&real), black_box(&synth), 20).unwrap());
    });
    group.bench_function("wasserstein_mean", |b| {
        b.iter(|| wasserstein_mean(black_box(&real), black_box(&synth)).unwrap());
    });
    group.bench_function("mmd_rbf", |b| {
        b.iter(|| mmd_rbf(black_box(&real), black_box(&synth), MMD_MAX_ROWS, 5).unwrap());
    });
    group.finish();
}

fn bench_generators(c: &mut Criterion) {
    let data = fixture(10, 2000, 6);
    let mut group = c.benchmark_group("generator_fit_sample_d10_n2000");
    group.sample_size(10);
    for kind in GeneratorKind::ALL {
        let spec = GeneratorSpec::new(kind, 1);
        group.bench_function(kind.name(), |b| {
            b.iter(|| {
                fit_generator(&spec, black_box(&data))
                    .unwrap()
                    .sample(2000, 9)
            });
        });
    }
    group.finish();
}

criterion_group!(benches, bench_ranking, bench_fidelity, bench_generators);
criterion_main!(benches);
