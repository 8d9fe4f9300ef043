use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use voxelwise_bench::{activations, normal_matrix};
use voxelwise_core::compression::{apbic_compress, apic_compress, pca_fit, PoolSpec};
use voxelwise_core::encoder::{gram, krr_fit, select_alpha_gram, RidgeConfig};

fn pooling(c: &mut Criterion) {
    let acts = activations(50, 32, 16, 16, 1);
    let mut g = c.benchmark_group("pooling");
    g.bench_function("apic_4x4", |b| {
        b.iter(|| apic_compress(black_box(&acts), &PoolSpec::apic(4, 4)).unwrap())
    });
    g.bench_function("apbic_4x4_g4", |b| {
        b.iter(|| apbic_compress(black_box(&acts), &PoolSpec::apbic(4, 4, 4)).unwrap())
    });
    g.finish();
}

fn kernel_ridge(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel_ridge");
    for &n in &[200usize, 600] {
        let x = normal_matrix(n, 256, 2);
        let y = normal_matrix(n, 100, 3);
        g.bench_with_input(BenchmarkId::new("gram", n), &x, |b, x| {
            b.iter(|| gram(x.view(), x.view()).unwrap())
        });
        let k = gram(x.view(), x.view()).unwrap();
        g.bench_with_input(BenchmarkId::new("krr_fit", n), &k, |b, k| {
            b.iter(|| krr_fit(k.view(), y.view(), 1.0).unwrap())
        });
    }
    let x = normal_matrix(300, 128, 4);
    let y = normal_matrix(300, 50, 5);
    let k = gram(x.view(), x.view()).unwrap();
    let cfg = RidgeConfig::default();
    g.sample_size(10);
    g.bench_function("select_alpha_300", |b| {
        b.iter(|| select_alpha_gram(k.view(), y.view(), &[60; 5], &cfg).unwrap())
    });
    g.finish();
}

fn pca(c: &mut Criterion) {
    let x = normal_matrix(150, 2048, 6);
    let mut g = c.benchmark_group("pca");
    g.sample_size(10);
    g.bench_function("fit_150x2048_k100", |b| {
        b.iter(|| pca_fit(black_box(x.view()), 100).unwrap())
    });
    g.finish();
}

criterion_group!(benches, pooling, kernel_ridge, pca);
criterion_main!(benches);
