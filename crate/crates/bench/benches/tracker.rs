use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use std::hint::black_box;

use prost_bench::{benchmark_params, kernel_fixture, rgb_dims, scene};
use prost_core::cost::{cost_and_gradient, eta};
use prost_core::fit::fit_coordinates;
use prost_core::manifold::{geodesic_step, project_rank1};
use prost_core::pipeline::{median3x3, segment, BackgroundSubtractor};

fn per_frame(c: &mut Criterion) {
    let dims = rgb_dims();
    let params = benchmark_params();
    let frames: Vec<_> = (0..16).map(|i| scene(dims, 6 * i)).collect();
    let mut sub = BackgroundSubtractor::new(dims, params, 100, 0).unwrap();
    for f in &frames {
        sub.process(f).unwrap();
    }

    let mut group = c.benchmark_group("pipeline");
    group.throughput(Throughput::Elements(1));
    let mut i = 0;
    group.bench_function("process_frame_160x120_rgb_k15", |b| {
        b.iter(|| {
            i = (i + 1) % frames.len();
            black_box(sub.process(&frames[i]).unwrap());
        })
    });
    group.finish();
}

fn kernels(c: &mut Criterion) {
    let dims = rgb_dims();
    let fx = kernel_fixture(dims.len(), 15);
    let r = &fx.x - fx.basis.as_matrix() * &fx.y;
    let eta = eta(&r, fx.lp, &fx.weights).unwrap();
    let dir = project_rank1(&fx.basis, &eta, &fx.y).unwrap();
    let params = benchmark_params();

    let mut group = c.benchmark_group("kernels");
    group.bench_function("cost_and_gradient", |b| {
        b.iter(|| cost_and_gradient(black_box(&r), fx.lp, &fx.weights).unwrap())
    });
    group.bench_function("fit_coordinates", |b| {
        b.iter(|| {
            fit_coordinates(
                &fx.basis,
                black_box(&fx.x),
                &fx.y,
                fx.lp,
                &fx.weights,
                &params.cg,
            )
            .unwrap()
        })
    });
    group.bench_function("project_rank1", |b| {
        b.iter(|| project_rank1(&fx.basis, black_box(&eta), &fx.y).unwrap())
    });
    group.bench_function("geodesic_step", |b| {
        b.iter_batched(
            || fx.basis.clone(),
            |basis| geodesic_step(&basis, &dir, black_box(1e-3), true).unwrap(),
            BatchSize::LargeInput,
        )
    });
    let mask = segment(&r, dims, params.delta).unwrap();
    group.bench_function("segment", |b| {
        b.iter(|| segment(black_box(&r), dims, params.delta).unwrap())
    });
    group.bench_function("median3x3", |b| b.iter(|| median3x3(black_box(&mask))));
    group.finish();
}

criterion_group!(benches, per_frame, kernels);
criterion_main!(benches);
