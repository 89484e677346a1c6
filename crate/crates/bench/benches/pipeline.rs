use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use curvebump::inference::{bootstrap_sup_errors, second_order_partials, BootstrapPlan};
use curvebump::levelset::extract_zero_level_2d;
use curvebump::{evaluate_field, Density, Functional, GaussianMixture, GridSpec, Kde};

fn kde_derivatives(c: &mut Criterion) {
    let mut group = c.benchmark_group("kde_derivatives");
    for n in [1_000usize, 10_000] {
        let sample = GaussianMixture::boomerang().sample(n, 1).unwrap();
        let kde = Kde::with_fixed_bandwidth(sample, 0.4).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &kde, |b, kde| {
            b.iter(|| kde.derivatives(black_box(&[0.3, -0.2])).unwrap())
        });
    }
    group.finish();
}

fn field_evaluation(c: &mut Criterion) {
    let sample = GaussianMixture::boomerang().sample(2_000, 2).unwrap();
    let kde = Kde::with_fixed_bandwidth(sample, 0.4).unwrap();
    let grid = GridSpec::cube(2, -4.0, 4.0, 81).unwrap();
    c.bench_function("concave_field_81x81_n2000", |b| {
        b.iter(|| evaluate_field(&kde, Functional::ConcaveLambda1, &grid).unwrap())
    });
}

fn marching_squares(c: &mut Criterion) {
    let grid = GridSpec::cube(2, -4.0, 4.0, 321).unwrap();
    let field = evaluate_field(&GaussianMixture::boomerang(), Functional::MeanCurvature, &grid).unwrap();
    c.bench_function("marching_squares_321x321", |b| {
        b.iter(|| extract_zero_level_2d(black_box(&field), None).unwrap())
    });
}

fn bootstrap(c: &mut Criterion) {
    let sample = GaussianMixture::standard_normal(2).unwrap().sample(500, 3).unwrap();
    let grid = GridSpec::cube(2, -3.0, 3.0, 41).unwrap();
    let plan = BootstrapPlan::new(20, 0.1, 4).unwrap();
    let ops = second_order_partials(2);
    let bw = curvebump::Bandwidth::fixed(0.5).unwrap();
    let mut group = c.benchmark_group("bootstrap");
    group.sample_size(10);
    group.bench_function("partials_B20_41x41_n500", |b| {
        b.iter(|| bootstrap_sup_errors(&sample, bw, &grid, &plan, &ops).unwrap())
    });
    group.finish();
}

criterion_group!(benches, kde_derivatives, field_evaluation, marching_squares, bootstrap);
criterion_main!(benches);
