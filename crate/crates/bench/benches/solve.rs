use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use mlpnp::solver::{build_system, detect_planarity, linear_estimate, refine_gauss_newton};
use mlpnp::tangent::nullspace;
use mlpnp::uncertainty::pose_covariance;
use mlpnp::SolverOptions;
use mlpnp_bench::{fixture, SIZES};
use nalgebra::Vector3;

fn full_solve(c: &mut Criterion) {
    let opts = SolverOptions::default();
    for planar in [false, true] {
        let mut group = c.benchmark_group(if planar { "solve/planar" } else { "solve/ordinary" });
        for n in SIZES {
            let f = fixture(n, planar);
            group.throughput(Throughput::Elements(n as u64));
            group.bench_with_input(BenchmarkId::from_parameter(n), &f.correspondences, |b, corrs| {
                b.iter(|| mlpnp::solve(black_box(corrs), &opts))
            });
        }
        group.finish();
    }
}

fn stages(c: &mut Criterion) {
    let opts = SolverOptions::default();
    let mut group = c.benchmark_group("stages");
    for n in [50, 1000] {
        let f = fixture(n, false);
        let points: Vec<_> = f.correspondences.iter().map(|c| c.point).collect();
        let planarity = detect_planarity(&points, opts.planar_eigen_threshold).unwrap();
        let system = build_system(&f.correspondences, &planarity, true);
        let linear = linear_estimate(&system).unwrap();

        group.bench_function(BenchmarkId::new("linear", n), |b| {
            b.iter(|| linear_estimate(&build_system(black_box(&f.correspondences), &planarity, true)))
        });
        group.bench_function(BenchmarkId::new("gauss_newton", n), |b| {
            b.iter(|| refine_gauss_newton(black_box(&f.correspondences), &linear.pose, &opts))
        });
        group.bench_function(BenchmarkId::new("covariance", n), |b| {
            b.iter(|| pose_covariance(black_box(&f.correspondences), &linear.pose, true))
        });
    }
    group.finish();
}

fn tangent_basis(c: &mut Criterion) {
    let v = Vector3::new(0.3, -0.2, 1.0).normalize();
    c.bench_function("nullspace", |b| b.iter(|| nullspace(black_box(&v))));
}

criterion_group!(benches, full_solve, stages, tangent_basis);
criterion_main!(benches);
