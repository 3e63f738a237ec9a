use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use thermotopo::invariants::{dd_invariant, thermal_chern_2d, DdWeighting, IntegrandOptions, QuadratureGrid, Rule};
use thermotopo::linalg::DEFAULT_STENCIL;
use thermotopo::models::{eigensystem, hamiltonian};
use thermotopo::uhlmann::{connection_generic_at, uhlmann_phase, PhaseOptions};
use thermotopo::{eig_biorthogonal, Embedding, Family, ModelSpec, WeightConvention};

fn kernels(c: &mut Criterion) {
    let s4 = ModelSpec::new(Family::NH4, 1.0, Embedding::S4 { radius: 2.0 }).unwrap();
    let p4 = [0.7, 0.4, 0.3, 1.9];
    let h4 = hamiltonian(&s4, &p4).unwrap();
    c.bench_function("eig_biorthogonal 4x4", |b| b.iter(|| eig_biorthogonal(black_box(&h4), 1e-8).unwrap()));
    c.bench_function("eigensystem S4 analytic", |b| b.iter(|| eigensystem(&s4, black_box(&p4)).unwrap()));
    c.bench_function("connection NH4 one component", |b| {
        b.iter(|| connection_generic_at(&s4, black_box(&p4), 0, 0.5, WeightConvention::Abs, DEFAULT_STENCIL).unwrap())
    });

    let mut slow = c.benchmark_group("invariants");
    slow.sample_size(10);
    let loop2 = ModelSpec::new(Family::NH2, 1.0, Embedding::Loop2D { r: 2.0, d: 2.5 }).unwrap();
    slow.bench_function("uhlmann phase NH2 2x800", |b| b.iter(|| uhlmann_phase(&loop2, black_box(0.5), WeightConvention::Abs, &PhaseOptions::default()).unwrap()));
    let sphere = ModelSpec::new(Family::NH2, 1.0, Embedding::Sphere2D { radius: 2.0 }).unwrap();
    let grid = QuadratureGrid::for_embedding(&sphere.embedding, &[200, 400], Rule::Trapezoid).unwrap();
    let opts = IntegrandOptions::default();
    slow.bench_function("thermal chern 200x400 reduced", |b| b.iter(|| thermal_chern_2d(&sphere, 2.0, black_box(0.5), &grid, &opts).unwrap()));
    let s3 = ModelSpec::new(Family::Hermitian3, 1.0, Embedding::S3 { radius: 1.0 }).unwrap();
    let g3 = QuadratureGrid::for_embedding(&s3.embedding, &[64, 64, 64], Rule::Trapezoid).unwrap();
    slow.bench_function("dd 64^3 reduced", |b| b.iter(|| dd_invariant(&s3, 1.0, black_box(0.2), &g3, DdWeighting::Restoring, &opts).unwrap()));
    slow.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
