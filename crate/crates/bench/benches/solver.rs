use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use spinorlab_core::discretization::{build_grid, Spacing};
use spinorlab_core::geometry::MetricSpec;
use spinorlab_core::solver::{assemble, solve_harmonic_correction, spmv, BoundaryCondition, SolverOptions};
use spinorlab_core::spinor::real_spinor;

fn melvin() -> MetricSpec {
    MetricSpec::melvin(2.0).unwrap()
}

fn assembly(c: &mut Criterion) {
    let spec = melvin();
    let mut g = c.benchmark_group("assemble");
    for n in [32, 64, 128] {
        let grid = build_grid(1.0, 16.0, n, n, Spacing::Uniform).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, grid| {
            b.iter(|| assemble(&spec, grid, BoundaryCondition::Chiral).unwrap())
        });
    }
    g.finish();
}

fn matvec(c: &mut Criterion) {
    let spec = melvin();
    let mut g = c.benchmark_group("spmv");
    for n in [64, 256] {
        let grid = build_grid(1.0, 16.0, n, n, Spacing::Uniform).unwrap();
        let op = assemble(&spec, &grid, BoundaryCondition::Chiral).unwrap();
        let x = vec![1.0; op.cols()];
        let mut y = vec![0.0; op.rows()];
        g.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| spmv(&op.matrix, black_box(&x), &mut y))
        });
    }
    g.finish();
}

fn harmonic_solve(c: &mut Criterion) {
    let spec = melvin();
    let grid = build_grid(1.0, 16.0, 32, 32, Spacing::Uniform).unwrap();
    let opts = SolverOptions {
        tol: 1e-8,
        max_iter: 200_000,
        boundary: BoundaryCondition::Chiral,
    };
    let mut g = c.benchmark_group("cgls");
    g.sample_size(10);
    g.bench_function("harmonic-32", |b| {
        b.iter(|| solve_harmonic_correction(&spec, &grid, real_spinor(1.0, 0.0), &opts).unwrap())
    });
    g.finish();
}

criterion_group!(benches, assembly, matvec, harmonic_solve);
criterion_main!(benches);
