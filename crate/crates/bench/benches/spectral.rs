use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use inclusion_lab::discretization::{assemble_operator, FaceRule};
use inclusion_lab::medium::{sample_radii, ModelParams, SmoothCoefficient};
use inclusion_lab::spectral::{
    chebyshev_evolve_with, lowest_eigenpairs_with, LanczosOptions, LdlContext, SpectrumCounter,
};
use inclusion_lab::BoxSpec;
use inclusion_lab_bench::fixture;
use num_complex::Complex64;
use std::hint::black_box;

const SIZES: [usize; 3] = [32, 64, 128];

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    let params = ModelParams {
        omega_plus: 0.18,
        ..ModelParams::default()
    };
    let window = BoxSpec::at_origin(2, 1.0);
    let radii = sample_radii(&params, &window, 1, 0).unwrap();
    let coefficient = SmoothCoefficient {
        params: &params,
        radii: &radii,
    };
    for steps in SIZES {
        let (grid, _) = fixture(1.0, steps);
        group.bench_with_input(BenchmarkId::from_parameter(steps), &grid, |b, grid| {
            b.iter(|| assemble_operator(grid, &coefficient, FaceRule::Midpoint).unwrap())
        });
    }
    group.finish();
}

fn factorization(c: &mut Criterion) {
    let mut group = c.benchmark_group("ldlt");
    for steps in SIZES {
        let (_, a) = fixture(1.0, steps);
        group.bench_with_input(BenchmarkId::new("symbolic", steps), &a, |b, a| {
            b.iter(|| LdlContext::new(a))
        });
        let ctx = LdlContext::new(&a);
        group.bench_with_input(BenchmarkId::new("numeric", steps), &ctx, |b, ctx| {
            b.iter(|| ctx.factor(black_box(30.0)).unwrap().inertia)
        });
    }
    group.finish();
}

fn counting(c: &mut Criterion) {
    let mut group = c.benchmark_group("count");
    for steps in SIZES {
        let (_, a) = fixture(1.0, steps);
        let counter = SpectrumCounter::new(&a);
        group.bench_with_input(BenchmarkId::from_parameter(steps), &counter, |b, counter| {
            b.iter(|| counter.count(black_box(10.0), black_box(45.0)).unwrap())
        });
    }
    group.finish();
}

fn lanczos(c: &mut Criterion) {
    let mut group = c.benchmark_group("lanczos_lowest10");
    group.sample_size(10);
    for steps in SIZES {
        let (_, a) = fixture(1.0, steps);
        let counter = SpectrumCounter::new(&a);
        let opts = LanczosOptions::default();
        group.bench_with_input(BenchmarkId::from_parameter(steps), &counter, |b, counter| {
            b.iter(|| lowest_eigenpairs_with(counter, 10, &opts).unwrap())
        });
    }
    group.finish();
}

fn chebyshev(c: &mut Criterion) {
    let mut group = c.benchmark_group("chebyshev");
    group.sample_size(10);
    let (_, a) = fixture(1.0, 64);
    let n = a.n();
    let state: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(((i % 7) as f64 - 3.0) / (n as f64).sqrt(), 0.0))
        .collect();
    for t in [0.01, 0.1] {
        group.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| chebyshev_evolve_with(&a, &state, t, 1e-10, 1_000_000).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, assembly, factorization, counting, lanczos, chebyshev);
criterion_main!(benches);
