use bates_bench::context;
use bates_core::{assemble, build_grid, solve_pide, BandLu, BatesParams, ContractSpec, GridSpec, SchemeKind, SolverOptions};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn lu(c: &mut Criterion) {
    let mut g = c.benchmark_group("band_lu");
    g.sample_size(10);
    for h in [0.1, 0.05] {
        for scheme in SchemeKind::ALL {
            let grid = build_grid(&GridSpec { h, ..GridSpec::default() }).unwrap();
            let mats = assemble(scheme, &BatesParams::default(), &grid).unwrap();
            let id = format!("{scheme}/h={h}");
            g.bench_function(BenchmarkId::new("factorize", &id), |b| b.iter(|| BandLu::factorize(black_box(&mats.a_impl)).unwrap()));
            let lu = BandLu::factorize(&mats.a_impl).unwrap();
            let rhs = vec![1.0; mats.n_unknowns()];
            g.bench_function(BenchmarkId::new("solve", &id), |b| b.iter(|| lu.solve(black_box(&rhs)).unwrap()));
        }
    }
    g.finish();
}

fn jump(c: &mut Criterion) {
    let mut g = c.benchmark_group("jump_apply");
    for h in [0.1, 0.05] {
        let ctx = context(h, SchemeKind::Hoc4);
        let u = ctx.initial_surface();
        g.bench_function(BenchmarkId::from_parameter(h), |b| b.iter(|| ctx.jump(black_box(&u))));
    }
    g.finish();
}

fn full_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_pide");
    g.sample_size(10);
    let p = BatesParams::default();
    let contract = ContractSpec::put(100.0, 0.5);
    for h in [0.2, 0.1] {
        let grid = build_grid(&GridSpec { h, ..GridSpec::default() }).unwrap();
        for scheme in SchemeKind::ALL {
            g.bench_function(BenchmarkId::new(scheme.to_string(), h), |b| {
                b.iter(|| solve_pide(&p, &contract, &grid, scheme, &SolverOptions::default()).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, lu, jump, full_solve);
criterion_main!(benches);
