use std::hint::black_box;
use std::sync::Arc;

use bvtp_bench::layered;
use bvtp_core::{
    assemble_pencil, characteristic, fixtures, lowest_eigenvalues, oracle_solve, pencil_eigenvalues,
    solve_resolvent, Complex64, EigenBasis, PiecewisePolynomial,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn characteristic_function(c: &mut Criterion) {
    let mut g = c.benchmark_group("characteristic");
    for pieces in [1, 4, 16] {
        let pr = layered(pieces);
        g.bench_with_input(BenchmarkId::new("pieces", pieces), &pr, |b, pr| {
            b.iter(|| characteristic(pr, black_box(Complex64::new(25.0, 0.0)), 1e-10).unwrap())
        });
    }
    g.finish();
}

fn eigenvalues(c: &mut Criterion) {
    let p2 = fixtures::validated(fixtures::p2());
    c.bench_function("lowest_eigenvalues/p2/10", |b| b.iter(|| lowest_eigenvalues(&p2, 10, 1e-12).unwrap()));
    c.bench_function("eigenbasis/p2/8", |b| b.iter(|| EigenBasis::lowest(&p2, 8, 1e-12).unwrap()));
}

fn resolvent(c: &mut Criterion) {
    let p2 = fixtures::validated(fixtures::p2());
    let one = Arc::new(PiecewisePolynomial::constant(&p2, 1.0));
    c.bench_function("solve_resolvent/p2", |b| {
        b.iter(|| solve_resolvent(&p2, Complex64::new(-3.0, 0.0), one.clone(), 1e-10).unwrap())
    });
}

fn oracle(c: &mut Criterion) {
    let p2 = fixtures::validated(fixtures::p2());
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    for n in [50, 100, 200] {
        let pencil = assemble_pencil(&p2, n).unwrap();
        g.bench_with_input(BenchmarkId::new("pencil_eigenvalues", n), &pencil, |b, p| {
            b.iter(|| pencil_eigenvalues(p).unwrap())
        });
    }
    let one = PiecewisePolynomial::constant(&p2, 1.0);
    g.bench_function("oracle_solve/2000", |b| b.iter(|| oracle_solve(&p2, -3.0, &one, 2000).unwrap()));
    g.finish();
}

criterion_group!(benches, characteristic_function, eigenvalues, resolvent, oracle);
criterion_main!(benches);
