use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hodgelab_core::periods::{compute_period_data, HyperellipticCurve};
use hodgelab_core::poly::ComplexPoly;
use hodgelab_core::torus::{FourierTerm, TMonomial, Testbed, TorusTwistedConfig};
use hodgelab_core::{Complex64, Execution};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn octic() -> HyperellipticCurve {
    let roots: Vec<Complex64> = (0..8)
        .map(|k| Complex64::from_polar(1.0 + 0.1 * k as f64, 0.7 * k as f64))
        .collect();
    HyperellipticCurve::new(ComplexPoly::from_roots(&roots)).unwrap()
}

fn torus_config(n: usize) -> TorusTwistedConfig {
    let psi = vec![
        FourierTerm { m: [0, 0], poly: vec![TMonomial { coeff: Complex64::new(1.0, 0.0), p: 1, q: 1 }] },
        FourierTerm { m: [1, 0], poly: vec![TMonomial { coeff: Complex64::new(0.15, 0.0), p: 1, q: 0 }] },
    ];
    TorusTwistedConfig::new(Complex64::new(0.15, 1.1), 2, psi).with_grid(n)
}

fn periods(c: &mut Criterion) {
    let curve = octic();
    let mut group = c.benchmark_group("period_data_genus3");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 512), &exec, |b, &exec| {
            b.iter(|| compute_period_data(black_box(&curve), 512, exec).unwrap())
        });
    }
    group.finish();
}

fn torus_gram(c: &mut Criterion) {
    let mut group = c.benchmark_group("torus_gram");
    for (name, exec) in MODES {
        let bed = Testbed::new(torus_config(128), exec).unwrap();
        group.bench_with_input(BenchmarkId::new(name, 128), &bed, |b, bed| {
            b.iter(|| bed.gram(black_box(Complex64::new(0.01, 0.0))).unwrap())
        });
    }
    group.finish();
}

fn torus_operator(c: &mut Criterion) {
    let mut group = c.benchmark_group("box_prime_apply");
    for (name, exec) in MODES {
        let bed = Testbed::new(torus_config(128), exec).unwrap();
        let op = bed.operator(Complex64::new(0.0, 0.0)).unwrap();
        let x: Vec<Complex64> = (0..bed.points()).map(|i| Complex64::new((i as f64).sin(), 0.5)).collect();
        group.bench_with_input(BenchmarkId::new(name, 128), &x, |b, x| b.iter(|| op.apply(black_box(x))));
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = periods, torus_gram, torus_operator
}
criterion_main!(benches);
