use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gradlase::oracle::{oracle_steady_state, Liouvillian, OracleMethod, DEFAULT_CUTOFF};
use gradlase::spectrum::{auto_spectrum, regression_matrix};
use gradlase::threshold::n_threshold;
use gradlase::{steady_state, Model, PhysicalParams};

fn lasing() -> Model {
    Model::new(PhysicalParams::reference(400.0, 0.1, 10_000_000)).unwrap()
}

fn bench_steady_state(c: &mut Criterion) {
    let below = Model::new(PhysicalParams::reference(100.0, 0.1, 100_000)).unwrap();
    let above = lasing();
    c.bench_function("steady_state/below_threshold", |b| {
        b.iter(|| steady_state(black_box(&below)).unwrap())
    });
    c.bench_function("steady_state/lasing", |b| {
        b.iter(|| steady_state(black_box(&above)).unwrap())
    });
}

fn bench_spectrum(c: &mut Criterion) {
    let m = lasing();
    let ss = steady_state(&m).unwrap();
    let sys = regression_matrix(&ss, &m).unwrap();
    c.bench_function("spectrum/lasing", |b| {
        b.iter(|| auto_spectrum(black_box(&sys)).unwrap())
    });
}

fn bench_threshold(c: &mut Criterion) {
    let p = PhysicalParams::reference(300.0, 0.1, 1);
    c.bench_function("threshold/closed_form", |b| {
        b.iter(|| n_threshold(black_box(&p), 300.0).unwrap())
    });
}

fn bench_oracle(c: &mut Criterion) {
    let m = Model::new(PhysicalParams::reference(300.0, 50.0, 1)).unwrap();
    let l = Liouvillian::new(&m, DEFAULT_CUTOFF).unwrap();
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    group.bench_function("null_space", |b| {
        b.iter(|| oracle_steady_state(black_box(&l), OracleMethod::NullSpace).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_steady_state,
    bench_spectrum,
    bench_threshold,
    bench_oracle
);
criterion_main!(benches);
