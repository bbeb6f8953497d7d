use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use expcomplete_core::criteria::{bm_series, Assignment};
use expcomplete_core::sequences::{ArithmeticParams, ComplexPoint, SequenceSpec};
use expcomplete_core::testfn::{Shape, TestFunction};
use expcomplete_core::transforms::{hilbert, hilbert_derivative, poisson};
use expcomplete_core::{evaluate, QuadratureConfig, TypeParameter};

fn transforms(c: &mut Criterion) {
    let cfg = QuadratureConfig::default();
    let phi = TestFunction::log_peak(2.0).unwrap();
    let bump = TestFunction::new(Shape::Bump { a: -1.0, b: 2.0, height: 1.0 }).unwrap();

    c.bench_function("poisson/log_peak", |b| {
        b.iter(|| poisson(black_box(&phi), ComplexPoint::new(0.7, 0.3), &cfg).unwrap())
    });
    c.bench_function("hilbert/bump", |b| b.iter(|| hilbert(black_box(&bump), 0.4, &cfg).unwrap()));
    c.bench_function("hilbert_derivative/log_peak", |b| {
        b.iter(|| hilbert_derivative(black_box(&phi), 0.9, &cfg).unwrap())
    });
}

fn sequences(c: &mut Criterion) {
    let seq = SequenceSpec::Arithmetic {
        params: ArithmeticParams { step: 1.0, offset: 1.0, two_sided: true },
        count: 1 << 14,
    }
    .generate()
    .unwrap();
    let phi = TestFunction::log_peak(50.0).unwrap();
    let t = TypeParameter::sigma(0.8 * PI).unwrap();
    let cfg = QuadratureConfig::default();

    c.bench_function("bm_series/integers_16k", |b| {
        b.iter(|| bm_series(black_box(&seq), 5.0, &Assignment::GreedyNearestDistinct).unwrap())
    });
    c.bench_function("functional/integers_16k", |b| {
        b.iter(|| evaluate(black_box(&seq), &t, &phi, &cfg).unwrap())
    });
}

criterion_group!(benches, transforms, sequences);
criterion_main!(benches);
