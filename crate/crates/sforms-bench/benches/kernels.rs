//! Benchmarks for the hot kernels: reduction, equivalence search,
//! standardization, volume formulas, goodness checking, and lattice systoles.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use sforms_core::arith::{parse_rat, rat_i64, Place, PlaceSet};
use sforms_core::bounds;
use sforms_core::construct;
use sforms_core::matrix::RMatrix;
use sforms_core::qform::QuadraticForm;
use sforms_core::reduce;
use sforms_core::slattice::{self, SLattice};

fn diag(entries: &[i64]) -> QuadraticForm {
    let coeffs: Vec<(usize, usize, _)> = entries
        .iter()
        .enumerate()
        .map(|(i, &a)| (i + 1, i + 1, rat_i64(a)))
        .collect();
    QuadraticForm::from_coeffs(entries.len(), &coeffs).expect("diagonal form")
}

/// The classical inequivalent-looking ternary pair with determinant ±68 used
/// throughout the test suite; the equivalence search finds its certificate.
fn ternary_pair() -> (QuadraticForm, QuadraticForm) {
    let q1 = QuadraticForm::from_coeffs(
        3,
        &[
            (1, 1, rat_i64(1)),
            (2, 2, rat_i64(-3)),
            (2, 3, rat_i64(-2)),
            (3, 3, rat_i64(-23)),
        ],
    )
    .unwrap();
    let q2 = QuadraticForm::from_coeffs(
        3,
        &[
            (1, 1, rat_i64(1)),
            (2, 2, rat_i64(-7)),
            (2, 3, rat_i64(-6)),
            (3, 3, rat_i64(-11)),
        ],
    )
    .unwrap();
    (q1, q2)
}

fn bench_reduce(c: &mut Criterion) {
    let q = QuadraticForm::from_coeffs(
        4,
        &[
            (1, 1, rat_i64(13)),
            (1, 2, rat_i64(8)),
            (1, 3, rat_i64(-6)),
            (2, 2, rat_i64(11)),
            (2, 4, rat_i64(10)),
            (3, 3, rat_i64(17)),
            (3, 4, rat_i64(4)),
            (4, 4, rat_i64(19)),
        ],
    )
    .unwrap();
    c.bench_function("minkowski_reduce_d4", |b| {
        b.iter(|| reduce::minkowski_reduce(black_box(&q)).unwrap())
    });
}

fn bench_equiv(c: &mut Criterion) {
    let (q1, q2) = ternary_pair();
    let budget = rat_i64(100);
    let mut group = c.benchmark_group("equivalence");
    group.sample_size(10);
    group.bench_function("z_equivalent_det68", |b| {
        b.iter(|| reduce::z_equivalent(black_box(&q1), black_box(&q2), black_box(&budget)).unwrap())
    });
    group.finish();
}

fn bench_standardize(c: &mut Criterion) {
    let q = diag(&[2, -3, 5]);
    c.bench_function("standardize_d3_p2", |b| {
        b.iter(|| construct::standardize(black_box(&q), Place::Prime(2)).unwrap())
    });
    c.bench_function("standardize_d3_inf", |b| {
        b.iter(|| construct::standardize(black_box(&q), Place::Infinity).unwrap())
    });
}

fn bench_volumes(c: &mut Criterion) {
    c.bench_function("vol_gl_zp_d4_p3", |b| {
        b.iter(|| bounds::vol_gl_zp(black_box(4), black_box(3)).unwrap())
    });
    c.bench_function("xi_p5_m4", |b| {
        b.iter(|| bounds::xi_p(black_box(5), black_box(4)).unwrap())
    });
}

fn bench_good_check(c: &mut Criterion) {
    let coeffs: Vec<_> = [-1, 0, 1].iter().map(|&a| rat_i64(a)).collect();
    c.bench_function("good_check_deg2_p3_depth5", |b| {
        b.iter(|| slattice::good_check(black_box(&coeffs), 3, 5).unwrap())
    });
}

fn bench_systole(c: &mut Criterion) {
    let rows: Vec<Vec<String>> = [
        ["1", "1/2", "0"],
        ["0", "2", "1"],
        ["0", "0", "1/2"],
    ]
    .iter()
    .map(|r| r.iter().map(|s| s.to_string()).collect())
    .collect();
    let basis = RMatrix::from_string_rows(&rows).unwrap();
    let s = PlaceSet::new([2]).unwrap();
    let lattice = SLattice::new(s, basis).unwrap();
    c.bench_function("systole_d3_radius6", |b| {
        b.iter(|| lattice.systole(black_box(6)).unwrap())
    });
}

fn bench_enumerate(c: &mut Criterion) {
    c.bench_function("enumerate_reduced_d3_det8", |b| {
        b.iter(|| reduce::enumerate_reduced_definite(black_box(3), black_box(8)).unwrap())
    });
}

fn bench_parse(c: &mut Criterion) {
    c.bench_function("parse_rat_long", |b| {
        b.iter(|| parse_rat(black_box("-123456789123456789/987654321987654321")).unwrap())
    });
}

criterion_group!(
    kernels,
    bench_reduce,
    bench_equiv,
    bench_standardize,
    bench_volumes,
    bench_good_check,
    bench_systole,
    bench_enumerate,
    bench_parse
);
criterion_main!(kernels);
