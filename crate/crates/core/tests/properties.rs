use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_4, PI};

use proptest::prelude::*;

use expcomplete_core::criteria::{bm_series, sector_test, Assignment};
use expcomplete_core::sequences::{ComplexPoint, PointSequence, Region, SectorParams, SequenceSpec};
use expcomplete_core::testfn::{Shape, TestFunction};
use expcomplete_core::transforms::{hilbert, poisson};
use expcomplete_core::{normalize_shift, pairwise_sum, QuadratureConfig, VerdictClass};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

fn bump(a: f64, width: f64, height: f64) -> TestFunction {
    TestFunction::new(Shape::Bump { a, b: a + width, height }).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn poisson_lies_between_zero_and_sup(
        a in -4.0..4.0f64,
        width in 0.2..4.0f64,
        height in 0.1..5.0f64,
        x in -8.0..8.0f64,
        y in 1e-3..5.0f64,
    ) {
        let phi = bump(a, width, height);
        let p = poisson(&phi, ComplexPoint::new(x, y), &QuadratureConfig::default()).unwrap();
        let slack = p.abs_error + 1e-12;
        prop_assert!(p.value >= -slack, "{}", p.value);
        prop_assert!(p.value <= height + slack, "{} > {height}", p.value);
    }

    #[test]
    fn poisson_commutes_with_translation(
        a in -2.0..2.0f64,
        width in 0.5..3.0f64,
        shift in -5.0..5.0f64,
        x in -4.0..4.0f64,
        y in 0.05..2.0f64,
    ) {
        let cfg = QuadratureConfig::default();
        let base = Shape::Bump { a, b: a + width, height: 1.0 };
        let moved = TestFunction::new(Shape::Scaled { base: Box::new(base.clone()), scale: 1.0, shift }).unwrap();
        let p0 = poisson(&TestFunction::new(base).unwrap(), ComplexPoint::new(x, y), &cfg).unwrap();
        let p1 = poisson(&moved, ComplexPoint::new(x + shift, y), &cfg).unwrap();
        prop_assert!((p0.value - p1.value).abs() <= 1e-7 * (1.0 + p0.value.abs()));
    }

    #[test]
    fn hilbert_is_homogeneous(
        a in -2.0..2.0f64,
        width in 0.5..3.0f64,
        height in 0.1..10.0f64,
        x in -5.0..5.0f64,
    ) {
        let cfg = QuadratureConfig::default();
        let h1 = hilbert(&bump(a, width, 1.0), x, &cfg).unwrap();
        let hc = hilbert(&bump(a, width, height), x, &cfg).unwrap();
        prop_assert!((hc.value - height * h1.value).abs() <= 1e-7 * (1.0 + hc.value.abs()));
    }

    #[test]
    fn counts_add_over_a_split(
        pts in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..200),
        split in -9.0..9.0f64,
    ) {
        prop_assume!(pts.iter().all(|p| p.0 != split && (p.0, p.1) != (0.0, 0.0)));
        let seq = PointSequence::explicit(pts.iter().map(|&(re, im)| ComplexPoint::new(re, im)).collect()).unwrap();
        let m = seq.counting_measure();
        let whole = m.count_in(&Region::Rect { re: [-10.0, 10.0], im: [-10.0, 10.0] }).unwrap();
        let left = m.count_in(&Region::Rect { re: [-10.0, split], im: [-10.0, 10.0] }).unwrap();
        let right = m.count_in(&Region::Rect { re: [split, 10.0], im: [-10.0, 10.0] }).unwrap();
        prop_assert_eq!(whole, pts.len());
        prop_assert_eq!(left + right, whole);
        prop_assert_eq!(m.count_in(&Region::Empty).unwrap(), 0);
    }

    #[test]
    fn sector_verdict_survives_finite_shifts(
        moves in prop::collection::btree_map(1usize..50, (1.0..30.0f64, 0.8..2.3f64), 0..6),
    ) {
        let spec = SequenceSpec::Sector {
            params: SectorParams { angle: FRAC_PI_4, exponent: 2.0, scale: 1.0, alternate: true },
            count: 200,
        };
        let shifts: BTreeMap<usize, ComplexPoint> =
            moves.into_iter().map(|(k, (r, t))| (k, ComplexPoint::from_polar(r, t))).collect();
        let seq = normalize_shift(spec.generate_raw().unwrap(), &shifts).unwrap();
        let report = sector_test(&seq, FRAC_PI_4, 1.0).unwrap();
        prop_assert_eq!(report.verdict, VerdictClass::IncompleteAllD);
    }

    #[test]
    fn greedy_assignment_is_injective(
        pts in prop::collection::vec((-50.0..50.0f64, -3.0..3.0f64), 1..120),
        c in 0.5..20.0f64,
    ) {
        prop_assume!(pts.iter().all(|p| p.0.hypot(p.1) > 1e-3));
        let seq = PointSequence::explicit(pts.iter().map(|&(re, im)| ComplexPoint::new(re, im)).collect()).unwrap();
        let s = bm_series(&seq, c, &Assignment::GreedyNearestDistinct).unwrap();
        let distinct: BTreeSet<i64> = s.pairs.iter().map(|p| p.1).collect();
        prop_assert_eq!(distinct.len(), s.pairs.len());
        prop_assert!(!distinct.contains(&0));
        prop_assert!(s.terms.iter().all(|t| *t >= 0.0));
    }

    #[test]
    fn pairwise_sum_matches_compensated_sum(xs in prop::collection::vec(-1e3..1e3f64, 0..500)) {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for &x in &xs {
            let y = x - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        let scale: f64 = xs.iter().map(|x| x.abs()).sum::<f64>() + 1.0;
        prop_assert!((pairwise_sum(&xs) - sum).abs() <= 1e-13 * scale);
    }
}

#[test]
fn integer_series_cancels_at_two_pi() {
    let seq = SequenceSpec::Arithmetic {
        params: expcomplete_core::sequences::ArithmeticParams { step: 1.0, offset: 1.0, two_sided: true },
        count: 1000,
    }
    .generate()
    .unwrap();
    let s = bm_series(&seq, 2.0 * PI, &Assignment::GreedyNearestDistinct).unwrap();
    assert!(s.series < 1e-12, "{}", s.series);
}
