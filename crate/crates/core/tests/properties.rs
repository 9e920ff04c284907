use std::sync::Arc;

use lebdiff::dyadic::{locate_cube, AxisBox, BoxUnion, DyadicCube, Point};
use lebdiff::martingale::{from_wtest, verify_averaging, DyadicMartingale};
use lebdiff::stepfn::{random_step_function, SimpleStepFunction};
use lebdiff::wtest::WTest;
use lebdiff::ExactScalar;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scalar() -> impl Strategy<Value = ExactScalar> {
    (-200i64..200, 0u32..8, 0u32..3).prop_map(|(n, b, a)| {
        let den = BigInt::from(2).pow(b) * BigInt::from(3).pow(a);
        ExactScalar::from_ratio(&BigRational::new(BigInt::from(n), den)).unwrap()
    })
}

/// Open dyadic box inside the unit cube at precision at most 3.
fn dyadic_box(n: usize) -> impl Strategy<Value = AxisBox> {
    prop::collection::vec((0i64..8, 1i64..=8), n).prop_map(|axes| {
        let (lo, hi): (Vec<_>, Vec<_>) = axes
            .into_iter()
            .map(|(a, w)| {
                let a = a.min(7);
                let b = (a + w).min(8);
                (ExactScalar::dyadic(a, 3), ExactScalar::dyadic(b, 3))
            })
            .unzip();
        AxisBox::open(lo, hi).unwrap()
    })
}

fn union(n: usize) -> impl Strategy<Value = BoxUnion> {
    prop::collection::vec(dyadic_box(n), 0..4).prop_map(move |bs| BoxUnion::new(n, bs).unwrap())
}

fn step(seed: u64, dim: usize) -> SimpleStepFunction {
    random_step_function(&mut ChaCha8Rng::seed_from_u64(seed), Some(dim)).unwrap()
}

/// A point in (0,1)^n with odd denominators, so it is never on a dyadic face.
fn odd_point(n: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec((1i64..20, 0usize..3), n).prop_map(|c| {
        let fr: Vec<(i64, i64)> = c
            .into_iter()
            .map(|(k, d)| {
                let den = [3i64, 5, 7][d];
                let num = (k % (den - 1)) + 1;
                (num, den)
            })
            .collect();
        Point::from_fracs(&fr)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_arithmetic_agrees_with_rationals(a in scalar(), b in scalar()) {
        let (ra, rb) = (a.to_ratio(), b.to_ratio());
        prop_assert_eq!((&a + &b).to_ratio(), &ra + &rb);
        prop_assert_eq!((&a - &b).to_ratio(), &ra - &rb);
        prop_assert_eq!((&a * &b).to_ratio(), &ra * &rb);
        prop_assert_eq!(a < b, ra < rb);
    }

    #[test]
    fn scalar_json_round_trips(a in scalar()) {
        let text = serde_json::to_string(&a).unwrap();
        let back: ExactScalar = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn union_measure_is_inclusion_exclusion(a in union(2), b in union(2)) {
        let both = a.union(&b).measure();
        let lhs = &both + &a.intersection_measure(&b);
        prop_assert_eq!(lhs, &a.measure() + &b.measure());
        prop_assert!(a.measure() <= ExactScalar::one());
    }

    #[test]
    fn sym_diff_is_a_metric(a in union(2), b in union(2), c in union(2)) {
        prop_assert_eq!(a.sym_diff_measure(&a), ExactScalar::zero());
        prop_assert_eq!(a.sym_diff_measure(&b), b.sym_diff_measure(&a));
        let via = &a.sym_diff_measure(&c) + &c.sym_diff_measure(&b);
        prop_assert!(a.sym_diff_measure(&b) <= via);
    }

    #[test]
    fn l1_distance_is_a_metric(s in 0u64..10_000, t in 0u64..10_000, u in 0u64..10_000) {
        let (f, g, h) = (step(s, 2), step(t, 2), step(u, 2));
        prop_assert_eq!(f.l1_distance(&f), ExactScalar::zero());
        prop_assert_eq!(f.l1_distance(&g), g.l1_distance(&f));
        prop_assert!(f.l1_distance(&g) <= &f.l1_distance(&h) + &h.l1_distance(&g));
        prop_assert_eq!(f.add(&g).integral(), &f.integral() + &g.integral());
        prop_assert!(f.integral().abs() <= f.l1_norm());
    }

    #[test]
    fn chebyshev_set_is_small(s in 0u64..10_000, e in 1i64..8) {
        let f = step(s, 1);
        let eps = ExactScalar::dyadic(e, 2);
        let set = f.chebyshev_set(&eps).unwrap();
        prop_assert!(&set.measure() * &eps <= f.l1_norm());
    }

    #[test]
    fn located_cubes_nest(x in odd_point(2), r in 0u32..12) {
        let outer = locate_cube(&x, r).unwrap();
        let inner = locate_cube(&x, r + 1).unwrap();
        prop_assert!(outer.contains_cube(&inner));
        prop_assert!(inner.to_box().contains_point(&x));
        prop_assert_eq!(&inner.measure() * &ExactScalar::pow2(2), outer.measure());
    }

    #[test]
    fn children_tile_their_parent(r in 0u32..4, i in 0i64..16, j in 0i64..16) {
        let side = 1i64 << r;
        let parent = DyadicCube::half_open(r, &[i % side, j % side]);
        let kids = parent.children();
        prop_assert_eq!(kids.len(), 4);
        let total = kids.iter().fold(ExactScalar::zero(), |acc, k| &acc + &k.measure());
        prop_assert_eq!(total, parent.measure());
        prop_assert!(kids.iter().all(|k| parent.contains_cube(k)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trap_martingales_average_exactly(x in odd_point(1), y in odd_point(1), m in 0u32..4) {
        let w = WTest::point_trap(vec![x.clone(), y]).unwrap();
        let d = from_wtest(Arc::new(w), m);
        let rep = verify_averaging(&d, 5).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep.violation);
        let root = d.eval_exact(0, &[BigInt::from(0)]).unwrap().unwrap();
        prop_assert!(root <= ExactScalar::one());
    }
}
