//! Property tests for the algebra invariants.

use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use apnls::{APSeries, Basis, FreqVector, TruncationPolicy};

fn basis_g2() -> Arc<Basis> {
    Arc::new(Basis::independent(vec![1.0, std::f64::consts::SQRT_2]).unwrap())
}

prop_compose! {
    fn arb_terms(max_terms: usize)
        (terms in prop::collection::vec(
            ((-3i32..=3, -3i32..=3), -1.0f64..1.0, -1.0f64..1.0),
            0..max_terms,
        ))
    -> Vec<((i32, i32), f64, f64)> {
        terms
    }
}

fn build(basis: &Arc<Basis>, terms: &[((i32, i32), f64, f64)]) -> APSeries {
    APSeries::from_terms(
        basis,
        terms.iter().map(|((a, b), re, im)| {
            (FreqVector::from([*a, *b]), Complex64::new(*re, *im))
        }),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn young_bound_holds(tf in arb_terms(8), tg in arb_terms(8)) {
        let b = basis_g2();
        let f = build(&b, &tf);
        let g = build(&b, &tg);
        let (fg, dropped) = f.multiply(&g, &TruncationPolicy::none()).unwrap();
        prop_assert_eq!(dropped, 0.0);
        let bound = f.a_norm() * g.a_norm();
        prop_assert!(fg.a_norm() <= bound + 1e-12 * (1.0 + bound));
    }

    #[test]
    fn conjugation_commutes_with_products_exactly(tf in arb_terms(8), tg in arb_terms(8)) {
        let b = basis_g2();
        let f = build(&b, &tf);
        let g = build(&b, &tg);
        let policy = TruncationPolicy::none();
        let (fg, _) = f.multiply(&g, &policy).unwrap();
        let (cfcg, _) = f.conjugate().multiply(&g.conjugate(), &policy).unwrap();
        prop_assert_eq!(fg.conjugate(), cfcg);
    }

    #[test]
    fn conjugation_commutes_under_truncation(tf in arb_terms(8), tg in arb_terms(8)) {
        // The same entries get dropped on both routes; the discarded
        // masses are sums of identical magnitudes, accumulated in
        // mirrored key order, so they agree to rounding.
        let b = basis_g2();
        let f = build(&b, &tf);
        let g = build(&b, &tg);
        let policy = TruncationPolicy::threshold(0.05);
        let (fg, d1) = f.multiply(&g, &policy).unwrap();
        let (cfcg, d2) = f.conjugate().multiply(&g.conjugate(), &policy).unwrap();
        prop_assert_eq!(fg.conjugate(), cfcg);
        prop_assert!((d1 - d2).abs() <= 1e-14 * (1.0 + d1.abs()));
    }

    #[test]
    fn multiply_is_deterministic(tf in arb_terms(8), tg in arb_terms(8)) {
        let b = basis_g2();
        let f = build(&b, &tf);
        let g = build(&b, &tg);
        let policy = TruncationPolicy::threshold(1e-3).with_max_support(20);
        let (p1, d1) = f.multiply(&g, &policy).unwrap();
        let (p2, d2) = f.multiply(&g, &policy).unwrap();
        prop_assert_eq!(p1, p2);
        prop_assert_eq!(d1, d2);
    }

    #[test]
    fn evaluation_obeys_triangle_inequality(tf in arb_terms(8), x in -50.0f64..50.0) {
        let b = basis_g2();
        let f = build(&b, &tf);
        prop_assert!(f.evaluate(x).norm() <= f.a_norm() * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn l2_never_exceeds_a_norm(tf in arb_terms(8)) {
        let b = basis_g2();
        let f = build(&b, &tf);
        prop_assert!(f.l2_norm() <= f.a_norm() * (1.0 + 1e-12) + 1e-15);
        // Parseval consistency on a declared-independent basis.
        let sq: f64 = f.iter().map(|(_, c)| c.norm_sqr()).sum();
        prop_assert!((f.l2_norm().powi(2) - sq).abs() <= 1e-12);
    }

    #[test]
    fn addition_and_conjugation_are_compatible(tf in arb_terms(8), tg in arb_terms(8)) {
        let b = basis_g2();
        let f = build(&b, &tf);
        let g = build(&b, &tg);
        let lhs = f.add(&g).unwrap().conjugate();
        let rhs = f.conjugate().add(&g.conjugate()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}
