use std::collections::BTreeSet;

use conedex_core::linalg::{c, re, CMat};
use conedex_core::phg::{extended_union, mellin_pole_probe, phg_mul, CutoffSpec, IndexSet, PhgExpansion, DEFAULT_HORIZON};
use proptest::prelude::*;

// Exponents are quarter-integers so that coincidences are frequent and comparisons exact.
fn index_set() -> impl Strategy<Value = IndexSet> {
    prop::collection::vec((-8i32..8, 0u32..3), 0..5)
        .prop_map(|v| IndexSet::new(v.into_iter().map(|(q, k)| (q as f64 * 0.25, k))))
}

/// Extended union on integer-coded pairs, independent of the library sort and dedup.
fn brute_extended(e: &IndexSet, f: &IndexSet) -> BTreeSet<(i64, u32)> {
    let code = |z: f64| (z * 4.0).round() as i64;
    let mut out = BTreeSet::new();
    for &(z, k) in e.entries().iter().chain(f.entries()) {
        out.insert((code(z), k));
    }
    for &(z, k) in e.entries() {
        for &(w, l) in f.entries() {
            if code(z) == code(w) {
                out.insert((code(z), k + l + 1));
            }
        }
    }
    out
}

fn coded(s: &IndexSet) -> BTreeSet<(i64, u32)> {
    s.entries().iter().map(|&(z, k)| ((z * 4.0).round() as i64, k)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn extended_union_matches_pairwise_definition(e in index_set(), f in index_set()) {
        prop_assert_eq!(coded(&extended_union(&e, &f)), brute_extended(&e, &f));
    }

    #[test]
    fn extended_union_commutes(e in index_set(), f in index_set()) {
        prop_assert_eq!(extended_union(&e, &f), extended_union(&f, &e));
    }

    #[test]
    fn extended_union_associates(e in index_set(), f in index_set(), g in index_set()) {
        prop_assert_eq!(
            extended_union(&extended_union(&e, &f), &g),
            extended_union(&e, &extended_union(&f, &g))
        );
    }

    #[test]
    fn extended_union_leading_law(e in index_set(), f in index_set()) {
        let u = extended_union(&e, &f);
        let expected = match (e.leading(), f.leading()) {
            (None, None) => None,
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (Some((z, k)), Some((w, l))) if z == w => Some((z, k + l + 1)),
            (Some(a), Some(b)) => Some(if a.0 < b.0 { a } else { b }),
        };
        prop_assert_eq!(u.leading(), expected);
    }

    #[test]
    fn extended_union_contains_both(e in index_set(), f in index_set()) {
        let u = extended_union(&e, &f);
        for &(z, k) in e.entries().iter().chain(f.entries()) {
            prop_assert!(u.contains(z, k));
        }
    }

    #[test]
    fn product_leading_term(z in -2i32..4, k in 0u32..3, w in -2i32..4, l in 0u32..3, a in 0.5f64..2.0, b in 0.5f64..2.0) {
        let (z, w) = (z as f64 * 0.5, w as f64 * 0.5);
        let u = PhgExpansion::scalar_monomial(z, k, re(a));
        let v = PhgExpansion::scalar_monomial(w, l, c(0.0, b));
        let p = phg_mul(&u, &v, DEFAULT_HORIZON).unwrap();
        let (pz, pk, coeff) = p.leading_term().unwrap();
        prop_assert!((pz - (z + w)).abs() < 1e-12);
        prop_assert_eq!(pk, k + l);
        prop_assert!((coeff[(0, 0)] - c(0.0, a * b)).norm() < 1e-12);
    }
}

#[test]
fn product_evaluates_pointwise() {
    let mut u = PhgExpansion::monomial(0.5, 1, CMat::identity(2, 2) * re(2.0));
    u.add_term(1.5, 0, CMat::from_fn(2, 2, |i, j| re((i + 2 * j) as f64)));
    let mut v = PhgExpansion::monomial(-0.25, 0, CMat::from_fn(2, 2, |i, j| c(i as f64, j as f64)));
    v.add_term(0.75, 2, CMat::identity(2, 2));
    let p = phg_mul(&u, &v, DEFAULT_HORIZON).unwrap();
    for x in [0.01, 0.1, 0.5] {
        let direct = u.evaluate(x) * v.evaluate(x);
        assert!((p.evaluate(x) - &direct).norm() < 1e-12 * direct.norm().max(1.0));
    }
}

#[test]
fn pole_orders_recovered_for_every_cutoff() {
    for cutoff in CutoffSpec::builtins() {
        for k in 0..=2u32 {
            for z in [-0.75, 0.0, 1.25] {
                let probe = mellin_pole_probe(z, k, &cutoff).unwrap();
                assert_eq!(probe.order, k + 1, "z = {z}, k = {k}, {cutoff:?}");
                let fact: f64 = (1..=k).map(|j| j as f64).product();
                let expected = if k % 2 == 0 { fact } else { -fact };
                assert!((probe.fitted_order - (k + 1) as f64).abs() < 0.05, "{probe:?}");
                assert!((probe.leading - expected).abs() < 1e-3 * fact, "{probe:?}");
            }
        }
    }
}
