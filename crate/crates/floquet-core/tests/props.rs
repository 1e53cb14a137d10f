//! Property tests for the algebraic substrate.
//!
//! Four families of randomized invariants back the hand-picked fixtures in
//! the unit suites: ring axioms for the exact polynomial and rational
//! function types, compositional reversion round trips for truncated series,
//! modulus-to-nome round trips in both directions, and invariance of
//! coupling polynomials under the index reflection n -> 1-n.

use floquet_core::modular::{modulus_from_nome, nome_from_modulus, nome_f64, theta3_sq_f64};
use floquet_core::instanton::rewrite_in_nn1;
use floquet_core::series::{rat, MPoly, PuiseuxSeries, Rat, RatFunc, SeriesVar, Sym};
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// strategies
// ---------------------------------------------------------------------------

fn small_rat() -> impl Strategy<Value = Rat> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| rat(n, d))
}

/// Polynomials over a mixed alphabet: two commuting indeterminates plus the
/// imaginary unit, whose square reduces to -1. Keeping the term count low
/// makes the axiom checks cheap while still exercising reduction.
fn small_poly() -> impl Strategy<Value = MPoly> {
    let term = (small_rat(), 0u16..=2, 0u16..=2, 0u16..=1).prop_map(|(c, a, b, i)| {
        MPoly::term(c, &[(Sym::Nu, a), (Sym::Nn1, b), (Sym::I, i)])
    });
    prop::collection::vec(term, 0..4).prop_map(|ts| {
        ts.into_iter().fold(MPoly::zero(), |acc, t| acc.add(&t))
    })
}

/// Nonzero denominators built from the band-edge factors that actually occur
/// in the eigenvalue expansions.
fn band_denominator() -> impl Strategy<Value = MPoly> {
    (1i64..=3, 1u16..=2).prop_map(|(j, e)| {
        let f = MPoly::sym(Sym::Nu).sub(&MPoly::int(j));
        let mut out = MPoly::one();
        for _ in 0..e {
            out = out.mul(&f);
        }
        out
    })
}

fn small_ratfunc() -> impl Strategy<Value = RatFunc> {
    (small_poly(), band_denominator())
        .prop_map(|(n, d)| RatFunc::fraction(n, d).expect("denominator is nonzero"))
}

/// An integer-lattice series with unit linear coefficient and valuation one:
/// the domain on which compositional reversion is defined.
fn reversible_series() -> impl Strategy<Value = PuiseuxSeries> {
    prop::collection::vec(small_rat(), 0..6).prop_map(|tail| {
        let mut s = PuiseuxSeries::monomial(SeriesVar::X, RatFunc::one(), 1, 1, 8, 1);
        for (i, c) in tail.into_iter().enumerate() {
            let m = PuiseuxSeries::monomial(
                SeriesVar::X,
                RatFunc::from_rat(c),
                i as i64 + 2,
                1,
                8,
                1,
            );
            s = s.add(&m).unwrap();
        }
        s
    })
}

/// A series with a nonzero constant term, the domain of multiplicative
/// inversion.
fn invertible_series() -> impl Strategy<Value = PuiseuxSeries> {
    (
        (-5i64..=5).prop_filter("unit constant term", |n| *n != 0),
        prop::collection::vec(small_rat(), 0..5),
    )
        .prop_map(|(c0, tail)| {
            let mut s = PuiseuxSeries::monomial(
                SeriesVar::X,
                RatFunc::from_rat(rat(c0, 1)),
                0,
                1,
                6,
                1,
            );
            for (i, c) in tail.into_iter().enumerate() {
                let m = PuiseuxSeries::monomial(
                    SeriesVar::X,
                    RatFunc::from_rat(c),
                    i as i64 + 1,
                    1,
                    6,
                    1,
                );
                s = s.add(&m).unwrap();
            }
            s
        })
}

// ---------------------------------------------------------------------------
// ring axioms
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn poly_addition_commutes_and_associates(
        a in small_poly(), b in small_poly(), c in small_poly()
    ) {
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
    }

    #[test]
    fn poly_multiplication_commutes_and_associates(
        a in small_poly(), b in small_poly(), c in small_poly()
    ) {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
    }

    #[test]
    fn poly_multiplication_distributes_over_addition(
        a in small_poly(), b in small_poly(), c in small_poly()
    ) {
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
    }

    #[test]
    fn poly_additive_inverse_and_identities(a in small_poly()) {
        prop_assert_eq!(a.add(&a.neg()), MPoly::zero());
        prop_assert_eq!(a.add(&MPoly::zero()), a.clone());
        prop_assert_eq!(a.mul(&MPoly::one()), a.clone());
        prop_assert_eq!(a.mul(&MPoly::zero()), MPoly::zero());
    }

    #[test]
    fn ratfunc_field_operations_are_consistent(
        a in small_ratfunc(), b in small_ratfunc(), c in small_ratfunc()
    ) {
        prop_assert!(a.add(&b).equals(&b.add(&a)));
        prop_assert!(a.mul(&b).equals(&b.mul(&a)));
        prop_assert!(a.mul(&b.add(&c)).equals(&a.mul(&b).add(&a.mul(&c))));
        prop_assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn ratfunc_division_inverts_multiplication(
        a in small_ratfunc(), b in small_ratfunc()
    ) {
        prop_assume!(!b.is_zero());
        let q = a.div(&b).unwrap();
        prop_assert!(q.mul(&b).equals(&a));
    }

    #[test]
    fn imaginary_unit_squares_to_minus_one(a in small_poly()) {
        let i = MPoly::sym(Sym::I);
        prop_assert_eq!(a.mul(&i).mul(&i), a.neg());
    }
}

// ---------------------------------------------------------------------------
// series reversion and inversion round trips
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reversion_round_trips_through_composition(s in reversible_series()) {
        let t = s.reverse().unwrap();
        let round = s.compose(&t).unwrap();
        let ident = PuiseuxSeries::monomial(SeriesVar::X, RatFunc::one(), 1, 1, 8, 1);
        prop_assert!(round.agrees_with(&ident), "s(t(y)) != y: {:?}", round);
        let other = t.compose(&s).unwrap();
        prop_assert!(other.agrees_with(&ident), "t(s(x)) != x: {:?}", other);
    }

    #[test]
    fn reversion_is_an_involution(s in reversible_series()) {
        let back = s.reverse().unwrap().reverse().unwrap();
        prop_assert!(back.agrees_with(&s));
    }

    #[test]
    fn multiplicative_inverse_round_trips(s in invertible_series()) {
        let one = PuiseuxSeries::monomial(SeriesVar::X, RatFunc::one(), 0, 1, 6, 1);
        prop_assert!(s.mul(&s.inv().unwrap()).unwrap().agrees_with(&one));
    }

    #[test]
    fn series_product_respects_evaluation(
        a in invertible_series(), b in invertible_series(), x in -0.3f64..0.3
    ) {
        let assign = |_s: Sym| -> Option<f64> { None };
        let (pa, _) = a.eval_f64(x, &assign).unwrap();
        let (pb, _) = b.eval_f64(x, &assign).unwrap();
        // Truncate the product to the shared window before comparing: the
        // dropped cross terms scale with x to the window power.
        let prod = a.mul(&b).unwrap();
        let (pp, _) = prod.eval_f64(x, &assign).unwrap();
        let slack = 60.0 * x.abs().powi(7) + 1e-12;
        prop_assert!((pa * pb - pp).abs() <= slack, "{} vs {}", pa * pb, pp);
    }
}

// ---------------------------------------------------------------------------
// modulus <-> nome round trips
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn nome_then_modulus_is_the_identity(order in 2i64..=6) {
        // k2 -> q(k2) -> k2: compose the nome map into the modulus map and
        // demand the identity through the requested window.
        let q_of_k2 = nome_from_modulus(order + 2).unwrap();
        let k2_of_q = modulus_from_nome(order + 2, 2).unwrap();
        let round = k2_of_q.compose(&q_of_k2).unwrap().truncate_to(order, 1);
        let ident = PuiseuxSeries::monomial(
            SeriesVar::K2, RatFunc::one(), 1, 1, order, 1,
        );
        prop_assert!(round.agrees_with(&ident), "window {}: {:?}", order, round);
    }

    #[test]
    fn modulus_then_nome_is_the_identity(order in 2i64..=5) {
        let k2_of_q = modulus_from_nome(order + 2, 1).unwrap();
        let q_of_k2 = nome_from_modulus(2 * (order + 2)).unwrap();
        let round = q_of_k2.compose(&k2_of_q).unwrap().truncate_to(order, 1);
        let ident = PuiseuxSeries::monomial(
            SeriesVar::Q, RatFunc::one(), 1, 1, order, 1,
        );
        prop_assert!(round.agrees_with(&ident), "window {}: {:?}", order, round);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn numeric_nome_matches_the_series_map(k2 in 0.001f64..0.4) {
        let q = nome_f64(k2);
        let k2_of_q = modulus_from_nome(14, 1).unwrap();
        let assign = |_s: Sym| -> Option<f64> { None };
        let (re, im) = k2_of_q.eval_f64(q, &assign).unwrap();
        // The truncation error scales with q^14; at k2 = 0.4, q ~ 0.03.
        prop_assert!(im.abs() < 1e-14);
        prop_assert!((re - k2).abs() < 1e-9, "k2={} re={}", k2, re);
    }

    #[test]
    fn quasi_momentum_rescaling_round_trips(k2 in 0.001f64..0.5, mu in 0.5f64..8.0) {
        // nu = mu * theta3^2(q) and back.
        let q = nome_f64(k2);
        let t3 = theta3_sq_f64(q);
        let nu = mu * t3;
        prop_assert!((nu / t3 - mu).abs() < 1e-12);
        prop_assert!(t3 > 1.0, "theta3^2 exceeds one for q > 0");
    }
}

// ---------------------------------------------------------------------------
// index reflection n -> 1-n
// ---------------------------------------------------------------------------

/// Polynomials in the product symbol n(n-1), optionally mixed with the
/// quasi-momentum: the shape every Lame coupling coefficient takes.
fn nn1_poly() -> impl Strategy<Value = MPoly> {
    let term = (small_rat(), 0u16..=3, 0u16..=2).prop_map(|(c, a, b)| {
        MPoly::term(c, &[(Sym::Nn1, a), (Sym::Nu, b)])
    });
    prop::collection::vec(term, 0..4).prop_map(|ts| {
        ts.into_iter().fold(MPoly::zero(), |acc, t| acc.add(&t))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coupling_polynomials_survive_index_reflection(p in nn1_poly()) {
        // Substitute Nn1 -> n(n-1), reflect n -> 1-n, and demand the literal
        // form is unchanged; then rewrite back and recover the original.
        let nn1_in_n = RatFunc::from_poly(
            MPoly::sym_pow(Sym::LitN, 2).sub(&MPoly::sym(Sym::LitN)),
        );
        let literal = RatFunc::from_poly(p.clone())
            .substitute(Sym::Nn1, &nn1_in_n)
            .unwrap();
        let one_minus_n = RatFunc::from_poly(MPoly::one().sub(&MPoly::sym(Sym::LitN)));
        let reflected = literal.substitute(Sym::LitN, &one_minus_n).unwrap();
        prop_assert!(reflected.equals(&literal), "not reflection invariant");
        let back = rewrite_in_nn1(&literal).unwrap();
        prop_assert!(back.equals(&RatFunc::from_poly(p)));
    }

    #[test]
    fn reflection_asymmetric_polynomials_are_rejected(a in 1i64..=5) {
        // A bare odd power of n is the canonical non-invariant: the rewrite
        // must refuse it rather than silently symmetrize.
        let p = RatFunc::from_poly(MPoly::sym(Sym::LitN).scale(&rat(a, 1)));
        prop_assert!(rewrite_in_nn1(&p).is_err());
    }
}
