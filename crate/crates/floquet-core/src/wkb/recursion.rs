//! All-order recursion for the quasi-momentum hierarchy.
//!
//! Substituting `Phi = exp(i Integral P dx)` with `P = sum_m eps^(m-1) p_m`
//! into `(eps^2 / 2) Phi'' = (omega + sn^2) Phi` and collecting powers of
//! `eps` gives
//!
//! ```text
//!     p_0 = i sqrt(2) t^(1/2),            t = omega + sn^2,
//!     p_m = [ i p_{m-1}' - sum_{i+j=m, i,j>=1} p_i p_j ] / (2 p_0),
//! ```
//!
//! where division by `2 p_0` is multiplication by `-(i sqrt(2)/4) t^(-1/2)`.
//! Structural invariants checked here: even members are plain, odd members
//! are pure `w` terms, and for `l >= 1` the odd member `p_{2l+1}` spreads over
//! integer powers `t^(-(3l+1)) .. t^(-2)` while the even member `p_{2l}`
//! spreads over half-odd powers `t^(-(3l-1/2)) .. t^(1/2)`.

use super::ring::HalfLaurent;
use crate::series::{rat, MPoly, Sym};

/// `p_0 = i sqrt(2) t^(1/2)`.
pub fn leading_momentum() -> HalfLaurent {
    HalfLaurent::plain_term(1, MPoly::term(rat(1, 1), &[(Sym::I, 1), (Sym::Sqrt2, 1)]))
}

/// Compute `p_0 .. p_max` of the hierarchy.
pub fn momentum_hierarchy(max_index: usize) -> Vec<HalfLaurent> {
    let mut ps: Vec<HalfLaurent> = Vec::with_capacity(max_index + 1);
    ps.push(leading_momentum());
    // 1/(2 p_0) = -(i sqrt(2)/4) t^(-1/2)
    let inv_two_p0 = MPoly::term(rat(-1, 4), &[(Sym::I, 1), (Sym::Sqrt2, 1)]);
    for m in 1..=max_index {
        let i_unit = MPoly::sym(Sym::I);
        let mut numer = ps[m - 1].differentiate().scale(&i_unit);
        for i in 1..m {
            numer = numer.sub(&ps[i].mul(&ps[m - i]));
        }
        let pm = numer.scale(&inv_two_p0).shift(-1);
        debug_assert!(
            if m % 2 == 0 { pm.is_plain() } else { pm.is_w_only() },
            "parity structure broken at index {m}"
        );
        ps.push(pm);
    }
    ps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{rat, rat_i};
    use crate::wkb::ring::{w_prime_coeffs, w_squared_coeffs};

    fn isqrt2(c: Rat) -> MPoly {
        MPoly::term(c, &[(Sym::I, 1), (Sym::Sqrt2, 1)])
    }

    use crate::series::Rat;

    #[test]
    fn first_correction_is_log_derivative_of_leading_term() {
        // p_1 = (i/2) w / t
        let ps = momentum_hierarchy(1);
        let p1 = &ps[1];
        assert!(p1.is_w_only());
        assert_eq!(p1.num_terms(), 1);
        assert_eq!(p1.w_part(-2), MPoly::term(rat(1, 2), &[(Sym::I, 1)]));
    }

    #[test]
    fn second_correction_matches_hand_reduction() {
        // p_2 = i sqrt(2) [ (1/8) w' t^(-3/2) - (5/16) w^2 t^(-5/2) ]
        let ps = momentum_hierarchy(2);
        let w1 = w_prime_coeffs();
        let w2 = w_squared_coeffs();
        let mut expect = HalfLaurent::zero();
        for (s, c) in w1.iter().enumerate() {
            expect = expect.add(&HalfLaurent::plain_term(
                -3 + 2 * s as i64,
                c.mul(&isqrt2(rat(1, 8))),
            ));
        }
        for (s, c) in w2.iter().enumerate() {
            expect = expect.add(&HalfLaurent::plain_term(
                -5 + 2 * s as i64,
                c.mul(&isqrt2(rat(-5, 16))),
            ));
        }
        assert_eq!(ps[2], expect);
    }

    #[test]
    fn hierarchy_satisfies_defining_relation() {
        // -(1/2) sum_{i+j=m} p_i p_j + (i/2) p_{m-1}' must vanish for m >= 1
        // (and equal t for m = 0).
        let max = 6;
        let ps = momentum_hierarchy(max);
        for m in 1..=max {
            let mut acc = HalfLaurent::zero();
            for i in 0..=m {
                acc = acc.add(&ps[i].mul(&ps[m - i]));
            }
            let mut rel = acc.scale_rat(&rat(-1, 2));
            let half_i = MPoly::term(rat(1, 2), &[(Sym::I, 1)]);
            rel = rel.add(&ps[m - 1].differentiate().scale(&half_i));
            assert!(rel.is_zero(), "defining relation fails at order {m}");
        }
        // m = 0: -(1/2) p_0^2 = t.
        let sq = ps[0].mul(&ps[0]).scale_rat(&rat(-1, 2));
        assert_eq!(sq, HalfLaurent::plain_term(2, MPoly::one()));
    }

    #[test]
    fn parity_and_support_windows() {
        let ps = momentum_hierarchy(8);
        for l in 1..=3usize {
            let podd = &ps[2 * l + 1];
            assert!(podd.is_w_only());
            // integer t-powers between -(3l+1) and -2
            assert_eq!(podd.min_key().unwrap(), -2 * (3 * l as i64 + 1));
            assert_eq!(podd.max_key().unwrap(), -4);
            assert!(podd.keys().all(|k| k % 2 == 0));
        }
        for l in 1..=4usize {
            let peven = &ps[2 * l];
            assert!(peven.is_plain());
            // half-odd t-powers between -(3l - 1/2) and 1/2
            assert_eq!(peven.min_key().unwrap(), -(6 * l as i64 - 1));
            assert_eq!(peven.max_key().unwrap(), 1);
            assert!(peven.keys().all(|k| k % 2 != 0));
        }
    }

    #[test]
    fn odd_members_have_no_constant_of_integration_obstruction() {
        // every odd member's exponents are <= -2, so each term is an exact
        // x-derivative of an inverse power of t.
        let ps = momentum_hierarchy(7);
        for idx in [3usize, 5, 7] {
            assert!(ps[idx].max_key().unwrap() <= -4);
        }
    }
}
