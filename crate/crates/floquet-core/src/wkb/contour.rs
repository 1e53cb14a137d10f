//! Period integrals of the leading quasi-momentum over the three
//! independent cycles of the spectral curve.
//!
//! All three are expansions of `Integral sqrt(omega + sn^2) dx` (the leading
//! factor `i sqrt(2)` is left to the caller) obtained by expanding the root
//! around the region where it converges and integrating term by term:
//!
//! - large `omega` (alpha cycle): `2 sum_j C(1/2,j) J_j omega^(1/2 - j)` with
//!   `J_j = Integral_0^(pi/2) sin^(2j) / Delta`, a complete-integral ladder
//!   seeded by `J_0 = K`, `J_1 = (K - E)/k^2`;
//! - small `omega` (beta cycle): `sum_{j>=1} C(1/2,j) M_j omega^j` with
//!   `M_j` the closed contour integral of `1/(Delta sin^(2j-1))`, a ladder
//!   seeded by `M_1 = i pi`;
//! - small `omega~ = omega + 1` (gamma cycle): writing the potential as
//!   `omega~ - cn^2`, `i sum_{j>=1} (-1)^j C(1/2,j) N_j omega~^j` with `N_j`
//!   the contour integral of `1/(Delta cos^(2j-1))`, seeded by
//!   `N_1 = -i pi / k'`.
//!
//! The ladders follow from integrating the exact derivatives
//! `d/dphi [cos Delta sin^(1-m)]` and `d/dphi [sin Delta cos^(1-m)]` over a
//! closed contour; the omega-independent `j = 0` beta and gamma terms are
//! constants dropped from the quasi-momentum normalization.

use crate::series::{rat, rat_i, MPoly, PuiseuxSeries, Rat, RatFunc, SeriesVar, Sym};
use crate::Result;

fn binom_half(j_max: u32) -> Vec<Rat> {
    // C(1/2, j) by the falling recurrence.
    let mut out = vec![rat_i(1)];
    for j in 1..=j_max {
        let prev = out[j as usize - 1].clone();
        out.push(prev * (rat(1, 2) - rat_i(j as i64 - 1)) / rat_i(j as i64));
    }
    out
}

/// Ladder of `Integral_0^(pi/2) sin^(2j) phi / Delta dphi` as rational
/// combinations of the complete integrals `K` and `E`.
pub fn sine_even_ladder(j_max: u32) -> Result<Vec<RatFunc>> {
    let big_k = RatFunc::sym(Sym::BigK);
    let big_e = RatFunc::sym(Sym::BigE);
    let k2 = RatFunc::sym(Sym::K2);
    let mut js = vec![big_k.clone()];
    if j_max >= 1 {
        js.push(big_k.sub(&big_e).div(&k2)?);
    }
    for n in 1..j_max as i64 {
        // (2n+1) k^2 J_{n+1} = 2n (1 + k^2) J_n - (2n-1) J_{n-1}
        let a = js[n as usize].mul(&k2.add(&RatFunc::one())).scale(&rat_i(2 * n));
        let b = js[n as usize - 1].scale(&rat_i(2 * n - 1));
        js.push(a.sub(&b).div(&k2.scale(&rat_i(2 * n + 1)))?);
    }
    Ok(js)
}

/// Ladder of closed-contour `1/(Delta sin^(2j-1))` integrals, `j >= 1`.
pub fn inverse_sine_ladder(j_max: u32) -> Result<Vec<RatFunc>> {
    let i_pi = RatFunc::from_poly(MPoly::term(rat_i(1), &[(Sym::I, 1), (Sym::Pi, 1)]));
    let k2 = RatFunc::sym(Sym::K2);
    let mut ms = vec![RatFunc::zero(), i_pi];
    for n in 1..j_max as i64 {
        // 2n M_{n+1} = (2n-1)(1 + k^2) M_n - (2n-2) k^2 M_{n-1}
        let a = ms[n as usize]
            .mul(&k2.add(&RatFunc::one()))
            .scale(&rat_i(2 * n - 1));
        let b = ms[n as usize - 1].mul(&k2).scale(&rat_i(2 * n - 2));
        ms.push(a.sub(&b).scale(&(rat_i(1) / rat_i(2 * n))));
    }
    Ok(ms)
}

/// Ladder of closed-contour `1/(Delta cos^(2j-1))` integrals, `j >= 1`.
pub fn inverse_cosine_ladder(j_max: u32) -> Result<Vec<RatFunc>> {
    let kp = RatFunc::from_poly(MPoly::sym(Sym::Kp));
    let kp2 = RatFunc::one().sub(&RatFunc::sym(Sym::K2));
    let minus_i_pi = RatFunc::from_poly(MPoly::term(rat_i(-1), &[(Sym::I, 1), (Sym::Pi, 1)]));
    let k2 = RatFunc::sym(Sym::K2);
    let one_minus_2k2 = RatFunc::one().sub(&k2.scale(&rat_i(2)));
    let mut ns = vec![RatFunc::zero(), minus_i_pi.mul(&kp).div(&kp2)?];
    for n in 1..j_max as i64 {
        // 2n k'^2 N_{n+1} = (2n-1)(1 - 2k^2) N_n + (2n-2) k^2 N_{n-1}
        let a = ns[n as usize].mul(&one_minus_2k2).scale(&rat_i(2 * n - 1));
        let b = ns[n as usize - 1].mul(&k2).scale(&rat_i(2 * n - 2));
        ns.push(a.add(&b).div(&kp2.scale(&rat_i(2 * n)))?);
    }
    Ok(ns)
}

/// Alpha-cycle expansion, a series in `1/omega` on the half-integer lattice:
/// exponent `(2j - 1)/2` carries `2 C(1/2,j) J_j`.
pub fn electric_base(j_max: u32) -> Result<PuiseuxSeries> {
    let js = sine_even_ladder(j_max)?;
    let bs = binom_half(j_max);
    let terms = js
        .into_iter()
        .zip(bs)
        .enumerate()
        .map(|(j, (jj, b))| (2 * j as i64 - 1, jj.scale(&(b * rat_i(2)))));
    Ok(PuiseuxSeries::from_scaled_terms(
        SeriesVar::InvOmega,
        2,
        terms,
        2 * j_max as i64 - 1,
    ))
}

/// Beta-cycle expansion, a series in `omega` starting at the linear term.
pub fn magnetic_base(j_max: u32) -> Result<PuiseuxSeries> {
    let ms = inverse_sine_ladder(j_max)?;
    let bs = binom_half(j_max);
    let terms = ms
        .into_iter()
        .zip(bs)
        .enumerate()
        .skip(1)
        .map(|(j, (mj, b))| (j as i64, mj.scale(&b)));
    Ok(PuiseuxSeries::from_scaled_terms(
        SeriesVar::Omega,
        1,
        terms,
        j_max as i64,
    ))
}

/// Gamma-cycle expansion, a series in `omega~` starting at the linear term.
pub fn dyonic_base(j_max: u32) -> Result<PuiseuxSeries> {
    let ns = inverse_cosine_ladder(j_max)?;
    let bs = binom_half(j_max);
    let i_unit = RatFunc::sym(Sym::I);
    let terms = ns
        .into_iter()
        .zip(bs)
        .enumerate()
        .skip(1)
        .map(|(j, (nj, b))| {
            let sign = if j % 2 == 0 { rat_i(1) } else { rat_i(-1) };
            (j as i64, nj.mul(&i_unit).scale(&(b * sign)))
        });
    Ok(PuiseuxSeries::from_scaled_terms(
        SeriesVar::OmegaTilde,
        1,
        terms,
        j_max as i64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(num: MPoly, den: MPoly) -> RatFunc {
        RatFunc::from_poly(num).div(&RatFunc::from_poly(den)).unwrap()
    }

    fn k2pow(e: u16) -> MPoly {
        MPoly::sym_pow(Sym::K2, e)
    }

    fn kpoly(k: (i64, i64, i64), e: (i64, i64, i64)) -> MPoly {
        // (k.0 + k.1 k^2 + k.2 k^4) K + (e.0 + e.1 k^2 + e.2 k^4) E
        let kk = MPoly::int(k.0)
            .add(&k2pow(1).scale(&rat_i(k.1)))
            .add(&k2pow(2).scale(&rat_i(k.2)))
            .mul(&MPoly::sym(Sym::BigK));
        let ee = MPoly::int(e.0)
            .add(&k2pow(1).scale(&rat_i(e.1)))
            .add(&k2pow(2).scale(&rat_i(e.2)))
            .mul(&MPoly::sym(Sym::BigE));
        kk.add(&ee)
    }

    #[test]
    fn alpha_cycle_matches_tabulated_expansion() {
        // 2K w^(1/2) + (K-E)/k^2 w^(-1/2)
        //   - [(2+k^2)K - 2(1+k^2)E]/(12 k^4) w^(-3/2)
        //   + [(8+3k^2+4k^4)K - (8+7k^2+8k^4)E]/(120 k^6) w^(-5/2)
        let s = electric_base(3).unwrap();
        assert_eq!(
            s.coeff(-1, 2).unwrap(),
            RatFunc::sym(Sym::BigK).scale(&rat_i(2))
        );
        assert_eq!(
            s.coeff(1, 2).unwrap(),
            frac(kpoly((1, 0, 0), (-1, 0, 0)), k2pow(1))
        );
        assert_eq!(
            s.coeff(3, 2).unwrap(),
            frac(kpoly((2, 1, 0), (-2, -2, 0)), k2pow(2).scale(&rat_i(12))).neg()
        );
        assert_eq!(
            s.coeff(5, 2).unwrap(),
            frac(kpoly((8, 3, 4), (-8, -7, -8)), k2pow(3).scale(&rat_i(120)))
        );
    }

    #[test]
    fn beta_cycle_matches_tabulated_expansion() {
        // i pi [ w/2 - (1+k^2) w^2 / 16 + (3 + 2k^2 + 3k^4) w^3 / 128 ]
        let s = magnetic_base(3).unwrap();
        let ipi = |p: MPoly, c: Rat| {
            RatFunc::from_poly(p.mul(&MPoly::term(c, &[(Sym::I, 1), (Sym::Pi, 1)])))
        };
        assert_eq!(s.coeff(1, 1).unwrap(), ipi(MPoly::one(), rat(1, 2)));
        assert_eq!(
            s.coeff(2, 1).unwrap(),
            ipi(MPoly::one().add(&k2pow(1)), rat(-1, 16))
        );
        assert_eq!(
            s.coeff(3, 1).unwrap(),
            ipi(
                MPoly::int(3)
                    .add(&k2pow(1).scale(&rat_i(2)))
                    .add(&k2pow(2).scale(&rat_i(3))),
                rat(1, 128)
            )
        );
        assert_eq!(s.val_scaled(), Some(1));
    }

    #[test]
    fn gamma_cycle_matches_tabulated_expansion() {
        // -pi [ w~/(2k') + (1-2k^2) w~^2/(16 k'^3) + (3-8k^2+8k^4) w~^3/(128 k'^5) ]
        let s = dyonic_base(3).unwrap();
        let kp2 = MPoly::one().sub(&k2pow(1));
        let pi_kp = |p: MPoly, c: Rat, kp_den: u32| {
            // -pi * p / (2^.. k'^(2m+1)) written with k' = kp/(1-k^2)^(m+1) style
            let num = p
                .mul(&MPoly::sym(Sym::Pi))
                .mul(&MPoly::sym(Sym::Kp))
                .scale(&(c * rat_i(-1)));
            frac(num, kp2.pow(kp_den))
        };
        assert_eq!(s.coeff(1, 1).unwrap(), pi_kp(MPoly::one(), rat(1, 2), 1));
        assert_eq!(
            s.coeff(2, 1).unwrap(),
            pi_kp(
                MPoly::one().sub(&k2pow(1).scale(&rat_i(2))),
                rat(1, 16),
                2
            )
        );
        assert_eq!(
            s.coeff(3, 1).unwrap(),
            pi_kp(
                MPoly::int(3)
                    .sub(&k2pow(1).scale(&rat_i(8)))
                    .add(&k2pow(2).scale(&rat_i(8))),
                rat(1, 128),
                3
            )
        );
    }

    #[test]
    fn beta_cycle_mirrors_onto_gamma_cycle() {
        // Substituting k^2 -> -k^2/(1-k^2), omega -> -omega~ into the beta
        // expansion must equal i k' times the gamma expansion.
        let beta = magnetic_base(4).unwrap();
        let gamma = dyonic_base(4).unwrap();
        let kp2 = MPoly::one().sub(&k2pow(1));
        let rep = RatFunc::from_poly(k2pow(1).neg()).div(&RatFunc::from_poly(kp2)).unwrap();
        let mirrored = beta
            .substitute_sym(Sym::K2, &rep)
            .unwrap()
            .scale_var(&RatFunc::one().neg())
            .unwrap()
            .with_var(SeriesVar::OmegaTilde);
        let ikp = RatFunc::from_poly(MPoly::term(rat_i(1), &[(Sym::I, 1), (Sym::Kp, 1)]));
        let target = gamma.mul_coeff(&ikp);
        assert!(mirrored.agrees_with(&target));
    }
}
