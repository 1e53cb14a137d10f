//! Modular building blocks: Jacobi theta constants, half-period lattice
//! roots, nome and modulus conversions, the weight-two Eisenstein series,
//! and complete elliptic integrals (symbolic expansions and float values).
//!
//! Convention: the nome variable q is the square of the usual one, so theta
//! constants expand in half-integer powers of q,
//!
//!   theta2 = 2 q^(1/8) sum q^(n(n+1)/2),   theta3 = 1 + 2 sum q^(n^2/2),
//!
//! and the modulus expansion starts k^2 = 16 q^(1/2) - 128 q + ...
//! All symbolic series here are expansions around q = 0 with rational
//! coefficients (pi enters only through K and E).

use crate::error::{CoreError, Result};
use crate::series::{rat, rat_i, MPoly, PuiseuxSeries, Rat, RatFunc, SeriesVar, Sym};
use num_traits::One;

/// theta2(q) on the eighth-integer lattice, exact through q^(t_num/t_den).
pub fn theta2(t_num: i64, t_den: i64) -> PuiseuxSeries {
    let trunc8 = t_num * 8 / t_den;
    let mut terms = Vec::new();
    let mut n = 0i64;
    loop {
        let key = 1 + 4 * n * (n + 1);
        if key > trunc8 {
            break;
        }
        terms.push((key, RatFunc::int(2)));
        n += 1;
    }
    PuiseuxSeries::from_scaled_terms(SeriesVar::Q, 8, terms, trunc8)
}

/// theta3(q) = 1 + 2 sum q^(n^2/2).
pub fn theta3(t_num: i64, t_den: i64) -> PuiseuxSeries {
    half_square_theta(t_num, t_den, false)
}

/// theta4(q) = 1 + 2 sum (-1)^n q^(n^2/2).
pub fn theta4(t_num: i64, t_den: i64) -> PuiseuxSeries {
    half_square_theta(t_num, t_den, true)
}

fn half_square_theta(t_num: i64, t_den: i64, alternating: bool) -> PuiseuxSeries {
    let trunc2 = t_num * 2 / t_den;
    let mut terms = vec![(0i64, RatFunc::one())];
    let mut n = 1i64;
    loop {
        let key = n * n;
        if key > trunc2 {
            break;
        }
        let c = if alternating && n % 2 == 1 { -2 } else { 2 };
        terms.push((key, RatFunc::int(c)));
        n += 1;
    }
    PuiseuxSeries::from_scaled_terms(SeriesVar::Q, 2, terms, trunc2)
}

/// Fourth powers of the theta constants, the raw material of the lattice
/// roots: (theta2^4, theta3^4, theta4^4).
pub fn theta_fourth_powers(t_num: i64, t_den: i64) -> Result<(PuiseuxSeries, PuiseuxSeries, PuiseuxSeries)> {
    let t2 = theta2(t_num, t_den)
        .pow_int(4)?
        .truncate_to(t_num, t_den)
        .normalize_lattice();
    let t3 = theta3(t_num, t_den)
        .pow_int(4)?
        .truncate_to(t_num, t_den)
        .normalize_lattice();
    let t4 = theta4(t_num, t_den)
        .pow_int(4)?
        .truncate_to(t_num, t_den)
        .normalize_lattice();
    Ok((t2, t3, t4))
}

/// Half-period lattice roots (e1, e2, e3) as nome expansions, normalized so
/// that e1 + e2 + e3 = 0, e1 - e2 = theta3^4, e3 - e2 = theta2^4.
pub fn lattice_roots(t_num: i64, t_den: i64) -> Result<(PuiseuxSeries, PuiseuxSeries, PuiseuxSeries)> {
    let (t2, t3, _) = theta_fourth_powers(t_num, t_den)?;
    let e1 = t3.mul_rat(&rat(2, 3)).sub(&t2.mul_rat(&rat(1, 3)))?;
    let e2 = t3.mul_rat(&rat(-1, 3)).sub(&t2.mul_rat(&rat(1, 3)))?;
    let e3 = t2.mul_rat(&rat(2, 3)).sub(&t3.mul_rat(&rat(1, 3)))?;
    Ok((e1, e2, e3))
}

/// Squared modulus k^2(q) = theta2^4 / theta3^4 = 16 q^(1/2) - 128 q + ...
pub fn modulus_from_nome(t_num: i64, t_den: i64) -> Result<PuiseuxSeries> {
    // The quotient loses no window here (theta3^4 has valuation zero), but
    // the fourth powers must be carried deep enough for the tail of the
    // division to stay exact through the request.
    let (t2, t3, _) = theta_fourth_powers(t_num, t_den)?;
    Ok(t2.div(&t3)?.normalize_lattice())
}

/// Modulus k(q) from the square root of k^2(q); leading term 4 q^(1/4).
pub fn sqrt_modulus_from_nome(t_num: i64, t_den: i64) -> Result<PuiseuxSeries> {
    Ok(modulus_from_nome(t_num, t_den)?.sqrt()?.normalize_lattice())
}

/// Modulus k(q) from the quotient product formula,
/// 4 q^(1/4) prod ((1+q^n)/(1+q^(n-1/2)))^4, used as an independent check.
pub fn sqrt_modulus_product(t_num: i64, t_den: i64) -> Result<PuiseuxSeries> {
    let trunc4 = t_num * 4 / t_den;
    let mut out = PuiseuxSeries::monomial(SeriesVar::Q, RatFunc::int(4), 1, 4, trunc4, 4);
    let mut n = 1i64;
    loop {
        // Factor exponents n and n - 1/2 in q, scaled by 4.
        let e_int = 4 * n;
        let e_half = 4 * n - 2;
        if e_half > trunc4 {
            break;
        }
        let plus_int = PuiseuxSeries::from_scaled_terms(
            SeriesVar::Q,
            4,
            [(0, RatFunc::one()), (e_int, RatFunc::one())],
            trunc4,
        );
        let plus_half = PuiseuxSeries::from_scaled_terms(
            SeriesVar::Q,
            4,
            [(0, RatFunc::one()), (e_half, RatFunc::one())],
            trunc4,
        );
        out = out.mul(&plus_int.pow_int(4)?)?;
        out = out.div(&plus_half.pow_int(4)?)?;
        n += 1;
    }
    Ok(out.truncate_scaled(trunc4))
}

/// Complementary modulus k'(q) = prod ((1-q^(n-1/2))/(1+q^(n-1/2)))^4.
pub fn comp_modulus_from_nome(t_num: i64, t_den: i64) -> Result<PuiseuxSeries> {
    let trunc2 = t_num * 2 / t_den;
    let mut out = PuiseuxSeries::constant(SeriesVar::Q, RatFunc::one(), trunc2, 2);
    let mut n = 1i64;
    loop {
        let e_half = 2 * n - 1;
        if e_half > trunc2 {
            break;
        }
        let minus = PuiseuxSeries::from_scaled_terms(
            SeriesVar::Q,
            2,
            [(0, RatFunc::one()), (e_half, RatFunc::int(-1))],
            trunc2,
        );
        let plus = PuiseuxSeries::from_scaled_terms(
            SeriesVar::Q,
            2,
            [(0, RatFunc::one()), (e_half, RatFunc::one())],
            trunc2,
        );
        out = out.mul(&minus.pow_int(4)?)?;
        out = out.div(&plus.pow_int(4)?)?;
        n += 1;
    }
    Ok(out.truncate_scaled(trunc2))
}

/// Weight-two Eisenstein series E2(q) = 1 - 24 sum sigma1(n) q^n.
pub fn eisenstein_e2(t: i64) -> PuiseuxSeries {
    let mut terms = vec![(0i64, RatFunc::one())];
    for n in 1..=t {
        let s: i64 = (1..=n).filter(|d| n % d == 0).sum();
        terms.push((n, RatFunc::from_rat(rat_i(-24 * s))));
    }
    PuiseuxSeries::from_scaled_terms(SeriesVar::Q, 1, terms, t)
}

/// Inverse of the modulus map: the half-power of the nome as a series in
/// k^2, obtained by reverting k^2(q). Returns r with q^(1/2) = r(k^2),
/// r = k^2/16 + (k^2)^2/32 + ...
pub fn half_nome_from_modulus(order_k2: i64) -> Result<PuiseuxSeries> {
    // k^2 exact through q^ceil(order/2) determines z = q^(1/2) through
    // z^order, and reversion preserves the window one to one.
    let q_order = (order_k2 + 1) / 2;
    let k2 = modulus_from_nome(q_order, 1)?;
    let (z, _v) = k2.reindex_by_valuation()?;
    let r = z.reverse()?;
    Ok(r.truncate_scaled(order_k2).with_var(SeriesVar::K2))
}

/// Nome q as a series in k^2: square of `half_nome_from_modulus`.
pub fn nome_from_modulus(order_k2: i64) -> Result<PuiseuxSeries> {
    let r = half_nome_from_modulus(order_k2)?;
    Ok(r.mul(&r)?.truncate_scaled(order_k2))
}

/// Half-period mirror q^(1/2) -> -q^(1/2) on a half-integer lattice series;
/// exchanges e2 with e3 and maps (k, k') to (i k/k', 1/k').
pub fn mirror_half_nome(s: &PuiseuxSeries) -> Result<PuiseuxSeries> {
    if s.lattice_den() > 2 {
        return Err(CoreError::DomainError(
            "mirror flip needs a half-integer exponent lattice".into(),
        ));
    }
    let s2 = s.rescale_lattice(2);
    Ok(PuiseuxSeries::from_scaled_terms(
        s2.var(),
        2,
        s2.iter_terms().map(|(k, c)| {
            let c = if k % 2 != 0 { c.neg() } else { c.clone() };
            (*k, c)
        }),
        s2.trunc_scaled(),
    ))
}

/// Complete elliptic integral K(k) as a series in k^2 with symbolic pi:
/// K = (pi/2) sum ((2n-1)!!/(2n)!!)^2 (k^2)^n.
pub fn ellip_k_series(order: i64) -> PuiseuxSeries {
    let half_pi = RatFunc::from_poly(MPoly::sym(Sym::Pi).scale(&rat(1, 2)));
    let mut c = Rat::one();
    let mut terms = Vec::new();
    for n in 0..=order {
        if n > 0 {
            let f = rat(2 * n - 1, 2 * n);
            c = c * f.clone() * f;
        }
        terms.push((n, half_pi.scale(&c)));
    }
    PuiseuxSeries::from_scaled_terms(SeriesVar::K2, 1, terms, order)
}

/// Complete elliptic integral E(k) as a series in k^2 with symbolic pi:
/// E = (pi/2)(1 - k^2/4 - 3 k^4/64 - ...).
pub fn ellip_e_series(order: i64) -> PuiseuxSeries {
    let half_pi = RatFunc::from_poly(MPoly::sym(Sym::Pi).scale(&rat(1, 2)));
    let mut c = Rat::one();
    let mut terms = Vec::new();
    for n in 0..=order {
        if n > 0 {
            c = c * rat(2 * n - 3, 2 * n) * rat(2 * n - 1, 2 * n);
        }
        terms.push((n, half_pi.scale(&c)));
    }
    PuiseuxSeries::from_scaled_terms(SeriesVar::K2, 1, terms, order)
}

/// Arithmetic-geometric mean.
pub fn agm(a0: f64, b0: f64) -> f64 {
    let mut a = a0;
    let mut b = b0;
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        a = an;
        b = bn;
        if (a - b).abs() <= 4.0 * f64::EPSILON * a.abs() {
            break;
        }
    }
    0.5 * (a + b)
}

/// K(k) numerically from the AGM, argument is k^2 in [0, 1).
pub fn ellip_k_f64(k2: f64) -> f64 {
    std::f64::consts::PI / (2.0 * agm(1.0, (1.0 - k2).sqrt()))
}

/// E(k) numerically from the AGM with the defect sum, argument is k^2.
pub fn ellip_e_f64(k2: f64) -> f64 {
    if k2 == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let mut a = 1.0f64;
    let mut b = (1.0 - k2).sqrt();
    let mut sum = 0.5 * k2;
    let mut pow2 = 0.5;
    for _ in 0..64 {
        let c = 0.5 * (a - b);
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        a = an;
        b = bn;
        pow2 *= 2.0;
        sum += pow2 * c * c;
        if c.abs() <= 4.0 * f64::EPSILON * a.abs() {
            break;
        }
    }
    ellip_k_f64(k2) * (1.0 - sum)
}

/// Nome in the squared convention of this module: q = exp(-2 pi K'/K).
pub fn nome_f64(k2: f64) -> f64 {
    let k = ellip_k_f64(k2);
    let kp = ellip_k_f64(1.0 - k2);
    (-2.0 * std::f64::consts::PI * kp / k).exp()
}

/// theta3^2 evaluated at a squared-convention nome: the sum runs over the
/// standard nome sqrt(q).
pub fn theta3_sq_f64(q: f64) -> f64 {
    let z = q.sqrt();
    let mut t = 1.0;
    let mut n = 1u32;
    loop {
        let term = 2.0 * z.powi((n * n) as i32);
        t += term;
        if term < 1e-17 || n > 40 {
            break;
        }
        n += 1;
    }
    t * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::rat_i;

    #[test]
    fn theta_jacobi_identity() {
        // theta3^4 = theta2^4 + theta4^4
        let (t2, t3, t4) = theta_fourth_powers(6, 1).unwrap();
        let sum = t2.add(&t4).unwrap();
        assert!(t3.agrees_with(&sum));
    }

    #[test]
    fn modulus_expansion_leading_terms() {
        let k2 = modulus_from_nome(3, 1).unwrap();
        assert_eq!(k2.coeff(1, 2).unwrap(), RatFunc::int(16));
        assert_eq!(k2.coeff(1, 1).unwrap(), RatFunc::int(-128));
        assert_eq!(k2.coeff(3, 2).unwrap(), RatFunc::int(704));
        assert_eq!(k2.coeff(2, 1).unwrap(), RatFunc::int(-3072));
    }

    #[test]
    fn lattice_roots_sum_to_zero_and_split_thetas() {
        let (e1, e2, e3) = lattice_roots(5, 1).unwrap();
        let (t2, t3, _) = theta_fourth_powers(5, 1).unwrap();
        let zero = PuiseuxSeries::zero(SeriesVar::Q, 5, 1);
        assert!(e1.add(&e2).unwrap().add(&e3).unwrap().agrees_with(&zero));
        assert!(e1.sub(&e2).unwrap().agrees_with(&t3));
        assert!(e3.sub(&e2).unwrap().agrees_with(&t2));
    }

    #[test]
    fn eisenstein_first_coefficients() {
        let e2 = eisenstein_e2(5);
        let expect: Vec<i64> = vec![1, -24, -72, -96, -168, -144];
        for (n, v) in expect.iter().enumerate() {
            assert_eq!(e2.coeff(n as i64, 1).unwrap(), RatFunc::int(*v));
        }
    }

    #[test]
    fn sqrt_modulus_routes_agree() {
        let a = sqrt_modulus_from_nome(4, 1).unwrap();
        let b = sqrt_modulus_product(4, 1).unwrap();
        assert!(a.agrees_with(&b));
        assert_eq!(a.coeff(1, 4).unwrap(), RatFunc::int(4));
    }

    #[test]
    fn comp_modulus_squares_to_complement() {
        let k2 = modulus_from_nome(4, 1).unwrap();
        let kp = comp_modulus_from_nome(4, 1).unwrap();
        let kp2 = kp.mul(&kp).unwrap();
        let one = PuiseuxSeries::constant(SeriesVar::Q, RatFunc::one(), 4, 1);
        assert!(kp2.agrees_with(&one.sub(&k2).unwrap()));
    }

    #[test]
    fn nome_modulus_roundtrip() {
        // q^(1/2)(k^2) reverted against k^2(q): composing recovers z = q^(1/2).
        let r = half_nome_from_modulus(6).unwrap();
        let k2 = modulus_from_nome(6, 1).unwrap();
        let (z, _) = k2.reindex_by_valuation().unwrap();
        // r has variable K2; composition substitutes the k^2 series in z.
        let back = r.with_var(SeriesVar::Q).compose(&z).unwrap();
        let ident = PuiseuxSeries::from_rats(SeriesVar::Q, &[rat_i(0), rat_i(1)], 6);
        assert!(back.agrees_with(&ident));
    }

    #[test]
    fn half_nome_leading_coefficients() {
        let r = half_nome_from_modulus(4).unwrap();
        assert_eq!(r.coeff(1, 1).unwrap(), RatFunc::from_rat(rat(1, 16)));
        assert_eq!(r.coeff(2, 1).unwrap(), RatFunc::from_rat(rat(1, 32)));
    }

    #[test]
    fn mirror_swaps_middle_roots() {
        let (e1, e2, e3) = lattice_roots(5, 1).unwrap();
        assert!(mirror_half_nome(&e2).unwrap().agrees_with(&e3));
        assert!(mirror_half_nome(&e3).unwrap().agrees_with(&e2));
        // e1 is fixed only to the extent its odd part vanishes; it maps to
        // -e2 - e3 mirrored, consistency below.
        let sum = e1.add(&e2).unwrap().add(&e3).unwrap();
        assert!(mirror_half_nome(&sum).unwrap().agrees_with(&sum));
    }

    #[test]
    fn mirror_modulus_matches_quotient_rule() {
        // k^2 -> -k^2/(1-k^2) under the mirror flip.
        let k2 = modulus_from_nome(4, 1).unwrap();
        let lhs = mirror_half_nome(&k2).unwrap();
        let one = PuiseuxSeries::constant(SeriesVar::Q, RatFunc::one(), 4, 1);
        let rhs = k2.neg().div(&one.sub(&k2).unwrap()).unwrap();
        assert!(lhs.agrees_with(&rhs));
    }

    #[test]
    fn elliptic_series_match_agm_numerics() {
        let ks = ellip_k_series(24);
        let es = ellip_e_series(24);
        for &k2 in &[0.01f64, 0.05, 0.1] {
            let (kr, ki) = ks.eval_f64(k2, &|_| None).unwrap();
            assert!(ki.abs() < 1e-14);
            assert!((kr - ellip_k_f64(k2)).abs() < 1e-12, "K mismatch at {}", k2);
            let (er, _) = es.eval_f64(k2, &|_| None).unwrap();
            assert!((er - ellip_e_f64(k2)).abs() < 1e-12, "E mismatch at {}", k2);
        }
    }

    #[test]
    fn numeric_nome_matches_series_inverse() {
        // Evaluate q(k^2) series against exp(-2 pi K'/K) at small modulus.
        let q_series = nome_from_modulus(10).unwrap();
        for &k2 in &[0.02f64, 0.08] {
            let (qr, _) = q_series.eval_f64(k2, &|_| None).unwrap();
            let q = nome_f64(k2);
            assert!((qr - q).abs() < 1e-10, "nome mismatch at {}: {} vs {}", k2, qr, q);
        }
    }
}
