//! Reduction of quasi-momentum corrections to total derivatives plus a
//! minimal integrand, and extraction of spectral differential operators.
//!
//! Over a period, `Integral p_m dx` simplifies drastically:
//!
//! - Odd members reduce to zero: every term `c w t^(-(l'+1))` is the exact
//!   derivative of `-(c / (2l')) t^(-l')`.  [`reduce_odd`] returns the list
//!   of antiderivative coefficients as a replayable certificate.
//! - Even members reduce, modulo images of the second derivative operator
//!   `d^2/dx^2` acting on inverse powers of `t`, to a short integrand whose
//!   period integral is a derivative polynomial in omega applied to the
//!   leading period integral.  [`reduce_even`] performs the two-stage
//!   cancellation and returns both the subtraction certificate and the
//!   minimal remainder.
//!
//! Stage one cancels the `l` deepest powers using `d^2(t^(-beta))` with
//! `beta = 3l - 3/2 - l'`, `l' = 1..l`, each of which expands into exactly
//! four consecutive half-odd powers of `t`.  Stage two inspects each
//! remaining band in th trigonometric limit `k -> 0`,
//! `omega -> (W - 1)/2` (where the potential degenerates to `cos`), and
//! subtracts multiples of `(2 omega + 1)^e d^2(t^(-beta))` until the band
//! coefficient collapses to the single monomial `a W^(l-r)`.  The multiplier
//! exponents are solved from one linear equation each, lowest monomial first.
//!
//! The final integrand contains only plain terms `gamma_r t^(1/2 - r)`, and
//! since `d^r/d omega^r t^(1/2) = (prod_{s<r} (1/2 - s)) t^(1/2 - r)`, the
//! period integral becomes a differential operator in omega with polynomial
//! coefficients acting on the leading integral.  All imaginary and sqrt(2)
//! scalars must cancel in that extraction; failure signals a broken
//! reduction and is reported, never repaired silently.

use super::ring::{half_falling_factor, two_omega_plus_one_pow, HalfLaurent};
use crate::series::{rat, rat_i, substitute_poly, MPoly, Rat, RatFunc, Sym};
use crate::{CoreError, Result};
use num_traits::Zero;

/// Which potential coordinate an operator's polynomial coefficients refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// Coefficients are polynomials in `omega` (potential `omega + sn^2`).
    Omega,
    /// Coefficients are polynomials in the shifted coordinate
    /// `omega~ = omega + 1` (potential `omega~ - cn^2`).
    OmegaTilde,
    /// Trigonometric degeneration: coefficients are polynomials in the
    /// band parameter `W` (potential `(W - cos 2z)/2`).
    Mathieu,
}

/// Certificate that an odd member integrates to zero over a period:
/// the member equals `sum_i d/dx [ c_i t^(-l_i) ]`.
#[derive(Debug, Clone)]
pub struct OddCertificate {
    /// Pairs `(c, l)` meaning the antiderivative term `c t^(-l)`.
    pub antiderivatives: Vec<(MPoly, i64)>,
}

impl OddCertificate {
    /// Re-differentiate the antiderivative and return it, for soundness
    /// checks against the original member.
    pub fn replay(&self) -> HalfLaurent {
        let mut acc = HalfLaurent::zero();
        for (c, l) in &self.antiderivatives {
            acc = acc.add(&HalfLaurent::plain_term(-2 * l, c.clone()));
        }
        acc.differentiate()
    }
}

/// Certificate and remainder for an even member: the member equals
/// `sum_i m_i * d^2/dx^2 [ t^(-beta_i) ] + integrand`.
#[derive(Debug, Clone)]
pub struct EvenReduction {
    /// Pairs `(multiplier, 2*beta)` of second-derivative images subtracted.
    pub subtractions: Vec<(MPoly, i64)>,
    /// The minimal integrand: plain terms `gamma_r t^(1/2 - r)`.
    pub integrand: HalfLaurent,
}

impl EvenReduction {
    /// Rebuild the original member from certificate plus remainder.
    pub fn replay(&self) -> HalfLaurent {
        let mut acc = self.integrand.clone();
        for (m, two_beta) in &self.subtractions {
            acc = acc.add(&second_derivative_of_inverse_power(*two_beta).scale(m));
        }
        acc
    }
}

/// A differential operator `sum_r coeff_r(omega) d^r/d omega^r` produced by
/// the reduction, mapping the leading period integral to a higher one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WkbOperator {
    /// Order of the correction this operator generates (even, `2l`).
    pub order: u32,
    pub chart: Chart,
    /// Coefficient polynomials indexed by derivative degree `r`.
    pub coeffs: Vec<MPoly>,
}

/// `d/dx [ t^(-beta) ] = -2 beta w t^(-beta - 1)`, with `beta = two_beta/2`.
pub fn derivative_of_inverse_power(two_beta: i64) -> HalfLaurent {
    HalfLaurent::w_term(-two_beta - 2, MPoly::constant(rat_i(-two_beta)))
}

/// `d^2/dx^2 [ t^(-beta) ]`, expanded through the curve identities into four
/// consecutive plain powers of `t`.
pub fn second_derivative_of_inverse_power(two_beta: i64) -> HalfLaurent {
    derivative_of_inverse_power(two_beta).differentiate()
}

/// Reduce an odd member to a total-derivative certificate.
pub fn reduce_odd(p: &HalfLaurent) -> Result<OddCertificate> {
    if !p.is_w_only() {
        return Err(CoreError::ReductionStuck(
            "odd member carries plain terms".into(),
        ));
    }
    let mut antiderivatives = Vec::new();
    for key in p.keys().collect::<Vec<_>>() {
        if key % 2 != 0 {
            return Err(CoreError::ReductionStuck(format!(
                "odd member has half-integer exponent {key}/2"
            )));
        }
        // c w t^(-(l+1)) with l = -(key/2) - 1; need l >= 1 for an exact
        // antiderivative -(c / (2l)) t^(-l).
        let l = -(key / 2) - 1;
        if l < 1 {
            return Err(CoreError::ReductionStuck(format!(
                "exponent {}/2 admits no inverse-power antiderivative",
                key
            )));
        }
        let c = p.w_part(key).scale(&rat(-1, 2 * l));
        antiderivatives.push((c, l));
    }
    Ok(OddCertificate { antiderivatives })
}

/// Trigonometric limit of a coefficient polynomial: `k^2 -> 0` and
/// `omega -> (W - 1)/2`, yielding a polynomial in the band parameter `W`.
pub fn trigonometric_limit_poly(c: &MPoly) -> Result<MPoly> {
    let at_k0 = substitute_poly(c, Sym::K2, &RatFunc::zero())?;
    let half_w = RatFunc::from_poly(
        MPoly::term(rat(1, 2), &[(Sym::W, 1)]).add(&MPoly::constant(rat(-1, 2))),
    );
    let p = at_k0.as_poly().ok_or_else(|| {
        CoreError::ReductionStuck("k^2 -> 0 produced a non-polynomial".into())
    })?;
    let shifted = substitute_poly(p, Sym::Omega, &half_w)?;
    shifted
        .as_poly()
        .cloned()
        .ok_or_else(|| {
            CoreError::ReductionStuck("band-parameter substitution left a denominator".into())
        })
}

/// Reduce the even member `p_{2l}` modulo second-derivative images.
pub fn reduce_even(p: &HalfLaurent, l: u32) -> Result<EvenReduction> {
    if !p.is_plain() {
        return Err(CoreError::ReductionStuck(
            "even member carries sncndn terms".into(),
        ));
    }
    let l_i = l as i64;
    let mut current = p.clone();
    let mut subtractions: Vec<(MPoly, i64)> = Vec::new();

    // Stage one: peel the l deepest powers, one generator each.
    for lp in 1..=l_i {
        let two_beta = 6 * l_i - 3 - 2 * lp;
        let gen = second_derivative_of_inverse_power(two_beta);
        let low_key = gen.min_key().expect("generator never vanishes");
        debug_assert_eq!(low_key, -two_beta - 4);
        if let Some(cur_low) = current.min_key() {
            if cur_low < low_key {
                return Err(CoreError::ReductionStuck(format!(
                    "member reaches exponent {cur_low}/2 below generator window"
                )));
            }
        }
        let target = current.plain_part(low_key);
        if target.is_zero() {
            continue;
        }
        let multiplier = target.try_div(&gen.plain_part(low_key)).ok_or_else(|| {
            CoreError::ReductionStuck(format!(
                "leading coefficient not divisible by generator at depth {lp}"
            ))
        })?;
        current = current.sub(&gen.scale(&multiplier));
        subtractions.push((multiplier, two_beta));
    }

    // The survivor must now fit in the window t^(-(2l - 1/2)) .. t^(1/2).
    if let Some(low) = current.min_key() {
        if low < -(4 * l_i - 1) {
            return Err(CoreError::ReductionStuck(format!(
                "stage one left exponent {low}/2 below the reduced window"
            )));
        }
    }

    // Stage two: minimize bands r = 0..l-2 in the trigonometric limit.
    for r in 0..l_i.saturating_sub(1) {
        let band_key = -(4 * l_i - 1 - 2 * r);
        let target_exp = (l_i - r) as u16;
        let two_beta = 4 * l_i - 5 - 2 * r;
        // Limit coefficient of the generator's lowest band is
        // -beta (beta + 1) (W^2 - 1); the multiplier for monomial W^e shifts
        // the band by  c * beta (beta+1) * (W^(e+2) - W^e).
        let beta_prod = rat(two_beta * (two_beta + 2), 4);
        // Even members carry the overall scalar i sqrt(2); strip it so the
        // deviations are rational, and restore it on the multiplier.
        let isqrt2 = MPoly::term(rat_i(1), &[(Sym::I, 1), (Sym::Sqrt2, 1)]);
        let inv_isqrt2 = MPoly::term(rat(-1, 2), &[(Sym::I, 1), (Sym::Sqrt2, 1)]);
        loop {
            let band =
                trigonometric_limit_poly(&current.plain_part(band_key))?.mul(&inv_isqrt2);
            let mut deviations: Vec<(u16, Rat)> = Vec::new();
            for (e, c) in band.coeffs_of(Sym::W) {
                let c = c.as_rational().ok_or_else(|| {
                    CoreError::MinimizationFailed(format!(
                        "band {r} limit coefficient is not rational"
                    ))
                })?;
                if c.is_zero() || e == target_exp {
                    continue;
                }
                if e > target_exp || (target_exp - e) % 2 != 0 {
                    return Err(CoreError::MinimizationFailed(format!(
                        "band {r} has monomial W^{e} incompatible with target W^{target_exp}"
                    )));
                }
                deviations.push((e, c));
            }
            let Some((e, c)) = deviations.into_iter().next() else {
                break;
            };
            // Kill the lowest deviating monomial; its subtraction bumps the
            // monomial two degrees up, which later passes absorb.
            let solve = c / beta_prod.clone();
            let multiplier = two_omega_plus_one_pow(e as u32)
                .scale(&solve)
                .mul(&isqrt2);
            let gen = second_derivative_of_inverse_power(two_beta);
            current = current.sub(&gen.scale(&multiplier));
            subtractions.push((multiplier, two_beta));
        }
    }

    // Soundness of the shape: plain, half-odd keys, within the final window.
    for key in current.keys().collect::<Vec<_>>() {
        if key % 2 == 0 || key > 1 || key < -(4 * l_i - 1) {
            return Err(CoreError::ReductionStuck(format!(
                "reduced integrand has exponent {key}/2 outside the band window"
            )));
        }
    }
    Ok(EvenReduction {
        subtractions,
        integrand: current,
    })
}

/// Turn a minimal integrand into the derivative operator acting on the
/// leading period integral.
pub fn extract_operator(integrand: &HalfLaurent, order: u32, chart: Chart) -> Result<WkbOperator> {
    if !integrand.is_plain() {
        return Err(CoreError::ReductionStuck(
            "integrand still carries sncndn terms".into(),
        ));
    }
    let mut coeffs = vec![MPoly::zero(); order as usize + 1];
    // Division by the leading factor i sqrt(2): multiply by -(i sqrt(2))/2.
    let inv_isqrt2 = MPoly::term(rat(-1, 2), &[(Sym::I, 1), (Sym::Sqrt2, 1)]);
    for key in integrand.keys().collect::<Vec<_>>() {
        let r = (1 - key) / 2;
        if key % 2 == 0 || r < 0 || r > order as i64 {
            return Err(CoreError::ReductionStuck(format!(
                "integrand exponent {key}/2 outside operator range"
            )));
        }
        let gamma = integrand.plain_part(key);
        let c = gamma
            .mul(&inv_isqrt2)
            .scale(&(rat_i(1) / half_falling_factor(r as u32)));
        if c.contains_sym(Sym::I) || c.contains_sym(Sym::Sqrt2) {
            return Err(CoreError::ReductionStuck(format!(
                "operator coefficient at derivative degree {r} keeps algebraic scalars"
            )));
        }
        coeffs[r as usize] = c;
    }
    Ok(WkbOperator {
        order,
        chart,
        coeffs,
    })
}

/// Full pipeline for one even order: recurse, reduce, extract.
pub fn operator_at_order(ps: &[HalfLaurent], l: u32) -> Result<(WkbOperator, EvenReduction)> {
    let p = &ps[2 * l as usize];
    let red = reduce_even(p, l)?;
    let op = extract_operator(&red.integrand, 2 * l, Chart::Omega)?;
    Ok((op, red))
}

/// The tower `D_2, D_4, ..., D_{2 l_max}` together with their certificates.
pub fn operator_tower(l_max: u32) -> Result<Vec<(WkbOperator, EvenReduction)>> {
    let ps = super::recursion::momentum_hierarchy(2 * l_max as usize);
    (1..=l_max).map(|l| operator_at_order(&ps, l)).collect()
}

impl WkbOperator {
    /// Rewrite the operator in the shifted coordinate `omega~ = omega + 1`,
    /// i.e. for the potential written as `omega~ - cn^2`.  The derivative
    /// degree is untouched since `d/d omega = d/d omega~`.
    pub fn shift_to_tilde(&self) -> Result<WkbOperator> {
        if self.chart != Chart::Omega {
            return Err(CoreError::DomainError(
                "shift_to_tilde expects an omega-chart operator".into(),
            ));
        }
        let rep = RatFunc::from_poly(MPoly::sym(Sym::Omega).sub(&MPoly::one()));
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                substitute_poly(c, Sym::Omega, &rep)?
                    .as_poly()
                    .cloned()
                    .ok_or_else(|| CoreError::DomainError("shift left a denominator".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WkbOperator {
            order: self.order,
            chart: Chart::OmegaTilde,
            coeffs,
        })
    }

    /// Modular mirror of an omega-chart operator: `k^2 -> -k^2/(1-k^2)`,
    /// `omega -> -omega~`, each derivative picking a sign, and an overall
    /// `(-i k')^order` restoring polynomial coefficients.
    pub fn mirror(&self) -> Result<WkbOperator> {
        if self.chart != Chart::Omega {
            return Err(CoreError::DomainError(
                "mirror expects an omega-chart operator".into(),
            ));
        }
        if self.order % 2 != 0 {
            return Err(CoreError::DomainError("operator order must be even".into()));
        }
        let l = (self.order / 2) as i64;
        let kp2 = MPoly::one().sub(&MPoly::sym(Sym::K2));
        let k2_rep = RatFunc::fraction(MPoly::sym(Sym::K2).neg(), kp2.clone())?;
        let omega_rep = RatFunc::from_poly(MPoly::sym(Sym::Omega).neg());
        // (-i k')^(2l) = (-1)^l (1 - k^2)^l
        let sign = if l % 2 == 0 { rat_i(1) } else { rat_i(-1) };
        let overall = RatFunc::from_poly(kp2.pow(l as u32)).scale(&sign);
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(r, c)| {
                let flipped = substitute_poly(c, Sym::Omega, &omega_rep)?
                    .as_poly()
                    .cloned()
                    .expect("sign flip keeps polynomials polynomial");
                let swapped = substitute_poly(&flipped, Sym::K2, &k2_rep)?;
                let dsign = if r % 2 == 0 { rat_i(1) } else { rat_i(-1) };
                swapped
                    .mul(&overall)
                    .scale(&dsign)
                    .as_poly()
                    .cloned()
                    .ok_or_else(|| {
                        CoreError::DomainError(
                            "mirror image kept a complementary-modulus denominator".into(),
                        )
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WkbOperator {
            order: self.order,
            chart: Chart::OmegaTilde,
            coeffs,
        })
    }

    /// Trigonometric degeneration `k -> 0`, `omega -> (W-1)/2`: coefficients
    /// become polynomials in `W` and every derivative gains a factor 2.
    pub fn trigonometric_limit(&self) -> Result<WkbOperator> {
        if self.chart != Chart::Omega {
            return Err(CoreError::DomainError(
                "trigonometric_limit expects an omega-chart operator".into(),
            ));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(r, c)| {
                let lim = trigonometric_limit_poly(c)?;
                Ok(lim.scale(&rat_i(2).pow(r as i32)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WkbOperator {
            order: self.order,
            chart: Chart::Mathieu,
            coeffs,
        })
    }
}
