//! Exact arithmetic for quasi-momentum integrands on the spectral curve.
//!
//! The all-order quasi-momentum of the elliptic-potential Schroedinger problem
//! lives in a small differential ring.  Write `S = sn^2(x, k)` for the squared
//! Jacobi sine, `w = sn(x,k) cn(x,k) dn(x,k)` for its half-derivative, and
//! `t = omega + S` for the shifted potential coordinate.  Every correction in
//! the hierarchy is a finite sum
//!
//! ```text
//!     sum_j (a_j + b_j * w) * t^(j/2)
//! ```
//!
//! where `a_j`, `b_j` are polynomials in `omega` and `k^2` (scalar factors may
//! carry the formal imaginary unit and sqrt(2)).  The ring is closed under
//! multiplication and differentiation in `x` because of two curve identities:
//!
//! ```text
//!     w^2 = S (1 - S) (1 - k^2 S)          (a cubic polynomial in t)
//!     w'  = 1 - (2 + 2k^2) S + 3 k^2 S^2   (a quadratic polynomial in t)
//! ```
//!
//! together with `t' = 2 w`.  Invariants maintained by this module:
//!
//! - map keys are `2 x (power of t)` so half-integer exponents stay integral;
//! - a key is never stored with both coefficient parts zero;
//! - coefficients contain only the symbols `Omega`, `K2`, `I`, `Sqrt2`.

use crate::series::{rat, rat_i, MPoly, Rat, Sym};
use std::collections::BTreeMap;

/// One coefficient pair: the plain part and the part multiplying `w`.
pub type Pair = (MPoly, MPoly);

/// Finite sum of `(a + b w) t^(j/2)` terms keyed by the scaled exponent `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfLaurent {
    terms: BTreeMap<i64, Pair>,
}

/// Cubic expansion of `w^2` in `t`: coefficients of `t^0..t^3`.
pub fn w_squared_coeffs() -> [MPoly; 4] {
    let omega = MPoly::sym(Sym::Omega);
    let k2 = MPoly::sym(Sym::K2);
    // -omega (1 + omega) (1 + k^2 omega)
    let c0 = omega
        .neg()
        .mul(&MPoly::one().add(&omega))
        .mul(&MPoly::one().add(&k2.mul(&omega)));
    // 1 + 2 omega + 2 k^2 omega + 3 k^2 omega^2
    let c1 = MPoly::one()
        .add(&omega.scale(&rat_i(2)))
        .add(&k2.mul(&omega).scale(&rat_i(2)))
        .add(&k2.mul(&omega).mul(&omega).scale(&rat_i(3)));
    // -1 - k^2 - 3 k^2 omega
    let c2 = MPoly::one()
        .neg()
        .sub(&k2)
        .sub(&k2.mul(&omega).scale(&rat_i(3)));
    let c3 = k2;
    [c0, c1, c2, c3]
}

/// Quadratic expansion of `w' = d(sncndn)/dx` in `t`: coefficients of `t^0..t^2`.
pub fn w_prime_coeffs() -> [MPoly; 3] {
    let omega = MPoly::sym(Sym::Omega);
    let k2 = MPoly::sym(Sym::K2);
    // 1 + (2 + 2k^2) omega + 3 k^2 omega^2
    let d0 = MPoly::one()
        .add(&omega.scale(&rat_i(2)))
        .add(&k2.mul(&omega).scale(&rat_i(2)))
        .add(&k2.mul(&omega).mul(&omega).scale(&rat_i(3)));
    // -(2 + 2k^2) - 6 k^2 omega
    let d1 = MPoly::int(-2)
        .sub(&k2.scale(&rat_i(2)))
        .sub(&k2.mul(&omega).scale(&rat_i(6)));
    let d2 = MPoly::sym(Sym::K2).scale(&rat_i(3));
    [d0, d1, d2]
}

impl HalfLaurent {
    pub fn zero() -> Self {
        HalfLaurent {
            terms: BTreeMap::new(),
        }
    }

    /// `c * t^(key/2)` with no `w` factor.
    pub fn plain_term(key: i64, c: MPoly) -> Self {
        let mut out = Self::zero();
        out.accumulate(key, c, MPoly::zero());
        out
    }

    /// `c * w * t^(key/2)`.
    pub fn w_term(key: i64, c: MPoly) -> Self {
        let mut out = Self::zero();
        out.accumulate(key, MPoly::zero(), c);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when no term carries a `w` factor.
    pub fn is_plain(&self) -> bool {
        self.terms.values().all(|(_, b)| b.is_zero())
    }

    /// True when every term carries a `w` factor.
    pub fn is_w_only(&self) -> bool {
        self.terms.values().all(|(a, _)| a.is_zero())
    }

    pub fn keys(&self) -> impl Iterator<Item = i64> + '_ {
        self.terms.keys().copied()
    }

    pub fn min_key(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_key(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Plain coefficient at a scaled exponent (zero when absent).
    pub fn plain_part(&self, key: i64) -> MPoly {
        self.terms
            .get(&key)
            .map(|(a, _)| a.clone())
            .unwrap_or_else(MPoly::zero)
    }

    /// `w` coefficient at a scaled exponent (zero when absent).
    pub fn w_part(&self, key: i64) -> MPoly {
        self.terms
            .get(&key)
            .map(|(_, b)| b.clone())
            .unwrap_or_else(MPoly::zero)
    }

    fn accumulate(&mut self, key: i64, a: MPoly, b: MPoly) {
        if a.is_zero() && b.is_zero() {
            return;
        }
        let entry = self
            .terms
            .entry(key)
            .or_insert_with(|| (MPoly::zero(), MPoly::zero()));
        entry.0 = entry.0.add(&a);
        entry.1 = entry.1.add(&b);
        if entry.0.is_zero() && entry.1.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, (a, b)) in &other.terms {
            out.accumulate(*k, a.clone(), b.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, (a, b))| (*k, (a.neg(), b.neg())))
            .collect();
        HalfLaurent { terms }
    }

    /// Multiply every coefficient by a polynomial scalar.
    pub fn scale(&self, c: &MPoly) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut out = Self::zero();
        for (k, (a, b)) in &self.terms {
            out.accumulate(*k, a.mul(c), b.mul(c));
        }
        out
    }

    pub fn scale_rat(&self, c: &Rat) -> Self {
        self.scale(&MPoly::constant(c.clone()))
    }

    /// Multiply by `t^(delta/2)`.
    pub fn shift(&self, delta: i64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, pair)| (k + delta, pair.clone()))
            .collect();
        HalfLaurent { terms }
    }

    /// Ring product, expanding `w * w` through the curve cubic.
    pub fn mul(&self, other: &Self) -> Self {
        let w2 = w_squared_coeffs();
        let mut out = Self::zero();
        for (k1, (a1, b1)) in &self.terms {
            for (k2, (a2, b2)) in &other.terms {
                let key = k1 + k2;
                let plain = a1.mul(a2);
                let wpart = a1.mul(b2).add(&b1.mul(a2));
                out.accumulate(key, plain, wpart);
                let bb = b1.mul(b2);
                if !bb.is_zero() {
                    for (s, c) in w2.iter().enumerate() {
                        out.accumulate(key + 2 * s as i64, bb.mul(c), MPoly::zero());
                    }
                }
            }
        }
        out
    }

    /// Derivative in the independent variable `x` of the curve.
    ///
    /// Uses `t' = 2w`, so `(t^(j/2))' = j w t^(j/2 - 1)`, together with the
    /// polynomial expansions of `w'` and `w^2` in `t`.
    pub fn differentiate(&self) -> Self {
        let w2 = w_squared_coeffs();
        let w1 = w_prime_coeffs();
        let mut out = Self::zero();
        for (k, (a, b)) in &self.terms {
            let j = rat_i(*k);
            if !a.is_zero() {
                // a * t^(j/2) -> j a w t^(j/2 - 1)
                out.accumulate(k - 2, MPoly::zero(), a.scale(&j));
            }
            if !b.is_zero() {
                // b w t^(j/2) -> b w' t^(j/2) + j b w^2 t^(j/2 - 1)
                for (s, c) in w1.iter().enumerate() {
                    out.accumulate(k + 2 * s as i64, b.mul(c), MPoly::zero());
                }
                let jb = b.scale(&j);
                if !jb.is_zero() {
                    for (s, c) in w2.iter().enumerate() {
                        out.accumulate(k - 2 + 2 * s as i64, jb.mul(c), MPoly::zero());
                    }
                }
            }
        }
        out
    }

    /// Apply a map to every coefficient polynomial.
    pub fn map_coeffs<F: FnMut(&MPoly) -> MPoly>(&self, mut f: F) -> Self {
        let mut out = Self::zero();
        for (k, (a, b)) in &self.terms {
            out.accumulate(*k, f(a), f(b));
        }
        out
    }
}

/// `(2 omega + 1)^e` as a polynomial, the multiplier basis used when the
/// trigonometric limit of a band coefficient has to be reshaped.
pub fn two_omega_plus_one_pow(e: u32) -> MPoly {
    MPoly::sym(Sym::Omega)
        .scale(&rat_i(2))
        .add(&MPoly::one())
        .pow(e)
}

/// Convenience: the rational `1/2 - s` falling product over `s = 0..r`,
/// i.e. the factor produced by differentiating `t^(1/2)` `r` times in omega.
pub fn half_falling_factor(r: u32) -> Rat {
    let mut acc = rat_i(1);
    for s in 0..r {
        acc *= rat(1, 2) - rat_i(s as i64);
    }
    acc
}
