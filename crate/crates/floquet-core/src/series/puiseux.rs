//! Truncated Puiseux series over the rational-function coefficient field.
//!
//! A series is a finite map from exponents to coefficients plus an explicit
//! truncation witness: every lattice exponent up to and including `trunc` is
//! exact (absent means zero), everything beyond is unknown. All arithmetic
//! propagates the witness conservatively, so a coefficient can be read off a
//! result if and only if it is actually determined by the inputs.
//!
//! Exponents live on a lattice Z/den with den in {1, 2, 4, 8} and may be
//! negative (finite principal parts; asymptotic descending expansions are
//! written in an inverse variable instead). Keys are stored scaled by `den`.

use super::poly::{Rat, Sym};
use super::ratfunc::RatFunc;
use crate::error::{CoreError, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Expansion variables, used to catch category errors when series from
/// different charts meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesVar {
    /// Elliptic nome (half-period ratio exponential).
    Q,
    /// Spectral energy of the trigonometric equation.
    H,
    /// Inverse square root of the spectral energy.
    InvSqrtH,
    /// Squared elliptic modulus as an expansion variable.
    K2,
    /// Spectral shift of the operator calculus, bottom chart.
    Omega,
    /// Inverse spectral shift, top chart.
    InvOmega,
    /// Spectral shift of the mirror chart.
    OmegaTilde,
    /// Inverse quasimomentum.
    InvMu,
    /// Inverse coupling scale.
    InvKappa,
    /// Generic auxiliary variables.
    X,
    Y,
    U,
}

impl SeriesVar {
    pub fn name(self) -> &'static str {
        match self {
            SeriesVar::Q => "q",
            SeriesVar::H => "h",
            SeriesVar::InvSqrtH => "inv_sqrt_h",
            SeriesVar::K2 => "k2",
            SeriesVar::Omega => "omega",
            SeriesVar::InvOmega => "inv_omega",
            SeriesVar::OmegaTilde => "omega_tilde",
            SeriesVar::InvMu => "inv_mu",
            SeriesVar::InvKappa => "inv_kappa",
            SeriesVar::X => "x",
            SeriesVar::Y => "y",
            SeriesVar::U => "u",
        }
    }
}

impl fmt::Display for SeriesVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct PuiseuxSeries {
    var: SeriesVar,
    /// Lattice denominator: exponents are key/den. One of 1, 2, 4, 8.
    den: i64,
    /// Scaled exponent -> nonzero coefficient, keys all <= trunc.
    terms: BTreeMap<i64, RatFunc>,
    /// Scaled inclusive truncation: exponents <= trunc/den are exact.
    trunc: i64,
}

/// Truncation witness for exactly known finite expressions (polynomials in
/// the variable). Large enough to dominate any real window, small enough to
/// survive lattice rescaling by 8 and modest exponent shifts untouched.
pub const EXACT_TRUNC: i64 = i64::MAX / 64;

fn is_unbounded(trunc: i64) -> bool {
    trunc >= EXACT_TRUNC / 16
}

impl PuiseuxSeries {
    pub fn zero(var: SeriesVar, trunc_num: i64, trunc_den: i64) -> Self {
        let den = valid_den(trunc_den);
        PuiseuxSeries {
            var,
            den,
            terms: BTreeMap::new(),
            trunc: trunc_num * (den / trunc_den),
        }
    }

    /// Single term c * x^(e_num/e_den), exact through trunc_num/trunc_den.
    pub fn monomial(
        var: SeriesVar,
        coeff: RatFunc,
        e_num: i64,
        e_den: i64,
        trunc_num: i64,
        trunc_den: i64,
    ) -> Self {
        let den = lcm_den(valid_den(e_den), valid_den(trunc_den));
        let mut terms = BTreeMap::new();
        let key = e_num * (den / e_den);
        let trunc = trunc_num * (den / trunc_den);
        if !coeff.is_zero() && key <= trunc {
            terms.insert(key, coeff);
        }
        PuiseuxSeries {
            var,
            den,
            terms,
            trunc,
        }
    }

    pub fn constant(var: SeriesVar, c: RatFunc, trunc_num: i64, trunc_den: i64) -> Self {
        Self::monomial(var, c, 0, 1, trunc_num, trunc_den)
    }

    /// An exactly known constant (window unbounded for practical purposes).
    pub fn exact_constant(var: SeriesVar, c: RatFunc) -> Self {
        Self::monomial(var, c, 0, 1, EXACT_TRUNC, 1)
    }

    /// An exactly known monomial c * x^(e_num/e_den).
    pub fn exact_monomial(var: SeriesVar, c: RatFunc, e_num: i64, e_den: i64) -> Self {
        Self::monomial(var, c, e_num, e_den, EXACT_TRUNC, 1)
    }

    /// Build from scaled (key, coeff) pairs on the given lattice.
    pub fn from_scaled_terms(
        var: SeriesVar,
        den: i64,
        pairs: impl IntoIterator<Item = (i64, RatFunc)>,
        trunc: i64,
    ) -> Self {
        let den = valid_den(den);
        let mut terms = BTreeMap::new();
        for (k, c) in pairs {
            if c.is_zero() || k > trunc {
                continue;
            }
            let entry = terms.entry(k).or_insert_with(RatFunc::zero);
            *entry = entry.add(&c);
            if entry.is_zero() {
                terms.remove(&k);
            }
        }
        PuiseuxSeries {
            var,
            den,
            terms,
            trunc,
        }
    }

    /// Series with integer exponents 0.. from rational constants, for tests
    /// and small tables.
    pub fn from_rats(var: SeriesVar, coeffs: &[Rat], trunc: i64) -> Self {
        Self::from_scaled_terms(
            var,
            1,
            coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| (j as i64, RatFunc::from_rat(c.clone()))),
            trunc,
        )
    }

    pub fn var(&self) -> SeriesVar {
        self.var
    }

    pub fn with_var(mut self, var: SeriesVar) -> Self {
        self.var = var;
        self
    }

    pub fn lattice_den(&self) -> i64 {
        self.den
    }

    /// Scaled truncation key (inclusive).
    pub fn trunc_scaled(&self) -> i64 {
        self.trunc
    }

    pub fn trunc_rational(&self) -> (i64, i64) {
        (self.trunc, self.den)
    }

    pub fn is_known_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Smallest scaled exponent with a nonzero coefficient.
    pub fn val_scaled(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    /// Valuation used for error propagation: first known term, or the first
    /// unknown slot if no term is known.
    fn eff_val(&self) -> i64 {
        self.val_scaled().unwrap_or(self.trunc + 1)
    }

    pub fn iter_terms(&self) -> impl Iterator<Item = (&i64, &RatFunc)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Coefficient of x^(num/den); zero when the slot is within the known
    /// window, error when beyond it.
    pub fn coeff(&self, e_num: i64, e_den: i64) -> Result<RatFunc> {
        let e_den = valid_den(e_den);
        if e_num.saturating_mul(self.den) > self.trunc.saturating_mul(e_den) {
            return Err(CoreError::InsufficientOrder(format!(
                "coefficient of {}^({}/{}) lies beyond truncation {}/{}",
                self.var, e_num, e_den, self.trunc, self.den
            )));
        }
        if self.den % e_den != 0 {
            // The slot is off this series' lattice but inside the window.
            return Ok(RatFunc::zero());
        }
        let key = e_num * (self.den / e_den);
        Ok(self.terms.get(&key).cloned().unwrap_or_else(RatFunc::zero))
    }

    pub fn leading_coeff(&self) -> Option<(&RatFunc, i64)> {
        self.terms.iter().next().map(|(k, c)| (c, *k))
    }

    /// Re-express on a finer lattice; new_den must be a multiple of den.
    pub fn rescale_lattice(&self, new_den: i64) -> Self {
        assert!(new_den % self.den == 0 && valid_den(new_den) == new_den);
        let f = new_den / self.den;
        PuiseuxSeries {
            var: self.var,
            den: new_den,
            terms: self.terms.iter().map(|(k, c)| (k * f, c.clone())).collect(),
            trunc: self.trunc * f,
        }
    }

    /// Drop to the coarsest lattice that still represents every key and the
    /// truncation exactly.
    pub fn normalize_lattice(mut self) -> Self {
        loop {
            if self.den == 1 {
                return self;
            }
            let ok = self.trunc % 2 == 0 && self.terms.keys().all(|k| k % 2 == 0);
            if !ok {
                return self;
            }
            self.den /= 2;
            self.trunc /= 2;
            self.terms = self.terms.iter().map(|(k, c)| (k / 2, c.clone())).collect();
        }
    }

    fn aligned(&self, other: &Self) -> Result<(Self, Self)> {
        if self.var != other.var {
            return Err(CoreError::VariableMismatch(
                self.var.name().into(),
                other.var.name().into(),
            ));
        }
        let den = lcm_den(self.den, other.den);
        Ok((self.rescale_lattice(den), other.rescale_lattice(den)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.aligned(other)?;
        let trunc = a.trunc.min(b.trunc);
        let mut terms = a.terms;
        for (k, c) in b.terms {
            let entry = terms.entry(k).or_insert_with(RatFunc::zero);
            *entry = entry.add(&c);
            if entry.is_zero() {
                terms.remove(&k);
            }
        }
        terms.retain(|k, _| *k <= trunc);
        Ok(PuiseuxSeries {
            var: a.var,
            den: a.den,
            terms,
            trunc,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        PuiseuxSeries {
            var: self.var,
            den: self.den,
            terms: self.terms.iter().map(|(k, c)| (*k, c.neg())).collect(),
            trunc: self.trunc,
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.aligned(other)?;
        let trunc = (a.eff_val() + b.trunc).min(b.eff_val() + a.trunc);
        let mut terms: BTreeMap<i64, RatFunc> = BTreeMap::new();
        for (ka, ca) in &a.terms {
            for (kb, cb) in &b.terms {
                let k = ka + kb;
                if k > trunc {
                    continue;
                }
                let prod = ca.mul(cb);
                if prod.is_zero() {
                    continue;
                }
                let entry = terms.entry(k).or_insert_with(RatFunc::zero);
                *entry = entry.add(&prod);
                if entry.is_zero() {
                    terms.remove(&k);
                }
            }
        }
        Ok(PuiseuxSeries {
            var: a.var,
            den: a.den,
            terms,
            trunc,
        })
    }

    pub fn mul_coeff(&self, c: &RatFunc) -> Self {
        if c.is_zero() {
            return PuiseuxSeries {
                var: self.var,
                den: self.den,
                terms: BTreeMap::new(),
                trunc: self.trunc,
            };
        }
        let mut terms = BTreeMap::new();
        for (k, v) in &self.terms {
            let p = v.mul(c);
            if !p.is_zero() {
                terms.insert(*k, p);
            }
        }
        PuiseuxSeries {
            var: self.var,
            den: self.den,
            terms,
            trunc: self.trunc,
        }
    }

    pub fn mul_rat(&self, c: &Rat) -> Self {
        self.mul_coeff(&RatFunc::from_rat(c.clone()))
    }

    /// Multiply by x^(s_num/s_den).
    pub fn shift_exponent(&self, s_num: i64, s_den: i64) -> Self {
        let s_den = valid_den(s_den);
        let den = lcm_den(self.den, s_den);
        let this = self.rescale_lattice(den);
        let shift = s_num * (den / s_den);
        PuiseuxSeries {
            var: this.var,
            den,
            terms: this.terms.iter().map(|(k, c)| (k + shift, c.clone())).collect(),
            trunc: this.trunc + shift,
        }
    }

    pub fn truncate_scaled(&self, trunc: i64) -> Self {
        let trunc = trunc.min(self.trunc);
        let mut terms = self.terms.clone();
        terms.retain(|k, _| *k <= trunc);
        PuiseuxSeries {
            var: self.var,
            den: self.den,
            terms,
            trunc,
        }
    }

    pub fn truncate_to(&self, t_num: i64, t_den: i64) -> Self {
        let t_den = valid_den(t_den);
        let den = lcm_den(self.den, t_den);
        self.rescale_lattice(den)
            .truncate_scaled(t_num * (den / t_den))
    }

    /// Multiplicative inverse; the first known coefficient must be nonzero.
    /// An exactly known multi-term series must be truncated first, otherwise
    /// its inverse would be an infinite expansion.
    pub fn inv(&self) -> Result<Self> {
        let Some((lead, v)) = self.leading_coeff() else {
            return Err(CoreError::DivisionByZeroSeries);
        };
        let lead_inv = lead.inv()?;
        // shifted = self / (lead * x^v): leading term 1 at exponent 0,
        // exact through trunc - v.
        let shifted = self.shift_exponent(-v, self.den).mul_coeff(&lead_inv);
        let rel_trunc = shifted.trunc;
        // u = shifted - 1 has positive valuation.
        let one = PuiseuxSeries::constant(self.var, RatFunc::one(), rel_trunc, shifted.den);
        let u = shifted.sub(&one)?;
        if !u.is_known_zero() && is_unbounded(rel_trunc) {
            return Err(CoreError::DomainError(
                "inverse of an exactly known series needs an explicit truncation".into(),
            ));
        }
        let mut acc = one.clone();
        let mut pw = one;
        if let Some(uval) = u.val_scaled() {
            let mut total = 0i64;
            loop {
                total += uval;
                if total > rel_trunc {
                    break;
                }
                pw = pw.mul(&u)?.neg();
                acc = acc.add(&pw)?;
            }
        }
        // Undo the normalization: result = acc * lead_inv * x^-v.
        Ok(acc
            .mul_coeff(&lead_inv)
            .shift_exponent(-v, self.den)
            .truncate_scaled(self.trunc - 2 * v))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.mul(&other.inv()?)
    }

    /// Integer power via repeated multiplication (negative through inv).
    pub fn pow_int(&self, e: i64) -> Result<Self> {
        if e == 0 {
            return Ok(PuiseuxSeries::exact_constant(self.var, RatFunc::one()));
        }
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut out = base.clone();
        for _ in 1..e.unsigned_abs() {
            out = out.mul(&base)?;
        }
        Ok(out)
    }

    /// Rational power. Requires the leading coefficient to admit an exact
    /// root in the coefficient field (rationals extended by i and sqrt2) and
    /// the resulting exponents to stay on a lattice with denominator <= 8.
    pub fn pow_rational(&self, r: &Rat) -> Result<Self> {
        if r.is_integer() {
            let e = r
                .to_integer()
                .to_i64()
                .ok_or_else(|| CoreError::DomainError("power exponent overflow".into()))?;
            return self.pow_int(e);
        }
        let Some((lead, v)) = self.leading_coeff() else {
            return Err(CoreError::NonInvertibleLeadingTerm(
                "fractional power of a series with no known term".into(),
            ));
        };
        let lead = lead.clone();
        // New leading exponent r * v/den.
        let ev = r * Rat::new(BigInt::from(v), BigInt::from(self.den));
        let ev_den = ev.denom().to_i64().unwrap_or(i64::MAX);
        if !(valid_den_ok(ev_den)) {
            return Err(CoreError::LatticeOverflow(format!(
                "power {} of valuation {}/{}",
                r, v, self.den
            )));
        }
        let croot = root_coeff(&lead, r)?;
        // u = self / (lead x^v) - 1.
        let shifted = self
            .shift_exponent(-v, self.den)
            .mul_coeff(&lead.inv()?);
        let rel_trunc = shifted.trunc;
        let one = PuiseuxSeries::constant(self.var, RatFunc::one(), rel_trunc, shifted.den);
        let u = shifted.sub(&one)?;
        if !u.is_known_zero() && is_unbounded(rel_trunc) {
            return Err(CoreError::DomainError(
                "fractional power of an exactly known series needs an explicit truncation".into(),
            ));
        }
        // (1+u)^r by the binomial series.
        let mut acc = one.clone();
        if let Some(uval) = u.val_scaled() {
            let mut pw = one;
            let mut coeff = Rat::one();
            let mut k = 0u32;
            loop {
                let reach = (k as i64 + 1) * uval;
                if reach > rel_trunc {
                    break;
                }
                // coeff <- binom(r, k+1), pw <- u^(k+1)
                coeff = coeff * (r.clone() - Rat::from_integer(BigInt::from(k)))
                    / Rat::from_integer(BigInt::from(k + 1));
                pw = pw.mul(&u)?;
                k += 1;
                acc = acc.add(&pw.mul_rat(&coeff))?;
            }
        }
        // Assemble croot * x^ev * acc on the merged lattice.
        let out_den = lcm_den(acc.den, lcm_den(valid_den(ev_den), self.den));
        let ev_scaled = (ev * Rat::from_integer(BigInt::from(out_den)))
            .to_integer()
            .to_i64()
            .ok_or_else(|| CoreError::DomainError("power exponent overflow".into()))?;
        let acc = acc.rescale_lattice(out_den).mul_coeff(&croot);
        Ok(PuiseuxSeries {
            var: acc.var,
            den: out_den,
            terms: acc
                .terms
                .iter()
                .map(|(k, c)| (k + ev_scaled, c.clone()))
                .collect(),
            trunc: acc.trunc + ev_scaled,
        })
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.pow_rational(&Rat::new(BigInt::one(), BigInt::from(2)))
    }

    /// Substitute `inner` for this series' variable. The inner series must
    /// have strictly positive valuation; finite sums with nonpositive inner
    /// valuation go through `apply_polynomial` instead.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        let vi = match inner.val_scaled() {
            Some(v) if v > 0 => v,
            _ => return Err(CoreError::DivergentComposition),
        };
        // Inner as a power series in its own variable; w = inner^(1/den_o)
        // so that outer exponents become integers.
        let w = if self.den == 1 {
            inner.clone()
        } else {
            inner.pow_rational(&Rat::new(BigInt::one(), BigInt::from(self.den)))?
        };
        // Result truncation bound from the unknown outer tail:
        // error O(inner^((trunc_o + 1)/den_o)) at exponent
        // (trunc_o + 1)/den_o * vi/den_i.
        let bound1 = (
            (self.trunc as i128 + 1) * vi as i128,
            self.den as i128 * inner.den as i128,
        );
        let mut acc: Option<PuiseuxSeries> = None;
        let mut cur_k: Option<i64> = None;
        let mut cur_p = PuiseuxSeries::exact_constant(inner.var, RatFunc::one());
        for (&k, c) in &self.terms {
            match cur_k {
                None => cur_p = w.pow_int(k)?,
                Some(kc) if k != kc => cur_p = cur_p.mul(&w.pow_int(k - kc)?)?,
                _ => {}
            }
            cur_k = Some(k);
            let term = cur_p.mul_coeff(c);
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term)?,
            });
        }
        let mut out = match acc {
            Some(a) => a,
            None => PuiseuxSeries::zero(inner.var, 0, 1),
        };
        // Clamp to the tail bound (rescale first if lattices differ).
        let den = lcm_den(out.den, inner.den);
        out = out.rescale_lattice(den);
        let b1 = clamp_scaled(bound1, den);
        out = out.truncate_scaled(b1.min(out.trunc));
        Ok(out)
    }

    /// Evaluate a polynomial with RatFunc coefficients at this series:
    /// sum coeffs[j] * self^j. Exact in the coefficients, so valid for any
    /// valuation of self.
    pub fn apply_polynomial(coeffs: &[RatFunc], at: &Self) -> Result<Self> {
        let mut out = PuiseuxSeries::exact_constant(at.var, RatFunc::zero());
        let mut pw = PuiseuxSeries::exact_constant(at.var, RatFunc::one());
        for (j, c) in coeffs.iter().enumerate() {
            if j > 0 {
                pw = pw.mul(at)?;
            }
            if !c.is_zero() {
                out = out.add(&pw.mul_coeff(c))?;
            }
        }
        Ok(out)
    }

    /// Compositional inverse of a series with valuation exactly one (after
    /// `reindex_by_valuation` if needed). Returns t with self(t(y)) = y.
    pub fn reverse(&self) -> Result<Self> {
        if self.den != 1 {
            return Err(CoreError::NotInvertible(
                "reversion requires an integer exponent lattice".into(),
            ));
        }
        match self.val_scaled() {
            Some(1) => {}
            _ => {
                return Err(CoreError::NotInvertible(
                    "reversion requires valuation exactly one".into(),
                ))
            }
        }
        let n = self.trunc;
        if n < 1 {
            return Err(CoreError::NotInvertible(
                "reversion needs the linear coefficient".into(),
            ));
        }
        if n > 4096 {
            return Err(CoreError::DomainError(
                "reversion needs a finite truncation window".into(),
            ));
        }
        // Powers P_j = self^j, truncated at n.
        let mut powers: Vec<PuiseuxSeries> = Vec::with_capacity(n as usize + 1);
        powers.push(PuiseuxSeries::constant(self.var, RatFunc::one(), n, 1));
        for j in 1..=n {
            let p = powers[(j - 1) as usize].mul(self)?.truncate_scaled(n);
            powers.push(p);
        }

        let mut d: Vec<RatFunc> = vec![RatFunc::zero(); n as usize + 1];
        for k in 1..=n {
            // d_k * c1^k = delta_{k,1} - sum_{j<k} d_j * [x^k] P_j
            let mut rhs = if k == 1 { RatFunc::one() } else { RatFunc::zero() };
            for j in 1..k {
                let pjk = powers[j as usize].coeff(k, 1)?;
                if !pjk.is_zero() && !d[j as usize].is_zero() {
                    rhs = rhs.sub(&d[j as usize].mul(&pjk));
                }
            }
            let c1k = powers[k as usize].coeff(k, 1)?;
            d[k as usize] = rhs.div(&c1k)?;
        }
        Ok(PuiseuxSeries::from_scaled_terms(
            self.var,
            1,
            d.into_iter()
                .enumerate()
                .map(|(j, c)| (j as i64, c))
                .filter(|(j, _)| *j >= 1),
            n,
        ))
    }

    /// Divide all exponents by the valuation, turning c*x^v(1 + ...) into a
    /// valuation-one series in z = x^(v/den). Fails unless every exponent and
    /// the truncation are multiples of the valuation.
    pub fn reindex_by_valuation(&self) -> Result<(Self, i64)> {
        let v = self
            .val_scaled()
            .ok_or(CoreError::DivisionByZeroSeries)?;
        if v <= 0 {
            return Err(CoreError::NotInvertible(
                "reindexing requires positive valuation".into(),
            ));
        }
        if self.terms.keys().any(|k| k % v != 0) {
            return Err(CoreError::NotInvertible(
                "exponents are not multiples of the valuation".into(),
            ));
        }
        let out = PuiseuxSeries {
            var: self.var,
            den: 1,
            terms: self.terms.iter().map(|(k, c)| (k / v, c.clone())).collect(),
            trunc: Integer::div_floor(&self.trunc, &v),
        };
        Ok((out, v))
    }

    /// Map every coefficient (dropping zeros), e.g. for symbol substitution.
    pub fn map_coeffs<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&RatFunc) -> Result<RatFunc>,
    {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            let v = f(c)?;
            if !v.is_zero() {
                terms.insert(*k, v);
            }
        }
        Ok(PuiseuxSeries {
            var: self.var,
            den: self.den,
            terms,
            trunc: self.trunc,
        })
    }

    pub fn substitute_sym(&self, s: Sym, rep: &RatFunc) -> Result<Self> {
        self.map_coeffs(|c| c.substitute(s, rep))
    }

    /// Rescale the variable x -> c*x. Integer lattices only, since c^e must
    /// stay in the coefficient field.
    pub fn scale_var(&self, c: &RatFunc) -> Result<Self> {
        if self.den != 1 {
            return Err(CoreError::LatticeOverflow(
                "variable rescaling needs integer exponents".into(),
            ));
        }
        let mut terms = BTreeMap::new();
        for (k, v) in &self.terms {
            let f = c.pow(*k as i32)?;
            let nv = v.mul(&f);
            if !nv.is_zero() {
                terms.insert(*k, nv);
            }
        }
        Ok(PuiseuxSeries {
            var: self.var,
            den: 1,
            terms,
            trunc: self.trunc,
        })
    }

    /// Derivative with respect to the variable.
    pub fn derivative(&self) -> Self {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            let e = Rat::new(BigInt::from(*k), BigInt::from(self.den));
            if e.is_zero() {
                continue;
            }
            terms.insert(k - self.den, c.scale(&e));
        }
        PuiseuxSeries {
            var: self.var,
            den: self.den,
            terms,
            trunc: self.trunc - self.den,
        }
    }

    /// Euler operator x d/dx: multiplies each coefficient by its exponent.
    pub fn euler_derivative(&self) -> Self {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            let e = Rat::new(BigInt::from(*k), BigInt::from(self.den));
            if e.is_zero() {
                continue;
            }
            let v = c.scale(&e);
            if !v.is_zero() {
                terms.insert(*k, v);
            }
        }
        PuiseuxSeries {
            var: self.var,
            den: self.den,
            terms,
            trunc: self.trunc,
        }
    }

    /// Numeric evaluation at x > 0 (fractional exponents use real powers).
    pub fn eval_f64(&self, x: f64, assign: &dyn Fn(Sym) -> Option<f64>) -> Result<(f64, f64)> {
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, c) in &self.terms {
            let (cr, ci) = c.eval_f64(assign)?;
            let p = x.powf(*k as f64 / self.den as f64);
            re += cr * p;
            im += ci * p;
        }
        Ok((re, im))
    }

    /// True when both series agree on every slot of their shared window.
    pub fn agrees_with(&self, other: &Self) -> bool {
        let Ok((a, b)) = self.aligned(other) else {
            return false;
        };
        let t = a.trunc.min(b.trunc);
        for k in a.terms.keys().chain(b.terms.keys()) {
            if *k > t {
                continue;
            }
            let ca = a.terms.get(k).cloned().unwrap_or_else(RatFunc::zero);
            let cb = b.terms.get(k).cloned().unwrap_or_else(RatFunc::zero);
            if !ca.equals(&cb) {
                return false;
            }
        }
        true
    }
}

/// Exact root of a leading coefficient: c^r with r = p/q. Succeeds for
/// rational scalars whose q-th root is rational up to factors of sqrt2 and i,
/// and for single monomials whose exponents are divisible by q.
fn root_coeff(c: &RatFunc, r: &Rat) -> Result<RatFunc> {
    let p = r
        .numer()
        .to_i64()
        .ok_or_else(|| CoreError::DomainError("power exponent overflow".into()))?;
    let q = r
        .denom()
        .to_i64()
        .ok_or_else(|| CoreError::DomainError("power exponent overflow".into()))?;
    if let Some(scalar) = c.as_rational() {
        let root = scalar_qth_root(&scalar, q).ok_or_else(|| {
            CoreError::NonInvertibleLeadingTerm(format!("{}^(1/{})", scalar, q))
        })?;
        return root.pow(p as i32);
    }
    // Monomial case: scalar * prod sym^e with q | e for all symbols.
    if let Some(poly) = c.as_poly() {
        if poly.num_terms() == 1 {
            let (mono, coeff) = poly.leading().unwrap();
            let all_divisible = super::poly::ALL_SYMS
                .iter()
                .all(|&s| mono.exp(s) as i64 % q == 0);
            if all_divisible {
                let root = scalar_qth_root(&coeff, q).ok_or_else(|| {
                    CoreError::NonInvertibleLeadingTerm(format!("{}^(1/{})", coeff, q))
                })?;
                let mut out = root;
                for &s in super::poly::ALL_SYMS.iter() {
                    let e = mono.exp(s) as i64 / q;
                    if e > 0 {
                        out = out.mul(&RatFunc::sym(s).pow(e as i32)?);
                    }
                }
                return out.pow(p as i32);
            }
        }
    }
    Err(CoreError::NonInvertibleLeadingTerm(format!(
        "no exact root of order {} for {}",
        q, c
    )))
}

/// Exact q-th root of a rational scalar in Q(i, sqrt2): q = 1 trivially,
/// q = 2 with sign -> i and a factor-2 defect -> sqrt2, q in {4, 8} for
/// perfect powers possibly off by a power of two.
fn scalar_qth_root(c: &Rat, q: i64) -> Option<RatFunc> {
    if q == 1 {
        return Some(RatFunc::from_rat(c.clone()));
    }
    if c.is_zero() {
        return None;
    }
    let negative = c.is_negative();
    let mag = c.abs();
    if q == 2 {
        let base = if let Some(s) = exact_root(&mag, 2) {
            RatFunc::from_rat(s)
        } else if let Some(s) = exact_root(&(mag.clone() / Rat::from_integer(BigInt::from(2))), 2) {
            // sqrt(2 s^2) = s sqrt2
            RatFunc::from_rat(s).mul(&RatFunc::sym(Sym::Sqrt2))
        } else if let Some(s) = exact_root(&(mag * Rat::from_integer(BigInt::from(2))), 2) {
            // sqrt(s^2/2) = s sqrt2 / 2
            RatFunc::from_rat(s / Rat::from_integer(BigInt::from(2)))
                .mul(&RatFunc::sym(Sym::Sqrt2))
        } else {
            return None;
        };
        return Some(if negative {
            base.mul(&RatFunc::sym(Sym::I))
        } else {
            base
        });
    }
    if negative {
        return None;
    }
    if let Some(s) = exact_root(&mag, q as u32) {
        return Some(RatFunc::from_rat(s));
    }
    // Allow a single dangling sqrt2: c = s^q * 2^(q/2) for even q.
    if q % 2 == 0 {
        let half = Rat::from_integer(BigInt::from(2)).pow((q / 2) as i32);
        if let Some(s) = exact_root(&(mag / half), q as u32) {
            return Some(RatFunc::from_rat(s).mul(&RatFunc::sym(Sym::Sqrt2)));
        }
    }
    None
}

fn exact_root(c: &Rat, q: u32) -> Option<Rat> {
    if c.is_negative() {
        return None;
    }
    let n = c.numer();
    let d = c.denom();
    let rn = n.nth_root(q);
    let rd = d.nth_root(q);
    if &num_traits::pow(rn.clone(), q as usize) == n
        && &num_traits::pow(rd.clone(), q as usize) == d
    {
        Some(Rat::new(rn, rd))
    } else {
        None
    }
}

fn valid_den(d: i64) -> i64 {
    assert!(valid_den_ok(d), "lattice denominator {} not in 1,2,4,8", d);
    d
}

fn valid_den_ok(d: i64) -> bool {
    matches!(d, 1 | 2 | 4 | 8)
}

fn lcm_den(a: i64, b: i64) -> i64 {
    a.max(b)
}

/// Convert a strict rational bound num/den (first unknown exponent) into the
/// largest inclusive scaled index below it on the lattice Z/scale.
fn clamp_scaled(bound: (i128, i128), scale: i64) -> i64 {
    let (num, den) = bound;
    let x = num * scale as i128;
    // ceil(x/den) - 1
    let c = if x % den == 0 {
        x / den
    } else {
        x.div_euclid(den) + 1
    };
    (c - 1).min(EXACT_TRUNC as i128) as i64
}

impl fmt::Display for PuiseuxSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let e = Rat::new(BigInt::from(*k), BigInt::from(self.den));
            if e.is_zero() {
                write!(f, "({})", c)?;
            } else if e.is_one() {
                write!(f, "({})*{}", c, self.var)?;
            } else {
                write!(f, "({})*{}^({})", c, self.var, e)?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        write!(
            f,
            " + O({}^({}))",
            self.var,
            Rat::new(BigInt::from(self.trunc + 1), BigInt::from(self.den))
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::poly::{rat, rat_i, MPoly};

    fn geom(var: SeriesVar, n: i64) -> PuiseuxSeries {
        // 1/(1-x) = sum x^j
        PuiseuxSeries::from_rats(var, &vec![rat_i(1); (n + 1) as usize], n)
    }

    #[test]
    fn inverse_of_one_minus_x_is_geometric() {
        let one_minus = PuiseuxSeries::from_rats(SeriesVar::X, &[rat_i(1), rat_i(-1)], 10);
        let inv = one_minus.inv().unwrap();
        assert!(inv.agrees_with(&geom(SeriesVar::X, 10)));
        assert_eq!(inv.trunc_scaled(), 10);
    }

    #[test]
    fn division_truncation_is_conservative() {
        // (x + x^2) / x known through trunc - 2*val relative shifts
        let num = PuiseuxSeries::from_scaled_terms(
            SeriesVar::X,
            1,
            [(1, RatFunc::one()), (2, RatFunc::one())],
            8,
        );
        let den = PuiseuxSeries::from_scaled_terms(SeriesVar::X, 1, [(1, RatFunc::one())], 8);
        let q = num.div(&den).unwrap();
        assert_eq!(q.coeff(0, 1).unwrap(), RatFunc::one());
        assert_eq!(q.coeff(1, 1).unwrap(), RatFunc::one());
        // trunc = min(ta - vb, va - 2vb + tb) = min(8-1, 1-2+8) = 7
        assert_eq!(q.trunc_scaled(), 7);
    }

    #[test]
    fn sqrt_with_sqrt2_and_i_absorption() {
        // sqrt(-2 x) = i sqrt2 sqrt(x)
        let s = PuiseuxSeries::from_scaled_terms(
            SeriesVar::X,
            1,
            [(1, RatFunc::int(-2))],
            6,
        );
        let r = s.sqrt().unwrap();
        let expect = RatFunc::sym(Sym::I).mul(&RatFunc::sym(Sym::Sqrt2));
        assert_eq!(r.coeff(1, 2).unwrap(), expect);
        // squaring returns the original within the window
        let sq = r.mul(&r).unwrap();
        assert!(sq.agrees_with(&s));
    }

    #[test]
    fn pow_additivity() {
        // (1+x)^(3/2) * (1+x)^(1/2) = (1+x)^2
        let s = PuiseuxSeries::from_rats(SeriesVar::X, &[rat_i(1), rat_i(1)], 9);
        let a = s.pow_rational(&rat(3, 2)).unwrap();
        let b = s.pow_rational(&rat(1, 2)).unwrap();
        let prod = a.mul(&b).unwrap();
        let sq = s.mul(&s).unwrap();
        assert!(prod.agrees_with(&sq));
    }

    #[test]
    fn compose_exp_log_roundtrip() {
        // exp(log(1+x)) - 1 = x through the window
        let n = 9i64;
        let mut log_c = vec![rat_i(0)];
        for j in 1..=n {
            let sign = if j % 2 == 1 { 1 } else { -1 };
            log_c.push(rat(sign, j));
        }
        let log1p = PuiseuxSeries::from_rats(SeriesVar::X, &log_c, n);
        let mut exp_c = vec![rat_i(1)];
        let mut fact = rat_i(1);
        for j in 1..=n {
            fact = fact * rat(1, j);
            exp_c.push(fact.clone());
        }
        let exp = PuiseuxSeries::from_rats(SeriesVar::Y, &exp_c, n);
        let composed = exp.compose(&log1p).unwrap();
        let expect = PuiseuxSeries::from_rats(SeriesVar::X, &[rat_i(1), rat_i(1)], n);
        assert!(composed.agrees_with(&expect));
    }

    #[test]
    fn compose_tracks_inner_lattice() {
        // f(y) = y^2 at y = x^(1/2) + x gives x + 2 x^(3/2) + x^2
        let inner = PuiseuxSeries::from_scaled_terms(
            SeriesVar::X,
            2,
            [(1, RatFunc::one()), (2, RatFunc::one())],
            10,
        );
        let outer = PuiseuxSeries::from_scaled_terms(
            SeriesVar::Y,
            1,
            [(2, RatFunc::one())],
            6,
        );
        let c = outer.compose(&inner).unwrap();
        assert_eq!(c.coeff(1, 1).unwrap(), RatFunc::one());
        assert_eq!(c.coeff(3, 2).unwrap(), RatFunc::int(2));
        assert_eq!(c.coeff(2, 1).unwrap(), RatFunc::one());
    }

    #[test]
    fn reversion_matches_resubstitution_oracle() {
        // s(x) = x - 2x^2 + 3x^3 - x^4 + x^5; oracle: iterate
        // t <- (y - (s(t) - t)) starting from t = y.
        let n = 8i64;
        let s = PuiseuxSeries::from_rats(
            SeriesVar::X,
            &[rat_i(0), rat_i(1), rat_i(-2), rat_i(3), rat_i(-1), rat_i(1), rat_i(0), rat_i(0), rat_i(0)],
            n,
        );
        let t = s.reverse().unwrap();
        // Oracle by fixed-point iteration in exact arithmetic.
        let y = PuiseuxSeries::from_rats(SeriesVar::X, &[rat_i(0), rat_i(1)], n);
        let mut guess = y.clone();
        for _ in 0..(n as usize) {
            let s_of_guess = PuiseuxSeries::apply_polynomial(
                &[
                    RatFunc::zero(),
                    RatFunc::one(),
                    RatFunc::int(-2),
                    RatFunc::int(3),
                    RatFunc::int(-1),
                    RatFunc::int(1),
                ],
                &guess,
            )
            .unwrap()
            .truncate_scaled(n);
            // guess <- guess + (y - s(guess))
            guess = guess.add(&y.sub(&s_of_guess).unwrap()).unwrap();
        }
        assert!(t.agrees_with(&guess));
        // And the defining identity s(t(y)) = y.
        let st = s.compose(&t).unwrap();
        assert!(st.agrees_with(&y));
    }

    #[test]
    fn variable_mismatch_is_caught() {
        let a = PuiseuxSeries::from_rats(SeriesVar::X, &[rat_i(1)], 3);
        let b = PuiseuxSeries::from_rats(SeriesVar::Y, &[rat_i(1)], 3);
        assert!(matches!(
            a.add(&b),
            Err(CoreError::VariableMismatch(_, _))
        ));
    }

    #[test]
    fn scale_var_with_symbolic_factor() {
        // x -> (i kp) x on 1 + x + x^2
        let s = PuiseuxSeries::from_rats(SeriesVar::X, &[rat_i(1), rat_i(1), rat_i(1)], 2);
        let c = RatFunc::sym(Sym::I).mul(&RatFunc::sym(Sym::Kp));
        let r = s.scale_var(&c).unwrap();
        assert_eq!(r.coeff(1, 1).unwrap(), c);
        // (i kp)^2 = -(1 - k2) = k2 - 1
        let expect = RatFunc::from_poly(MPoly::sym(Sym::K2).sub(&MPoly::one()));
        assert_eq!(r.coeff(2, 1).unwrap(), expect);
    }

    #[test]
    fn euler_derivative_scales_by_exponent() {
        let s = PuiseuxSeries::from_scaled_terms(
            SeriesVar::Q,
            2,
            [(1, RatFunc::int(4)), (4, RatFunc::int(3))],
            8,
        );
        let e = s.euler_derivative();
        assert_eq!(e.coeff(1, 2).unwrap(), RatFunc::from_rat(rat(4, 2)));
        assert_eq!(e.coeff(2, 1).unwrap(), RatFunc::int(6));
    }
}
