//! Rational functions with factored denominators.
//!
//! A value is `num / prod(factor^mult)`. Denominator factors are kept
//! primitive (no rational content), sign-normalized, nonconstant, and free of
//! algebraic symbols; inversion rationalizes any algebraic part into the
//! numerator via conjugation, so the invariant is self-maintaining.
//!
//! Reduction is exact trial division of the numerator by each factor. That is
//! complete for the factor shapes this engine produces (linear forms from
//! partition weights, modulus and spectral binomials); a reducible fraction
//! whose factors were born from different constructions may stay unreduced,
//! which is only a size cost, never a correctness one. Equality therefore
//! tests the difference for a zero numerator rather than comparing shapes.

use super::poly::{MPoly, Rat, Sym};
use crate::error::{CoreError, Result};
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone)]
pub struct RatFunc {
    num: MPoly,
    den: BTreeMap<MPoly, u32>,
}

impl RatFunc {
    pub fn zero() -> Self {
        RatFunc {
            num: MPoly::zero(),
            den: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        RatFunc::from_poly(MPoly::one())
    }

    pub fn from_poly(p: MPoly) -> Self {
        RatFunc {
            num: p,
            den: BTreeMap::new(),
        }
    }

    pub fn from_rat(c: Rat) -> Self {
        RatFunc::from_poly(MPoly::constant(c))
    }

    pub fn int(n: i64) -> Self {
        RatFunc::from_poly(MPoly::int(n))
    }

    pub fn sym(s: Sym) -> Self {
        RatFunc::from_poly(MPoly::sym(s))
    }

    /// num / den as given; den split into content and primitive factor.
    pub fn fraction(num: MPoly, den: MPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(CoreError::DomainError(
                "zero denominator in rational function".into(),
            ));
        }
        let f = RatFunc::from_poly(num);
        f.div(&RatFunc::from_poly(den))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn numerator(&self) -> &MPoly {
        &self.num
    }

    pub fn denominator_factors(&self) -> &BTreeMap<MPoly, u32> {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    /// The polynomial value if the denominator is trivial.
    pub fn as_poly(&self) -> Option<&MPoly> {
        if self.den.is_empty() {
            Some(&self.num)
        } else {
            None
        }
    }

    pub fn as_rational(&self) -> Option<Rat> {
        if self.den.is_empty() {
            self.num.as_rational()
        } else {
            None
        }
    }

    pub fn den_as_poly(&self) -> MPoly {
        let mut d = MPoly::one();
        for (f, &m) in &self.den {
            d = d.mul(&f.pow(m));
        }
        d
    }

    /// Divide the numerator by denominator factors wherever division is
    /// exact, and drop factors that became constant.
    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        let factors: Vec<MPoly> = self.den.keys().cloned().collect();
        for f in factors {
            while let Some(mult) = self.den.get(&f).copied() {
                if mult == 0 {
                    self.den.remove(&f);
                    break;
                }
                if let Some(q) = self.num.try_div(&f) {
                    self.num = q;
                    if mult == 1 {
                        self.den.remove(&f);
                        break;
                    } else {
                        self.den.insert(f.clone(), mult - 1);
                    }
                } else {
                    break;
                }
            }
        }
    }

    fn push_den_factor(&mut self, factor: MPoly, mult: u32) {
        if mult == 0 {
            return;
        }
        let (content, prim) = factor.content_and_primitive();
        if !prim.is_constant() {
            *self.den.entry(prim).or_insert(0) += mult;
        }
        // Content folds into the numerator as an inverse scale.
        let mut scale = Rat::one();
        for _ in 0..mult {
            scale *= content.clone();
        }
        self.num = self.num.scale(&(Rat::one() / scale));
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        // Common denominator: factor-wise max multiplicity.
        let mut common: BTreeMap<MPoly, u32> = self.den.clone();
        for (f, &m) in &other.den {
            let e = common.entry(f.clone()).or_insert(0);
            *e = (*e).max(m);
        }
        let cofactor = |own: &BTreeMap<MPoly, u32>| -> MPoly {
            let mut c = MPoly::one();
            for (f, &m) in &common {
                let have = own.get(f).copied().unwrap_or(0);
                if m > have {
                    c = c.mul(&f.pow(m - have));
                }
            }
            c
        };
        let num = self
            .num
            .mul(&cofactor(&self.den))
            .add(&other.num.mul(&cofactor(&other.den)));
        let mut out = RatFunc { num, den: common };
        out.reduce();
        out
    }

    pub fn sub(&self, other: &RatFunc) -> RatFunc {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        if self.is_zero() || other.is_zero() {
            return RatFunc::zero();
        }
        let mut den = self.den.clone();
        for (f, &m) in &other.den {
            *den.entry(f.clone()).or_insert(0) += m;
        }
        let mut out = RatFunc {
            num: self.num.mul(&other.num),
            den,
        };
        out.reduce();
        out
    }

    pub fn mul_poly(&self, p: &MPoly) -> RatFunc {
        self.mul(&RatFunc::from_poly(p.clone()))
    }

    pub fn scale(&self, c: &Rat) -> RatFunc {
        if c.is_zero() {
            return RatFunc::zero();
        }
        RatFunc {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn inv(&self) -> Result<RatFunc> {
        if self.is_zero() {
            return Err(CoreError::NotInvertible("inverse of zero".into()));
        }
        // New numerator starts as the old denominator product; the old
        // numerator becomes the denominator and is rationalized so that no
        // algebraic symbol survives below the fraction bar.
        let mut n = self.den_as_poly();
        let mut d = self.num.clone();
        for s in [Sym::I, Sym::Sqrt2, Sym::Kp, Sym::Kappa] {
            if !d.contains_sym(s) {
                continue;
            }
            let (even, odd) = d.split_parity(s);
            // conj = even - s*odd; d*conj = even^2 - s^2*odd^2 is s-free.
            let conj = even.sub(&MPoly::sym(s).mul(&odd));
            d = d.mul(&conj);
            n = n.mul(&conj);
            debug_assert!(!d.contains_sym(s));
        }
        let mut out = RatFunc {
            num: n,
            den: BTreeMap::new(),
        };
        out.push_den_factor(d, 1);
        out.reduce();
        Ok(out)
    }

    pub fn div(&self, other: &RatFunc) -> Result<RatFunc> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, e: i32) -> Result<RatFunc> {
        if e == 0 {
            return Ok(RatFunc::one());
        }
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut out = RatFunc::one();
        for _ in 0..e.unsigned_abs() {
            out = out.mul(&base);
        }
        Ok(out)
    }

    /// Structural equality of values: the difference has zero numerator.
    pub fn equals(&self, other: &RatFunc) -> bool {
        self.sub(other).is_zero()
    }

    pub fn contains_sym(&self, s: Sym) -> bool {
        self.num.contains_sym(s) || self.den.keys().any(|f| f.contains_sym(s))
    }

    pub fn max_exp_num(&self, s: Sym) -> u16 {
        self.num.max_exp(s)
    }

    /// Substitute a rational function for a symbol. Fails with PoleHit when a
    /// denominator factor vanishes identically under the substitution.
    pub fn substitute(&self, s: Sym, rep: &RatFunc) -> Result<RatFunc> {
        let mut out = substitute_poly(&self.num, s, rep)?;
        for (f, &m) in &self.den {
            let fs = substitute_poly(f, s, rep)?;
            if fs.is_zero() {
                return Err(CoreError::PoleHit(format!(
                    "denominator factor {} vanishes under {} substitution",
                    f,
                    s.name()
                )));
            }
            out = out.div(&fs.pow(m as i32)?)?;
        }
        Ok(out)
    }

    /// Numeric evaluation to (re, im).
    pub fn eval_f64(&self, assign: &dyn Fn(Sym) -> Option<f64>) -> Result<(f64, f64)> {
        let missing = |s: Sym| {
            CoreError::DomainError(format!("no numeric value supplied for symbol {}", s.name()))
        };
        let (mut re, mut im) = self.num.eval_f64(assign).map_err(missing)?;
        for (f, &m) in &self.den {
            let (dr, di) = f.eval_f64(assign).map_err(missing)?;
            let norm = dr * dr + di * di;
            if norm == 0.0 {
                return Err(CoreError::PoleHit(format!(
                    "denominator factor {} evaluates to zero",
                    f
                )));
            }
            for _ in 0..m {
                let nr = (re * dr + im * di) / norm;
                let ni = (im * dr - re * di) / norm;
                re = nr;
                im = ni;
            }
        }
        Ok((re, im))
    }
}

pub fn substitute_poly(p: &MPoly, s: Sym, rep: &RatFunc) -> Result<RatFunc> {
    if !p.contains_sym(s) {
        return Ok(RatFunc::from_poly(p.clone()));
    }
    let mut out = RatFunc::zero();
    for (e, cof) in p.coeffs_of(s) {
        let part = RatFunc::from_poly(cof).mul(&rep.pow(e as i32)?);
        out = out.add(&part);
    }
    Ok(out)
}

impl PartialEq for RatFunc {
    fn eq(&self, other: &Self) -> bool {
        self.equals(other)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_empty() {
            return write!(f, "{}", self.num);
        }
        let num_str = self.num.to_string();
        if self.num.num_terms() > 1 {
            write!(f, "({})", num_str)?;
        } else {
            write!(f, "{}", num_str)?;
        }
        f.write_str(" / (")?;
        let mut first = true;
        for (fac, &m) in &self.den {
            if !first {
                f.write_str(" * ")?;
            }
            first = false;
            if fac.num_terms() > 1 || m > 1 {
                write!(f, "({})", fac)?;
            } else {
                write!(f, "{}", fac)?;
            }
            if m > 1 {
                write!(f, "^{}", m)?;
            }
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::poly::{rat, rat_i};

    fn nu2_minus(n: i64) -> MPoly {
        MPoly::sym_pow(Sym::Nu, 2).sub(&MPoly::int(n))
    }

    #[test]
    fn addition_over_common_factors() {
        // 1/(v-1) + 1/(v+1) = 2v/((v-1)(v+1)) with v = nu^2
        let vm = MPoly::sym_pow(Sym::Nu, 2).sub(&MPoly::int(1));
        let vp = MPoly::sym_pow(Sym::Nu, 2).add(&MPoly::int(1));
        let a = RatFunc::fraction(MPoly::one(), vm.clone()).unwrap();
        let b = RatFunc::fraction(MPoly::one(), vp.clone()).unwrap();
        let sum = a.add(&b);
        let expect =
            RatFunc::fraction(MPoly::sym_pow(Sym::Nu, 2).scale(&rat_i(2)), vm.mul(&vp)).unwrap();
        assert!(sum.equals(&expect));
    }

    #[test]
    fn reduction_cancels_shared_factor() {
        // (nu^2-1)(nu^2-4) / (nu^2-4) reduces to a polynomial
        let n = nu2_minus(1).mul(&nu2_minus(4));
        let f = RatFunc::fraction(n, nu2_minus(4)).unwrap();
        assert!(f.is_polynomial());
        assert_eq!(f.as_poly().unwrap(), &nu2_minus(1));
    }

    #[test]
    fn inversion_rationalizes_sqrt2_and_i() {
        // 1/(sqrt2) = sqrt2/2
        let f = RatFunc::sym(Sym::Sqrt2).inv().unwrap();
        let expect = RatFunc::from_poly(MPoly::sym(Sym::Sqrt2).scale(&rat(1, 2)));
        assert!(f.equals(&expect));
        // 1/i = -i
        let f = RatFunc::sym(Sym::I).inv().unwrap();
        let expect = RatFunc::from_poly(MPoly::sym(Sym::I).neg());
        assert!(f.equals(&expect));
        // 1/kp = kp/(1-k2)
        let f = RatFunc::sym(Sym::Kp).inv().unwrap();
        let expect = RatFunc::fraction(
            MPoly::sym(Sym::Kp),
            MPoly::one().sub(&MPoly::sym(Sym::K2)),
        )
        .unwrap();
        assert!(f.equals(&expect));
    }

    #[test]
    fn substitution_reports_poles() {
        // 1/(nu^2 - 4) at nu -> 2 hits the pole
        let f = RatFunc::fraction(MPoly::one(), nu2_minus(4)).unwrap();
        let err = f.substitute(Sym::Nu, &RatFunc::int(2));
        assert!(matches!(err, Err(CoreError::PoleHit(_))));
        // and is finite at nu -> 3
        let v = f.substitute(Sym::Nu, &RatFunc::int(3)).unwrap();
        assert!(v.equals(&RatFunc::from_rat(rat(1, 5))));
    }

    #[test]
    fn eval_complex_division() {
        // (1 + i) / (1 - i) = i
        let n = MPoly::one().add(&MPoly::sym(Sym::I));
        let d = MPoly::one().sub(&MPoly::sym(Sym::I));
        let f = RatFunc::from_poly(n).div(&RatFunc::from_poly(d)).unwrap();
        let (re, im) = f.eval_f64(&|_| None).unwrap();
        assert!((re - 0.0).abs() < 1e-15 && (im - 1.0).abs() < 1e-15);
    }
}
