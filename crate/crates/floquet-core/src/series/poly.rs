//! Sparse multivariate polynomials over exact rationals, with a fixed symbol
//! alphabet and built-in quadratic reduction rules.
//!
//! Four symbols are algebraic over the remaining ones and are kept reduced at
//! all times (exponent 0 or 1 in every stored monomial):
//!
//!   i^2      -> -1
//!   sqrt2^2  ->  2
//!   kp^2     ->  1 - k2          (complementary modulus)
//!   kappa^2  ->  nn1 * k2        (coupling scale)
//!
//! Monomials are exponent vectors ordered lexicographically by symbol index,
//! which is a monomial order (monotone under multiplication), so leading-term
//! trial division is sound whenever the divisor is free of algebraic symbols.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Exact rational scalar used throughout the engine.
pub type Rat = BigRational;

/// Shorthand constructors for rational constants.
pub fn rat_i(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Fixed symbol alphabet of the coefficient field.
///
/// The discriminant order defines the lexicographic monomial order and the
/// canonical printing order. Algebraic symbols come first so that reduced
/// monomials sort by their algebraic part before anything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(usize)]
pub enum Sym {
    /// Imaginary unit, i^2 = -1.
    I = 0,
    /// Square root of two, sqrt2^2 = 2.
    Sqrt2 = 1,
    /// Complementary modulus k', kp^2 = 1 - k2.
    Kp = 2,
    /// Coupling scale kappa, kappa^2 = nn1 * k2.
    Kappa = 3,
    /// Circle constant pi (kept symbolic in period expressions).
    Pi = 4,
    /// Complete elliptic integral of the first kind K(k).
    BigK = 5,
    /// Complete elliptic integral of the second kind E(k).
    BigE = 6,
    /// Coulomb modulus a of the gauge-theory expansion.
    A = 7,
    /// Hypermultiplet mass m.
    M = 8,
    /// First deformation parameter eps1.
    Eps1 = 9,
    /// Second deformation parameter eps2.
    Eps2 = 10,
    /// Coupling index n (mass in units of eps1).
    LitN = 11,
    /// Invariant combination n(n-1).
    Nn1 = 12,
    /// Floquet exponent nu.
    Nu = 13,
    /// Quasimomentum mu.
    Mu = 14,
    /// Squared elliptic modulus k^2.
    K2 = 15,
    /// Spectral parameter omega of the operator calculus.
    Omega = 16,
    /// Auxiliary band variable w of the trigonometric limit.
    W = 17,
}

pub const NSYM: usize = 18;

pub const ALL_SYMS: [Sym; NSYM] = [
    Sym::I,
    Sym::Sqrt2,
    Sym::Kp,
    Sym::Kappa,
    Sym::Pi,
    Sym::BigK,
    Sym::BigE,
    Sym::A,
    Sym::M,
    Sym::Eps1,
    Sym::Eps2,
    Sym::LitN,
    Sym::Nn1,
    Sym::Nu,
    Sym::Mu,
    Sym::K2,
    Sym::Omega,
    Sym::W,
];

impl Sym {
    pub fn name(self) -> &'static str {
        match self {
            Sym::I => "i",
            Sym::Sqrt2 => "sqrt2",
            Sym::Kp => "kp",
            Sym::Kappa => "kappa",
            Sym::Pi => "pi",
            Sym::BigK => "K",
            Sym::BigE => "E",
            Sym::A => "a",
            Sym::M => "m",
            Sym::Eps1 => "eps1",
            Sym::Eps2 => "eps2",
            Sym::LitN => "n",
            Sym::Nn1 => "nn1",
            Sym::Nu => "nu",
            Sym::Mu => "mu",
            Sym::K2 => "k2",
            Sym::Omega => "omega",
            Sym::W => "w",
        }
    }

    /// Symbols that square to something simpler and are kept at exponent < 2.
    pub fn is_algebraic(self) -> bool {
        matches!(self, Sym::I | Sym::Sqrt2 | Sym::Kp | Sym::Kappa)
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Exponent vector of one monomial. Lexicographic array order doubles as the
/// monomial order used by trial division.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mono(pub [u16; NSYM]);

impl Mono {
    pub fn unit() -> Self {
        Mono([0; NSYM])
    }

    pub fn of(sym: Sym, e: u16) -> Self {
        let mut m = [0u16; NSYM];
        m[sym as usize] = e;
        Mono(m)
    }

    pub fn exp(&self, sym: Sym) -> u16 {
        self.0[sym as usize]
    }

    pub fn is_unit(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Raw exponent sum; panics on overflow (degrees stay far below u16 in
    /// practice, an overflow indicates a runaway computation).
    fn mul(&self, other: &Mono) -> Mono {
        let mut out = [0u16; NSYM];
        for k in 0..NSYM {
            out[k] = self.0[k]
                .checked_add(other.0[k])
                .expect("monomial exponent overflow");
        }
        Mono(out)
    }

    /// Componentwise difference, None if any exponent would go negative.
    fn checked_div(&self, other: &Mono) -> Option<Mono> {
        let mut out = [0u16; NSYM];
        for k in 0..NSYM {
            out[k] = self.0[k].checked_sub(other.0[k])?;
        }
        Some(Mono(out))
    }

    fn has_algebraic(&self) -> bool {
        ALL_SYMS
            .iter()
            .any(|&s| s.is_algebraic() && self.exp(s) > 0)
    }
}

/// Sparse polynomial: reduced monomial -> nonzero rational coefficient.
/// The derived order is structural and only used to key collections.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct MPoly {
    terms: BTreeMap<Mono, Rat>,
}

impl MPoly {
    pub fn zero() -> Self {
        MPoly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        MPoly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = MPoly::zero();
        if !c.is_zero() {
            p.terms.insert(Mono::unit(), c);
        }
        p
    }

    pub fn int(n: i64) -> Self {
        MPoly::constant(rat_i(n))
    }

    pub fn sym(s: Sym) -> Self {
        MPoly::sym_pow(s, 1)
    }

    pub fn sym_pow(s: Sym, e: u16) -> Self {
        let mut p = MPoly::zero();
        p.add_reduced(Mono::of(s, e), Rat::one());
        p
    }

    pub fn term(c: Rat, pairs: &[(Sym, u16)]) -> Self {
        let mut m = [0u16; NSYM];
        for &(s, e) in pairs {
            m[s as usize] += e;
        }
        let mut p = MPoly::zero();
        p.add_reduced(Mono(m), c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.contains_key(&Mono::unit()))
    }

    /// Constant value if the polynomial is constant.
    pub fn as_rational(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(Rat::zero());
        }
        if self.is_constant() {
            return self.terms.get(&Mono::unit()).cloned();
        }
        None
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn iter(&self) -> std::collections::btree_map::Iter<'_, Mono, Rat> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Mono) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn max_exp(&self, s: Sym) -> u16 {
        self.terms.keys().map(|m| m.exp(s)).max().unwrap_or(0)
    }

    pub fn contains_sym(&self, s: Sym) -> bool {
        self.terms.keys().any(|m| m.exp(s) > 0)
    }

    pub fn is_algebraic_free(&self) -> bool {
        !self.terms.keys().any(|m| m.has_algebraic())
    }

    pub fn symbols_used(&self) -> Vec<Sym> {
        ALL_SYMS
            .iter()
            .copied()
            .filter(|&s| self.contains_sym(s))
            .collect()
    }

    /// Insert `coeff * mono` where `mono` may carry unreduced algebraic
    /// exponents; applies the quadratic rules and merges into the map.
    pub fn add_reduced(&mut self, mono: Mono, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        // Work queue of partially reduced pieces.
        let mut queue: Vec<(Mono, Rat)> = vec![(mono, coeff)];
        let mut done: Vec<(Mono, Rat)> = Vec::new();
        while let Some((mut m, mut c)) = queue.pop() {
            // i^2 -> -1
            let ei = m.0[Sym::I as usize];
            if ei >= 2 {
                let pairs = ei / 2;
                m.0[Sym::I as usize] = ei % 2;
                if pairs % 2 == 1 {
                    c = -c;
                }
            }
            // sqrt2^2 -> 2
            let es = m.0[Sym::Sqrt2 as usize];
            if es >= 2 {
                let pairs = es / 2;
                m.0[Sym::Sqrt2 as usize] = es % 2;
                for _ in 0..pairs {
                    c *= rat_i(2);
                }
            }
            // kappa^2 -> nn1 * k2 (single monomial, no branching)
            let ek = m.0[Sym::Kappa as usize];
            if ek >= 2 {
                let pairs = ek / 2;
                m.0[Sym::Kappa as usize] = ek % 2;
                m.0[Sym::Nn1 as usize] = m.0[Sym::Nn1 as usize]
                    .checked_add(pairs)
                    .expect("monomial exponent overflow");
                m.0[Sym::K2 as usize] = m.0[Sym::K2 as usize]
                    .checked_add(pairs)
                    .expect("monomial exponent overflow");
            }
            // kp^2 -> 1 - k2 (branches into a binomial expansion)
            let ep = m.0[Sym::Kp as usize];
            if ep >= 2 {
                let pairs = ep / 2;
                m.0[Sym::Kp as usize] = ep % 2;
                // (1 - k2)^pairs expanded by repeated multiplication keeps
                // integer coefficients exact.
                let mut sign = Rat::one();
                let mut binom = Rat::one();
                for j in 0..=pairs {
                    if j > 0 {
                        sign = -sign;
                        binom = binom * rat_i((pairs - j + 1) as i64) / rat_i(j as i64);
                    }
                    let mut mj = m;
                    mj.0[Sym::K2 as usize] = mj.0[Sym::K2 as usize]
                        .checked_add(j)
                        .expect("monomial exponent overflow");
                    queue.push((mj, c.clone() * sign.clone() * binom.clone()));
                }
                continue;
            }
            done.push((m, c));
        }
        for (m, c) in done {
            let entry = self.terms.entry(m).or_insert_with(Rat::zero);
            *entry += c;
            if entry.is_zero() {
                self.terms.remove(&m);
            }
        }
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            let entry = out.terms.entry(*m).or_insert_with(Rat::zero);
            *entry += c.clone();
            if entry.is_zero() {
                out.terms.remove(m);
            }
        }
        out
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> MPoly {
        MPoly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        let mut out = MPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_reduced(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> MPoly {
        if c.is_zero() {
            return MPoly::zero();
        }
        MPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (*m, v.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> MPoly {
        let mut out = MPoly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = out.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    /// Leading (largest) monomial and its coefficient.
    pub fn leading(&self) -> Option<(Mono, Rat)> {
        self.terms.iter().next_back().map(|(m, c)| (*m, c.clone()))
    }

    /// Exact division. Returns None when the divisor does not divide self.
    /// The divisor must be free of algebraic symbols; over that subring the
    /// lexicographic leading-term argument makes trial division complete.
    pub fn try_div(&self, divisor: &MPoly) -> Option<MPoly> {
        assert!(
            divisor.is_algebraic_free(),
            "exact division requires an algebraic-free divisor"
        );
        if divisor.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(MPoly::zero());
        }
        if let Some(c) = divisor.as_rational() {
            return Some(self.scale(&(Rat::one() / c)));
        }
        let (dm, dc) = divisor.leading().unwrap();
        let mut rem = self.clone();
        let mut quo = MPoly::zero();
        while !rem.is_zero() {
            let (rm, rc) = rem.leading().unwrap();
            let qm = rm.checked_div(&dm)?;
            let qc = rc / dc.clone();
            let mut qterm = MPoly::zero();
            qterm.add_reduced(qm, qc);
            quo = quo.add(&qterm);
            rem = rem.sub(&qterm.mul(divisor));
        }
        Some(quo)
    }

    /// Remove rational content and normalize the sign of the leading
    /// coefficient to be positive. Returns (content, primitive part) with
    /// self = content * primitive.
    pub fn content_and_primitive(&self) -> (Rat, MPoly) {
        if self.is_zero() {
            return (Rat::one(), MPoly::zero());
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            num_gcd = num_integer::Integer::gcd(&num_gcd, c.numer());
            den_lcm = num_integer::Integer::lcm(&den_lcm, c.denom());
        }
        let mut content = Rat::new(num_gcd, den_lcm);
        let (_, lead) = self.leading().unwrap();
        if lead.is_negative() {
            content = -content;
        }
        let inv = Rat::one() / content.clone();
        (content, self.scale(&inv))
    }

    /// Group terms by the exponent of one symbol: exponent -> cofactor with
    /// that symbol struck out.
    pub fn coeffs_of(&self, s: Sym) -> BTreeMap<u16, MPoly> {
        let mut out: BTreeMap<u16, MPoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.exp(s);
            let mut m2 = *m;
            m2.0[s as usize] = 0;
            out.entry(e)
                .or_insert_with(MPoly::zero)
                .add_reduced(m2, c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// Split into (part with even exponent of s, cofactor of odd part), so
    /// self = even + s * odd. Only meaningful for algebraic s (exponent < 2).
    pub fn split_parity(&self, s: Sym) -> (MPoly, MPoly) {
        let mut even = MPoly::zero();
        let mut odd = MPoly::zero();
        for (m, c) in &self.terms {
            if m.exp(s) % 2 == 0 {
                even.add_reduced(*m, c.clone());
            } else {
                let mut m2 = *m;
                m2.0[s as usize] -= 1;
                odd.add_reduced(m2, c.clone());
            }
        }
        (even, odd)
    }

    /// Numeric evaluation to a complex pair (re, im). Symbols with no entry
    /// in `assign` other than the built-in constants are an error.
    pub fn eval_f64(&self, assign: &dyn Fn(Sym) -> Option<f64>) -> Result<(f64, f64), Sym> {
        let mut re = 0.0f64;
        let mut im = 0.0f64;
        for (m, c) in &self.terms {
            let mut v = rat_to_f64(c);
            for &s in ALL_SYMS.iter() {
                if s == Sym::I {
                    continue;
                }
                let e = m.exp(s);
                if e == 0 {
                    continue;
                }
                let base = match s {
                    Sym::Sqrt2 => std::f64::consts::SQRT_2,
                    Sym::Pi => std::f64::consts::PI,
                    _ => assign(s).ok_or(s)?,
                };
                v *= base.powi(e as i32);
            }
            // Multiply by i^e.
            let (tr, ti) = match m.exp(Sym::I) % 4 {
                0 => (v, 0.0),
                1 => (0.0, v),
                2 => (-v, 0.0),
                _ => (0.0, -v),
            };
            re += tr;
            im += ti;
        }
        Ok((re, im))
    }
}

pub fn rat_to_f64(c: &Rat) -> f64 {
    // Exact conversion through a scaled quotient keeps precision for the
    // huge numerators that exact arithmetic accumulates.
    let n = c.numer();
    let d = c.denom();
    let nf = bigint_to_f64(n);
    let df = bigint_to_f64(d);
    if nf.is_finite() && df.is_finite() && df != 0.0 {
        nf / df
    } else {
        // Fall back to a float built from the leading 60 bits of each side.
        let bits_n = n.bits() as i64;
        let bits_d = d.bits() as i64;
        let shift_n = (bits_n - 60).max(0);
        let shift_d = (bits_d - 60).max(0);
        let n2 = n >> shift_n as usize;
        let d2 = d >> shift_d as usize;
        let base = bigint_to_f64(&n2) / bigint_to_f64(&d2);
        base * 2f64.powi((shift_n - shift_d) as i32)
    }
}

fn bigint_to_f64(n: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    n.to_f64().unwrap_or(f64::INFINITY)
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        // Largest monomial first for readability.
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let mag = if neg { -c.clone() } else { c.clone() };
            if first {
                if neg {
                    f.write_str("-")?;
                }
                first = false;
            } else if neg {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            let mut factors: Vec<String> = Vec::new();
            if !mag.is_one() || m.is_unit() {
                factors.push(mag.to_string());
            }
            for &s in ALL_SYMS.iter() {
                let e = m.exp(s);
                if e == 1 {
                    factors.push(s.name().to_string());
                } else if e > 1 {
                    factors.push(format!("{}^{}", s.name(), e));
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}
