//! Young-diagram sums for the rank-two gauge partition function, extraction
//! of the slow-deformation prepotential coefficients, the trace-of-moduli
//! relation, and the moduli-space singularity loci.
//!
//! Conventions pinned here and verified by the anchor tests below:
//!
//! - The two vacuum parameters are `a1 = a`, `a2 = -a` (symbol `a`), so the
//!   difference is `a12 = 2a`.
//! - For a box `s = (i, j)` of the diagram `Y_a`, measured against `Y_b`,
//!   the weight is `E_ab(s) = a_a - a_b - eps1*leg_{Y_b}(s) +
//!   eps2*(arm_{Y_a}(s) + 1)` where the leg is taken in the *other* diagram
//!   and may be negative for boxes outside it.
//! - The gauge-multiplet factor per box and ordered diagram pair is
//!   `1/(E_ab(s) (eps - E_ab(s)))` with `eps = eps1 + eps2`; the
//!   adjoint-matter numerator is `(E_ab(s) - m)(eps - E_ab(s) - m)`.
//! - Coefficients of the prepotential come from `-eps1*eps2*log Z` by exact
//!   rational-function cancellation followed by the substitution
//!   `eps2 -> 0`; a surviving `eps2` pole is a hard error, never smoothed
//!   over numerically.
//!
//! The mass symbol `m` is the counting-scheme mass (the one that makes the
//! one-box coefficient factor as `m(m - eps1)`), not the physical mass.

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::modular;
use crate::series::{rat, rat_i, substitute_poly, MPoly, PuiseuxSeries, RatFunc, SeriesVar, Sym};

/// An integer partition: weakly decreasing positive row lengths.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    rows: Vec<u32>,
}

impl Partition {
    pub fn new(rows: Vec<u32>) -> Result<Self> {
        if rows.iter().any(|&r| r == 0) {
            return Err(CoreError::DomainError(
                "partition rows must be positive".into(),
            ));
        }
        if rows.windows(2).any(|w| w[1] > w[0]) {
            return Err(CoreError::DomainError(
                "partition rows must be weakly decreasing".into(),
            ));
        }
        Ok(Partition { rows })
    }

    pub fn empty() -> Self {
        Partition { rows: Vec::new() }
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn size(&self) -> u32 {
        self.rows.iter().sum()
    }

    /// Number of rows longer than the zero-based column index `j`.
    fn col_height(&self, j: u32) -> i64 {
        self.rows.iter().filter(|&&r| r > j).count() as i64
    }

    /// Boxes as zero-based (row, column) pairs, row-major.
    pub fn boxes(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, &r)| (0..r).map(move |j| (i as u32, j)))
    }

    /// Arm length of a box of this diagram: cells strictly to its right.
    fn arm(&self, i: u32, j: u32) -> i64 {
        self.rows[i as usize] as i64 - 1 - j as i64
    }

    /// Leg length of an arbitrary position measured against this diagram:
    /// cells strictly below `(i, j)` in column `j`. Negative when the
    /// position lies outside the diagram.
    fn leg(&self, i: u32, j: u32) -> i64 {
        self.col_height(j) - 1 - i as i64
    }
}

/// All partitions of `n`, first part descending.
pub fn partitions(n: u32) -> Vec<Partition> {
    fn rec(remaining: u32, max_part: u32, prefix: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if remaining == 0 {
            out.push(Partition {
                rows: prefix.clone(),
            });
            return;
        }
        for part in (1..=remaining.min(max_part)).rev() {
            prefix.push(part);
            rec(remaining - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n.max(1), &mut Vec::new(), &mut out);
    out
}

/// All ordered diagram pairs with total box count `level`.
pub fn enumerate_partition_pairs(level: u32) -> Vec<(Partition, Partition)> {
    let mut out = Vec::new();
    for left in 0..=level {
        for y1 in partitions(left) {
            for y2 in partitions(level - left) {
                out.push((y1.clone(), y2));
            }
        }
    }
    out
}

/// Matter content of the partition function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// Gauge multiplet only.
    Pure,
    /// Gauge multiplet plus one adjoint-matter multiplet of mass `m`.
    Star,
}

/// `E_ab(s)` for the box `s = (i, j)` of `ya` measured against `yb`, with
/// vacuum signs `sa`, `sb` in {+1, -1} standing for `a_a = sa * a`.
fn box_weight(ya: &Partition, yb: &Partition, sa: i64, sb: i64, i: u32, j: u32) -> MPoly {
    let mut e = MPoly::zero();
    if sa != sb {
        e = e.add(&MPoly::term(rat_i(sa - sb), &[(Sym::A, 1)]));
    }
    let leg = yb.leg(i, j);
    if leg != 0 {
        e = e.add(&MPoly::term(rat_i(-leg), &[(Sym::Eps1, 1)]));
    }
    e.add(&MPoly::term(rat_i(ya.arm(i, j) + 1), &[(Sym::Eps2, 1)]))
}

/// The exact weight of one diagram pair.
fn pair_weight(y1: &Partition, y2: &Partition, flavor: Flavor) -> Result<RatFunc> {
    let eps = MPoly::sym(Sym::Eps1).add(&MPoly::sym(Sym::Eps2));
    let mass = MPoly::sym(Sym::M);
    let mut num = MPoly::one();
    let mut den_factors: Vec<MPoly> = Vec::new();
    let labelled = [(y1, 1i64), (y2, -1i64)];
    for &(ya, sa) in &labelled {
        for &(yb, sb) in &labelled {
            for (i, j) in ya.boxes() {
                let e = box_weight(ya, yb, sa, sb, i, j);
                let ce = eps.sub(&e);
                if flavor == Flavor::Star {
                    num = num.mul(&e.sub(&mass)).mul(&ce.sub(&mass));
                }
                den_factors.push(e);
                den_factors.push(ce);
            }
        }
    }
    let mut w = RatFunc::from_poly(num);
    for d in den_factors {
        w = w.div(&RatFunc::from_poly(d))?;
    }
    Ok(w)
}

fn partition_function(flavor: Flavor, level: u32) -> Result<PuiseuxSeries> {
    let mut terms = vec![(0i64, RatFunc::one())];
    for l in 1..=level {
        let pairs = enumerate_partition_pairs(l);
        let sum = pairs
            .par_iter()
            .map(|(y1, y2)| pair_weight(y1, y2, flavor))
            .try_reduce(RatFunc::zero, |x, y| Ok(x.add(&y)))?;
        terms.push((l as i64, sum));
    }
    Ok(PuiseuxSeries::from_scaled_terms(
        SeriesVar::Q,
        1,
        terms,
        level as i64,
    ))
}

/// Partition function of the pure gauge theory through the given level.
/// Coefficients are exact rational functions of `(a, eps1, eps2)`.
pub fn z_pure(level: u32) -> Result<PuiseuxSeries> {
    partition_function(Flavor::Pure, level)
}

/// Partition function with adjoint matter through the given level.
/// Coefficients are exact rational functions of `(a, m, eps1, eps2)`.
pub fn z_star(level: u32) -> Result<PuiseuxSeries> {
    partition_function(Flavor::Star, level)
}

/// Coefficients `F_1..F_levels` of `-eps1*eps2*log Z` with `eps2 -> 0`,
/// taken by exact cancellation and substitution. A non-removable `eps2`
/// pole surfaces as an error: it would mean the box weights are wrong.
pub fn prepotential_coeffs(z: &PuiseuxSeries, levels: u32) -> Result<Vec<RatFunc>> {
    let (t_num, t_den) = z.trunc_rational();
    let one = PuiseuxSeries::constant(z.var(), RatFunc::one(), t_num, t_den);
    let w = z.sub(&one)?;
    let mut log_z = PuiseuxSeries::zero(z.var(), t_num, t_den);
    let mut w_pow = one;
    for k in 1..=levels {
        w_pow = if k == 1 { w.clone() } else { w_pow.mul(&w)? };
        let sign = if k % 2 == 1 { 1 } else { -1 };
        log_z = log_z.add(&w_pow.mul_rat(&rat(sign, k as i64)))?;
    }
    let minus_e1e2 = RatFunc::from_poly(MPoly::term(rat_i(-1), &[(Sym::Eps1, 1), (Sym::Eps2, 1)]));
    let f = log_z.mul_coeff(&minus_e1e2);
    let zero = RatFunc::zero();
    (1..=levels)
        .map(|l| f.coeff(l as i64, 1)?.substitute(Sym::Eps2, &zero))
        .collect()
}

/// Coefficients of the trace of the moduli field: `u_0 = a^2/2` from the
/// perturbative term, then `u_l = l*F_l/2`.
pub fn matone_u(f: &[RatFunc]) -> Vec<RatFunc> {
    let mut out = vec![RatFunc::from_poly(MPoly::term(rat(1, 2), &[(Sym::A, 2)]))];
    for (idx, fl) in f.iter().enumerate() {
        out.push(fl.scale(&rat(idx as i64 + 1, 2)));
    }
    out
}

/// Pure-flavor prepotential coefficients rewritten with `a -> nu/2`,
/// `eps1 -> 1` (after the `eps2 -> 0` limit), i.e. in the variables of the
/// trigonometric spectral problem.
pub fn pure_f_nu(levels: u32) -> Result<Vec<RatFunc>> {
    let z = z_pure(levels)?;
    let f = prepotential_coeffs(&z, levels)?;
    let half_nu = RatFunc::from_poly(MPoly::term(rat(1, 2), &[(Sym::Nu, 1)]));
    f.iter()
        .map(|c| {
            c.substitute(Sym::A, &half_nu)?
                .substitute(Sym::Eps1, &RatFunc::one())
        })
        .collect()
}

/// Adjoint-flavor prepotential coefficients rewritten with `a -> nu/2`,
/// `m -> n`, `eps1 -> 1`, then with every appearance of `n` collapsed into
/// the invariant combination `n(n-1)`.
pub fn star_f_n_nu(levels: u32) -> Result<Vec<RatFunc>> {
    let z = z_star(levels)?;
    let f = prepotential_coeffs(&z, levels)?;
    let half_nu = RatFunc::from_poly(MPoly::term(rat(1, 2), &[(Sym::Nu, 1)]));
    let n = RatFunc::sym(Sym::LitN);
    f.iter()
        .map(|c| {
            let c = c
                .substitute(Sym::A, &half_nu)?
                .substitute(Sym::Eps1, &RatFunc::one())?
                .substitute(Sym::M, &n)?;
            rewrite_in_nn1(&c)
        })
        .collect()
}

/// Rewrite every polynomial appearance of the symbol `n` into powers of the
/// product `n(n-1)`. Fails when the input is not invariant under
/// `n -> 1-n`, which is the precondition for such a rewrite to exist.
pub fn rewrite_in_nn1(rf: &RatFunc) -> Result<RatFunc> {
    let num = rewrite_poly_nn1(rf.numerator())?;
    let mut out = RatFunc::from_poly(num);
    for (f, &m) in rf.denominator_factors() {
        let rf_factor = RatFunc::from_poly(rewrite_poly_nn1(f)?);
        out = out.div(&rf_factor.pow(m as i32)?)?;
    }
    Ok(out)
}

fn rewrite_poly_nn1(p: &MPoly) -> Result<MPoly> {
    if !p.contains_sym(Sym::LitN) {
        return Ok(p.clone());
    }
    let one_minus_n = RatFunc::from_poly(MPoly::one().sub(&MPoly::sym(Sym::LitN)));
    let flipped = substitute_poly(p, Sym::LitN, &one_minus_n)?;
    let flipped = flipped
        .as_poly()
        .cloned()
        .expect("polynomial substitution yields a polynomial");
    if flipped != *p {
        return Err(CoreError::ReductionStuck(
            "expression is not invariant under n -> 1-n, cannot rewrite in n(n-1)".into(),
        ));
    }
    let nn1 = MPoly::sym_pow(Sym::LitN, 2).sub(&MPoly::sym(Sym::LitN));
    let mut rem = p.clone();
    let mut out = MPoly::zero();
    loop {
        if rem.is_zero() {
            break;
        }
        let d = rem.max_exp(Sym::LitN);
        if d == 0 {
            out = out.add(&rem);
            break;
        }
        if d % 2 == 1 {
            return Err(CoreError::ReductionStuck(
                "odd top degree in n survived the invariance check".into(),
            ));
        }
        let j = d / 2;
        let cj = rem
            .coeffs_of(Sym::LitN)
            .remove(&d)
            .expect("top-degree coefficient present");
        out = out.add(&cj.mul(&MPoly::sym_pow(Sym::Nn1, j)));
        rem = rem.sub(&cj.mul(&nn1.pow(j as u32)));
        if !rem.is_zero() && rem.max_exp(Sym::LitN) >= d {
            return Err(CoreError::ReductionStuck(
                "degree did not decrease while extracting n(n-1) powers".into(),
            ));
        }
    }
    Ok(out)
}

/// The normalization mismatch between the rank-two partition function with
/// and without its abelian factor: `(1/12) m (m - eps1) (1 - E2(q))` as a
/// series in the nome.
pub fn u1_difference_series(order: i64) -> Result<PuiseuxSeries> {
    let e2 = modular::eisenstein_e2(order);
    let one = PuiseuxSeries::constant(SeriesVar::Q, RatFunc::one(), order, 1);
    let mass_factor = MPoly::sym(Sym::M)
        .mul(&MPoly::sym(Sym::M).sub(&MPoly::sym(Sym::Eps1)))
        .scale(&rat(1, 12));
    Ok(one.sub(&e2)?.mul_coeff(&RatFunc::from_poly(mass_factor)))
}

/// The three singularity loci of the moduli space in units of `m^2`:
/// `u/m^2 = e_i/8 - (1 - 2 E2(q))/24` for `i = 1, 2, 3`, as series in the
/// nome through `q^order`. Returned in the order (electric, magnetic,
/// dyonic): constant locus first, then the two square-root branches.
pub fn singularity_series(order: i64) -> Result<[PuiseuxSeries; 3]> {
    let (e1, e2, e3) = modular::lattice_roots(order, 1)?;
    let eis = modular::eisenstein_e2(order);
    let one = PuiseuxSeries::constant(SeriesVar::Q, RatFunc::one(), order, 1);
    // -(1 - 2 E2)/24 = (2 E2 - 1)/24
    let shift = eis.mul_rat(&rat_i(2)).sub(&one)?.mul_rat(&rat(1, 24));
    let locus = |e: &PuiseuxSeries| -> Result<PuiseuxSeries> {
        e.mul_rat(&rat(1, 8)).add(&shift)
    };
    Ok([locus(&e1)?, locus(&e2)?, locus(&e3)?])
}
