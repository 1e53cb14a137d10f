//! Assembly of eigenvalue expansions from the operator tower and the cycle
//! integrals.
//!
//! The all-order quasi-momentum integrates, cycle by cycle, to
//! `Pi(omega) = sum_l eps^(2l) (D_{2l} V)(omega)` where `V` is the cycle
//! integral of the leading square root and `eps^2 = 2/kappa^2`,
//! `kappa^2 = n(n-1) k^2`.  Setting the normalized period equal to the
//! quantized value `y` and inverting order by order in `eps^2` expresses
//! `omega` as a function of `y`; the eigenvalue is `A = kappa^2 omega`
//! (gamma cycle: `A = kappa^2 (omega~ - 1)`).
//!
//! Small-cycle regions (beta, gamma) invert directly: `y = eps mu` and each
//! correction level divides the order-matched residual by `F_0'(G_0)`.  The
//! resulting double expansion collects into powers of `1/kappa`: the level-l
//! coefficient of `y^p` lands at `kappa^(2 - 2l - p)` with weight
//! `sqrt(2)^(2l + p) mu^p`.
//!
//! The large-cycle region (alpha) first squares away the half-integer
//! lattice: with `x = 1/omega` the period is `i sqrt(2) x^(-1/2) Phi(x)`,
//! so `u := 1/y^2 = -x Phi^(-2)/2` is a bona fide power series, graded
//! inversion gives `x(u)`, and `A = kappa^2 u^(-1) * (u/x)(u)`.  Slots
//! convert through `u = kappa^2/(2 mu^2)`: the level-l coefficient of `u^m'`
//! carries `2^(l-m) kappa^(2(1+m-l)) mu^(-2m)` with `m = m' - 1`, and
//! `kappa^(2j)` becomes `(n(n-1))^j k^(2j)`.  Exponents `j < 0` cannot occur
//! in the eigenvalue; the assembly checks that those slots vanish.
//!
//! The Mathieu forms run the same pipelines with the modulus set to zero and
//! translate through `1/kappa = (-i/2) h^(-1/2)`, `mu -> nu`,
//! `lambda = 2h - A`.

use crate::error::{CoreError, Result};
use crate::modular;
use crate::series::{
    rat, rat_i, substitute_poly, MPoly, PuiseuxSeries, Rat, RatFunc, SeriesVar, Sym,
};
use crate::wkb::contour;
use crate::wkb::reduce::{operator_tower, WkbOperator};
use num_traits::One;

/// Coefficients of an expansion in the SQUARED small parameter: entry `l`
/// multiplies `eps^(2l)`.  Levels beyond the stored length are exactly zero
/// by convention; callers cap computations at the trusted length.
#[derive(Clone, Debug)]
struct Graded {
    levels: Vec<PuiseuxSeries>,
}

impl Graded {
    fn new(levels: Vec<PuiseuxSeries>) -> Self {
        assert!(!levels.is_empty(), "graded series needs a leading level");
        Graded { levels }
    }

    fn len(&self) -> usize {
        self.levels.len()
    }

    fn level(&self, l: usize) -> &PuiseuxSeries {
        &self.levels[l]
    }

    fn var(&self) -> SeriesVar {
        self.levels[0].var()
    }

    fn exact_zero(var: SeriesVar) -> PuiseuxSeries {
        PuiseuxSeries::exact_constant(var, RatFunc::zero())
    }

    /// Level `l`, or the exact-zero padding when `l` is past the stored end.
    fn level_padded(&self, l: usize) -> PuiseuxSeries {
        if l < self.levels.len() {
            self.levels[l].clone()
        } else {
            Self::exact_zero(self.var())
        }
    }

    fn add(&self, other: &Graded) -> Result<Graded> {
        let n = self.len().max(other.len());
        let mut levels = Vec::with_capacity(n);
        for l in 0..n {
            levels.push(self.level_padded(l).add(&other.level_padded(l))?);
        }
        Ok(Graded::new(levels))
    }

    /// Product, keeping `out_len` levels.
    fn mul(&self, other: &Graded, out_len: usize) -> Result<Graded> {
        let mut levels = Vec::with_capacity(out_len);
        for ll in 0..out_len {
            let mut acc = Self::exact_zero(self.var());
            for i in 0..=ll {
                if i < self.len() && ll - i < other.len() {
                    acc = acc.add(&self.levels[i].mul(&other.levels[ll - i])?)?;
                }
            }
            levels.push(acc);
        }
        Ok(Graded::new(levels))
    }

    /// Multiplicative inverse through `out_len` levels; the leading level
    /// must itself be invertible.
    fn reciprocal(&self, out_len: usize) -> Result<Graded> {
        let r0 = self.levels[0].inv()?;
        let mut rs = vec![r0.clone()];
        for ll in 1..out_len {
            let mut acc = Self::exact_zero(self.var());
            for j in 1..=ll {
                if j < self.len() {
                    acc = acc.add(&self.levels[j].mul(&rs[ll - j])?)?;
                }
            }
            rs.push(acc.mul(&r0)?.neg());
        }
        Ok(Graded::new(rs))
    }

    /// Multiply every level by one plain series.
    fn scale_plain(&self, s: &PuiseuxSeries) -> Result<Graded> {
        let levels = self
            .levels
            .iter()
            .map(|lv| lv.mul(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Graded::new(levels))
    }

    fn mul_rat(&self, c: &Rat) -> Graded {
        Graded::new(self.levels.iter().map(|lv| lv.mul_rat(c)).collect())
    }

    /// Prepend `by` exact-zero levels (multiplication by `eps^(2 by)`).
    fn shift_levels(&self, by: usize) -> Graded {
        let mut levels = vec![Self::exact_zero(self.var()); by];
        levels.extend(self.levels.iter().cloned());
        Graded::new(levels)
    }

    /// Map every level through the same series transformation.
    fn map_levels<F>(&self, mut f: F) -> Result<Graded>
    where
        F: FnMut(&PuiseuxSeries) -> Result<PuiseuxSeries>,
    {
        let levels = self
            .levels
            .iter()
            .map(|lv| f(lv))
            .collect::<Result<Vec<_>>>()?;
        Ok(Graded::new(levels))
    }
}

/// Compose a plain series with a graded argument: Taylor-expand around the
/// leading level, `f(g0 + d) = sum_r f^(r)(g0) d^r / r!`, where the
/// correction `d` starts at level one so `r` never exceeds `out_len - 1`.
fn compose_plain(f: &PuiseuxSeries, arg: &Graded, out_len: usize) -> Result<Graded> {
    let g0 = &arg.levels[0];
    let mut delta_levels = arg.levels.clone();
    delta_levels[0] = Graded::exact_zero(arg.var());
    let delta = Graded::new(delta_levels);

    let mut acc = Graded::new(vec![Graded::exact_zero(arg.var()); out_len.max(1)]);
    let mut dpow = Graded::new({
        let mut v = vec![PuiseuxSeries::exact_constant(arg.var(), RatFunc::one())];
        v.extend(vec![Graded::exact_zero(arg.var()); out_len.saturating_sub(1)]);
        v
    });
    let mut deriv = f.clone();
    let mut fact = Rat::one();
    for r in 0..out_len {
        if r > 0 {
            deriv = deriv.derivative();
            fact = fact * rat_i(r as i64);
            dpow = dpow.mul(&delta, out_len)?;
        }
        let comp = deriv.compose(g0)?;
        let term = dpow.scale_plain(&comp)?.mul_rat(&(Rat::one() / fact.clone()));
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// Solve `y = sum_l eps^(2l) F_l(x)` for `x = sum_l eps^(2l) G_l(y)`.
/// `G_0` reverses the leading level (truncated to `window` first); each later
/// level divides the order-matched residual by `F_0'(G_0)`.
fn graded_invert(f: &Graded, out_var: SeriesVar, window: i64) -> Result<Graded> {
    let g0 = f
        .level(0)
        .truncate_to(window, 1)
        .reverse()?
        .with_var(out_var);
    let denom = f.level(0).derivative().compose(&g0)?;
    let mut g = vec![g0];
    for cap in 1..f.len() {
        let mut approx_levels = g.clone();
        approx_levels.push(Graded::exact_zero(out_var));
        let approx = Graded::new(approx_levels);
        let mut total = Graded::new(vec![Graded::exact_zero(out_var); cap + 1]);
        for l in 0..=cap {
            let comp = compose_plain(f.level(l), &approx, cap + 1 - l)?;
            total = total.add(&comp.shift_levels(l))?;
        }
        g.push(total.level(cap).neg().div(&denom)?);
    }
    Ok(Graded::new(g))
}

/// Apply an operator whose coefficients are polynomials in the series
/// variable itself (direct chart: series in `omega` or `omega~`).
pub fn apply_direct(op: &WkbOperator, f: &PuiseuxSeries) -> Result<PuiseuxSeries> {
    let mut out = PuiseuxSeries::exact_constant(f.var(), RatFunc::zero());
    let mut d = f.clone();
    for (r, c) in op.coeffs.iter().enumerate() {
        if r > 0 {
            d = d.derivative();
        }
        for (p, a) in c.coeffs_of(Sym::Omega) {
            out = out.add(
                &d.shift_exponent(p as i64, 1)
                    .mul_coeff(&RatFunc::from_poly(a)),
            )?;
        }
    }
    Ok(out)
}

/// Apply an operator to a series in the RECIPROCAL of its coordinate
/// (inverse chart: series in `x = 1/omega` on the half-integer lattice).
/// The derivative maps scaled key `s` to `s + 2` with factor `-s/2`;
/// multiplication by `omega^p` shifts keys down by `2p`.
fn apply_inverse(op: &WkbOperator, f: &PuiseuxSeries) -> Result<PuiseuxSeries> {
    debug_assert_eq!(f.lattice_den(), 2, "inverse chart expects the half lattice");
    let mut out = PuiseuxSeries::exact_constant(f.var(), RatFunc::zero());
    let mut d = f.clone();
    for (r, c) in op.coeffs.iter().enumerate() {
        if r > 0 {
            d = inverse_chart_derivative(&d);
        }
        for (p, a) in c.coeffs_of(Sym::Omega) {
            out = out.add(
                &d.shift_exponent(-(p as i64), 1)
                    .mul_coeff(&RatFunc::from_poly(a)),
            )?;
        }
    }
    Ok(out)
}

fn inverse_chart_derivative(f: &PuiseuxSeries) -> PuiseuxSeries {
    PuiseuxSeries::from_scaled_terms(
        f.var(),
        2,
        f.iter_terms().map(|(k, c)| (k + 2, c.scale(&rat(-k, 2)))),
        f.trunc_scaled() + 2,
    )
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Cycle {
    /// Small-`omega` cycle (magnetic region).
    Beta,
    /// Small-`omega~` cycle (dyonic region).
    Gamma,
}

/// Specialize an omega-chart polynomial operator to zero modulus.
fn operator_at_zero_modulus(op: &WkbOperator) -> Result<WkbOperator> {
    let coeffs = op
        .coeffs
        .iter()
        .map(|c| {
            substitute_poly(c, Sym::K2, &RatFunc::zero())?
                .as_poly()
                .cloned()
                .ok_or_else(|| {
                    CoreError::DomainError("zero-modulus image kept a denominator".into())
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WkbOperator {
        order: op.order,
        chart: op.chart,
        coeffs,
    })
}

/// The normalized period levels `F_l = norm * (D_{2l} V)` for a small
/// cycle, optionally degenerated to zero modulus.
fn quantized_flow(kind: Cycle, trig: bool, l_count: usize, j_max: u32) -> Result<Graded> {
    let base = match kind {
        Cycle::Beta => contour::magnetic_base(j_max)?,
        Cycle::Gamma => contour::dyonic_base(j_max)?,
    };
    let base = if trig {
        base.substitute_sym(Sym::K2, &RatFunc::zero())?
            .substitute_sym(Sym::Kp, &RatFunc::one())?
    } else {
        base
    };
    let norm = match kind {
        Cycle::Beta => RatFunc::fraction(MPoly::sym(Sym::Sqrt2), MPoly::sym(Sym::Pi))?,
        Cycle::Gamma => RatFunc::fraction(
            MPoly::term(rat_i(1), &[(Sym::I, 1), (Sym::Sqrt2, 1), (Sym::Kp, 1)]),
            MPoly::sym(Sym::Pi),
        )?,
    };
    let norm = if trig {
        norm.substitute(Sym::Kp, &RatFunc::one())?
    } else {
        norm
    };
    let tower = operator_tower(l_count as u32 - 1)?;
    let mut levels = vec![base.mul_coeff(&norm)];
    for (op, _) in &tower {
        let op = match kind {
            Cycle::Beta => op.clone(),
            Cycle::Gamma => op.shift_to_tilde()?,
        };
        let op = if trig { operator_at_zero_modulus(&op)? } else { op };
        levels.push(apply_direct(&op, &base)?.mul_coeff(&norm));
    }
    Ok(Graded::new(levels))
}

/// Collect inverted levels `G_l(y)` into a series in `1/kappa` via
/// `y = eps mu`, `eps = sqrt(2)/kappa`: the `(l, p)` slot lands at
/// `kappa^(2 - 2l - p)` with coefficient `g_{l,p} sqrt(2)^(2l+p) mu^p`.
fn kappa_expansion(g: &Graded, b_max: i64, gamma_shift: bool) -> Result<PuiseuxSeries> {
    let mut terms: Vec<(i64, RatFunc)> = Vec::new();
    if gamma_shift {
        terms.push((-2, RatFunc::int(-1)));
    }
    for l in 0..g.len() {
        let lvl = g.level(l);
        if let Some(v) = lvl.val_scaled() {
            if v < 0 {
                return Err(CoreError::DomainError(
                    "negative oscillation power in a small-cycle inversion".into(),
                ));
            }
        }
        let p_hi = b_max + 2 - 2 * l as i64;
        for p in 0..=p_hi.max(-1) {
            let c = lvl.coeff(p, 1)?;
            if c.is_zero() {
                continue;
            }
            let weight = MPoly::term(
                rat_i(1),
                &[(Sym::Sqrt2, (2 * l as i64 + p) as u16), (Sym::Mu, p as u16)],
            );
            terms.push((2 * l as i64 + p - 2, c.mul_poly(&weight)));
        }
    }
    Ok(PuiseuxSeries::from_scaled_terms(
        SeriesVar::InvKappa,
        1,
        terms,
        b_max,
    ))
}

fn small_cycle_eigenvalue(kind: Cycle, trig: bool, b_max: i64) -> Result<PuiseuxSeries> {
    let window = b_max + 4;
    let l_count = ((b_max + 2) / 2 + 1).max(1) as usize;
    let j_max = (window + 2 * l_count as i64) as u32;
    let flow = quantized_flow(kind, trig, l_count, j_max)?;
    let g = graded_invert(&flow, SeriesVar::Y, window)?;
    kappa_expansion(&g, b_max, kind == Cycle::Gamma)
}

/// Eigenvalue expansion around the small-`omega` cycle: a series in
/// `1/kappa` from `kappa^1` downward, coefficients rational in `mu`, `k^2`.
pub fn magnetic_eigenvalue(order: i64) -> Result<PuiseuxSeries> {
    small_cycle_eigenvalue(Cycle::Beta, false, order)
}

/// Eigenvalue expansion around the small-`omega~` cycle: leading `-kappa^2`
/// plus a series in `1/kappa` from `kappa^1` downward.
pub fn dyonic_eigenvalue(order: i64) -> Result<PuiseuxSeries> {
    small_cycle_eigenvalue(Cycle::Gamma, false, order)
}

/// Translate an eigenvalue series in `1/kappa` to the trigonometric
/// spectrum: `1/kappa = (-i/2) h^(-1/2)`, `mu -> nu`, `lambda = 2h - A`.
pub fn kappa_series_to_mathieu_lambda(a: &PuiseuxSeries) -> Result<PuiseuxSeries> {
    let c = RatFunc::from_poly(MPoly::sym(Sym::I)).scale(&rat(-1, 2));
    let in_h = a
        .scale_var(&c)?
        .with_var(SeriesVar::InvSqrtH)
        .substitute_sym(Sym::Mu, &RatFunc::sym(Sym::Nu))?;
    let two_h = PuiseuxSeries::exact_monomial(SeriesVar::InvSqrtH, RatFunc::int(2), -2, 1);
    two_h.sub(&in_h)
}

/// Trigonometric eigenvalue from the small-`omega` cycle: a series in
/// `h^(-1/2)` starting at `2h - 4 nu h^(1/2)`.
pub fn mathieu_magnetic_lambda(order: i64) -> Result<PuiseuxSeries> {
    kappa_series_to_mathieu_lambda(&small_cycle_eigenvalue(Cycle::Beta, true, order)?)
}

/// Trigonometric eigenvalue from the small-`omega~` cycle: a series in
/// `h^(-1/2)` starting at `-2h + 4 nu h^(1/2)`.
pub fn mathieu_dyonic_lambda(order: i64) -> Result<PuiseuxSeries> {
    kappa_series_to_mathieu_lambda(&small_cycle_eigenvalue(Cycle::Gamma, true, order)?)
}

/// Expand a rational function of the complete integrals `K`, `E` and the
/// modulus into a modulus series through the requested window.
fn complete_integral_expansion(rf: &RatFunc, window: i64) -> Result<PuiseuxSeries> {
    let ks = modular::ellip_k_series(window);
    let es = modular::ellip_e_series(window);
    let num = poly_at_modulus_series(rf.numerator(), &ks, &es, window)?;
    let den = poly_at_modulus_series(&rf.den_as_poly(), &ks, &es, window)?;
    num.div(&den)
}

fn poly_at_modulus_series(
    p: &MPoly,
    ks: &PuiseuxSeries,
    es: &PuiseuxSeries,
    window: i64,
) -> Result<PuiseuxSeries> {
    let mut out = PuiseuxSeries::zero(SeriesVar::K2, window, 1);
    for (ek, pk) in p.coeffs_of(Sym::BigK) {
        let mut inner = PuiseuxSeries::zero(SeriesVar::K2, window, 1);
        for (ee, pe) in pk.coeffs_of(Sym::BigE) {
            let tail = PuiseuxSeries::from_scaled_terms(
                SeriesVar::K2,
                1,
                pe.coeffs_of(Sym::K2)
                    .into_iter()
                    .map(|(g, pg)| (g as i64, RatFunc::from_poly(pg))),
                window,
            );
            inner = inner.add(&tail.mul(&es.pow_int(ee as i64)?)?)?;
        }
        out = out.add(&inner.mul(&ks.pow_int(ek as i64)?)?)?;
    }
    Ok(out)
}

/// Eigenvalue expansion around the large-`omega` cycle: a series in the
/// modulus squared through `k^(2 k2_order)`, coefficients rational in `mu`
/// (bands `mu^2, mu^0, mu^(-2), ...` down to `mu^(-mu_inverse_order)`) and
/// polynomial in `n(n-1)`.
pub fn electric_eigenvalue(k2_order: i64, mu_inverse_order: i64) -> Result<PuiseuxSeries> {
    let m_max = mu_inverse_order / 2;
    let mp_max = m_max + 1;
    let l_count = (mp_max + 1) as usize;
    let window = mp_max + 3;
    let j_max = (window + 2 * l_count as i64 + 2) as u32;
    let expansion_window = k2_order + 2 * (mp_max + l_count as i64) + 6;

    let base = contour::electric_base(j_max)?;
    let norm = RatFunc::fraction(MPoly::one(), MPoly::sym(Sym::BigK).scale(&rat_i(2)))?;
    let tower = operator_tower(l_count as u32 - 1)?;

    // Phi levels: strip the square-root prefactor so each level is a plain
    // power series in x with Phi_0(0) = 1.
    let mut phi_levels = vec![normalized_alpha_level(&base, &norm)?];
    for (op, _) in &tower {
        phi_levels.push(normalized_alpha_level(&apply_inverse(op, &base)?, &norm)?);
    }
    let phi = Graded::new(phi_levels);

    // u = 1/y^2 = -x Phi^(-2) / 2, a graded power series with valuation one.
    let phi2_inv = phi.mul(&phi, l_count)?.reciprocal(l_count)?;
    let u_of_x = phi2_inv.map_levels(|lv| {
        Ok(lv.mul_rat(&rat(-1, 2)).shift_exponent(1, 1))
    })?;

    // Invert to x(u), then r(u) = u/x(u).
    let x_of_u = graded_invert(&u_of_x, SeriesVar::U, window)?;
    let w = x_of_u.map_levels(|lv| Ok(lv.shift_exponent(-1, 1)))?;
    let r = w.reciprocal(l_count)?;

    // Collect slots: level l, power m' of u, with u = kappa^2/(2 mu^2).
    let mut acc = PuiseuxSeries::zero(SeriesVar::K2, k2_order, 1);
    for l in 0..r.len() {
        let lvl = r.level(l);
        if let Some(v) = lvl.val_scaled() {
            if v < 0 {
                return Err(CoreError::DomainError(
                    "negative quantization power in the large-cycle inversion".into(),
                ));
            }
        }
        for mp in 0..=mp_max {
            let c = lvl.coeff(mp, 1)?;
            if c.is_zero() {
                continue;
            }
            let m = mp - 1;
            let j = 1 + m - l as i64;
            if j < 0 {
                return Err(CoreError::DomainError(format!(
                    "slot ({}, {}) would need a negative coupling power",
                    l, mp
                )));
            }
            let expanded = complete_integral_expansion(&c, expansion_window)?
                .shift_exponent(j, 1);
            let scale = rat_i(2).pow((l as i64 - m) as i32);
            let num = MPoly::term(
                scale,
                &[
                    (Sym::Nn1, j as u16),
                    (Sym::Mu, if m < 0 { (-2 * m) as u16 } else { 0 }),
                ],
            );
            let weight = if m > 0 {
                RatFunc::fraction(num, MPoly::sym_pow(Sym::Mu, (2 * m) as u16))?
            } else {
                RatFunc::from_poly(num)
            };
            acc = acc.add(&expanded.mul_coeff(&weight))?;
        }
    }
    let out = acc.truncate_to(k2_order, 1).normalize_lattice();
    for (_, c) in out.iter_terms() {
        let clean = !c.numerator().contains_sym(Sym::Pi)
            && !c.numerator().contains_sym(Sym::BigK)
            && !c.numerator().contains_sym(Sym::BigE)
            && c.denominator_factors().keys().all(|f| {
                !f.contains_sym(Sym::Pi) && !f.contains_sym(Sym::BigK) && !f.contains_sym(Sym::BigE)
            });
        if !clean {
            return Err(CoreError::DomainError(
                "large-cycle eigenvalue kept an unexpanded period".into(),
            ));
        }
    }
    Ok(out)
}

/// Strip the square-root prefactor from an alpha-cycle level: multiply by
/// the normalization, then by `x^(1/2)` so the result is a power series on
/// the integer lattice.
fn normalized_alpha_level(level: &PuiseuxSeries, norm: &RatFunc) -> Result<PuiseuxSeries> {
    Ok(level
        .mul_coeff(norm)
        .shift_exponent(1, 2)
        .normalize_lattice())
}
