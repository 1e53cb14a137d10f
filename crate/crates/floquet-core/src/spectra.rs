//! Region-tagged eigenvalue expansions for the Mathieu and Lame operators.
//!
//! Each operator admits three asymptotic regimes named after the gauge-theory
//! singularities they shadow: electric (large quasi-momentum), magnetic (top
//! of the potential well), and dyonic (bottom of the well).  Every regional
//! series here can be produced by two independent routes. The electric route
//! pair is the deformed partition-function sum (through the `B(nu, q)` form
//! and the modular dictionary `A = B/(e1-e2) - (1+k^2) n(n-1)/3`,
//! `nu = mu sqrt(e1-e2)`) against the large-cycle WKB assembly.  The small
//! cycles pair the direct WKB assembly of one region against the modulus
//! mirror transform of the other.  Disagreement between routes is always an
//! error, never a warning: the series are exact, so a single differing
//! coefficient means a real defect.
//!
//! The decoupling limits `n(n-1) sqrt(q) -> -h/4` (large cycle) and
//! `n(n-1) k^2 -> -4h` (small cycles) contract every expansion to its
//! trigonometric counterpart term by term, and the regrouping check splits
//! the quasi-modular constant band off the nome series so the remainder
//! vanishes at large quasi-momentum.  Numeric region advice applies the
//! validity inequalities with an explicit margin factor.

use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::instanton;
use crate::modular;
use crate::series::render::{exponent_string, series_json};
use crate::series::{rat, rat_i, MPoly, Mono, PuiseuxSeries, RatFunc, SeriesVar, Sym};
use crate::wkb;
use serde_json::{json, Value};

/// Band depth in `1/mu` carried by the electric `A`-form and used when the
/// two electric routes are compared.
pub const ELECTRIC_BAND_DEPTH: i64 = 4;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Equation {
    Mathieu,
    Lame,
}

impl Equation {
    pub fn name(self) -> &'static str {
        match self {
            Equation::Mathieu => "mathieu",
            Equation::Lame => "lame",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Region {
    Electric,
    Magnetic,
    Dyonic,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Electric => "electric",
            Region::Magnetic => "magnetic",
            Region::Dyonic => "dyonic",
        }
    }

    /// Accepts both the gauge-theory names and the quantum-mechanical
    /// aliases.
    pub fn from_flag(s: &str) -> Option<Region> {
        match s {
            "electric" | "large-quasimomentum" => Some(Region::Electric),
            "magnetic" | "potential-well-top" => Some(Region::Magnetic),
            "dyonic" | "potential-well-bottom" => Some(Region::Dyonic),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Form {
    Lambda,
    BOfNuQ,
    AOfMuK,
}

impl Form {
    pub fn name(self) -> &'static str {
        match self {
            Form::Lambda => "lambda",
            Form::BOfNuQ => "B_of_nu_q",
            Form::AOfMuK => "A_of_mu_k",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Route {
    Instanton,
    Wkb,
    Convert,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Instanton => "instanton",
            Route::Wkb => "wkb",
            Route::Convert => "convert",
        }
    }
}

/// Identification record for the dual expansion parameter: around the small
/// cycles the Floquet exponent is carried by the dual vacuum value through
/// `nu = 2 i a_d / eps1`.
#[derive(Clone, Debug)]
pub struct DualVev {
    pub nu_in_dual: RatFunc,
}

/// The standard identification with the deformation parameter left symbolic.
pub fn dual_identification() -> Result<DualVev> {
    let num = MPoly::term(rat_i(2), &[(Sym::I, 1), (Sym::A, 1)]);
    Ok(DualVev {
        nu_in_dual: RatFunc::fraction(num, MPoly::sym(Sym::Eps1))?,
    })
}

/// A computed expansion with its region bookkeeping. Serialized shape is
/// stable: `equation`, `region`, `form`, `series`, `validity`, `route`.
#[derive(Clone, Debug)]
pub struct EigenvalueExpansion {
    pub equation: Equation,
    pub region: Region,
    pub form: Form,
    pub series: PuiseuxSeries,
    pub validity: Vec<String>,
    pub route: Route,
}

impl EigenvalueExpansion {
    pub fn to_json(&self) -> Value {
        json!({
            "equation": self.equation.name(),
            "region": self.region.name(),
            "form": self.form.name(),
            "series": series_json(&self.series),
            "validity": self.validity,
            "route": self.route.name(),
        })
    }
}

fn validity_mathieu(region: Region) -> Vec<String> {
    match region {
        Region::Electric => vec!["|nu| >> 1".into(), "|h| << nu^2".into()],
        Region::Magnetic | Region::Dyonic => {
            vec!["|h| >> nu^2".into(), "|h| >> 1".into()]
        }
    }
}

fn validity_lame(region: Region, form: Form) -> Vec<String> {
    match region {
        Region::Electric => {
            let mut v = vec!["|n| q^{1/4} << |nu|".into()];
            if form == Form::AOfMuK {
                v.push("nu = mu sqrt(e1 - e2)".into());
            }
            v
        }
        Region::Magnetic | Region::Dyonic => vec![
            "|kappa| >> |mu|".into(),
            "kappa^2 = n(n-1) k^2".into(),
        ],
    }
}

// ---------------------------------------------------------------------------
// Mathieu

/// Trigonometric eigenvalue series. Electric: `lambda` in powers of `h^2`
/// with coefficients rational in `nu`, from the pure-gauge partition sum,
/// `order` counting instanton levels. Magnetic/dyonic: `lambda` in powers of
/// `h^{-1/2}` from the WKB small-cycle assembly at zero modulus, `order`
/// bounding the depth below `sqrt(h)`.
pub fn mathieu_lambda(region: Region, order: i64) -> Result<PuiseuxSeries> {
    if order < 0 {
        return Err(CoreError::DomainError(
            "expansion order must be nonnegative".into(),
        ));
    }
    match region {
        Region::Electric => {
            let f = instanton::pure_f_nu(order as u32)?;
            let mut terms = vec![(0i64, RatFunc::from_poly(MPoly::sym_pow(Sym::Nu, 2)))];
            for (i, fl) in f.iter().enumerate() {
                let l = i as i64 + 1;
                // 4 l F_l (h/4)^(2l)
                let c = fl.scale(&(rat_i(4 * l) * rat(1, 16).pow(l as i32)));
                terms.push((2 * l, c));
            }
            Ok(PuiseuxSeries::from_scaled_terms(
                SeriesVar::H,
                1,
                terms,
                2 * order,
            ))
        }
        Region::Magnetic => wkb::mathieu_magnetic_lambda(order),
        Region::Dyonic => wkb::mathieu_dyonic_lambda(order),
    }
}

pub fn mathieu_expansion(region: Region, order: i64) -> Result<EigenvalueExpansion> {
    let series = mathieu_lambda(region, order)?;
    Ok(EigenvalueExpansion {
        equation: Equation::Mathieu,
        region,
        form: Form::Lambda,
        series,
        validity: validity_mathieu(region),
        route: match region {
            Region::Electric => Route::Instanton,
            _ => Route::Wkb,
        },
    })
}

// ---------------------------------------------------------------------------
// Lame, B form (partition-function route)

/// Electric eigenvalue in the `B(nu, q)` normalization: constant band
/// `-nu^2 - (n(n-1)/3)(1 - 2 E2(q))` plus the adjoint-matter instanton sum
/// `-sum_l 4 l F_l q^l`, through `q^order`.
pub fn lame_b_electric(order: i64) -> Result<PuiseuxSeries> {
    if order < 0 {
        return Err(CoreError::DomainError(
            "expansion order must be nonnegative".into(),
        ));
    }
    let f = instanton::star_f_n_nu(order as u32)?;
    let e2 = modular::eisenstein_e2(order);
    // -(nn1/3)(1 - 2 E2) = -nn1/3 + (2 nn1 / 3) E2
    let two_thirds = RatFunc::from_poly(MPoly::term(rat(2, 3), &[(Sym::Nn1, 1)]));
    let mut b = e2.mul_coeff(&two_thirds);
    let c0 = MPoly::sym_pow(Sym::Nu, 2)
        .neg()
        .sub(&MPoly::term(rat(1, 3), &[(Sym::Nn1, 1)]));
    b = b.add(&PuiseuxSeries::constant(
        SeriesVar::Q,
        RatFunc::from_poly(c0),
        order,
        1,
    ))?;
    for (i, fl) in f.iter().enumerate() {
        let l = i as i64 + 1;
        b = b.add(&PuiseuxSeries::monomial(
            SeriesVar::Q,
            fl.scale(&rat_i(-4 * l)),
            l,
            1,
            order,
            1,
        ))?;
    }
    Ok(b)
}

pub fn lame_b_expansion(order: i64) -> Result<EigenvalueExpansion> {
    Ok(EigenvalueExpansion {
        equation: Equation::Lame,
        region: Region::Electric,
        form: Form::BOfNuQ,
        series: lame_b_electric(order)?,
        validity: validity_lame(Region::Electric, Form::BOfNuQ),
        route: Route::Instanton,
    })
}

// ---------------------------------------------------------------------------
// Coefficient-level series substitution

/// Expand a rational-function coefficient with the symbol `s` replaced by a
/// series value. The value's own coefficients may carry other symbols; the
/// denominator factors are expanded and divided out exactly.
fn substitute_sym_series(
    rf: &RatFunc,
    s: Sym,
    value: &PuiseuxSeries,
    trunc_num: i64,
    trunc_den: i64,
) -> Result<PuiseuxSeries> {
    let expand_poly = |p: &MPoly| -> Result<PuiseuxSeries> {
        let mut out = PuiseuxSeries::zero(value.var(), trunc_num, trunc_den);
        for (e, q) in p.coeffs_of(s) {
            let term = value
                .pow_int(e as i64)?
                .mul_coeff(&RatFunc::from_poly(q))
                .truncate_to(trunc_num, trunc_den);
            out = out.add(&term)?;
        }
        Ok(out)
    };
    let mut out = expand_poly(rf.numerator())?;
    for (fac, &m) in rf.denominator_factors() {
        let fs = expand_poly(fac)?.pow_int(m as i64)?;
        out = out.div(&fs)?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Conversions between the B and A normalizations

/// Convert the `B(nu, q)` series to the `A(mu, k)` normalization:
/// `A = B/(e1-e2) - (1+k^2) n(n-1)/3` with `nu = mu sqrt(e1-e2)` and the
/// nome re-expanded in the modulus. Coefficients stay exact rational
/// functions of `mu`; no band truncation happens here.
pub fn convert_b_to_a(b: &PuiseuxSeries, k2_order: i64) -> Result<PuiseuxSeries> {
    if b.var() != SeriesVar::Q || b.lattice_den() != 1 {
        return Err(CoreError::DomainError(
            "B-form input must be an integer-exponent nome series".into(),
        ));
    }
    // The half-nome window needed so that composing with q(k^2) keeps
    // everything through k^(2 k2_order).
    let zw = 2 * b.trunc_scaled() + 1;
    if zw < k2_order {
        return Err(CoreError::InsufficientOrder(format!(
            "nome window {} cannot reach modulus order {}",
            zw, k2_order
        )));
    }
    let (_, t3, _) = modular::theta_fourth_powers(zw, 2)?;
    let theta3 = modular::theta3(zw, 2);
    let nu_value = theta3.mul(&theta3)?.mul_coeff(&RatFunc::sym(Sym::Mu));

    let mut bz = PuiseuxSeries::zero(SeriesVar::Q, zw, 2);
    for (&l, c) in b.iter_terms() {
        let expanded = substitute_sym_series(c, Sym::Nu, &nu_value, zw, 2)?;
        bz = bz.add(&expanded.shift_exponent(l, 1))?;
    }

    let k2s = modular::modulus_from_nome(zw, 2)?;
    let one = PuiseuxSeries::constant(SeriesVar::Q, RatFunc::one(), zw, 2);
    let nn1_third = RatFunc::from_poly(MPoly::term(rat(1, 3), &[(Sym::Nn1, 1)]));
    let shift = one.add(&k2s)?.mul_coeff(&nn1_third);
    let az = bz.div(&t3)?.sub(&shift)?;

    // Composition clamps by the inner window, so give the nome map slack:
    // its square root as a modulus series loses one order.
    let q_of_k2 = modular::nome_from_modulus(k2_order + 2)?;
    let out = az.compose(&q_of_k2)?;
    if out.trunc_scaled() < k2_order {
        return Err(CoreError::InsufficientOrder(format!(
            "conversion window closed at modulus order {}",
            out.trunc_scaled()
        )));
    }
    Ok(out.truncate_scaled(k2_order))
}

/// Convert the `A(mu, k)` series (exact `mu`-rational coefficients) back to
/// the `B(nu, q)` normalization: `B = (e1-e2) A - e2 n(n-1)` with
/// `mu = nu / sqrt(e1-e2)` and the modulus re-expanded in the nome. The
/// result must close on integer nome powers; a surviving half-integer term
/// is reported as route disagreement.
pub fn convert_a_to_b(a: &PuiseuxSeries, q_order: i64) -> Result<PuiseuxSeries> {
    if a.var() != SeriesVar::K2 || a.lattice_den() != 1 {
        return Err(CoreError::DomainError(
            "A-form input must be an integer-exponent modulus series".into(),
        ));
    }
    let zw = a.trunc_scaled();
    if zw < 2 * q_order {
        return Err(CoreError::InsufficientOrder(format!(
            "modulus window {} cannot reach nome order {}",
            zw, q_order
        )));
    }
    let k2_of_q = modular::modulus_from_nome(zw, 2)?;
    let aq = a.compose(&k2_of_q)?;

    let theta3 = modular::theta3(zw, 2);
    let mu_value = theta3
        .mul(&theta3)?
        .inv()?
        .mul_coeff(&RatFunc::sym(Sym::Nu));
    let mut sub = PuiseuxSeries::zero(SeriesVar::Q, zw, 2);
    for (&s, c) in aq.iter_terms() {
        let expanded = substitute_sym_series(c, Sym::Mu, &mu_value, zw, 2)?;
        sub = sub.add(&expanded.shift_exponent(s, 2))?;
    }

    let (t2, t3, _) = modular::theta_fourth_powers(zw, 2)?;
    // -e2 = (theta3^4 + theta2^4) / 3
    let nn1_third = RatFunc::from_poly(MPoly::term(rat(1, 3), &[(Sym::Nn1, 1)]));
    let minus_e2 = t3.add(&t2)?.mul_coeff(&nn1_third);
    let b = sub.mul(&t3)?.add(&minus_e2)?;

    for (&s, c) in b.iter_terms() {
        if s % 2 != 0 && !c.is_zero() {
            return Err(CoreError::RouteDisagreement(format!(
                "conversion left a half-integer nome power q^{}",
                exponent_string(s, 2)
            )));
        }
    }
    Ok(b.normalize_lattice().truncate_scaled(q_order))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ConvertDirection {
    BToA,
    AToB,
}

/// Form conversion at the expansion level. `BToA` keeps full accuracy
/// (`k^2`-window twice the nome window); `AToB` round-trips it back.
pub fn convert_form(
    input: &EigenvalueExpansion,
    direction: ConvertDirection,
) -> Result<EigenvalueExpansion> {
    if input.equation != Equation::Lame || input.region != Region::Electric {
        return Err(CoreError::DomainError(
            "form conversion is defined for the electric Lame expansion".into(),
        ));
    }
    let (form, series) = match direction {
        ConvertDirection::BToA => {
            if input.form != Form::BOfNuQ {
                return Err(CoreError::DomainError(
                    "B-to-A conversion needs the B form".into(),
                ));
            }
            let k2_order = 2 * input.series.trunc_scaled();
            (Form::AOfMuK, convert_b_to_a(&input.series, k2_order)?)
        }
        ConvertDirection::AToB => {
            if input.form != Form::AOfMuK {
                return Err(CoreError::DomainError(
                    "A-to-B conversion needs the A form".into(),
                ));
            }
            let q_order = input.series.trunc_scaled() / 2;
            (Form::BOfNuQ, convert_a_to_b(&input.series, q_order)?)
        }
    };
    Ok(EigenvalueExpansion {
        equation: Equation::Lame,
        region: Region::Electric,
        form,
        series,
        validity: validity_lame(Region::Electric, form),
        route: Route::Convert,
    })
}

// ---------------------------------------------------------------------------
// Inverse-quasi-momentum band projection

fn strip_sym(m: &Mono, s: Sym) -> Mono {
    let mut m2 = *m;
    m2.0[s as usize] = 0;
    m2
}

fn poly_inv_mu_series(p: &MPoly, trunc: i64) -> PuiseuxSeries {
    let mut acc: BTreeMap<i64, MPoly> = BTreeMap::new();
    for (m, c) in p.iter() {
        let e = m.exp(Sym::Mu) as i64;
        acc.entry(-e)
            .or_insert_with(MPoly::zero)
            .add_reduced(strip_sym(m, Sym::Mu), c.clone());
    }
    PuiseuxSeries::from_scaled_terms(
        SeriesVar::InvMu,
        1,
        acc.into_iter().map(|(k, q)| (k, RatFunc::from_poly(q))),
        trunc,
    )
}

/// Laurent-expand a rational function around large `mu`, keeping terms
/// through `mu^(-depth)`. The result variable is the inverse quasi-momentum.
pub fn laurent_in_inverse_mu(rf: &RatFunc, depth: i64) -> Result<PuiseuxSeries> {
    let den_poly = rf.den_as_poly();
    let slack = depth
        + 2 * (rf.numerator().max_exp(Sym::Mu) as i64 + den_poly.max_exp(Sym::Mu) as i64)
        + 4;
    let num = poly_inv_mu_series(rf.numerator(), slack);
    let den = poly_inv_mu_series(&den_poly, slack);
    Ok(num.div(&den)?.truncate_scaled(depth))
}

fn inv_mu_series_to_ratfunc(s: &PuiseuxSeries) -> Result<RatFunc> {
    let mut out = RatFunc::zero();
    for (&k, c) in s.iter_terms() {
        let factor = if k <= 0 {
            RatFunc::from_poly(MPoly::sym_pow(Sym::Mu, (-k) as u16))
        } else {
            RatFunc::fraction(MPoly::one(), MPoly::sym_pow(Sym::Mu, k as u16))?
        };
        out = out.add(&c.mul(&factor));
    }
    Ok(out)
}

/// Re-render every coefficient of a modulus series as its large-`mu` band
/// expansion through `mu^(-depth)`, dropping deeper bands.
pub fn project_mu_bands(series: &PuiseuxSeries, depth: i64) -> Result<PuiseuxSeries> {
    series.map_coeffs(|c| inv_mu_series_to_ratfunc(&laurent_in_inverse_mu(c, depth)?))
}

// ---------------------------------------------------------------------------
// Lame, A form: two routes per region

/// Electric `A(mu, k)` by the conversion route: partition-function `B`
/// series pushed through the modular dictionary. Exact in `mu`.
pub fn lame_a_electric_convert(k2_order: i64) -> Result<PuiseuxSeries> {
    let q_order = (k2_order + 1) / 2;
    convert_b_to_a(&lame_b_electric(q_order)?, k2_order)
}

/// Both electric routes through `k^(2 k2_order)`, band-projected to the
/// given depth and compared slot by slot. Returns (WKB, converted) on
/// agreement.
pub fn electric_routes_checked(
    k2_order: i64,
    band_depth: i64,
) -> Result<(PuiseuxSeries, PuiseuxSeries)> {
    let direct = wkb::electric_eigenvalue(k2_order, band_depth)?;
    let converted = project_mu_bands(&lame_a_electric_convert(k2_order)?, band_depth)?;
    let projected_direct = project_mu_bands(&direct, band_depth)?;
    if let Some(at) = first_disagreement(&projected_direct, &converted) {
        return Err(CoreError::RouteDisagreement(format!(
            "electric A-form routes differ at modulus power {}",
            at
        )));
    }
    Ok((direct, converted))
}

/// The modulus mirror between the small-cycle regions: coefficients map by
/// `k^2 -> -k^2/(1-k^2)`, `k' -> k'/(1-k^2)`, `mu -> i mu k'/(1-k^2)` (all
/// read in the target variables), the inverse expansion variable rescales by
/// `-i k'`, the whole series picks up `k'^2`, and the squared coupling is
/// subtracted. Applied to the magnetic series it produces the dyonic one;
/// applied again it returns the original.
pub fn mirror_transform(a: &PuiseuxSeries) -> Result<PuiseuxSeries> {
    if a.var() != SeriesVar::InvKappa {
        return Err(CoreError::DomainError(
            "the mirror transform acts on inverse-coupling series".into(),
        ));
    }
    let one_minus_k2 = MPoly::one().sub(&MPoly::sym(Sym::K2));
    let k2_map = RatFunc::fraction(MPoly::sym(Sym::K2).neg(), one_minus_k2.clone())?;
    let kp_map = RatFunc::fraction(MPoly::sym(Sym::Kp), one_minus_k2.clone())?;
    let mu_map = RatFunc::fraction(
        MPoly::term(rat_i(1), &[(Sym::I, 1), (Sym::Mu, 1), (Sym::Kp, 1)]),
        one_minus_k2.clone(),
    )?;
    let rescale = RatFunc::from_poly(MPoly::term(rat_i(-1), &[(Sym::I, 1), (Sym::Kp, 1)]));

    let s = a
        .substitute_sym(Sym::K2, &k2_map)?
        .substitute_sym(Sym::Kp, &kp_map)?
        .substitute_sym(Sym::Mu, &mu_map)?
        .scale_var(&rescale)?
        .mul_coeff(&RatFunc::from_poly(one_minus_k2));
    s.sub(&PuiseuxSeries::exact_monomial(
        SeriesVar::InvKappa,
        RatFunc::one(),
        -2,
        1,
    ))
}

/// Direct WKB assembly of the requested small-cycle region together with the
/// mirror transform of the opposite one, compared exactly.
pub fn small_cycle_routes_checked(
    region: Region,
    order: i64,
) -> Result<(PuiseuxSeries, PuiseuxSeries)> {
    let (direct, other) = match region {
        Region::Magnetic => (
            wkb::magnetic_eigenvalue(order)?,
            wkb::dyonic_eigenvalue(order)?,
        ),
        Region::Dyonic => (
            wkb::dyonic_eigenvalue(order)?,
            wkb::magnetic_eigenvalue(order)?,
        ),
        Region::Electric => {
            return Err(CoreError::DomainError(
                "the mirror pair lives on the small cycles".into(),
            ))
        }
    };
    let mirrored = mirror_transform(&other)?;
    if let Some(at) = first_disagreement(&direct, &mirrored) {
        return Err(CoreError::RouteDisagreement(format!(
            "{} A-form routes differ at inverse-coupling power {}",
            region.name(),
            at
        )));
    }
    Ok((direct, mirrored))
}

/// Regional `A`-form expansion with both routes computed and compared.
/// Electric `order` counts modulus powers; small-cycle `order` bounds the
/// depth below the leading coupling power.
pub fn lame_a_expansion(region: Region, order: i64, route: Route) -> Result<EigenvalueExpansion> {
    let series = match (region, route) {
        (Region::Electric, Route::Wkb) => electric_routes_checked(order, ELECTRIC_BAND_DEPTH)?.0,
        (Region::Electric, Route::Convert) => {
            electric_routes_checked(order, ELECTRIC_BAND_DEPTH)?.1
        }
        (Region::Magnetic | Region::Dyonic, Route::Wkb) => {
            small_cycle_routes_checked(region, order)?.0
        }
        (Region::Magnetic | Region::Dyonic, Route::Convert) => {
            small_cycle_routes_checked(region, order)?.1
        }
        (_, Route::Instanton) => {
            return Err(CoreError::DomainError(
                "the A form is produced by the wkb and convert routes".into(),
            ))
        }
    };
    Ok(EigenvalueExpansion {
        equation: Equation::Lame,
        region,
        form: Form::AOfMuK,
        series,
        validity: validity_lame(region, Form::AOfMuK),
        route,
    })
}

/// The mirror transform at the expansion level: magnetic in, dyonic out,
/// verified against the direct dyonic assembly.
pub fn dyonic_from_magnetic(input: &EigenvalueExpansion) -> Result<EigenvalueExpansion> {
    if input.region != Region::Magnetic || input.form != Form::AOfMuK {
        return Err(CoreError::DomainError(
            "the dyonic transform needs the magnetic A form".into(),
        ));
    }
    let mirrored = mirror_transform(&input.series)?;
    let direct = wkb::dyonic_eigenvalue(input.series.trunc_scaled())?;
    if let Some(at) = first_disagreement(&direct, &mirrored) {
        return Err(CoreError::RouteDisagreement(format!(
            "transformed magnetic series differs from the dyonic assembly at inverse-coupling power {}",
            at
        )));
    }
    Ok(EigenvalueExpansion {
        equation: Equation::Lame,
        region: Region::Dyonic,
        form: Form::AOfMuK,
        series: mirrored,
        validity: validity_lame(Region::Dyonic, Form::AOfMuK),
        route: Route::Convert,
    })
}

// ---------------------------------------------------------------------------
// Decoupling limits

/// First exponent (rendered) where two series disagree on their shared
/// window, or None when they agree.
pub fn first_disagreement(a: &PuiseuxSeries, b: &PuiseuxSeries) -> Option<String> {
    match a.sub(b) {
        Err(_) => Some("incompatible series variables".into()),
        Ok(d) => d
            .val_scaled()
            .map(|v| exponent_string(v, d.lattice_den())),
    }
}

/// Large-cycle limit `n(n-1) sqrt(q) -> -h/4`: each nome order `l` keeps
/// only its top coupling power `n(n-1)^(2l)`; lower powers are suppressed
/// and higher ones would diverge.
fn electric_limit_lambda(b: &PuiseuxSeries) -> Result<PuiseuxSeries> {
    let mut terms: Vec<(i64, RatFunc)> = Vec::new();
    for (&l, c) in b.iter_terms() {
        // lambda - nn1/3 = -B in the limit
        let mut cl = c.neg();
        if l == 0 {
            cl = cl.add(&RatFunc::from_poly(MPoly::term(
                rat(1, 3),
                &[(Sym::Nn1, 1)],
            )));
        }
        for fac in cl.denominator_factors().keys() {
            if fac.contains_sym(Sym::Nn1) {
                return Err(CoreError::LimitMismatch(
                    "coupling appears in a denominator".into(),
                ));
            }
        }
        let den_rf = RatFunc::from_poly(cl.den_as_poly());
        for (j, num_j) in cl.numerator().coeffs_of(Sym::Nn1) {
            let j = j as i64;
            if j > 2 * l {
                return Err(CoreError::LimitMismatch(format!(
                    "coupling power {} at nome order {} diverges in the limit",
                    j, l
                )));
            }
            if j == 2 * l {
                let coeff = RatFunc::from_poly(num_j)
                    .div(&den_rf)?
                    .scale(&rat(1, 4).pow(j as i32));
                terms.push((2 * l, coeff));
            }
        }
    }
    Ok(PuiseuxSeries::from_scaled_terms(
        SeriesVar::H,
        1,
        terms,
        2 * b.trunc_scaled(),
    ))
}

/// Small-cycle limit `n(n-1) k^2 -> -4h`: the modulus goes to zero at fixed
/// coupling, then the coupling is read as `1/kappa = (-i/2) h^{-1/2}`.
fn small_cycle_limit_lambda(a: &PuiseuxSeries) -> Result<PuiseuxSeries> {
    let zeroed = a
        .substitute_sym(Sym::K2, &RatFunc::zero())?
        .substitute_sym(Sym::Kp, &RatFunc::one())?;
    wkb::kappa_series_to_mathieu_lambda(&zeroed)
}

/// Formal decoupling limit of a Lame expansion to its Mathieu counterpart.
/// Electric input must be the B form; small-cycle input the A form.
pub fn decoupling_limit(input: &EigenvalueExpansion) -> Result<EigenvalueExpansion> {
    if input.equation != Equation::Lame {
        return Err(CoreError::DomainError(
            "only Lame expansions decouple".into(),
        ));
    }
    let series = match (input.form, input.region) {
        (Form::BOfNuQ, Region::Electric) => electric_limit_lambda(&input.series)?,
        (Form::AOfMuK, Region::Magnetic | Region::Dyonic) => {
            small_cycle_limit_lambda(&input.series)?
        }
        _ => {
            return Err(CoreError::DomainError(
                "decoupling acts on the electric B form or a small-cycle A form".into(),
            ))
        }
    };
    Ok(EigenvalueExpansion {
        equation: Equation::Mathieu,
        region: input.region,
        form: Form::Lambda,
        series,
        validity: validity_mathieu(input.region),
        route: input.route,
    })
}

#[derive(Clone, Debug)]
pub struct LimitCheck {
    pub region: Region,
    pub matched: bool,
    pub detail: String,
}

/// Run all three decoupling limits at the given order and compare each with
/// the corresponding trigonometric expansion term by term.
pub fn decoupling_checks(order: i64) -> Result<Vec<LimitCheck>> {
    let mut out = Vec::new();
    for region in [Region::Electric, Region::Magnetic, Region::Dyonic] {
        let lame = match region {
            Region::Electric => lame_b_expansion(order)?,
            _ => lame_a_expansion(region, order, Route::Wkb)?,
        };
        let limit = decoupling_limit(&lame)?;
        let reference = mathieu_lambda(region, order)?;
        let detail = first_disagreement(&limit.series, &reference);
        out.push(LimitCheck {
            region,
            matched: detail.is_none(),
            detail: match detail {
                None => format!(
                    "limit agrees with the direct expansion through {} orders",
                    limit.series.num_terms()
                ),
                Some(at) => format!("first mismatch at exponent {}", at),
            },
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Regrouping of the electric B series

/// The `B(nu, q)` series rearranged so that the quasi-modular series
/// carries the whole coupling-linear band: `B = -nu^2 + (n(n-1)/3) E2 +
/// sum_l b_l q^l` with every `b_l` vanishing at large `nu`.
#[derive(Clone, Debug)]
pub struct RegroupReport {
    /// The series as assembled (constant band `-(n(n-1)/3)(1 - 2 E2)`).
    pub direct: PuiseuxSeries,
    /// The absorbed band `(n(n-1)/3) E2(q)`.
    pub absorbed: PuiseuxSeries,
    /// The regrouped tail coefficients `b_l`, `l = 1..=order`.
    pub brackets: Vec<RatFunc>,
    /// The constant-band difference between the two arrangements,
    /// `(n(n-1)/3)(1 - E2)`; equals four times the rank-one normalization
    /// mismatch of the partition function.
    pub abelian_shift: PuiseuxSeries,
}

pub fn langmann_compare(order: i64) -> Result<RegroupReport> {
    let direct = lame_b_electric(order)?;
    let e2 = modular::eisenstein_e2(order);
    let nn1_third = RatFunc::from_poly(MPoly::term(rat(1, 3), &[(Sym::Nn1, 1)]));
    let absorbed = e2.mul_coeff(&nn1_third);

    // Constant band must close exactly on -nu^2.
    let minus_nu2 = RatFunc::from_poly(MPoly::sym_pow(Sym::Nu, 2).neg());
    let b0 = direct.coeff(0, 1)?.sub(&absorbed.coeff(0, 1)?);
    if !b0.equals(&minus_nu2) {
        return Err(CoreError::RegroupMismatch(
            "constant band does not close on the squared exponent".into(),
        ));
    }

    let mut brackets = Vec::new();
    for l in 1..=order {
        let b_l = direct.coeff(l, 1)?.sub(&absorbed.coeff(l, 1)?);
        // The whole point of the regrouping: the tail decays at large nu.
        let num_deg = b_l.numerator().max_exp(Sym::Nu);
        let den_deg = b_l.den_as_poly().max_exp(Sym::Nu);
        if !b_l.is_zero() && num_deg >= den_deg {
            return Err(CoreError::RegroupMismatch(format!(
                "nome order {} keeps a non-decaying large-nu part",
                l
            )));
        }
        brackets.push(b_l);
    }

    // (nn1/3)(1 - E2) = 4 * (1/12) m (m - eps1) (1 - E2) at m = n, eps1 = 1.
    let one = PuiseuxSeries::constant(SeriesVar::Q, RatFunc::one(), order, 1);
    let abelian_shift = one.sub(&e2)?.mul_coeff(&nn1_third);
    let u1 = instanton::u1_difference_series(order)?
        .substitute_sym(Sym::M, &RatFunc::sym(Sym::LitN))?
        .substitute_sym(Sym::Eps1, &RatFunc::one())?
        .map_coeffs(|c| instanton::rewrite_in_nn1(c))?
        .mul_rat(&rat_i(4));
    if !abelian_shift.agrees_with(&u1) {
        return Err(CoreError::RegroupMismatch(
            "absorbed band does not match the rank-one normalization mismatch".into(),
        ));
    }

    Ok(RegroupReport {
        direct,
        absorbed,
        brackets,
        abelian_shift,
    })
}

// ---------------------------------------------------------------------------
// Region advice

#[derive(Clone, Copy, Debug)]
pub enum AdviseParams {
    Mathieu {
        nu: f64,
        h: f64,
    },
    Lame {
        nu: Option<f64>,
        mu: Option<f64>,
        n: f64,
        k: f64,
    },
}

#[derive(Clone, Debug)]
pub struct RegionAdvice {
    pub region: Region,
    pub also: Option<Region>,
    pub margin: f64,
    pub rationale: String,
}

/// Pick the asymptotic region whose validity inequalities hold by the given
/// margin factor (absolute values throughout). The small-cycle pair is
/// reported together since the inequalities do not separate the two wells.
pub fn region_advise(params: &AdviseParams, margin: f64) -> Result<RegionAdvice> {
    if !(margin > 1.0) {
        return Err(CoreError::DomainError(
            "margin factor must exceed one".into(),
        ));
    }
    match *params {
        AdviseParams::Mathieu { nu, h } => {
            let nu = nu.abs();
            let h = h.abs();
            let electric = nu >= margin && nu * nu >= margin * h;
            let small = h >= margin && h >= margin * nu * nu;
            if electric {
                Ok(RegionAdvice {
                    region: Region::Electric,
                    also: None,
                    margin,
                    rationale: format!(
                        "|nu| = {:.3} >= {} and nu^2/|h| = {:.3} >= {}",
                        nu,
                        margin,
                        if h > 0.0 { nu * nu / h } else { f64::INFINITY },
                        margin
                    ),
                })
            } else if small {
                Ok(RegionAdvice {
                    region: Region::Magnetic,
                    also: Some(Region::Dyonic),
                    margin,
                    rationale: format!(
                        "|h|/nu^2 = {:.3} >= {}; the two wells share the inequality, \
                         the sign convention picks between them",
                        if nu > 0.0 { h / (nu * nu) } else { f64::INFINITY },
                        margin
                    ),
                })
            } else {
                Err(CoreError::AmbiguousRegion(format!(
                    "|nu| = {:.3}, |h| = {:.3}: neither nu^2/|h| nor |h|/nu^2 reaches {}",
                    nu, h, margin
                )))
            }
        }
        AdviseParams::Lame { nu, mu, n, k } => {
            if !(0.0..1.0).contains(&(k * k)) {
                return Err(CoreError::DomainError(
                    "the modulus must satisfy k^2 < 1".into(),
                ));
            }
            let q = modular::nome_f64(k * k);
            let t3sq = modular::theta3_sq_f64(q);
            let (nu, mu) = match (nu, mu) {
                (Some(v), _) => (v.abs(), v.abs() / t3sq),
                (None, Some(m)) => (m.abs() * t3sq, m.abs()),
                (None, None) => {
                    return Err(CoreError::DomainError(
                        "provide the quasi-momentum as nu or mu".into(),
                    ))
                }
            };
            let coupling2 = n * (n - 1.0) * k * k;
            let kappa = coupling2.abs().sqrt();
            let electric_lhs = n.abs() * q.powf(0.25);
            let electric = nu >= margin * electric_lhs && nu > 0.0;
            let small = coupling2 > 0.0 && kappa >= margin * mu;
            if electric && !small {
                Ok(RegionAdvice {
                    region: Region::Electric,
                    also: None,
                    margin,
                    rationale: format!(
                        "|n| q^(1/4) = {:.4} against |nu| = {:.4}: ratio {:.3} >= {}",
                        electric_lhs,
                        nu,
                        if electric_lhs > 0.0 {
                            nu / electric_lhs
                        } else {
                            f64::INFINITY
                        },
                        margin
                    ),
                })
            } else if small && !electric {
                Ok(RegionAdvice {
                    region: Region::Magnetic,
                    also: Some(Region::Dyonic),
                    margin,
                    rationale: format!(
                        "kappa/|mu| = {:.3} >= {}; the two wells share the inequality",
                        kappa / mu,
                        margin
                    ),
                })
            } else if electric && small {
                // Both inequalities hold: take the better-satisfied one.
                let score_e = nu / electric_lhs.max(f64::MIN_POSITIVE);
                let score_s = kappa / mu.max(f64::MIN_POSITIVE);
                if score_e >= score_s {
                    Ok(RegionAdvice {
                        region: Region::Electric,
                        also: Some(Region::Magnetic),
                        margin,
                        rationale: format!(
                            "both regimes qualify; large quasi-momentum wins {:.3} to {:.3}",
                            score_e, score_s
                        ),
                    })
                } else {
                    Ok(RegionAdvice {
                        region: Region::Magnetic,
                        also: Some(Region::Dyonic),
                        margin,
                        rationale: format!(
                            "both regimes qualify; the deep well wins {:.3} to {:.3}",
                            score_s, score_e
                        ),
                    })
                }
            } else {
                Err(CoreError::AmbiguousRegion(format!(
                    "|nu| = {:.3} vs |n| q^(1/4) = {:.4}, kappa/|mu| = {:.3}: \
                     no inequality reaches {}",
                    nu,
                    electric_lhs,
                    if mu > 0.0 { kappa / mu } else { f64::INFINITY },
                    margin
                )))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nn1(e: u16) -> MPoly {
        MPoly::sym_pow(Sym::Nn1, e)
    }

    fn nu2_minus(c: i64) -> MPoly {
        MPoly::sym_pow(Sym::Nu, 2).sub(&MPoly::int(c))
    }

    #[test]
    fn mathieu_electric_matches_tabulated_terms() {
        let s = mathieu_lambda(Region::Electric, 2).unwrap();
        assert_eq!(
            s.coeff(0, 1).unwrap(),
            RatFunc::from_poly(MPoly::sym_pow(Sym::Nu, 2))
        );
        assert!(s.coeff(1, 1).unwrap().is_zero());
        let h2 = RatFunc::fraction(MPoly::one(), nu2_minus(1).scale(&rat_i(2))).unwrap();
        assert_eq!(s.coeff(2, 1).unwrap(), h2);
        let h4_num = MPoly::term(rat_i(5), &[(Sym::Nu, 2)]).add(&MPoly::int(7));
        let h4_den = nu2_minus(1).pow(3).mul(&nu2_minus(4)).scale(&rat_i(32));
        assert_eq!(
            s.coeff(4, 1).unwrap(),
            RatFunc::fraction(h4_num, h4_den).unwrap()
        );
    }

    #[test]
    fn mathieu_electric_poles_sit_at_band_edges() {
        let s = mathieu_lambda(Region::Electric, 3).unwrap();
        for (_, c) in s.iter_terms() {
            for fac in c.denominator_factors().keys() {
                // Every pole factor must be a product of (nu -+ j) band
                // edges, i.e. poles only at nu^2 = 1, 4, 9, ...
                let mut rem = fac.clone();
                for j in 1..=10i64 {
                    for edge in [
                        MPoly::sym(Sym::Nu).sub(&MPoly::int(j)),
                        MPoly::sym(Sym::Nu).add(&MPoly::int(j)),
                    ] {
                        while let Some(q) = rem.try_div(&edge) {
                            rem = q;
                        }
                    }
                }
                assert!(rem.is_constant(), "pole factor off the band edges");
            }
        }
    }

    #[test]
    fn lame_b_matches_tabulated_brackets() {
        let b = lame_b_electric(2).unwrap();

        // Constant: -nu^2 + nn1/3.
        let c0 = MPoly::sym_pow(Sym::Nu, 2)
            .neg()
            .add(&nn1(1).scale(&rat(1, 3)));
        assert_eq!(b.coeff(0, 1).unwrap(), RatFunc::from_poly(c0));

        // The representation never mentions the bare index, only the
        // invariant coupling.
        for (_, c) in b.iter_terms() {
            assert!(!c.contains_sym(Sym::LitN));
        }

        // q^1: -8 nn1 [nn1 - (nu^2-1)]/(nu^2-1), shifted by the
        // quasi-modular band (2 nn1/3)(-24).
        let bracket1 = RatFunc::fraction(
            nn1(1)
                .mul(&nn1(1).sub(&nu2_minus(1)))
                .scale(&rat_i(-8)),
            nu2_minus(1),
        )
        .unwrap();
        let e2_band1 = RatFunc::from_poly(nn1(1).scale(&rat_i(-16)));
        assert_eq!(b.coeff(1, 1).unwrap(), bracket1.add(&e2_band1));

        // q^2: -8 nn1 [nn1^3 (5 nu^2+7) - 12 nn1^2 (nu^2-1)^2
        //   + 6 nn1 (nu^2-1)^2 (nu^2-2) - 3 (nu^2-1)^3 (nu^2-4)]
        //   / ((nu^2-1)^3 (nu^2-4)), shifted by (2 nn1/3)(-72).
        let five_nu2_7 = MPoly::term(rat_i(5), &[(Sym::Nu, 2)]).add(&MPoly::int(7));
        let inner = nn1(3)
            .mul(&five_nu2_7)
            .sub(&nn1(2).mul(&nu2_minus(1).pow(2)).scale(&rat_i(12)))
            .add(
                &nn1(1)
                    .mul(&nu2_minus(1).pow(2))
                    .mul(&nu2_minus(2))
                    .scale(&rat_i(6)),
            )
            .sub(&nu2_minus(1).pow(3).mul(&nu2_minus(4)).scale(&rat_i(3)));
        let bracket2 = RatFunc::fraction(
            nn1(1).mul(&inner).scale(&rat_i(-8)),
            nu2_minus(1).pow(3).mul(&nu2_minus(4)),
        )
        .unwrap();
        let e2_band2 = RatFunc::from_poly(nn1(1).scale(&rat_i(-48)));
        assert_eq!(b.coeff(2, 1).unwrap(), bracket2.add(&e2_band2));
    }

    #[test]
    fn conversion_round_trip_is_identity() {
        let b = lame_b_electric(2).unwrap();
        let a = convert_b_to_a(&b, 2 * b.trunc_scaled()).unwrap();
        let back = convert_a_to_b(&a, b.trunc_scaled()).unwrap();
        assert!(back.agrees_with(&b));
    }

    #[test]
    fn convert_route_matches_tabulated_low_bands() {
        let a = project_mu_bands(&lame_a_electric_convert(2).unwrap(), 4).unwrap();

        let mu2 = RatFunc::from_poly(MPoly::sym_pow(Sym::Mu, 2).neg());
        assert_eq!(a.coeff(0, 1).unwrap(), mu2);

        let half_nn1 = RatFunc::from_poly(nn1(1).scale(&rat(-1, 2)));
        assert_eq!(a.coeff(1, 1).unwrap(), half_nn1);

        // k^4: -nn1/16 - nn1^2/(32 mu^2) - nn1^2/(32 mu^4)
        let expected = RatFunc::from_poly(nn1(1).scale(&rat(-1, 16)))
            .add(
                &RatFunc::fraction(
                    nn1(2).scale(&rat(-1, 32)),
                    MPoly::sym_pow(Sym::Mu, 2),
                )
                .unwrap(),
            )
            .add(
                &RatFunc::fraction(
                    nn1(2).scale(&rat(-1, 32)),
                    MPoly::sym_pow(Sym::Mu, 4),
                )
                .unwrap(),
            );
        assert_eq!(a.coeff(2, 1).unwrap(), expected);
    }

    #[test]
    fn mirror_transform_matches_direct_dyonic_assembly() {
        let (direct, mirrored) = small_cycle_routes_checked(Region::Dyonic, 2).unwrap();
        assert!(direct.agrees_with(&mirrored));
        // Leading terms of the dyonic expansion: -kappa^2 + i 2 kappa mu.
        assert_eq!(direct.coeff(-2, 1).unwrap(), RatFunc::int(-1));
        assert_eq!(
            direct.coeff(-1, 1).unwrap(),
            RatFunc::from_poly(MPoly::term(rat_i(2), &[(Sym::I, 1), (Sym::Mu, 1)]))
        );
    }

    #[test]
    fn mirror_transform_is_an_involution() {
        let magnetic = wkb::magnetic_eigenvalue(2).unwrap();
        let twice = mirror_transform(&mirror_transform(&magnetic).unwrap()).unwrap();
        assert!(twice.agrees_with(&magnetic));
    }

    #[test]
    fn decoupling_limits_reproduce_trigonometric_expansions() {
        for check in decoupling_checks(2).unwrap() {
            assert!(check.matched, "{}: {}", check.region.name(), check.detail);
        }
    }

    #[test]
    fn regrouped_tail_decays_and_matches_tabulated_bracket() {
        let report = langmann_compare(2).unwrap();
        // q^1 bracket: -8 nn1^2 / (nu^2 - 1).
        let expected = RatFunc::fraction(nn1(2).scale(&rat_i(-8)), nu2_minus(1)).unwrap();
        assert_eq!(report.brackets[0], expected);
        // The direct and regrouped arrangements describe the same series.
        let regroup_sum = report
            .absorbed
            .add(&PuiseuxSeries::constant(
                SeriesVar::Q,
                RatFunc::from_poly(MPoly::sym_pow(Sym::Nu, 2).neg()),
                report.direct.trunc_scaled(),
                1,
            ))
            .unwrap()
            .add(&PuiseuxSeries::from_scaled_terms(
                SeriesVar::Q,
                1,
                report
                    .brackets
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (i as i64 + 1, c.clone())),
                report.direct.trunc_scaled(),
            ))
            .unwrap();
        assert!(regroup_sum.agrees_with(&report.direct));
    }

    #[test]
    fn region_advice_follows_margins() {
        let e = region_advise(&AdviseParams::Mathieu { nu: 10.0, h: 1.0 }, 10.0).unwrap();
        assert_eq!(e.region, Region::Electric);
        assert!(e.also.is_none());

        let m = region_advise(&AdviseParams::Mathieu { nu: 1.0, h: 100.0 }, 10.0).unwrap();
        assert_eq!(m.region, Region::Magnetic);
        assert_eq!(m.also, Some(Region::Dyonic));

        let l = region_advise(
            &AdviseParams::Lame {
                nu: Some(5.0),
                mu: None,
                n: 2.0,
                k: 0.1,
            },
            10.0,
        )
        .unwrap();
        assert_eq!(l.region, Region::Electric);

        let ambiguous = region_advise(&AdviseParams::Mathieu { nu: 2.0, h: 2.0 }, 10.0);
        assert!(matches!(ambiguous, Err(CoreError::AmbiguousRegion(_))));
    }

    #[test]
    fn expansion_json_has_the_stable_shape() {
        let e = mathieu_expansion(Region::Electric, 1).unwrap();
        let v = e.to_json();
        assert_eq!(v["equation"], "mathieu");
        assert_eq!(v["region"], "electric");
        assert_eq!(v["form"], "lambda");
        assert_eq!(v["route"], "instanton");
        assert!(v["series"]["terms"].is_array());
        assert!(v["validity"].is_array());
        // Determinism: rendering twice gives identical bytes.
        assert_eq!(v.to_string(), e.to_json().to_string());
    }
}
