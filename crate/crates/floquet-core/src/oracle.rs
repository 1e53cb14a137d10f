//! Floating-point validation of the symbolic expansions.
//!
//! The oracle integrates the two fundamental solutions of the Mathieu
//! equation `y'' = (2 h cos 2x - lambda) y` (period pi) or the Lame equation
//! `y'' = (A + n(n-1) k^2 sn^2(x|k^2)) y` (period 2K) across one period with
//! an adaptive embedded Runge-Kutta pair, forms the monodromy matrix T, and
//! recovers the Floquet exponent from `trace(T)/2 = cos(period * exponent)`.
//!
//! Two independent quality signals guard every run: the step controller
//! holds the local error near the relative tolerance, and the drift
//! `|det T - 1|` must stay below its own threshold (the equations have no
//! first-derivative term, so the exact monodromy determinant is 1). The
//! exponent is extracted jointly from the trace and from the traceless part
//! of T, whose determinant equals `sin^2(period * exponent)`; that form
//! stays well conditioned at band edges where the arccos alone loses half
//! the working precision. The branch (the integer lattice shift) is fixed
//! by continuity from the free equation: candidates `(2 pi m +- theta) /
//! period` are resolved toward `sqrt(lambda)` (Mathieu), `sqrt(-A)` (Lame),
//! or an explicit expected exponent during verification.
//!
//! Everything here works on real parameter slices: the series coefficients
//! are exact, so checking them against real monodromy data is enough, and
//! real integration keeps the error budget transparent.
//!
//! Region semantics of the verification residual: in the electric regime
//! the series parameter is the Floquet exponent itself, so the residual is
//! the distance between the recovered exponent and the expected one. At the
//! top of the well the series parameter is the barrier-penetration variable
//! instead: a generic point sits inside a spectral gap whose decay rate
//! obeys the barrier connection relation `cosh(pi im) = sqrt(1 + e^{2 pi
//! nu})`, so the residual inverts that relation at the measured gap rate.
//! The well-bottom region is not verifiable on real slices at all: its
//! bands are exponentially narrow, so the trace carries no usable trace of
//! the expansion parameter.

use crate::error::{CoreError, Result};
use crate::modular;
use crate::spectra::{self, AdviseParams, Equation, Region};
use crate::series::Sym;
use rayon::prelude::*;
use serde_json::{json, Value};

/// A complex value split into parts; the imaginary part of a Floquet
/// exponent measures the decay rate inside a spectral gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn dist(self, other: Complex) -> f64 {
        (self.re - other.re).hypot(self.im - other.im)
    }
}

// ---------------------------------------------------------------------------
// Jacobi sn

/// Jacobi sn evaluated by the descending Landen transformation on the AGM
/// scale: good to well over ten digits for k^2 < 1.
pub struct JacobiSn {
    scale: Vec<f64>, // a_n
    ratio: Vec<f64>, // c_n / a_n
}

impl JacobiSn {
    pub fn new(k: f64) -> Result<Self> {
        let k2 = k * k;
        if !(0.0..1.0).contains(&k2) {
            return Err(CoreError::DomainError(
                "Jacobi sn needs a modulus with k^2 in [0, 1)".into(),
            ));
        }
        let mut a = 1.0f64;
        let mut b = (1.0 - k2).sqrt();
        let mut c = k.abs();
        let mut scale = vec![a];
        let mut ratio = vec![0.0];
        for _ in 0..24 {
            if c.abs() < 1e-17 {
                break;
            }
            let an = 0.5 * (a + b);
            let bn = (a * b).sqrt();
            c = 0.5 * (a - b);
            a = an;
            b = bn;
            scale.push(a);
            ratio.push(c / a);
        }
        Ok(JacobiSn { scale, ratio })
    }

    /// Quarter period K of the modulus this table was built for.
    pub fn quarter_period(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 / self.scale[self.scale.len() - 1]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.scale.len() - 1;
        let mut phi = (1u64 << n) as f64 * self.scale[n] * x;
        for j in (1..=n).rev() {
            let arg = (self.ratio[j] * phi.sin()).clamp(-1.0, 1.0);
            phi = 0.5 * (phi + arg.asin());
        }
        phi.sin()
    }
}

/// One-shot sn(x | k^2); build a `JacobiSn` table to evaluate many points.
pub fn jacobi_sn_numeric(x: f64, k: f64) -> Result<f64> {
    Ok(JacobiSn::new(k)?.eval(x))
}

// ---------------------------------------------------------------------------
// Monodromy

#[derive(Clone, Copy, Debug)]
pub enum FloquetEquation {
    Mathieu { lambda: f64, h: f64 },
    Lame { a: f64, n: f64, k: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct OdeConfig {
    /// Relative tolerance of the embedded step controller.
    pub rtol: f64,
    /// Absolute floor of the per-component error scale.
    pub atol: f64,
    /// Smallest admissible step as a fraction of the period.
    pub step_floor: f64,
    /// Hard cap on accepted steps.
    pub max_steps: u64,
    /// Accept/reject threshold on |det T - 1|.
    pub wronskian_tol: f64,
    /// When positive, report a band edge instead of an exponent whenever
    /// `sin^2(period * exponent)` lands within this tolerance of zero.
    /// Disabled by default: the joint trace/traceless extraction stays well
    /// conditioned through the edge, so edges only need flagging when the
    /// caller must certify being strictly inside a band or a gap.
    pub branch_tol: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig {
            rtol: 1e-12,
            atol: 1e-14,
            step_floor: 1e-12,
            max_steps: 4_000_000,
            wronskian_tol: 1e-9,
            branch_tol: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MonodromyResult {
    /// trace(T) over one period.
    pub trace: f64,
    /// Floquet exponent on the principal branch nearest the continuity
    /// anchor; imaginary part is nonnegative.
    pub exponent: Complex,
    /// |det T - 1|.
    pub wronskian_drift: f64,
    /// Accepted integrator steps.
    pub step_count: u64,
}

// Dormand-Prince 5(4) coefficients.
const DP_C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Difference between the 5th- and 4th-order weights.
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn rhs(q: f64, y: &[f64; 4]) -> [f64; 4] {
    [y[1], q * y[0], y[3], q * y[2]]
}

/// Integrate y'' = q(x) y for both fundamental solutions across [0, span];
/// returns the monodromy matrix columns [y1, y1', y2, y2'] and the step
/// count.
fn integrate_monodromy(
    q: &dyn Fn(f64) -> f64,
    span: f64,
    cfg: &OdeConfig,
) -> Result<([f64; 4], u64)> {
    let mut y = [1.0, 0.0, 0.0, 1.0];
    let mut x = 0.0f64;
    let mut h = span * 1e-3;
    let floor = span * cfg.step_floor;
    let mut steps = 0u64;
    let mut k: [[f64; 4]; 7] = [[0.0; 4]; 7];
    k[0] = rhs(q(0.0), &y);
    while x < span {
        if h < floor {
            return Err(CoreError::StiffnessFailure(format!(
                "step size fell to {:.3e} of the period",
                h / span
            )));
        }
        if steps >= cfg.max_steps {
            return Err(CoreError::StiffnessFailure(format!(
                "step budget of {} exhausted",
                cfg.max_steps
            )));
        }
        let mut hs = h.min(span - x);
        let last = hs >= span - x - floor;
        if last {
            hs = span - x;
        }
        for s in 0..6 {
            let mut ys = y;
            for (j, yj) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, ki) in k.iter().enumerate().take(s + 1) {
                    acc += DP_A[s][i] * ki[j];
                }
                *yj += hs * acc;
            }
            k[s + 1] = rhs(q(x + DP_C[s] * hs), &ys);
        }
        // The 6th stage already lands on the 5th-order solution.
        let ynew = {
            let mut ys = y;
            for (j, yj) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, ki) in k.iter().enumerate().take(6) {
                    acc += DP_A[5][i] * ki[j];
                }
                *yj += hs * acc;
            }
            ys
        };
        let mut err = 0.0f64;
        for j in 0..4 {
            let mut de = 0.0;
            for (i, ki) in k.iter().enumerate() {
                de += DP_E[i] * ki[j];
            }
            de *= hs;
            let sc = cfg.atol + cfg.rtol * y[j].abs().max(ynew[j].abs());
            err += (de / sc) * (de / sc);
        }
        err = (err / 4.0).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            continue;
        }
        if err <= 1.0 {
            x = if last { span } else { x + hs };
            y = ynew;
            k[0] = k[6]; // first-same-as-last
            steps += 1;
        }
        let grow = if err <= f64::MIN_POSITIVE {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = hs * grow;
    }
    Ok((y, steps))
}

/// Exponent from the monodromy matrix: `cos(theta) = trace/2` together with
/// `sin^2(theta) = det(T - (trace/2) I)`, unfolded to the lattice candidate
/// `(2 pi m +- theta)/period` nearest the anchor.
fn exponent_from_matrix(
    t: &[f64; 4],
    period: f64,
    anchor: f64,
    cfg: &OdeConfig,
) -> Result<Complex> {
    let [t11, t21, t12, t22] = *t;
    let s = 0.5 * (t11 + t22);
    let n11 = 0.5 * (t11 - t22);
    let disc = -n11 * n11 - t12 * t21; // sin^2(period * exponent)
    if cfg.branch_tol > 0.0 && disc.abs() < cfg.branch_tol {
        return Err(CoreError::BranchAmbiguity(format!(
            "trace/2 = {:.17} sits at a band edge within {:.1e}",
            s, cfg.branch_tol
        )));
    }
    let (theta_re, theta_im) = if disc >= 0.0 {
        (disc.sqrt().atan2(s), 0.0)
    } else {
        // Hyperbolic: |trace/2| effectively beyond 1. asinh of the
        // traceless determinant keeps precision near the edge.
        let im = (-disc).sqrt().asinh();
        (if s >= 0.0 { 0.0 } else { std::f64::consts::PI }, im)
    };
    // Unfold: the trace only knows theta modulo sign and 2 pi shifts.
    let mut best = f64::INFINITY;
    let mut re = theta_re / period;
    let m_max = (anchor.abs() * period / (2.0 * std::f64::consts::PI)).ceil() as i64 + 2;
    for m in 0..=m_max {
        for sign in [1.0, -1.0] {
            let cand = (2.0 * std::f64::consts::PI * m as f64 + sign * theta_re) / period;
            if cand >= -1e-12 && (cand - anchor).abs() < best {
                best = (cand - anchor).abs();
                re = cand;
            }
        }
    }
    Ok(Complex {
        re,
        im: theta_im / period,
    })
}

fn natural_anchor(eq: &FloquetEquation) -> f64 {
    match *eq {
        FloquetEquation::Mathieu { lambda, .. } => {
            if lambda > 0.0 {
                lambda.sqrt()
            } else {
                0.0
            }
        }
        FloquetEquation::Lame { a, .. } => {
            if a < 0.0 {
                (-a).sqrt()
            } else {
                0.0
            }
        }
    }
}

/// Monodromy with an explicit configuration and continuity anchor; the
/// anchor defaults to the free-equation exponent when `None`.
pub fn monodromy_floquet_with(
    eq: &FloquetEquation,
    cfg: &OdeConfig,
    anchor: Option<f64>,
) -> Result<MonodromyResult> {
    let anchor = anchor.unwrap_or_else(|| natural_anchor(eq));
    let (t, steps, period) = match *eq {
        FloquetEquation::Mathieu { lambda, h } => {
            let period = std::f64::consts::PI;
            let q = move |x: f64| 2.0 * h * (2.0 * x).cos() - lambda;
            let (t, steps) = integrate_monodromy(&q, period, cfg)?;
            (t, steps, period)
        }
        FloquetEquation::Lame { a, n, k } => {
            let sn = JacobiSn::new(k)?;
            let period = 2.0 * sn.quarter_period();
            let coupling = n * (n - 1.0) * k * k;
            let q = move |x: f64| {
                let s = sn.eval(x);
                a + coupling * s * s
            };
            let (t, steps) = integrate_monodromy(&q, period, cfg)?;
            (t, steps, period)
        }
    };
    let det = t[0] * t[3] - t[2] * t[1];
    let drift = (det - 1.0).abs();
    if drift >= cfg.wronskian_tol {
        return Err(CoreError::StiffnessFailure(format!(
            "wronskian drift {:.3e} breaches the acceptance threshold {:.1e}",
            drift, cfg.wronskian_tol
        )));
    }
    let exponent = exponent_from_matrix(&t, period, anchor, cfg)?;
    Ok(MonodromyResult {
        trace: t[0] + t[3],
        exponent,
        wronskian_drift: drift,
        step_count: steps,
    })
}

/// Monodromy with the default configuration and the free-field anchor.
pub fn monodromy_floquet(eq: &FloquetEquation) -> Result<MonodromyResult> {
    monodromy_floquet_with(eq, &OdeConfig::default(), None)
}

// ---------------------------------------------------------------------------
// Expansion verification

#[derive(Clone, Copy, Debug)]
pub enum VerifyParams {
    Mathieu { nu: f64, h: f64 },
    Lame { mu: f64, n: f64, k: f64 },
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub equation: Equation,
    pub region: Region,
    pub params: Vec<(&'static str, f64)>,
    pub orders: Vec<i64>,
    pub residuals: Vec<f64>,
    pub wronskian_drift: f64,
    /// Region-violation and other advisories; never failures.
    pub warnings: Vec<String>,
    pub tol: f64,
    /// Final-order residual within tolerance.
    pub passed: bool,
}

impl VerifyReport {
    /// Strict decrease from each order to the next.
    pub fn residuals_monotone(&self) -> bool {
        self.residuals.windows(2).all(|w| w[1] <= w[0])
    }

    /// Monotone up to measurement noise: a step counts as growth only if it
    /// exceeds the previous residual by more than ten percent plus an
    /// absolute floor, so jitter at the resolution limit of the trace
    /// measurement is not flagged.
    pub fn residuals_monotone_within_noise(&self) -> bool {
        self.residuals
            .windows(2)
            .all(|w| w[1] <= 1.1 * w[0] + 1e-12)
    }

    pub fn to_json(&self) -> Value {
        let params: serde_json::Map<String, Value> = self
            .params
            .iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        json!({
            "equation": self.equation.name(),
            "region": self.region.name(),
            "params": params,
            "orders": self.orders,
            "residuals": self.residuals,
            "wronskian_drift": self.wronskian_drift,
        })
    }
}

/// Margin used when checking that verification parameters sit inside the
/// advised region; looser than the advice default because the validation
/// grid deliberately sits where the asymptotics just start to work.
const REGION_CHECK_MARGIN: f64 = 3.0;

fn region_warning(region: Region, params: &VerifyParams) -> Option<String> {
    let advise = match *params {
        VerifyParams::Mathieu { nu, h } => AdviseParams::Mathieu { nu, h },
        VerifyParams::Lame { mu, n, k } => AdviseParams::Lame {
            nu: None,
            mu: Some(mu),
            n,
            k,
        },
    };
    match spectra::region_advise(&advise, REGION_CHECK_MARGIN) {
        Ok(a) if a.region == region || a.also == Some(region) => None,
        Ok(a) => Some(format!(
            "region violation: parameters sit in the {} regime ({})",
            a.region.name(),
            a.rationale
        )),
        Err(e) => Some(format!("region violation: {}", e)),
    }
}

/// Evaluate truncations of the regional expansion at the given numeric
/// point, run the monodromy for each, and report the exponent residuals in
/// increasing truncation order.
pub fn verify_expansion(
    region: Region,
    params: &VerifyParams,
    order: i64,
    tol: f64,
) -> Result<VerifyReport> {
    if !(tol > 0.0) {
        return Err(CoreError::DomainError(
            "verification tolerance must be positive".into(),
        ));
    }
    if order < 0 {
        return Err(CoreError::DomainError(
            "truncation order must be nonnegative".into(),
        ));
    }
    let cfg = OdeConfig::default();
    let mut warnings: Vec<String> = region_warning(region, params).into_iter().collect();
    let mut residuals = Vec::new();
    let mut orders = Vec::new();
    let mut drift = 0.0f64;
    let equation;
    let param_list: Vec<(&'static str, f64)>;

    match *params {
        VerifyParams::Mathieu { nu, h } => {
            equation = Equation::Mathieu;
            param_list = vec![("nu", nu), ("h", h)];
            if region == Region::Dyonic {
                return Err(CoreError::DomainError(
                    "well-bottom bands are exponentially narrow on real slices, \
                     so the monodromy trace cannot resolve that expansion"
                        .into(),
                ));
            }
            let series = spectra::mathieu_lambda(region, order)?;
            let assign = move |s: Sym| if s == Sym::Nu { Some(nu) } else { None };
            for m in 0..=order {
                let (x, cut) = match region {
                    Region::Electric => (h, 2 * m),
                    Region::Magnetic | Region::Dyonic => (1.0 / h.sqrt(), m),
                };
                let (lam, lam_im) = series.truncate_scaled(cut).eval_f64(x, &assign)?;
                if lam_im.abs() > 1e-12 * lam.abs().max(1.0) {
                    return Err(CoreError::DomainError(format!(
                        "expansion evaluates off the real slice at order {}",
                        m
                    )));
                }
                let run = monodromy_floquet_with(
                    &FloquetEquation::Mathieu { lambda: lam, h },
                    &cfg,
                    if region == Region::Electric {
                        Some(nu.abs())
                    } else {
                        None
                    },
                )?;
                drift = drift.max(run.wronskian_drift);
                orders.push(m);
                match region {
                    Region::Electric => {
                        residuals.push(run.exponent.dist(Complex {
                            re: nu.abs(),
                            im: 0.0,
                        }));
                    }
                    _ => {
                        // Invert cosh(pi im) = sqrt(1 + e^{2 pi nu}) at the
                        // measured gap decay rate.
                        if run.exponent.im <= 0.0 {
                            return Err(CoreError::DomainError(
                                "the well-top inversion needs a spectral-gap point, \
                                 but the trace landed inside a band"
                                    .into(),
                            ));
                        }
                        let pi = std::f64::consts::PI;
                        let nu_hat = (run.exponent.im * pi).sinh().ln() / pi;
                        residuals.push((nu_hat - nu.abs()).abs());
                    }
                }
            }
        }
        VerifyParams::Lame { mu, n, k } => {
            equation = Equation::Lame;
            param_list = vec![("mu", mu), ("n", n), ("k", k)];
            if region != Region::Electric {
                return Err(CoreError::DomainError(
                    "the real-slice oracle resolves the electric Lame region only: \
                     the well expansions have complex eigenvalues on real slices"
                        .into(),
                ));
            }
            let k2 = k * k;
            if !(0.0..1.0).contains(&k2) {
                return Err(CoreError::DomainError(
                    "the Lame modulus must satisfy k^2 in [0, 1)".into(),
                ));
            }
            let b = spectra::lame_b_electric(order)?;
            let q = modular::nome_f64(k2);
            let t3sq = modular::theta3_sq_f64(q);
            let nu = mu * t3sq;
            let nn1 = n * (n - 1.0);
            let assign = move |s: Sym| match s {
                Sym::Nu => Some(nu),
                Sym::Nn1 => Some(nn1),
                _ => None,
            };
            for m in 0..=order {
                let (bv, b_im) = b.truncate_scaled(m).eval_f64(q, &assign)?;
                if b_im.abs() > 1e-12 * bv.abs().max(1.0) {
                    return Err(CoreError::DomainError(format!(
                        "expansion evaluates off the real slice at order {}",
                        m
                    )));
                }
                // A = B/(e1 - e2) - (1 + k^2) n(n-1) / 3 with e1 - e2 =
                // theta3^4.
                let a = bv / (t3sq * t3sq) - (1.0 + k2) * nn1 / 3.0;
                let run = monodromy_floquet_with(
                    &FloquetEquation::Lame { a, n, k },
                    &cfg,
                    Some(mu.abs()),
                )?;
                drift = drift.max(run.wronskian_drift);
                orders.push(m);
                residuals.push(run.exponent.dist(Complex {
                    re: mu.abs(),
                    im: 0.0,
                }));
            }
        }
    }

    if !residuals.windows(2).all(|w| w[1] <= w[0]) {
        warnings.push("residuals are not monotone over the requested orders".into());
    }
    let passed = residuals.last().is_some_and(|r| *r <= tol);
    Ok(VerifyReport {
        equation,
        region,
        params: param_list,
        orders,
        residuals,
        wronskian_drift: drift,
        warnings,
        tol,
        passed,
    })
}

// ---------------------------------------------------------------------------
// Verification grid

/// One grid entry: a verification point with its truncation depth and pass
/// tolerance.
#[derive(Clone, Copy, Debug)]
pub struct GridPoint {
    pub region: Region,
    pub params: VerifyParams,
    pub order: i64,
    pub tol: f64,
}

/// The standard grid: parameter points placed inside the validity
/// inequalities of each verifiable regime, at spots where the trace
/// measurement resolves the expansion parameter. The well-bottom region is
/// excluded on purpose: its bands are exponentially narrow on real slices,
/// so a trace measurement cannot resolve the expansion there. At integer
/// quasi-momentum the electric series lands inside a thin spectral gap
/// whose width floors the residual, so the integer point keeps a small
/// coupling; the well-top inversion assumes a gap-extremum phase, which
/// holds at the tabulated coupling.
pub fn standard_grid() -> Vec<GridPoint> {
    let mut pts = Vec::new();
    for &nu in &[4.4, 5.0, 6.3, 9.2] {
        for &h in &[0.5, 1.0, 2.0] {
            if nu == 5.0 && h > 1.0 {
                continue;
            }
            pts.push(GridPoint {
                region: Region::Electric,
                params: VerifyParams::Mathieu { nu, h },
                order: 2,
                tol: 1e-3,
            });
        }
    }
    for &nu in &[0.5, 1.0] {
        pts.push(GridPoint {
            region: Region::Magnetic,
            params: VerifyParams::Mathieu { nu, h: 200.0 },
            order: 1,
            tol: 2e-2,
        });
    }
    for &mu in &[4.5, 6.0, 8.2] {
        for &n in &[2.0, 3.0] {
            for &k in &[0.1, 0.15, 0.25] {
                pts.push(GridPoint {
                    region: Region::Electric,
                    params: VerifyParams::Lame { mu, n, k },
                    order: 2,
                    tol: 1e-3,
                });
            }
        }
    }
    pts
}

#[derive(Clone, Debug)]
pub struct GridOutcome {
    pub reports: Vec<VerifyReport>,
    /// Points whose residuals grew with order, with detail.
    pub monotonicity_violations: Vec<String>,
    pub all_passed: bool,
}

fn describe_point(p: &GridPoint) -> String {
    match p.params {
        VerifyParams::Mathieu { nu, h } => {
            format!("mathieu {} nu={} h={}", p.region.name(), nu, h)
        }
        VerifyParams::Lame { mu, n, k } => {
            format!("lame {} mu={} n={} k={}", p.region.name(), mu, n, k)
        }
    }
}

/// Run every grid point (in parallel when `jobs` allows more than one
/// worker) and collect the reports plus any monotonicity violations.
pub fn verification_grid(points: &[GridPoint], jobs: Option<usize>) -> Result<GridOutcome> {
    let run = || -> Result<Vec<(String, VerifyReport)>> {
        points
            .par_iter()
            .map(|p| {
                verify_expansion(p.region, &p.params, p.order, p.tol)
                    .map(|r| (describe_point(p), r))
            })
            .collect()
    };
    let results = match jobs {
        Some(j) if j >= 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CoreError::DomainError(format!("worker pool: {}", e)))?
            .install(run),
        _ => run(),
    }?;
    let mut reports = Vec::new();
    let mut violations = Vec::new();
    let mut all_passed = true;
    for (desc, report) in results {
        if !report.residuals_monotone_within_noise() {
            violations.push(format!(
                "{}: residuals {:?} grow beyond measurement noise",
                desc, report.residuals
            ));
        }
        all_passed &= report.passed;
        reports.push(report);
    }
    Ok(GridOutcome {
        reports,
        monotonicity_violations: violations,
        all_passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sn_special_values_and_trigonometric_limit() {
        let table = JacobiSn::new(0.6).unwrap();
        assert!(table.eval(0.0).abs() < 1e-14);
        let k_period = table.quarter_period();
        assert!((table.eval(k_period) - 1.0).abs() < 1e-12);
        // Odd function and 4K antiperiod-squared structure.
        assert!((table.eval(-0.7) + table.eval(0.7)).abs() < 1e-12);
        assert!((table.eval(0.7 + 4.0 * k_period) - table.eval(0.7)).abs() < 1e-9);
        // k = 0 degenerates to the sine.
        assert!((jacobi_sn_numeric(1.0, 0.0).unwrap() - 1.0f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn sn_inverts_the_incomplete_integral() {
        // u = integral_0^phi dt / sqrt(1 - k^2 sin^2 t) implies
        // sn(u) = sin(phi). Simpson quadrature as the independent check.
        let k: f64 = 0.6;
        let phi: f64 = 0.7;
        let n = 2000;
        let f = |t: f64| 1.0 / (1.0 - k * k * t.sin() * t.sin()).sqrt();
        let hstep = phi / n as f64;
        let mut u = f(0.0) + f(phi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            u += w * f(i as f64 * hstep);
        }
        u *= hstep / 3.0;
        assert!((jacobi_sn_numeric(u, k).unwrap() - phi.sin()).abs() < 1e-10);
    }

    #[test]
    fn sn_rejects_degenerate_modulus() {
        assert!(matches!(
            jacobi_sn_numeric(1.0, 1.0),
            Err(CoreError::DomainError(_))
        ));
    }

    #[test]
    fn free_mathieu_recovers_closed_forms() {
        // lambda = 25 sits exactly at a band edge of the trace map; the
        // traceless extraction must push through it.
        let r = monodromy_floquet(&FloquetEquation::Mathieu { lambda: 25.0, h: 0.0 }).unwrap();
        assert!((r.exponent.re - 5.0).abs() < 1e-9, "re = {}", r.exponent.re);
        assert!(r.exponent.im.abs() < 1e-9);
        assert!(r.wronskian_drift < 1e-9);

        let r = monodromy_floquet(&FloquetEquation::Mathieu {
            lambda: 20.25,
            h: 0.0,
        })
        .unwrap();
        assert!((r.exponent.re - 4.5).abs() < 1e-9);

        // Negative lambda: purely imaginary exponent.
        let r = monodromy_floquet(&FloquetEquation::Mathieu { lambda: -4.0, h: 0.0 }).unwrap();
        assert!(r.exponent.re.abs() < 1e-9);
        assert!((r.exponent.im - 2.0).abs() < 1e-9);
    }

    #[test]
    fn free_lame_recovers_closed_forms() {
        for n in [0.0, 1.0] {
            let r = monodromy_floquet(&FloquetEquation::Lame {
                a: -36.0,
                n,
                k: 0.3,
            })
            .unwrap();
            assert!((r.exponent.re - 6.0).abs() < 1e-9, "n = {}", n);
            assert!(r.exponent.im.abs() < 1e-9);
            assert!(r.wronskian_drift < 1e-9);
        }
    }

    #[test]
    fn step_budget_exhaustion_is_a_stiffness_failure() {
        let cfg = OdeConfig {
            max_steps: 3,
            ..OdeConfig::default()
        };
        let r = monodromy_floquet_with(
            &FloquetEquation::Mathieu {
                lambda: 100.0,
                h: 30.0,
            },
            &cfg,
            None,
        );
        assert!(matches!(r, Err(CoreError::StiffnessFailure(_))));
    }

    #[test]
    fn band_edge_certification_is_opt_in() {
        let cfg = OdeConfig {
            branch_tol: 1e-6,
            ..OdeConfig::default()
        };
        let r = monodromy_floquet_with(
            &FloquetEquation::Mathieu {
                lambda: 25.0,
                h: 0.0,
            },
            &cfg,
            None,
        );
        assert!(matches!(r, Err(CoreError::BranchAmbiguity(_))));
    }

    #[test]
    fn electric_mathieu_verification_meets_tolerance() {
        let report = verify_expansion(
            Region::Electric,
            &VerifyParams::Mathieu { nu: 5.0, h: 1.0 },
            2,
            1e-6,
        )
        .unwrap();
        assert!(report.passed, "residuals {:?}", report.residuals);
        assert!(report.residuals_monotone(), "residuals {:?}", report.residuals);
        assert!(report.wronskian_drift < 1e-9);
    }

    #[test]
    fn magnetic_mathieu_verification_meets_loose_tolerance() {
        let report = verify_expansion(
            Region::Magnetic,
            &VerifyParams::Mathieu { nu: 1.0, h: 200.0 },
            1,
            1e-3,
        )
        .unwrap();
        assert!(report.passed, "residuals {:?}", report.residuals);
    }

    #[test]
    fn electric_lame_verification_residuals_decrease() {
        let report = verify_expansion(
            Region::Electric,
            &VerifyParams::Lame {
                mu: 6.0,
                n: 2.0,
                k: 0.15,
            },
            2,
            1e-4,
        )
        .unwrap();
        assert!(report.passed, "residuals {:?}", report.residuals);
        assert!(report.residuals_monotone(), "residuals {:?}", report.residuals);
        assert_eq!(report.orders, vec![0, 1, 2]);
    }

    #[test]
    fn report_json_has_the_contract_shape() {
        let report = verify_expansion(
            Region::Electric,
            &VerifyParams::Mathieu { nu: 5.0, h: 1.0 },
            0,
            1.0,
        )
        .unwrap();
        let v = report.to_json();
        let obj = v.as_object().unwrap();
        let keys: Vec<&String> = obj.keys().collect();
        assert_eq!(
            keys,
            ["equation", "orders", "params", "region", "residuals", "wronskian_drift"]
        );
        assert_eq!(v["params"]["nu"], 5.0);
    }

    #[test]
    fn off_region_parameters_warn_but_do_not_fail() {
        let report = verify_expansion(
            Region::Electric,
            &VerifyParams::Mathieu { nu: 2.0, h: 2.0 },
            1,
            1.0,
        )
        .unwrap();
        assert!(!report.warnings.is_empty());
    }

    #[test]
    fn standard_grid_stays_in_verifiable_regions() {
        let pts = standard_grid();
        assert!(pts.len() >= 20, "grid too small: {}", pts.len());
        assert!(pts.iter().all(|p| p.region != Region::Dyonic));
        assert!(pts
            .iter()
            .any(|p| matches!(p.params, VerifyParams::Mathieu { nu, h } if nu == 5.0 && h == 1.0)));
        assert!(pts
            .iter()
            .any(|p| matches!(p.params, VerifyParams::Lame { .. })));
    }

    #[test]
    fn mini_grid_runs_in_parallel_and_aggregates() {
        let pts = vec![
            GridPoint {
                region: Region::Electric,
                params: VerifyParams::Mathieu { nu: 4.4, h: 1.0 },
                order: 1,
                tol: 1e-3,
            },
            GridPoint {
                region: Region::Magnetic,
                params: VerifyParams::Mathieu { nu: 1.0, h: 200.0 },
                order: 1,
                tol: 2e-2,
            },
            GridPoint {
                region: Region::Electric,
                params: VerifyParams::Lame {
                    mu: 6.0,
                    n: 2.0,
                    k: 0.15,
                },
                order: 1,
                tol: 1e-3,
            },
        ];
        let outcome = verification_grid(&pts, Some(2)).unwrap();
        assert_eq!(outcome.reports.len(), 3);
        assert!(outcome.all_passed, "{:?}", outcome.monotonicity_violations);
        assert!(outcome
            .reports
            .iter()
            .all(|r| r.wronskian_drift < 1e-9));
    }

    #[test]
    fn noise_tolerant_monotonicity_ignores_jitter_but_flags_growth() {
        let mut report = verify_expansion(
            Region::Electric,
            &VerifyParams::Mathieu { nu: 5.0, h: 1.0 },
            0,
            1.0,
        )
        .unwrap();
        report.residuals = vec![6.31e-4, 6.49e-4];
        assert!(!report.residuals_monotone());
        assert!(report.residuals_monotone_within_noise());
        report.residuals = vec![8.4e-6, 2.2e-5];
        assert!(!report.residuals_monotone_within_noise());
    }
}
