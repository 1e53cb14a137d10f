//! Deterministic text, JSON, and LaTeX renderings of series and
//! coefficients. Terms are emitted in ascending exponent order and monomials
//! in the canonical symbol order, so equal values always print identically.

use super::poly::{MPoly, Rat, Sym, ALL_SYMS};
use super::puiseux::PuiseuxSeries;
use super::ratfunc::RatFunc;
use num_integer::Integer;
use num_traits::{One, Signed};
use serde_json::{json, Value};

/// Reduced exponent string "p" or "p/q" from a scaled key and lattice.
pub fn exponent_string(key: i64, den: i64) -> String {
    let g = key.gcd(&den);
    let (n, d) = (key / g, den / g);
    if d == 1 {
        format!("{}", n)
    } else {
        format!("{}/{}", n, d)
    }
}

pub fn ratfunc_json(f: &RatFunc) -> Value {
    let den = f.den_as_poly();
    json!({
        "num": f.numerator().to_string(),
        "den": den.to_string(),
    })
}

pub fn series_json(s: &PuiseuxSeries) -> Value {
    let terms: Vec<Value> = s
        .iter_terms()
        .map(|(k, c)| {
            json!({
                "exponent": exponent_string(*k, s.lattice_den()),
                "coefficient": ratfunc_json(c),
            })
        })
        .collect();
    json!({
        "variable": s.var().name(),
        "exponent_denominator": s.lattice_den(),
        "terms": terms,
        "truncation": exponent_string(s.trunc_scaled(), s.lattice_den()),
    })
}

fn sym_tex(s: Sym) -> &'static str {
    match s {
        Sym::I => "i",
        Sym::Sqrt2 => "\\sqrt{2}",
        Sym::Kp => "k'",
        Sym::Kappa => "\\kappa",
        Sym::Pi => "\\pi",
        Sym::BigK => "K",
        Sym::BigE => "E",
        Sym::A => "a",
        Sym::M => "m",
        Sym::Eps1 => "\\epsilon_1",
        Sym::Eps2 => "\\epsilon_2",
        Sym::LitN => "n",
        Sym::Nn1 => "n(n-1)",
        Sym::Nu => "\\nu",
        Sym::Mu => "\\mu",
        Sym::K2 => "k^2",
        Sym::Omega => "\\omega",
        Sym::W => "w",
    }
}

fn rat_tex(c: &Rat) -> String {
    if c.denom().is_one() {
        format!("{}", c.numer())
    } else {
        let sign = if c.is_negative() { "-" } else { "" };
        format!(
            "{}\\tfrac{{{}}}{{{}}}",
            sign,
            c.numer().abs(),
            c.denom()
        )
    }
}

pub fn poly_tex(p: &MPoly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    let mut first = true;
    for (m, c) in p.iter().rev() {
        let neg = c.is_negative();
        let mag = if neg { -c.clone() } else { c.clone() };
        if first {
            if neg {
                out.push('-');
            }
            first = false;
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mut body = String::new();
        for &s in ALL_SYMS.iter() {
            let e = m.exp(s);
            if e == 0 {
                continue;
            }
            // n(n-1) needs wrapping when raised to a power.
            let base = sym_tex(s);
            if e == 1 {
                body.push_str(base);
            } else if s == Sym::Nn1 || s == Sym::K2 {
                body.push_str(&format!("\\left({}\\right)^{{{}}}", base, e));
            } else {
                body.push_str(&format!("{}^{{{}}}", base, e));
            }
            body.push(' ');
        }
        let body = body.trim_end();
        if body.is_empty() {
            out.push_str(&rat_tex(&mag));
        } else if mag.is_one() {
            out.push_str(body);
        } else {
            out.push_str(&format!("{} {}", rat_tex(&mag), body));
        }
    }
    out
}

pub fn ratfunc_tex(f: &RatFunc) -> String {
    if f.is_polynomial() {
        return poly_tex(f.numerator());
    }
    format!(
        "\\frac{{{}}}{{{}}}",
        poly_tex(f.numerator()),
        poly_tex(&f.den_as_poly())
    )
}

fn var_tex(s: &PuiseuxSeries) -> &'static str {
    use super::puiseux::SeriesVar::*;
    match s.var() {
        Q => "q",
        H => "h",
        InvSqrtH => "h^{-1/2}",
        K2 => "k^2",
        Omega => "\\omega",
        InvOmega => "\\omega^{-1}",
        OmegaTilde => "\\tilde\\omega",
        InvMu => "\\mu^{-1}",
        InvKappa => "\\kappa^{-1}",
        X => "x",
        Y => "y",
        U => "u",
    }
}

pub fn series_tex(s: &PuiseuxSeries) -> String {
    let mut out = String::new();
    let mut first = true;
    for (k, c) in s.iter_terms() {
        let coeff = if c.is_polynomial() && c.numerator().num_terms() <= 1 {
            ratfunc_tex(c)
        } else {
            format!("\\left({}\\right)", ratfunc_tex(c))
        };
        if !first {
            out.push_str(" + ");
        }
        first = false;
        if *k == 0 {
            out.push_str(&coeff);
            continue;
        }
        let e = exponent_string(*k, s.lattice_den());
        let var = var_tex(s);
        if e == "1" {
            out.push_str(&format!("{} \\, {}", coeff, var));
        } else {
            out.push_str(&format!("{} \\, {}^{{{}}}", coeff, var, e));
        }
    }
    if first {
        out.push('0');
    }
    out.push_str(&format!(
        " + O\\!\\left({}^{{{}}}\\right)",
        var_tex(s),
        exponent_string(s.trunc_scaled() + 1, s.lattice_den())
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::poly::rat_i;
    use crate::series::puiseux::SeriesVar;

    #[test]
    fn json_is_deterministic_and_reduced() {
        let s = PuiseuxSeries::from_scaled_terms(
            SeriesVar::Q,
            2,
            [(1, RatFunc::int(16)), (4, RatFunc::int(-128))],
            9,
        );
        let v = series_json(&s);
        assert_eq!(v["terms"][0]["exponent"], "1/2");
        assert_eq!(v["terms"][1]["exponent"], "2");
        assert_eq!(v["truncation"], "9/2");
        assert_eq!(v["terms"][0]["coefficient"]["num"], "16");
    }

    #[test]
    fn latex_wraps_composite_bases() {
        let p = MPoly::sym_pow(Sym::Nn1, 2).scale(&rat_i(3));
        let t = poly_tex(&p);
        assert!(t.contains("\\left(n(n-1)\\right)^{2}"));
    }
}
