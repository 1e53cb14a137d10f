//! Exact symbolic series arithmetic: the coefficient field (sparse
//! polynomials and factored rational functions over a fixed symbol alphabet)
//! and truncated Puiseux series with explicit exactness windows.

pub mod poly;
pub mod puiseux;
pub mod ratfunc;
pub mod render;

pub use poly::{rat, rat_i, MPoly, Mono, Rat, Sym, ALL_SYMS, NSYM};
pub use puiseux::{PuiseuxSeries, SeriesVar, EXACT_TRUNC};
pub use ratfunc::{substitute_poly, RatFunc};
