//! Symbolic-numeric engine for asymptotic Floquet spectra of the Mathieu and
//! Lame operators.
//!
//! The engine computes eigenvalue expansions in three asymptotic regions of
//! the spectrum through two independent symbolic routes, a gauge-theoretic
//! partition-function sum and an all-order WKB operator calculus, and checks
//! both against direct numeric monodromy of the differential equations.

pub mod error;
pub mod series;
pub mod wkb;

pub use error::{CoreError, Result};
pub mod instanton;
pub mod modular;
pub mod oracle;
pub mod spectra;
