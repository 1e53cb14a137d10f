//! Semiclassical operator calculus for the elliptic and trigonometric
//! spectral problems.
//!
//! The pipeline runs in four stages, each exact over the rationals:
//!
//! 1. [`ring`] - a differential ring of curve data closed under products and
//!    derivatives, keyed by half-integer powers of `t = omega + sn^2`;
//! 2. [`recursion`] - the quasi-momentum hierarchy `p_0, p_1, ...` solving
//!    the Riccati form of the wave equation order by order;
//! 3. [`reduce`] - period-integral reduction: odd members integrate to zero
//!    with replayable certificates, even members collapse to differential
//!    operators in omega acting on the leading integral;
//! 4. [`contour`] and [`assemble`] - closed expansions of the leading
//!    integral over the three independent cycles, and the assembly and
//!    inversion that turn quasi-momentum into eigenvalue expansions.

pub mod assemble;
pub mod contour;
pub mod recursion;
pub mod reduce;
pub mod ring;

pub use assemble::{
    apply_direct, dyonic_eigenvalue, electric_eigenvalue, kappa_series_to_mathieu_lambda,
    magnetic_eigenvalue, mathieu_dyonic_lambda, mathieu_magnetic_lambda,
};
pub use reduce::{operator_tower, Chart, WkbOperator};
