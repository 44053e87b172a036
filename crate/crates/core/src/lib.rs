//! Finite element toolkit for the singularly perturbed Neumann-Robin model problem
//!
//! ```text
//!   F_eps(v) = int_Omega ( |grad v|^2 / 2 + f v ) + 1/(2 eps) int_{Gamma_D} (v - g)^2
//! ```
//!
//! and for measuring its energy expansion
//! `F_eps(u_eps) = F_0 + eps |log eps| F_1 + eps F_2 + o(eps)` near Dirichlet-Neumann
//! junctions, where the limit solution carries a `c r^{1/2} sin(theta/2)` singularity.
//!
//! Module layout:
//! - [`mesh`]: graded triangulations, tags, junction frames, validation, file IO.
//! - [`fem`]: P1/P2 spaces, assembly, evaluation, norms, energies, consistent fluxes.
//! - [`linsolve`]: preconditioned conjugate gradients and a dense Cholesky oracle.
//! - [`problems`]: Robin and mixed Dirichlet-Neumann solves, recursive Dirichlet chains.
//! - [`singular`]: cutoff singular functions, coefficient extraction, expansion constants,
//!   weak identity and Hardy-type checks.
//! - [`halfplane`]: the auxiliary half-plane minimisation giving the constant `A`.
//! - [`expansion`]: epsilon sweeps, rate fits and energy slope extrapolation.
//! - [`cli`]: configuration parsing, command execution and reports.

pub mod cli;
pub mod error;
pub mod expansion;
pub mod fem;
pub mod halfplane;
pub mod linsolve;
mod lsq;
pub mod mesh;
pub mod problems;
pub mod quad;
pub mod singular;

pub use error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];

/// Scalar data such as sources and boundary values.
pub type ScalarField = std::sync::Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Wraps a closure as a [`ScalarField`].
pub fn field(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> ScalarField {
    std::sync::Arc::new(f)
}

#[inline]
pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
