//! Hopf bifurcation analysis for fractional-order systems with order `1 < alpha < 2`.
//!
//! The characteristic polynomial of the Jacobian is evaluated along the ray
//! `r * exp(i*alpha*pi/2)`; its imaginary and real parts feed an interleaved
//! `2n x 2n` Routh-Hurwitz style matrix whose leading minors decide whether all
//! eigenvalues sit in the stable sector `|arg z| > alpha*pi/2`, or whether a
//! single conjugate pair sits on the critical line.
//!
//! Modules:
//! - [`polycore`]: monic real polynomials, Horner evaluation, an Aberth root
//!   finder used as the independent eigenvalue oracle, sector classification.
//! - [`frh`]: rotated coefficient pair, the fractional Routh-Hurwitz matrix,
//!   its minors, the stability verdict and critical-root recovery.
//! - [`bifurcate`]: parameter-dependent systems, grid scans of the bifurcation
//!   surface, bisection refinement, transversality and the degenerate point search.
//! - [`exprdsl`]: coefficient expressions and the built-in three-neuron demo.
//! - [`fdesim`]: Caputo predictor-corrector integrator for validation runs.

pub mod bifurcate;
pub mod exprdsl;
pub mod fdesim;
pub mod frh;
pub mod polycore;
mod tolerance;

pub use tolerance::TolerancePolicy;

/// Checks that a fractional order lies in the open interval `(1, 2)`.
pub(crate) fn check_alpha(alpha: f64) -> bool {
    alpha.is_finite() && alpha > 1.0 && alpha < 2.0
}
