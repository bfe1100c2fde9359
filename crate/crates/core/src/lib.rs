//! Numerics for the self-energy expansion and enhanced binding of a spin-1/2
//! electron coupled to the quantized radiation field (Pauli-Fierz model).
//!
//! Units: ħ = c = 1 and electron mass 1/2, so the kinetic energy is `p²`.
//! The coupling is written `α` throughout and the ultraviolet cutoff `Λ`.
//!
//! Module map:
//! - [`kernels`]: form factors, polarization frames and sums, reduced kernels.
//! - [`integrand`]: unreduced polarization- and spin-resolved integrands.
//! - [`integrate`]: adaptive Gauss-Kronrod quadrature and seeded Monte Carlo.
//! - [`coeffs`]: first and second order self-energy coefficients.
//! - [`fock`]: discretized two-photon truncated Fock space, eigensolvers, diagnostics.
//! - [`binding`]: zero-resonance shooting and the enhanced-binding margin.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binding;
pub mod coeffs;
mod error;
pub mod fock;
pub mod gauss;
pub mod integrand;
pub mod integrate;
pub mod kernels;
pub mod spin;
pub mod vec3;

pub use error::{Error, Result};
pub use kernels::Cutoff;
