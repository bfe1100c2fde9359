//! Discretized photon modes and the two-photon truncated Fock space.

pub mod basis;
pub mod grid;
pub mod operator;

pub use basis::FockBasis;
pub use grid::{build_grid, build_grid_with, GridOptions, GridParams, Mode, ModeGrid};
pub use operator::{assemble, assemble_with, AssembleOptions, Coupling, FockOperator};
pub mod eigen;
pub use eigen::{ground_state, ground_state_with, EigenOptions, Eigensolver, GroundStateResult};
pub mod discrete;
pub use discrete::{discrete_coeffs, discrete_coeffs_with, fit_expansion, fit_expansion_with, DiscreteCoefficients, ExpansionFit};
pub mod trial;
pub use trial::{build_trial, rayleigh_quotient, remainder_diagnostics, RayleighQuotient, RemainderReport, TrialKind, TrialState};
pub mod diagnostics;
pub use diagnostics::{
    check_auxiliary_bounds, check_epstens, energy_identity_residuals, photon_density, random_grid, random_state,
    self_adjointness, AuxiliaryBoundsReport, PhotonDensity,
};
