//! Conservative Camassa–Holm solver in Lagrangian coordinates.
//!
//! The equation u_t + u uₓ + Pₓ = 0 with P = ½ e^{−|·|} ∗ (u² + uₓ²/2)
//! develops wave breaking from smooth data: u stays bounded while uₓ → −∞.
//! To continue past breaking conservatively, the solution is paired with an
//! energy measure μ whose absolutely continuous part has density u² + uₓ²;
//! at breaking, energy concentrates into the singular part of μ and is later
//! released.  This crate evolves the pair through the equivalent semilinear
//! system in characteristic coordinates
//!
//!   dy/dt = U,    dU/dt = −Pₓ(y),    dH/dt = U³ − 2 U P(y),
//!
//! where α labels characteristics through x̄(α) + μ̄((−∞, x̄(α)]) ∋ α and
//! H = β − y is the cumulative transported energy.  The system is globally
//! well posed; wave breaking is just cells collapsing (y_α → 0) while H
//! keeps their energy, so the solver runs straight through it.
//!
//! On top of the integrator sit diagnostics: the conserved functionals
//! Ẽ = μ(ℝ) and F̃ = ∫ u dμ, weak-form residuals of the defining identities,
//! and the peakon orbital-stability monitor
//! μ_s(t)(ℝ) + ‖u(·,t) − cφ(·−ξ(t))‖²_{H¹} with its chain bound.

pub mod cell;
pub mod checks;
pub mod conserved;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod io;
pub mod lagrangian;
pub mod measure;
pub mod scenarios;
pub mod stability;

pub use error::{Error, Result};
pub use evolution::{evolve, evolve_with, rhs, step_rk4, EvolveOptions, Trajectory};
pub use grid::GridFunction;
pub use lagrangian::{
    alpha_transform, reconstruct, reconstruct_natural, singular_mass_estimate, LagrangianState,
    ReconstructOptions, UniformGrid,
};
pub use measure::{Atom, DataPair, EnergyMeasure, Endpoint};
pub use stability::StabilityMonitor;
