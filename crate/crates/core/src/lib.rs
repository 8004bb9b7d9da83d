//! Simulation and diagnostics for self-attention dynamics of tokens on the
//! unit sphere.
//!
//! Tokens `x_i ∈ S^{d−1}` evolve under
//! `ẋ_i = P_{x_i}(V Σ_j w_ij x_j)` with `w_ij ∝ exp(β⟨x_i, B x_j⟩)`, or, at
//! `β = ∞`, under the zero-temperature flow `ẋ = P_x(V Bᵀx/‖Bᵀx‖)`.
//! The crate provides the spectral objects that predict where mass
//! concentrates, the diagnostics used to watch it happen, the closed-form
//! envelopes, and an experiment harness writing tidy CSV output.

pub mod assignment;
pub mod bounds;
pub mod dynamics;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod spectral;
pub mod sphere;
pub mod verify;

pub use dynamics::{Beta, Ensemble, SimConfig};
pub use linalg::Matrix;
pub use spectral::{build_model, SpectralModel, Subspace};
