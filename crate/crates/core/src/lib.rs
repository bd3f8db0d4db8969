//! Pseudo-spectral Galerkin solver for the convective Cahn–Hilliard equation
//!
//! ```text
//! ∂_t u = ∇·(M_θ(u) ∇μ) + β·∇ψ(u),   μ = -γΔu + φ(u)
//! ```
//!
//! on the periodic box `[0, 2π]^n`, `n ∈ {1, 2}`, with degenerate mobility
//! `M(u) = |u|^{2m}` and its regularization `M_θ`.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod model;
pub mod snapshot;
pub mod spectral;

pub use error::{Error, Result};
