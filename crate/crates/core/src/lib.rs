//! Fluctuation speed limits for observables of finite-dimensional quantum
//! systems under time-dependent Hamiltonians.
//!
//! For a pure state |ψ(t)⟩ and observable A(t) with velocity observable
//! v_A = ∂A/∂t + (i/ħ)[H, A], the standard deviation σ_A and mean μ_A obey
//!
//! - |dσ_A/dt| ≤ σ_{v_A}
//! - (dμ_A/dt)² + (dσ_A/dt)² ≤ ⟨v_A²⟩
//!
//! The crate propagates states, evaluates both sides along trajectories,
//! classifies tight and loose instants, and cross-checks the results against
//! Bloch-vector geometry, closed-form overlays, and auxiliary speed limits.

#![forbid(unsafe_code)]

pub mod bloch;
pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod fluctuation;
pub mod hilbert;
pub mod linops;
pub mod quad;
pub mod sampling;
pub mod scenarios;
pub mod timefn;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
pub use tol::Tolerances;
