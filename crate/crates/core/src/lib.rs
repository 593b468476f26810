//! Optimal probabilistic quantum operations.
//!
//! A probabilistic (trace-decreasing) map is represented by its Choi
//! operator `E` on `H_in ⊗ H_out`. For an ensemble of inputs `ρ` with ideal
//! pure outputs `ψ`, the best achievable mean fidelity is the largest
//! eigenvalue of `A^{-1/2} R A^{-1/2}` with `A = ∫ ρᵀ ⊗ 1` and
//! `R = ∫ ρᵀ ⊗ ψ`. This crate builds `A` and `R`, extracts the optimum and
//! the family of optimal maps, and picks the member with the largest success
//! probability by solving a small semidefinite program.
//!
//! Modules:
//! - [`densec`]: dense complex linear algebra and a Jacobi eigensolver.
//! - [`qstate`]: states, symmetric subspaces and noisy qubit channels.
//! - [`ensemble`]: ensembles and the operators `A`, `R`.
//! - [`optimizer`]: the eigenvalue optimum, Choi construction, fidelities.
//! - [`sdp`]: success-probability maximization on the optimal subspace.
//! - [`scenarios`]: cloning, transposition and purification problems with
//!   their closed-form reference values.
//! - [`verify`]: Monte Carlo verification of constructed maps.

pub mod densec;
pub mod ensemble;
mod error;
pub mod optimizer;
pub mod qstate;
pub mod scenarios;
pub mod sdp;
pub mod verify;

pub use error::{Error, Result};
