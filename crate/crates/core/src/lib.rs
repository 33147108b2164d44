//! Matrix-free geometric multigrid for heterogeneous high-frequency 2D Helmholtz
//! problems.
//!
//! The solver pairs a *wave cycle* (damped Jacobi on the finest grid, Chebyshev
//! semi-iteration on the normal equations below it) with an *ADR correction* on
//! the level where `ωh ≈ 1`: the characteristic error is written as
//! `a · e^{-iωτ}` with `τ` a travel time from a factored fast-marching eikonal
//! solve, and the slowly varying amplitude `a` is found from an upwind
//! advection-diffusion-reaction equation with its own V-cycle. The cycle is used
//! as a preconditioner for restarted flexible GMRES.

pub mod error;
pub mod grid;
pub mod field;
pub mod medium;
pub mod hierarchy;
pub mod transfer;
pub mod helmholtz;
pub mod spectral;
pub mod linear;
pub mod smoothers;
pub mod eikonal;
pub mod adr;
pub mod cycle;
pub mod direct;
pub mod krylov;
pub mod baselines;
pub mod ingest;
pub mod tuner;
pub mod diagnostics;
pub mod problem;
pub mod report;

pub use error::{Error, Result};
pub use field::{ComplexField, RealField};
pub use grid::Grid2D;
pub use medium::SlownessModel;
pub use num_complex::Complex64;
