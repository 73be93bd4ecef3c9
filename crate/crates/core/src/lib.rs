//! Generalized Skorohod problems on domains with a uniform exterior ball.
//!
//! The crate solves `x + k = x0 + m (+ drift)` with `x` confined to a closed,
//! possibly non-convex set `E` and `dk` in the Fréchet subdifferential of
//! `phi = I_E + g`, simulates the matching reflected SDEs, and certifies
//! discrete solutions against the defining inequalities.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! `*F64` aliases below fix the scalar for the common case.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN

pub mod catalog;
pub mod error;
pub mod geometry;
pub mod paths;
pub mod potential;
pub mod scalar;
pub mod sde;
pub mod skorohod;

pub use error::{Error, Result};
pub use scalar::Real;

pub type DomainF64 = geometry::Domain<f64>;
pub type DomainF32 = geometry::Domain<f32>;
pub type LevelSetF64 = geometry::LevelSet<f64>;
pub type PathF64 = paths::Path<f64>;
pub type BVPathF64 = paths::BVPath<f64>;
pub type PotentialF64 = potential::SemiconvexPotential<f64>;
pub type SolutionF64 = skorohod::SkorohodSolution<f64>;
pub type SolverConfigF64 = skorohod::SolverConfig<f64>;
pub type DriftFieldF64 = skorohod::DriftField<f64>;
pub type DiffusionFieldF64 = sde::DiffusionField<f64>;
