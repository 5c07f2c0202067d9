//! Numerical laboratory for the normalized infinity Laplacian `Δ∞ᴺu = g(u)` on
//! finite quasi-metric spaces.
//!
//! * [`quasi_metric`]: directed graphs, asymmetric grid spaces, distances, balls.
//! * [`gcone`]: radial profiles `η'' = g(η)`, g-cones, radius maps, sliding slopes.
//! * [`solver`]: the monotone midpoint scheme, Dirichlet and obstacle solves.
//! * [`principles`]: executable completeness, maximum-principle, capacity and
//!   Ekeland experiments.
//! * [`cli`]: configuration, experiment orchestration and artifact emission.

pub mod error;
pub mod cli;
pub mod gcone;
pub mod principles;
pub mod solver;
pub mod quasi_metric;

pub use error::{Error, Result};
