//! Radial profiles `η'' = g(η)`, g-cones built from them, radius maps and
//! sliding slopes.

mod absorption;
mod cone;
mod profile;
pub(crate) mod quad;
mod sliding;

pub use absorption::{Absorption, Table};
pub use cone::{check_cone_comparison, make_cone, outer_boundary, ComparisonReport, GCone};
pub use profile::{
    first_integral_residual, implicit_time, ode_residual, radius_bound, solve_eta, solve_eta_on,
    EtaProfile, Sample, DEFAULT_STEPS, SLOPE_MARGIN,
};
pub use sliding::sliding_slope;
