//! The monotone midpoint scheme for `Δ∞ᴺu = g(u)`: ball slopes, Dirichlet and
//! obstacle solves, sup-convolutions and eikonal residuals.

mod convolution;
mod function;
mod operators;
mod scheme;

pub use convolution::{erode, eikonal_residual, sup_convolution, sup_convolution_gap, Convolution};
pub use function::GridFunction;
pub use operators::{discrete_operator, slope_minus, slope_plus, BallSets};
pub use scheme::{
    implicit_update, solve_dirichlet, solve_obstacle, AbsorptionMode, Iteration, Scheme, SchemeConfig,
    SchemeState, SweepOrder,
};
