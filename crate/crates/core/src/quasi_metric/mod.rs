//! Finite quasi-metric spaces: directed weighted graphs, lattice spaces built
//! from an asymmetric norm, distances, balls and Lipschitz constants.

mod distance;
mod grid;
mod lipschitz;
mod norm;
mod space;

pub(crate) use distance::{Dijkstra, BALL_SLACK};
pub use distance::{
    backward_distance, ball, closed_ball, distance_field, forward_distance, pairwise_distances,
    sphere, Direction, DistanceField,
};
pub use grid::{grid_space, GridSpec, Mask, Stencil};
pub use lipschitz::{eccentricity, lipschitz_constant, lipschitz_constant_global, reversibility_constant};
pub use norm::{RandersNorm, DUAL_SAMPLES};
pub use space::{Edge, NodeId, QuasiMetricSpace};

/// CSV `node,x,y,<column>` for per-node values. Missing coordinates are left
/// empty; a 1D coordinate gets `y = 0`.
pub fn node_csv(space: &QuasiMetricSpace, values: &[f64], column: &str) -> String {
    let mut out = format!("node,x,y,{column}\n");
    for x in space.nodes() {
        let (cx, cy) = match space.coords(x) {
            Some([a]) => (a.to_string(), "0".to_string()),
            Some([a, b, ..]) => (a.to_string(), b.to_string()),
            _ => (String::new(), String::new()),
        };
        out.push_str(&format!("{x},{cx},{cy},{}\n", values[x]));
    }
    out
}

/// Distance field as CSV `node,x,y,value`.
pub fn distance_csv(space: &QuasiMetricSpace, field: &DistanceField) -> String {
    node_csv(space, &field.values, "value")
}
