use super::operators::BallSets;
use crate::error::{Error, Result};
use crate::quasi_metric::{Dijkstra, Direction, NodeId, QuasiMetricSpace, BALL_SLACK};

/// A sup- or inf-convolution and the eroded set where it is meaningful.
#[derive(Clone, Debug, PartialEq)]
pub struct Convolution {
    /// Ball maximum (forward) or minimum (backward) at every node.
    pub values: Vec<f64>,
    /// `Ω±_ε = {x ∈ Ω : B̄±_x(ε) ⊂ Ω}`.
    pub domain: Vec<bool>,
}

fn closed_balls(space: &QuasiMetricSpace, epsilon: f64, direction: Direction) -> Vec<Vec<NodeId>> {
    let adj = match direction {
        Direction::Forward => space.out_adjacency(),
        Direction::Backward => space.in_adjacency(),
    };
    let mut dijkstra = Dijkstra::new(space.len());
    space
        .nodes()
        .map(|x| {
            dijkstra
                .run(adj, &[x], epsilon * (1.0 + BALL_SLACK))
                .into_iter()
                .map(|(y, _)| y)
                .collect()
        })
        .collect()
}

/// Nodes of `omega` whose closed `ε`-ball in `direction` stays inside `omega`.
pub fn erode(space: &QuasiMetricSpace, omega: &[bool], epsilon: f64, direction: Direction) -> Vec<bool> {
    closed_balls(space, epsilon, direction)
        .iter()
        .enumerate()
        .map(|(x, ball)| omega[x] && ball.iter().all(|&y| omega[y]))
        .collect()
}

/// `u^ε(x) = max_{B̄⁺_x(ε)} u` (forward) or `u_ε(x) = min_{B̄⁻_x(ε)} u`
/// (backward), together with the eroded domain of `omega`.
pub fn sup_convolution(
    space: &QuasiMetricSpace,
    u: &[f64],
    omega: &[bool],
    epsilon: f64,
    direction: Direction,
) -> Result<Convolution> {
    if u.len() != space.len() || omega.len() != space.len() {
        return Err(Error::input("function and domain must cover every node"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let balls = closed_balls(space, epsilon, direction);
    let values = balls
        .iter()
        .map(|ball| {
            let it = ball.iter().map(|&y| u[y]);
            match direction {
                Direction::Forward => it.fold(f64::NEG_INFINITY, f64::max),
                Direction::Backward => it.fold(f64::INFINITY, f64::min),
            }
        })
        .collect();
    let domain: Vec<bool> = balls
        .iter()
        .enumerate()
        .map(|(x, ball)| omega[x] && ball.iter().all(|&y| omega[y]))
        .collect();
    if !domain.iter().any(|&b| b) {
        return Err(Error::input("the eroded domain is empty"));
    }
    Ok(Convolution { values, domain })
}

/// Worst value of `S⁻_ε u^ε − S⁺_ε u^ε` over the doubly eroded domain, where
/// `u^ε` is the forward sup-convolution of `u` on `omega`. Returns the gap
/// and the node attaining it.
pub fn sup_convolution_gap(
    space: &QuasiMetricSpace,
    u: &[f64],
    omega: &[bool],
    epsilon: f64,
) -> Result<(f64, Option<NodeId>)> {
    let conv = sup_convolution(space, u, omega, epsilon, Direction::Forward)?;
    let fwd = erode(space, &conv.domain, epsilon, Direction::Forward);
    let bwd = erode(space, &conv.domain, epsilon, Direction::Backward);
    let inner: Vec<NodeId> = space.nodes().filter(|&x| fwd[x] && bwd[x]).collect();
    if inner.is_empty() {
        return Err(Error::input("the doubly eroded domain is empty"));
    }
    let balls = BallSets::new(space, &inner, epsilon)?;
    let mut worst = (f64::NEG_INFINITY, None);
    for &x in &inner {
        let gap = balls.slope_minus(&conv.values, x) - balls.slope_plus(&conv.values, x);
        if gap > worst.0 {
            worst = (gap, Some(x));
        }
    }
    Ok(worst)
}

/// `G(u(x)) − s(x)` with `s(x)` the local slope: on the forward side
/// `max_{x→y} (u(y) − u(x)) / w`, on the backward side
/// `max_{y→x} (u(y) − u(x)) / w`, both floored at 0. A discrete
/// subsolution of `G(u) − F(∇u) = 0` has residual `≤ tol` at interior nodes.
pub fn eikonal_residual(
    space: &QuasiMetricSpace,
    u: &[f64],
    big_g: &dyn Fn(f64) -> f64,
    side: Direction,
) -> Result<Vec<f64>> {
    if u.len() != space.len() {
        return Err(Error::input("function must be defined on every node"));
    }
    Ok(space
        .nodes()
        .map(|x| {
            let edges = match side {
                Direction::Forward => space.out_edges(x),
                Direction::Backward => space.in_edges(x),
            };
            let slope = edges
                .iter()
                .map(|e| (u[e.node] - u[x]) / e.weight)
                .fold(0.0, f64::max);
            big_g(u[x]) - slope
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasi_metric::forward_distance;

    fn path(n: usize) -> QuasiMetricSpace {
        let edges = (0..n - 1).flat_map(|i| [(i, i + 1, 1.0), (i + 1, i, 1.0)]);
        QuasiMetricSpace::from_edges(n, edges).unwrap()
    }

    #[test]
    fn constant_is_fixed() {
        let s = path(6);
        let c = sup_convolution(&s, &[2.0; 6], &[true; 6], 1.0, Direction::Forward).unwrap();
        assert!(c.values.iter().all(|&v| v == 2.0));
        assert_eq!(c.domain, vec![true; 6]);
        let omega = [false, true, true, true, true, false];
        let c = sup_convolution(&s, &[2.0; 6], &omega, 1.0, Direction::Forward).unwrap();
        assert_eq!(c.domain, vec![false, false, true, true, false, false]);
    }

    #[test]
    fn spike_becomes_a_plateau() {
        let s = path(9);
        let mut u = [0.0; 9];
        u[4] = 1.0;
        let c = sup_convolution(&s, &u, &[true; 9], 2.0, Direction::Forward).unwrap();
        assert_eq!(c.values, vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        let c = sup_convolution(&s, &u, &[true; 9], 2.0, Direction::Backward).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eikonal_residuals() {
        let s = path(6);
        let d = forward_distance(&s, &[0]).unwrap().values;
        let one = |_: f64| 1.0;
        let r = eikonal_residual(&s, &d, &one, Direction::Forward).unwrap();
        assert!(r[..5].iter().all(|&v| v == 0.0));
        let r = eikonal_residual(&s, &[4.0; 6], &one, Direction::Forward).unwrap();
        assert!(r.iter().all(|&v| v == 1.0));
        let d2: Vec<f64> = d.iter().map(|v| 2.0 * v).collect();
        let r = eikonal_residual(&s, &d2, &one, Direction::Forward).unwrap();
        assert!(r[..5].iter().all(|&v| v == -1.0));
    }
}
