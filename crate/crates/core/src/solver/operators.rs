use crate::error::{Error, Result};
use crate::quasi_metric::{closed_ball, Dijkstra, Direction, NodeId, QuasiMetricSpace, BALL_SLACK};

/// Closed forward and backward `ε`-balls of a set of nodes, each stored
/// without its center and sorted by node id.
#[derive(Clone, Debug)]
pub struct BallSets {
    pub epsilon: f64,
    fwd_start: Vec<usize>,
    fwd: Vec<NodeId>,
    bwd_start: Vec<usize>,
    bwd: Vec<NodeId>,
    index: Vec<usize>,
}

impl BallSets {
    /// Balls around every node in `centers`.
    pub fn new(space: &QuasiMetricSpace, centers: &[NodeId], epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        let mut dijkstra = Dijkstra::new(space.len());
        let mut index = vec![usize::MAX; space.len()];
        let (mut fwd_start, mut fwd) = (vec![0], Vec::new());
        let (mut bwd_start, mut bwd) = (vec![0], Vec::new());
        let radius = epsilon * (1.0 + BALL_SLACK);
        for (i, &x) in centers.iter().enumerate() {
            space.check_node(x)?;
            index[x] = i;
            for (adj, list, start) in [
                (space.out_adjacency(), &mut fwd, &mut fwd_start),
                (space.in_adjacency(), &mut bwd, &mut bwd_start),
            ] {
                let mut ball: Vec<NodeId> = dijkstra
                    .run(adj, &[x], radius)
                    .into_iter()
                    .map(|(y, _)| y)
                    .filter(|&y| y != x)
                    .collect();
                if ball.is_empty() {
                    return Err(Error::Config(format!(
                        "the epsilon-ball of node {x} contains no other node"
                    )));
                }
                ball.sort_unstable();
                list.extend(ball);
                start.push(list.len());
            }
        }
        Ok(BallSets {
            epsilon,
            fwd_start,
            fwd,
            bwd_start,
            bwd,
            index,
        })
    }

    fn slot(&self, x: NodeId) -> usize {
        let i = self.index[x];
        assert!(i != usize::MAX, "node {x} has no precomputed ball");
        i
    }

    pub fn forward(&self, x: NodeId) -> &[NodeId] {
        let i = self.slot(x);
        &self.fwd[self.fwd_start[i]..self.fwd_start[i + 1]]
    }

    pub fn backward(&self, x: NodeId) -> &[NodeId] {
        let i = self.slot(x);
        &self.bwd[self.bwd_start[i]..self.bwd_start[i + 1]]
    }

    /// `(max over the forward ball, min over the backward ball)`, centers excluded.
    #[inline]
    pub fn extremes(&self, u: &[f64], x: NodeId) -> (f64, f64) {
        let big = self.forward(x).iter().map(|&y| u[y]).fold(f64::NEG_INFINITY, f64::max);
        let small = self.backward(x).iter().map(|&y| u[y]).fold(f64::INFINITY, f64::min);
        (big, small)
    }

    /// Node attaining the forward-ball max (center included), smallest id on ties.
    pub fn argmax(&self, u: &[f64], x: NodeId) -> NodeId {
        let mut best = x;
        for &y in self.forward(x) {
            if u[y] > u[best] || (u[y] == u[best] && y < best) {
                best = y;
            }
        }
        best
    }

    /// Node attaining the backward-ball min (center included), smallest id on ties.
    pub fn argmin(&self, u: &[f64], x: NodeId) -> NodeId {
        let mut best = x;
        for &y in self.backward(x) {
            if u[y] < u[best] || (u[y] == u[best] && y < best) {
                best = y;
            }
        }
        best
    }

    /// `S⁺_ε u(x)`.
    pub fn slope_plus(&self, u: &[f64], x: NodeId) -> f64 {
        let (big, _) = self.extremes(u, x);
        (big.max(u[x]) - u[x]) / self.epsilon
    }

    /// `S⁻_ε u(x)`.
    pub fn slope_minus(&self, u: &[f64], x: NodeId) -> f64 {
        let (_, small) = self.extremes(u, x);
        (u[x] - small.min(u[x])) / self.epsilon
    }

    /// `(S⁺_ε u(x) − S⁻_ε u(x)) / ε`.
    pub fn operator(&self, u: &[f64], x: NodeId) -> f64 {
        (self.slope_plus(u, x) - self.slope_minus(u, x)) / self.epsilon
    }
}

fn ball_extreme(
    space: &QuasiMetricSpace,
    u: &[f64],
    x: NodeId,
    epsilon: f64,
    direction: Direction,
) -> Result<(f64, usize)> {
    if u.len() != space.len() {
        return Err(Error::input("function must be defined on every node"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let ball = closed_ball(space, x, epsilon, direction)?;
    if ball.len() < 2 {
        return Err(Error::Config(format!(
            "the epsilon-ball of node {x} contains no other node"
        )));
    }
    let pick = match direction {
        Direction::Forward => ball.iter().map(|&y| u[y]).fold(f64::NEG_INFINITY, f64::max),
        Direction::Backward => ball.iter().map(|&y| u[y]).fold(f64::INFINITY, f64::min),
    };
    Ok((pick, ball.len()))
}

/// `S⁺_ε u(x) = max_{y ∈ B̄⁺_x(ε)} (u(y) − u(x)) / ε`.
pub fn slope_plus(space: &QuasiMetricSpace, u: &[f64], x: NodeId, epsilon: f64) -> Result<f64> {
    let (big, _) = ball_extreme(space, u, x, epsilon, Direction::Forward)?;
    Ok((big - u[x]) / epsilon)
}

/// `S⁻_ε u(x) = max_{y ∈ B̄⁻_x(ε)} (u(x) − u(y)) / ε`.
pub fn slope_minus(space: &QuasiMetricSpace, u: &[f64], x: NodeId, epsilon: f64) -> Result<f64> {
    let (small, _) = ball_extreme(space, u, x, epsilon, Direction::Backward)?;
    Ok((u[x] - small) / epsilon)
}

/// `(S⁺_ε u(x) − S⁻_ε u(x)) / ε`, nonnegative at subsolutions.
pub fn discrete_operator(space: &QuasiMetricSpace, u: &[f64], x: NodeId, epsilon: f64) -> Result<f64> {
    Ok((slope_plus(space, u, x, epsilon)? - slope_minus(space, u, x, epsilon)?) / epsilon)
}
