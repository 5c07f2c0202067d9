use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::space::{Edge, NodeId, QuasiMetricSpace};
use crate::error::{Error, Result};

/// Relative slack used when testing `d <= r` for closed balls, so that sums
/// such as `0.1 + 0.1 + 0.1` still land inside a ball of radius `0.3`.
pub(crate) const BALL_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Distances `d(source, x)`.
    Forward,
    /// Distances `d(x, source)`.
    Backward,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// Multi-source shortest-path distances, `+inf` where unreachable.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    pub sources: Vec<NodeId>,
    pub direction: Direction,
    pub values: Vec<f64>,
}

impl DistanceField {
    pub fn get(&self, x: NodeId) -> f64 {
        self.values[x]
    }

    pub fn max_finite(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    dist: f64,
    node: NodeId,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on (dist, node)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Label-setting shortest paths with a reusable buffer, so that many
/// radius-limited searches on the same graph stay cheap.
pub(crate) struct Dijkstra {
    dist: Vec<f64>,
    touched: Vec<NodeId>,
    heap: BinaryHeap<Entry>,
}

impl Dijkstra {
    pub fn new(n: usize) -> Self {
        Dijkstra {
            dist: vec![f64::INFINITY; n],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    /// Settled `(node, distance)` pairs with distance `<= radius`, in
    /// settling order (nondecreasing distance, ties by node id).
    pub fn run(&mut self, adj: &[Vec<Edge>], sources: &[NodeId], radius: f64) -> Vec<(NodeId, f64)> {
        for &x in &self.touched {
            self.dist[x] = f64::INFINITY;
        }
        self.touched.clear();
        self.heap.clear();
        for &s in sources {
            if self.dist[s] > 0.0 {
                self.dist[s] = 0.0;
                self.touched.push(s);
                self.heap.push(Entry { dist: 0.0, node: s });
            }
        }
        let mut settled = Vec::new();
        while let Some(Entry { dist, node }) = self.heap.pop() {
            if dist > self.dist[node] {
                continue;
            }
            if dist > radius {
                break;
            }
            settled.push((node, dist));
            for e in &adj[node] {
                let next = dist + e.weight;
                if next < self.dist[e.node] {
                    if self.dist[e.node].is_infinite() {
                        self.touched.push(e.node);
                    }
                    self.dist[e.node] = next;
                    self.heap.push(Entry { dist: next, node: e.node });
                }
            }
        }
        settled
    }
}

fn adjacency(space: &QuasiMetricSpace, direction: Direction) -> &[Vec<Edge>] {
    match direction {
        Direction::Forward => space.out_adjacency(),
        Direction::Backward => space.in_adjacency(),
    }
}

pub fn distance_field(
    space: &QuasiMetricSpace,
    sources: &[NodeId],
    direction: Direction,
) -> Result<DistanceField> {
    if sources.is_empty() {
        return Err(Error::input("distance field needs at least one source"));
    }
    for &s in sources {
        space.check_node(s)?;
    }
    let mut dijkstra = Dijkstra::new(space.len());
    let mut values = vec![f64::INFINITY; space.len()];
    for (x, d) in dijkstra.run(adjacency(space, direction), sources, f64::INFINITY) {
        values[x] = d;
    }
    let mut sources = sources.to_vec();
    sources.sort_unstable();
    sources.dedup();
    Ok(DistanceField {
        sources,
        direction,
        values,
    })
}

/// `x ↦ min_{s ∈ sources} d(s, x)`.
pub fn forward_distance(space: &QuasiMetricSpace, sources: &[NodeId]) -> Result<DistanceField> {
    distance_field(space, sources, Direction::Forward)
}

/// `x ↦ min_{s ∈ sources} d(x, s)`, i.e. forward distance on the transposed graph.
pub fn backward_distance(space: &QuasiMetricSpace, sources: &[NodeId]) -> Result<DistanceField> {
    distance_field(space, sources, Direction::Backward)
}

/// Open ball `{x : d(center, x) < r}` (forward) or `{x : d(x, center) < r}`
/// (backward), sorted by node id.
pub fn ball(
    space: &QuasiMetricSpace,
    center: NodeId,
    r: f64,
    direction: Direction,
) -> Result<Vec<NodeId>> {
    if !(r > 0.0) {
        return Err(Error::input(format!("ball radius must be positive, got {r}")));
    }
    space.check_node(center)?;
    let mut dijkstra = Dijkstra::new(space.len());
    let mut nodes: Vec<NodeId> = dijkstra
        .run(adjacency(space, direction), &[center], r)
        .into_iter()
        .filter(|&(_, d)| d < r)
        .map(|(x, _)| x)
        .collect();
    nodes.sort_unstable();
    Ok(nodes)
}

/// Closed ball `d <= r` (with a relative slack of `1e-12`), sorted by node id.
pub fn closed_ball(
    space: &QuasiMetricSpace,
    center: NodeId,
    r: f64,
    direction: Direction,
) -> Result<Vec<NodeId>> {
    if !(r >= 0.0) {
        return Err(Error::input(format!("ball radius must be nonnegative, got {r}")));
    }
    space.check_node(center)?;
    let mut dijkstra = Dijkstra::new(space.len());
    let mut nodes: Vec<NodeId> = dijkstra
        .run(adjacency(space, direction), &[center], r * (1.0 + BALL_SLACK))
        .into_iter()
        .map(|(x, _)| x)
        .collect();
    nodes.sort_unstable();
    Ok(nodes)
}

/// Discrete sphere: nodes whose distance from `center` lies in `[r - band, r + band]`.
pub fn sphere(
    space: &QuasiMetricSpace,
    center: NodeId,
    r: f64,
    band: f64,
    direction: Direction,
) -> Result<Vec<NodeId>> {
    if !(r > 0.0 && band >= 0.0) {
        return Err(Error::input("sphere needs r > 0 and band >= 0"));
    }
    space.check_node(center)?;
    let mut dijkstra = Dijkstra::new(space.len());
    let mut nodes: Vec<NodeId> = dijkstra
        .run(adjacency(space, direction), &[center], (r + band) * (1.0 + BALL_SLACK))
        .into_iter()
        .filter(|&(_, d)| (d - r).abs() <= band * (1.0 + BALL_SLACK) + BALL_SLACK * r)
        .map(|(x, _)| x)
        .collect();
    nodes.sort_unstable();
    Ok(nodes)
}

/// Pairwise distances `table[i][j] = d(set[i], set[j])`, measured in the whole space.
pub fn pairwise_distances(space: &QuasiMetricSpace, set: &[NodeId]) -> Result<Vec<Vec<f64>>> {
    for &x in set {
        space.check_node(x)?;
    }
    let mut dijkstra = Dijkstra::new(space.len());
    let mut full = vec![f64::INFINITY; space.len()];
    let mut table = Vec::with_capacity(set.len());
    for &x in set {
        full.iter_mut().for_each(|v| *v = f64::INFINITY);
        for (y, d) in dijkstra.run(space.out_adjacency(), &[x], f64::INFINITY) {
            full[y] = d;
        }
        table.push(set.iter().map(|&y| full[y]).collect());
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node() -> QuasiMetricSpace {
        QuasiMetricSpace::from_edges(2, [(0, 1, 3.0), (1, 0, 5.0)]).unwrap()
    }

    fn unit_path(n: usize) -> QuasiMetricSpace {
        let edges = (0..n - 1).flat_map(|i| [(i, i + 1, 1.0), (i + 1, i, 1.0)]);
        QuasiMetricSpace::from_edges(n, edges).unwrap()
    }

    #[test]
    fn asymmetric_pair_distances() {
        let s = two_node();
        assert_eq!(forward_distance(&s, &[0]).unwrap().get(1), 3.0);
        assert_eq!(forward_distance(&s, &[1]).unwrap().get(0), 5.0);
        assert_eq!(backward_distance(&s, &[1]).unwrap().get(0), 3.0);
    }

    #[test]
    fn symmetric_weights_give_equal_fields() {
        let s = unit_path(6);
        assert_eq!(
            forward_distance(&s, &[2]).unwrap().values,
            backward_distance(&s, &[2]).unwrap().values
        );
    }

    #[test]
    fn unreachable_nodes_are_infinite() {
        let s = QuasiMetricSpace::from_edges(2, [(0, 1, 1.0)]).unwrap();
        assert!(forward_distance(&s, &[1]).unwrap().get(0).is_infinite());
    }

    #[test]
    fn unknown_source_is_an_error() {
        let s = two_node();
        assert!(matches!(forward_distance(&s, &[7]), Err(Error::UnknownNode(7))));
        assert!(forward_distance(&s, &[]).is_err());
    }

    #[test]
    fn balls() {
        let s = two_node();
        assert_eq!(ball(&s, 0, 2.0, Direction::Forward).unwrap(), vec![0]);
        assert_eq!(ball(&s, 0, 4.0, Direction::Forward).unwrap(), vec![0, 1]);
        assert_eq!(ball(&s, 0, 4.0, Direction::Backward).unwrap(), vec![0]);
        let p = QuasiMetricSpace::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(ball(&p, 0, 1.5, Direction::Forward).unwrap(), vec![0, 1]);
        assert!(ball(&p, 0, 0.0, Direction::Forward).is_err());
    }

    #[test]
    fn closed_ball_absorbs_rounding() {
        let edges = (0..3).flat_map(|i| [(i, i + 1, 0.1), (i + 1, i, 0.1)]);
        let s = QuasiMetricSpace::from_edges(4, edges).unwrap();
        assert_eq!(closed_ball(&s, 0, 0.3, Direction::Forward).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn sphere_band() {
        let s = unit_path(8);
        assert_eq!(sphere(&s, 0, 4.0, 0.0, Direction::Forward).unwrap(), vec![4]);
        assert_eq!(sphere(&s, 3, 2.0, 0.5, Direction::Forward).unwrap(), vec![1, 5]);
    }
}
