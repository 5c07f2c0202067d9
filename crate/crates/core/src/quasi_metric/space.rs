use std::collections::HashMap;

use crate::error::{Error, Result};

/// Index of a node in a [`QuasiMetricSpace`]. Nodes are numbered `0..len()`.
pub type NodeId = usize;

/// One directed edge as seen from its owning node.
///
/// In `out_edges(x)` the `node` field is the head; in `in_edges(x)` it is the tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub node: NodeId,
    pub weight: f64,
}

/// A finite directed graph with positive edge weights. The induced
/// shortest-path distance is a quasi-metric: positive and satisfying the
/// triangle inequality, but not necessarily symmetric.
#[derive(Clone, Debug)]
pub struct QuasiMetricSpace {
    out_edges: Vec<Vec<Edge>>,
    in_edges: Vec<Vec<Edge>>,
    coords: Option<Vec<Vec<f64>>>,
    labels: Option<Vec<String>>,
    // Nodes that lost a neighbor of the ambient model (lattice points outside
    // the bounds, masked points, or nodes cut away by a truncation).
    frontier: Vec<bool>,
}

impl QuasiMetricSpace {
    /// Builds a space from `(tail, head, weight)` triples on nodes `0..n`.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        if n == 0 {
            return Err(Error::input("a space needs at least one node"));
        }
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (tail, head, weight) in edges {
            if tail >= n {
                return Err(Error::UnknownNode(tail));
            }
            if head >= n {
                return Err(Error::UnknownNode(head));
            }
            if tail == head {
                return Err(Error::input(format!("self-loop at node {tail}")));
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::input(format!(
                    "edge {tail}->{head} has weight {weight}; weights must be positive and finite"
                )));
            }
            out_edges[tail].push(Edge { node: head, weight });
            in_edges[head].push(Edge { node: tail, weight });
        }
        for list in out_edges.iter_mut().chain(in_edges.iter_mut()) {
            list.sort_by(|a, b| a.node.cmp(&b.node).then(a.weight.total_cmp(&b.weight)));
        }
        let space = QuasiMetricSpace {
            out_edges,
            in_edges,
            coords: None,
            labels: None,
            frontier: vec![false; n],
        };
        if !space.is_weakly_connected() {
            return Err(Error::input(
                "graph is not connected when edge directions are ignored",
            ));
        }
        Ok(space)
    }

    /// Parses the plain-text edge list format: one `tail head weight` per line.
    /// Node names are arbitrary tokens, numbered in order of first appearance.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut ids: HashMap<String, NodeId> = HashMap::new();
        let mut labels = Vec::new();
        let mut edges = Vec::new();
        let mut intern = |name: &str, labels: &mut Vec<String>| -> NodeId {
            *ids.entry(name.to_string()).or_insert_with(|| {
                labels.push(name.to_string());
                labels.len() - 1
            })
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected `tail head weight`, got {} fields", fields.len()),
                });
            }
            let weight: f64 = fields[2].parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("weight `{}` is not a number", fields[2]),
            })?;
            let tail = intern(fields[0], &mut labels);
            let head = intern(fields[1], &mut labels);
            edges.push((tail, head, weight));
        }
        let mut space = Self::from_edges(labels.len(), edges)?;
        space.labels = Some(labels);
        Ok(space)
    }

    pub(crate) fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(coords.len(), self.len());
        self.coords = Some(coords);
        self
    }

    pub(crate) fn with_frontier(mut self, frontier: Vec<bool>) -> Self {
        debug_assert_eq!(frontier.len(), self.len());
        self.frontier = frontier;
        self
    }

    pub fn len(&self) -> usize {
        self.out_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.out_edges.is_empty()
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.len()
    }

    pub fn out_edges(&self, x: NodeId) -> &[Edge] {
        &self.out_edges[x]
    }

    pub fn in_edges(&self, x: NodeId) -> &[Edge] {
        &self.in_edges[x]
    }

    pub(crate) fn out_adjacency(&self) -> &[Vec<Edge>] {
        &self.out_edges
    }

    pub(crate) fn in_adjacency(&self) -> &[Vec<Edge>] {
        &self.in_edges
    }

    /// All edges as `(tail, head, weight)`, ordered by tail then head.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.out_edges
            .iter()
            .enumerate()
            .flat_map(|(x, list)| list.iter().map(move |e| (x, e.node, e.weight)))
    }

    pub fn coords(&self, x: NodeId) -> Option<&[f64]> {
        self.coords.as_ref().map(|c| c[x].as_slice())
    }

    pub fn has_coords(&self) -> bool {
        self.coords.is_some()
    }

    pub fn label(&self, x: NodeId) -> Option<&str> {
        self.labels.as_ref().map(|l| l[x].as_str())
    }

    /// Looks up a node by its label (edge-list spaces) or by its decimal id.
    pub fn node_by_label(&self, name: &str) -> Option<NodeId> {
        if let Some(labels) = &self.labels {
            return labels.iter().position(|l| l == name);
        }
        name.parse().ok().filter(|&x: &NodeId| x < self.len())
    }

    pub fn is_frontier(&self, x: NodeId) -> bool {
        self.frontier[x]
    }

    pub fn frontier_nodes(&self) -> Vec<NodeId> {
        self.nodes().filter(|&x| self.frontier[x]).collect()
    }

    pub fn check_node(&self, x: NodeId) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownNode(x))
        }
    }

    pub fn max_edge_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).fold(0.0, f64::max)
    }

    /// Largest weight over edges entering or leaving `x`.
    pub fn max_incident_weight(&self, x: NodeId) -> f64 {
        self.out_edges[x]
            .iter()
            .chain(self.in_edges[x].iter())
            .map(|e| e.weight)
            .fold(0.0, f64::max)
    }

    /// The same graph with every edge reversed.
    pub fn transposed(&self) -> Self {
        QuasiMetricSpace {
            out_edges: self.in_edges.clone(),
            in_edges: self.out_edges.clone(),
            coords: self.coords.clone(),
            labels: self.labels.clone(),
            frontier: self.frontier.clone(),
        }
    }

    /// Sub-space induced by the nodes with `keep[x] == true`, together with the
    /// map from new ids to old ids. Kept nodes that lose a neighbor become
    /// frontier nodes of the result.
    pub fn induced(&self, keep: &[bool]) -> Result<(Self, Vec<NodeId>)> {
        if keep.len() != self.len() {
            return Err(Error::input("keep mask length does not match the space"));
        }
        let old_of_new: Vec<NodeId> = self.nodes().filter(|&x| keep[x]).collect();
        let mut new_of_old = vec![usize::MAX; self.len()];
        for (new, &old) in old_of_new.iter().enumerate() {
            new_of_old[old] = new;
        }
        let edges: Vec<_> = self
            .edges()
            .filter(|&(a, b, _)| keep[a] && keep[b])
            .map(|(a, b, w)| (new_of_old[a], new_of_old[b], w))
            .collect();
        let frontier = old_of_new
            .iter()
            .map(|&x| {
                self.frontier[x]
                    || self.out_edges[x].iter().any(|e| !keep[e.node])
                    || self.in_edges[x].iter().any(|e| !keep[e.node])
            })
            .collect();
        let mut sub = Self::from_edges(old_of_new.len(), edges)?.with_frontier(frontier);
        if let Some(coords) = &self.coords {
            sub.coords = Some(old_of_new.iter().map(|&x| coords[x].clone()).collect());
        }
        if let Some(labels) = &self.labels {
            sub.labels = Some(old_of_new.iter().map(|&x| labels[x].clone()).collect());
        }
        Ok((sub, old_of_new))
    }

    /// True when every edge has a reverse edge of the same weight.
    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(a, b, w)| {
            self.out_edges[b]
                .iter()
                .any(|e| e.node == a && e.weight == w)
        })
    }

    fn is_weakly_connected(&self) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for e in self.out_edges[x].iter().chain(self.in_edges[x].iter()) {
                if !seen[e.node] {
                    seen[e.node] = true;
                    count += 1;
                    stack.push(e.node);
                }
            }
        }
        count == n
    }

    /// Nearest node to a point, by Euclidean distance in coordinates.
    pub fn nearest_node(&self, point: &[f64]) -> Option<NodeId> {
        let coords = self.coords.as_ref()?;
        self.nodes().min_by(|&a, &b| {
            let da: f64 = coords[a].iter().zip(point).map(|(p, q)| (p - q).powi(2)).sum();
            let db: f64 = coords[b].iter().zip(point).map(|(p, q)| (p - q).powi(2)).sum();
            da.total_cmp(&db)
        })
    }
}
