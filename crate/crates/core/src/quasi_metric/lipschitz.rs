use super::distance::Dijkstra;
use super::space::{NodeId, QuasiMetricSpace};
use crate::error::{Error, Result};

fn check_values(space: &QuasiMetricSpace, values: &[f64]) -> Result<()> {
    if values.len() != space.len() {
        return Err(Error::input(format!(
            "function has {} values but the space has {} nodes",
            values.len(),
            space.len()
        )));
    }
    Ok(())
}

/// Visits `(x, y, d(x, y))` for all ordered pairs `x ≠ y` of `set`, with
/// distances measured in the whole space. Fails on an infinite distance.
fn for_each_pair(
    space: &QuasiMetricSpace,
    set: &[NodeId],
    mut visit: impl FnMut(NodeId, NodeId, f64),
) -> Result<()> {
    for &x in set {
        space.check_node(x)?;
    }
    let mut dijkstra = Dijkstra::new(space.len());
    let mut dist = vec![f64::INFINITY; space.len()];
    for &x in set {
        dist.iter_mut().for_each(|v| *v = f64::INFINITY);
        for (y, d) in dijkstra.run(space.out_adjacency(), &[x], f64::INFINITY) {
            dist[y] = d;
        }
        for &y in set {
            if y == x {
                continue;
            }
            if !dist[y].is_finite() {
                return Err(Error::domain(format!("d({x}, {y}) is infinite")));
            }
            visit(x, y, dist[y]);
        }
    }
    Ok(())
}

/// `Lip(u, A) = max_{x ≠ y ∈ A} (u(y) − u(x)) / d(x, y)`, and 0 when `A` has
/// a single node.
pub fn lipschitz_constant(space: &QuasiMetricSpace, values: &[f64], set: &[NodeId]) -> Result<f64> {
    check_values(space, values)?;
    if set.is_empty() {
        return Err(Error::input("Lipschitz constant of an empty set"));
    }
    let mut lip = 0.0f64;
    for_each_pair(space, set, |x, y, d| {
        lip = lip.max((values[y] - values[x]) / d);
    })?;
    Ok(lip)
}

/// Global Lipschitz constant over the whole space, computed from edges only.
/// Since `d` is a path metric this equals [`lipschitz_constant`] on all nodes.
pub fn lipschitz_constant_global(space: &QuasiMetricSpace, values: &[f64]) -> Result<f64> {
    check_values(space, values)?;
    Ok(space
        .edges()
        .map(|(x, y, w)| (values[y] - values[x]) / w)
        .fold(0.0, f64::max))
}

/// Smallest `α ≥ 1` with `d(x, y) ≤ α d(y, x)` for all pairs in `region`.
pub fn reversibility_constant(space: &QuasiMetricSpace, region: &[NodeId]) -> Result<f64> {
    if region.is_empty() {
        return Err(Error::input("reversibility constant of an empty region"));
    }
    let mut index = vec![usize::MAX; space.len()];
    for (i, &x) in region.iter().enumerate() {
        space.check_node(x)?;
        index[x] = i;
    }
    let m = region.len();
    let mut table = vec![0.0; m * m];
    for_each_pair(space, region, |x, y, d| table[index[x] * m + index[y]] = d)?;
    let mut alpha = 1.0f64;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                alpha = alpha.max(table[i * m + j] / table[j * m + i]);
            }
        }
    }
    Ok(alpha)
}

/// `(δ⁺, δ⁻) = (max_{w ∈ region} d(z, w), max_{w ∈ region} d(w, z))`.
pub fn eccentricity(space: &QuasiMetricSpace, z: NodeId, region: &[NodeId]) -> Result<(f64, f64)> {
    space.check_node(z)?;
    let fwd = super::forward_distance(space, &[z])?;
    let bwd = super::backward_distance(space, &[z])?;
    let mut out = (0.0f64, 0.0f64);
    for &w in region {
        space.check_node(w)?;
        let (a, b) = (fwd.get(w), bwd.get(w));
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::domain(format!("distance between {z} and {w} is infinite")));
        }
        out = (out.0.max(a), out.1.max(b));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node() -> QuasiMetricSpace {
        QuasiMetricSpace::from_edges(2, [(0, 1, 3.0), (1, 0, 5.0)]).unwrap()
    }

    #[test]
    fn two_node_values() {
        let s = two_node();
        assert_eq!(lipschitz_constant(&s, &[0.0, 1.0], &[0, 1]).unwrap(), 1.0 / 3.0);
        assert_eq!(lipschitz_constant(&s, &[2.0, 2.0], &[0, 1]).unwrap(), 0.0);
        assert_eq!(lipschitz_constant_global(&s, &[0.0, 1.0]).unwrap(), 1.0 / 3.0);
        assert_eq!(reversibility_constant(&s, &[0, 1]).unwrap(), 5.0 / 3.0);
        assert_eq!(eccentricity(&s, 0, &[0]).unwrap(), (0.0, 0.0));
        assert_eq!(eccentricity(&s, 0, &[0, 1]).unwrap(), (3.0, 5.0));
    }

    #[test]
    fn infinite_distance_is_a_domain_error() {
        let s = QuasiMetricSpace::from_edges(2, [(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            lipschitz_constant(&s, &[0.0, 0.0], &[0, 1]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(reversibility_constant(&s, &[0, 1]), Err(Error::Domain(_))));
        assert!(matches!(eccentricity(&s, 0, &[0, 1]), Err(Error::Domain(_))));
    }

    #[test]
    fn path_eccentricity_and_symmetry() {
        let s = QuasiMetricSpace::from_edges(3, [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)])
            .unwrap();
        assert_eq!(eccentricity(&s, 0, &[0, 1, 2]).unwrap(), (2.0, 2.0));
        assert_eq!(reversibility_constant(&s, &[0, 1, 2]).unwrap(), 1.0);
    }
}
