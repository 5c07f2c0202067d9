use serde::{Deserialize, Serialize};

use super::norm::RandersNorm;
use super::space::QuasiMetricSpace;
use crate::error::{Error, Result};

/// Neighbor offsets of a lattice, in units of the spacing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// `±e_i` only (4-neighbor in the plane).
    Axis,
    /// Every offset in `{-1, 0, 1}^n \ {0}` (8-neighbor in the plane).
    Moore,
    /// Explicit offsets; must be closed under negation.
    Offsets(Vec<Vec<i64>>),
}

impl Stencil {
    pub fn offsets(&self, dim: usize) -> Result<Vec<Vec<i64>>> {
        let offsets = match self {
            Stencil::Axis => (0..dim)
                .flat_map(|i| {
                    [1, -1].map(|s| {
                        let mut o = vec![0; dim];
                        o[i] = s;
                        o
                    })
                })
                .collect(),
            Stencil::Moore => {
                let mut all = vec![vec![]];
                for _ in 0..dim {
                    all = all
                        .into_iter()
                        .flat_map(|o: Vec<i64>| {
                            [-1, 0, 1].map(|s| {
                                let mut o = o.clone();
                                o.push(s);
                                o
                            })
                        })
                        .collect();
                }
                all.retain(|o| o.iter().any(|&c| c != 0));
                all
            }
            Stencil::Offsets(list) => {
                if list.is_empty() {
                    return Err(Error::input("stencil has no offsets"));
                }
                for o in list {
                    if o.len() != dim {
                        return Err(Error::input(format!(
                            "stencil offset {o:?} does not have dimension {dim}"
                        )));
                    }
                    if o.iter().all(|&c| c == 0) {
                        return Err(Error::input("stencil contains the zero offset"));
                    }
                    let neg: Vec<i64> = o.iter().map(|c| -c).collect();
                    if !list.contains(&neg) {
                        return Err(Error::input(format!(
                            "stencil is not symmetric: {o:?} present without its negation"
                        )));
                    }
                }
                list.clone()
            }
        };
        Ok(offsets)
    }
}

/// Lattice points removed from the grid. Removing points is how incomplete
/// spaces are modelled.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mask {
    #[default]
    None,
    /// Keep only points within Euclidean distance `radius` of `center`.
    OutsideDisk { center: Vec<f64>, radius: f64 },
    /// Remove points lying on the segment `from`–`to`.
    Slit { from: Vec<f64>, to: Vec<f64> },
    /// Remove the listed points.
    Points(Vec<Vec<f64>>),
}

impl Mask {
    /// Whether the point at `p` is removed; `tol` absorbs rounding in lattice coordinates.
    pub fn removes(&self, p: &[f64], tol: f64) -> bool {
        match self {
            Mask::None => false,
            Mask::OutsideDisk { center, radius } => euclid(p, center) > radius + tol,
            Mask::Slit { from, to } => segment_distance(p, from, to) <= tol,
            Mask::Points(points) => points.iter().any(|q| euclid(p, q) <= tol),
        }
    }
}

fn euclid(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let ap: Vec<f64> = p.iter().zip(a).map(|(x, y)| x - y).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 > 0.0 {
        (ab.iter().zip(&ap).map(|(u, v)| u * v).sum::<f64>() / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let closest: Vec<f64> = a.iter().zip(&ab).map(|(x, d)| x + t * d).collect();
    euclid(p, &closest)
}

/// A box-shaped lattice `lower + h·ℤⁿ ∩ [lower, upper]` with an asymmetric norm.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub norm: RandersNorm,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub h: f64,
    pub stencil: Stencil,
    pub mask: Mask,
}

impl GridSpec {
    /// Unit-spaced Euclidean grid on the integer box `[lo, hi]ⁿ`.
    pub fn integer_box(dim: usize, lo: i64, hi: i64, stencil: Stencil) -> Self {
        GridSpec {
            norm: RandersNorm::euclidean(dim),
            lower: vec![lo as f64; dim],
            upper: vec![hi as f64; dim],
            h: 1.0,
            stencil,
            mask: Mask::None,
        }
    }

    pub fn with_mask(mut self, mask: Mask) -> Self {
        self.mask = mask;
        self
    }

    /// Lattice extent along each axis.
    pub fn shape(&self) -> Vec<usize> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| ((hi - lo) / self.h + 1e-9).floor() as usize + 1)
            .collect()
    }
}

/// Builds the lattice space: one node per unmasked lattice point, an edge
/// `x → x + h·o` for every stencil offset `o` with weight `F(h·o)`. Nodes
/// missing a stencil neighbor (outside the box or masked) are frontier nodes.
pub fn grid_space(spec: &GridSpec) -> Result<QuasiMetricSpace> {
    let dim = spec.norm.dim();
    if spec.lower.len() != dim || spec.upper.len() != dim {
        return Err(Error::input("grid bounds must match the norm dimension"));
    }
    if !(spec.h > 0.0 && spec.h.is_finite()) {
        return Err(Error::input(format!("grid spacing h must be positive, got {}", spec.h)));
    }
    if spec
        .lower
        .iter()
        .zip(&spec.upper)
        .any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi))
    {
        return Err(Error::input("grid bounds must satisfy lower <= upper"));
    }
    let offsets = spec.stencil.offsets(dim)?;
    let shape = spec.shape();
    let total: usize = shape.iter().product();
    if total > 50_000_000 {
        return Err(Error::input("grid is too large"));
    }
    let tol = 1e-9 * spec.h;

    let index_of = |idx: &[i64]| -> Option<usize> {
        let mut flat = 0usize;
        for k in (0..dim).rev() {
            if idx[k] < 0 || idx[k] >= shape[k] as i64 {
                return None;
            }
            flat = flat * shape[k] + idx[k] as usize;
        }
        Some(flat)
    };
    let unflatten = |mut flat: usize| -> Vec<i64> {
        let mut idx = vec![0; dim];
        for k in 0..dim {
            idx[k] = (flat % shape[k]) as i64;
            flat /= shape[k];
        }
        idx
    };
    let point = |idx: &[i64]| -> Vec<f64> {
        idx.iter()
            .zip(&spec.lower)
            .map(|(&i, lo)| lo + i as f64 * spec.h)
            .collect()
    };

    let mut node_of = vec![usize::MAX; total];
    let mut coords = Vec::new();
    for flat in 0..total {
        let p = point(&unflatten(flat));
        if !spec.mask.removes(&p, tol) {
            node_of[flat] = coords.len();
            coords.push(p);
        }
    }
    if coords.is_empty() {
        return Err(Error::input("grid has no nodes after masking"));
    }

    let weights: Vec<f64> = offsets
        .iter()
        .map(|o| {
            let v: Vec<f64> = o.iter().map(|&c| c as f64 * spec.h).collect();
            spec.norm.eval(&v)
        })
        .collect();
    let mut edges = Vec::new();
    let mut frontier = vec![false; coords.len()];
    for flat in 0..total {
        let x = node_of[flat];
        if x == usize::MAX {
            continue;
        }
        let idx = unflatten(flat);
        for (o, &w) in offsets.iter().zip(&weights) {
            let nb: Vec<i64> = idx.iter().zip(o).map(|(a, b)| a + b).collect();
            match index_of(&nb).map(|f| node_of[f]) {
                Some(y) if y != usize::MAX => edges.push((x, y, w)),
                _ => frontier[x] = true,
            }
        }
    }
    Ok(QuasiMetricSpace::from_edges(coords.len(), edges)?
        .with_coords(coords)
        .with_frontier(frontier))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasi_metric::forward_distance;

    #[test]
    fn euclidean_axis_weights_equal_h() {
        let mut spec = GridSpec::integer_box(2, 0, 3, Stencil::Axis);
        spec.h = 0.5;
        spec.upper = vec![1.5, 1.5];
        let s = grid_space(&spec).unwrap();
        assert_eq!(s.len(), 16);
        assert!(s.edges().all(|(_, _, w)| w == 0.5));
        assert_eq!(s.frontier_nodes().len(), 12);
    }

    #[test]
    fn randers_drift_makes_x_edges_asymmetric() {
        let mut spec = GridSpec::integer_box(2, 0, 2, Stencil::Axis);
        spec.norm = RandersNorm::with_drift(&[0.5, 0.0]).unwrap();
        let s = grid_space(&spec).unwrap();
        // node 0 = (0,0), node 1 = (1,0)
        assert_eq!(s.coords(1).unwrap(), &[1.0, 0.0]);
        assert_eq!(s.out_edges(0)[0].node, 1);
        assert_eq!(s.out_edges(0)[0].weight, 1.5);
        assert_eq!(s.out_edges(1)[0].node, 0);
        assert_eq!(s.out_edges(1)[0].weight, 0.5);
    }

    #[test]
    fn masks_remove_points() {
        let spec = GridSpec::integer_box(2, -4, 4, Stencil::Axis).with_mask(Mask::OutsideDisk {
            center: vec![0.0, 0.0],
            radius: 2.0,
        });
        let s = grid_space(&spec).unwrap();
        assert_eq!(s.len(), 13);
        let slit = GridSpec::integer_box(2, -3, 3, Stencil::Axis).with_mask(Mask::Slit {
            from: vec![1.0, 0.0],
            to: vec![3.0, 0.0],
        });
        let s = grid_space(&slit).unwrap();
        assert_eq!(s.len(), 46);
        let next_to_slit = s.nearest_node(&[1.0, 1.0]).unwrap();
        assert!(s.is_frontier(next_to_slit));
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = GridSpec::integer_box(2, 0, 2, Stencil::Axis);
        spec.h = -1.0;
        assert!(grid_space(&spec).is_err());
        let spec = GridSpec::integer_box(2, 0, 2, Stencil::Offsets(vec![vec![1, 0]]));
        assert!(grid_space(&spec).is_err());
        let spec = GridSpec::integer_box(2, 0, 2, Stencil::Axis).with_mask(Mask::OutsideDisk {
            center: vec![10.0, 10.0],
            radius: 1.0,
        });
        assert!(grid_space(&spec).is_err());
    }

    #[test]
    fn moore_distance_matches_chebyshev_path_oracle() {
        let spec = GridSpec::integer_box(2, 0, 6, Stencil::Moore);
        let s = grid_space(&spec).unwrap();
        let o = s.nearest_node(&[0.0, 0.0]).unwrap();
        let t = s.nearest_node(&[5.0, 2.0]).unwrap();
        let d = forward_distance(&s, &[o]).unwrap().get(t);
        // oracle: the cheapest monotone lattice path uses min(dx,dy) diagonal steps
        let (dx, dy) = (5.0f64, 2.0f64);
        let oracle = dx.min(dy) * 2f64.sqrt() + (dx - dy).abs();
        assert!((d - oracle).abs() < 1e-12);
    }
}
