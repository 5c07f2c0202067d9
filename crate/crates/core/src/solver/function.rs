use crate::error::{Error, Result};
use crate::quasi_metric::{node_csv, NodeId, QuasiMetricSpace};

/// Real values on the nodes of a space, with a set of boundary nodes whose
/// values are prescribed.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
    pub boundary: Vec<bool>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>, boundary: Vec<bool>) -> Result<Self> {
        if values.len() != boundary.len() {
            return Err(Error::input("values and boundary mask differ in length"));
        }
        Ok(GridFunction { values, boundary })
    }

    /// A function without boundary nodes.
    pub fn free(values: Vec<f64>) -> Self {
        let n = values.len();
        GridFunction {
            values,
            boundary: vec![false; n],
        }
    }

    /// Boundary data on `n` nodes; interior values start at 0.
    pub fn from_boundary(n: usize, data: &[(NodeId, f64)]) -> Result<Self> {
        let mut f = GridFunction {
            values: vec![0.0; n],
            boundary: vec![false; n],
        };
        for &(x, v) in data {
            if x >= n {
                return Err(Error::UnknownNode(x));
            }
            if !v.is_finite() {
                return Err(Error::input(format!("boundary value at node {x} is not finite")));
            }
            f.values[x] = v;
            f.boundary[x] = true;
        }
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_boundary(&self, x: NodeId) -> bool {
        self.boundary[x]
    }

    pub fn boundary_nodes(&self) -> Vec<NodeId> {
        (0..self.len()).filter(|&x| self.boundary[x]).collect()
    }

    pub fn interior_nodes(&self) -> Vec<NodeId> {
        (0..self.len()).filter(|&x| !self.boundary[x]).collect()
    }

    /// `(min, max)` of the prescribed boundary values.
    pub fn boundary_range(&self) -> Option<(f64, f64)> {
        self.boundary_nodes().iter().fold(None, |acc, &x| {
            let v = self.values[x];
            Some(acc.map_or((v, v), |(a, b): (f64, f64)| (a.min(v), b.max(v))))
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV `node,x,y,u`.
    pub fn to_csv(&self, space: &QuasiMetricSpace) -> String {
        node_csv(space, &self.values, "u")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_data() {
        let f = GridFunction::from_boundary(4, &[(0, 1.0), (3, -2.0)]).unwrap();
        assert_eq!(f.boundary_nodes(), vec![0, 3]);
        assert_eq!(f.interior_nodes(), vec![1, 2]);
        assert_eq!(f.boundary_range(), Some((-2.0, 1.0)));
        assert!(GridFunction::from_boundary(2, &[(5, 0.0)]).is_err());
        assert!(GridFunction::new(vec![0.0], vec![]).is_err());
    }
}
