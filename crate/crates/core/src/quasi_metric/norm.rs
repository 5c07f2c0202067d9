use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Number of directions sampled by [`RandersNorm::dual`] before refinement.
pub const DUAL_SAMPLES: usize = 4096;

/// The asymmetric norm `F(v) = sqrt(vᵀ A v) + βᵀ v`, `A` symmetric positive
/// definite and `sqrt(βᵀ A⁻¹ β) < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RandersNorm {
    a: DMatrix<f64>,
    beta: DVector<f64>,
}

impl RandersNorm {
    pub fn new(a: DMatrix<f64>, beta: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || n > 3 || a.ncols() != n {
            return Err(Error::input("A must be a square matrix of dimension 1, 2 or 3"));
        }
        if beta.len() != n {
            return Err(Error::input("beta must have the same dimension as A"));
        }
        if a.iter().chain(beta.iter()).any(|v| !v.is_finite()) {
            return Err(Error::input("norm parameters must be finite"));
        }
        let scale = a.amax().max(1.0);
        if (&a - a.transpose()).amax() > 1e-12 * scale {
            return Err(Error::input("A must be symmetric"));
        }
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::input("A must be positive definite"))?;
        let drift = beta.dot(&chol.solve(&beta)).sqrt();
        if !(drift < 1.0) {
            return Err(Error::input(format!(
                "drift sqrt(beta' A^-1 beta) = {drift} must be < 1"
            )));
        }
        Ok(RandersNorm { a, beta })
    }

    pub fn from_rows(a: &[Vec<f64>], beta: &[f64]) -> Result<Self> {
        let n = a.len();
        if a.iter().any(|row| row.len() != n) {
            return Err(Error::input("A must be square"));
        }
        let flat: Vec<f64> = a.iter().flatten().copied().collect();
        Self::new(
            DMatrix::from_row_slice(n, n, &flat),
            DVector::from_column_slice(beta),
        )
    }

    pub fn euclidean(dim: usize) -> Self {
        RandersNorm {
            a: DMatrix::identity(dim, dim),
            beta: DVector::zeros(dim),
        }
    }

    /// Euclidean part plus a constant drift `β`.
    pub fn with_drift(beta: &[f64]) -> Result<Self> {
        Self::new(
            DMatrix::identity(beta.len(), beta.len()),
            DVector::from_column_slice(beta),
        )
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    pub fn is_reversible(&self) -> bool {
        self.beta.iter().all(|&b| b == 0.0)
    }

    /// `F(v)`.
    pub fn eval(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim());
        let n = self.dim();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += v[i] * self.a[(i, j)] * v[j];
            }
        }
        let drift: f64 = (0..n).map(|i| self.beta[i] * v[i]).sum();
        quad.max(0.0).sqrt() + drift
    }

    /// `F*(ξ) = sup_{v ≠ 0} ξ(v) / F(v)`, by dense direction sampling followed
    /// by golden-section refinement. Relative accuracy is about `1e-6` or better.
    pub fn dual(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.dim());
        if xi.iter().all(|&c| c == 0.0) {
            return 0.0;
        }
        let ratio = |v: &[f64]| dot(xi, v) / self.eval(v);
        match self.dim() {
            1 => ratio(&[1.0]).max(ratio(&[-1.0])).max(0.0),
            2 => {
                let f = |t: f64| ratio(&[t.cos(), t.sin()]);
                let step = std::f64::consts::TAU / DUAL_SAMPLES as f64;
                let best = (0..DUAL_SAMPLES)
                    .max_by(|&i, &j| f(i as f64 * step).total_cmp(&f(j as f64 * step)))
                    .unwrap_or(0);
                let t0 = best as f64 * step;
                let t = golden_max(&f, t0 - step, t0 + step, 1e-12);
                f(t).max(f(t0))
            }
            _ => {
                let f = |th: f64, ph: f64| {
                    ratio(&[th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()])
                };
                // Fibonacci lattice on the sphere
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
                for k in 0..DUAL_SAMPLES {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / DUAL_SAMPLES as f64;
                    let th = z.acos();
                    let ph = (golden * k as f64) % std::f64::consts::TAU;
                    let val = f(th, ph);
                    if val > best.0 {
                        best = (val, th, ph);
                    }
                }
                let (_, mut th, mut ph) = best;
                let mut width = 4.0 * (4.0 / DUAL_SAMPLES as f64).sqrt();
                for _ in 0..40 {
                    th = golden_max(&|t| f(t, ph), th - width, th + width, 1e-13);
                    ph = golden_max(&|p| f(th, p), ph - width, ph + width, 1e-13);
                    width *= 0.7;
                }
                f(th, ph).max(best.0)
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    // iteration cap: near large abscissae the interval cannot shrink below one ulp
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_and_drift_values() {
        let e = RandersNorm::euclidean(2);
        assert_eq!(e.eval(&[3.0, 4.0]), 5.0);
        let r = RandersNorm::with_drift(&[0.5, 0.0]).unwrap();
        assert_eq!(r.eval(&[1.0, 0.0]), 1.5);
        assert_eq!(r.eval(&[-1.0, 0.0]), 0.5);
        assert!(!r.is_reversible());
    }

    #[test]
    fn rejects_inadmissible_parameters() {
        assert!(RandersNorm::with_drift(&[1.0, 0.0]).is_err());
        assert!(RandersNorm::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]], &[0.0, 0.0]).is_err());
        assert!(RandersNorm::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]], &[0.0, 0.0]).is_err());
        assert!(RandersNorm::from_rows(&vec![vec![1.0; 4]; 4], &[0.0; 4]).is_err());
    }

    #[test]
    fn dual_of_euclidean_is_euclidean() {
        let e = RandersNorm::euclidean(2);
        assert!((e.dual(&[3.0, 4.0]) - 5.0).abs() < 5e-6);
        let e3 = RandersNorm::euclidean(3);
        assert!((e3.dual(&[1.0, 2.0, 2.0]) - 3.0).abs() < 3e-6);
        let e1 = RandersNorm::with_drift(&[0.25]).unwrap();
        // F(1) = 1.25, F(-1) = 0.75
        assert!((e1.dual(&[1.0]) - 0.8).abs() < 1e-15);
        assert!((e1.dual(&[-1.0]) - 1.0 / 0.75).abs() < 1e-15);
    }

    #[test]
    fn dual_is_positively_homogeneous() {
        let r = RandersNorm::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]], &[0.2, -0.4]).unwrap();
        let xi = [0.7, -1.3];
        let a = r.dual(&xi);
        let b = r.dual(&[1.4, -2.6]);
        assert!((b - 2.0 * a).abs() <= 1e-6 * b);
    }
}
