use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::function::GridFunction;
use super::operators::BallSets;
use crate::error::{Error, Result};
use crate::gcone::Absorption;
use crate::quasi_metric::{NodeId, QuasiMetricSpace};

/// Order in which Gauss–Seidel visits interior nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrder {
    /// Increasing node id.
    Natural,
    /// Increasing, then decreasing node id, alternately.
    Alternating,
    /// A fixed pseudo-random permutation drawn from the seed.
    Shuffled(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Iteration {
    /// In-place sweeps, single-threaded.
    GaussSeidel,
    /// Full sweeps from the previous iterate, evaluated in parallel.
    Jacobi,
}

/// How `g(u(x))` enters the nodal update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsorptionMode {
    /// Solve `v = ½(max(M, v) + min(m, v)) − (ε²/2) g(v)` for the new value.
    Implicit,
    /// Evaluate `g` at the previous value and relax by the damping factor.
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    /// Ball radius; `None` means the largest edge weight (one hop).
    pub epsilon: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub sweep: SweepOrder,
    pub damping: f64,
    pub iteration: Iteration,
    pub absorption: AbsorptionMode,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            epsilon: None,
            tol: 1e-10,
            max_iter: 2_000_000,
            sweep: SweepOrder::Alternating,
            damping: 1.0,
            iteration: Iteration::GaussSeidel,
            absorption: AbsorptionMode::Implicit,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Config(format!("epsilon must be positive, got {e}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// Result of a solve: the iterate plus convergence diagnostics.
#[derive(Clone, Debug)]
pub struct SchemeState {
    pub u: GridFunction,
    pub epsilon: f64,
    pub iterations: usize,
    /// Largest nodal change in the last sweep.
    pub residual: f64,
    pub converged: bool,
    pub diverged: bool,
    /// Largest change per sweep, in order.
    pub trace: Vec<f64>,
    /// `max |½(max + min) − (ε²/2) g(u) − u|` over interior nodes at the end.
    pub equation_residual: f64,
}

impl SchemeState {
    /// Convergence trace as CSV `iter,residual`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,residual\n");
        for (i, r) in self.trace.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, r));
        }
        out
    }
}

/// Precomputed scheme data for one space, boundary mask and `ε`.
pub struct Scheme<'a> {
    pub space: &'a QuasiMetricSpace,
    pub interior: Vec<NodeId>,
    pub balls: BallSets,
}

impl<'a> Scheme<'a> {
    pub fn new(space: &'a QuasiMetricSpace, boundary: &[bool], epsilon: Option<f64>) -> Result<Self> {
        if boundary.len() != space.len() {
            return Err(Error::input("boundary mask length does not match the space"));
        }
        let interior: Vec<NodeId> = space.nodes().filter(|&x| !boundary[x]).collect();
        if interior.is_empty() {
            return Err(Error::input("the problem has no interior nodes"));
        }
        if interior.len() == space.len() {
            return Err(Error::input("the boundary mask is empty"));
        }
        let epsilon = epsilon.unwrap_or_else(|| space.max_edge_weight());
        for &x in &interior {
            let w = space.max_incident_weight(x);
            if epsilon < w * (1.0 - 1e-12) {
                return Err(Error::Config(format!(
                    "epsilon {epsilon} is below the largest edge weight {w} at interior node {x}"
                )));
            }
        }
        let balls = BallSets::new(space, &interior, epsilon)?;
        Ok(Scheme {
            space,
            interior,
            balls,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.balls.epsilon
    }

    /// Fixed-point residual of the midpoint equation at `x`.
    pub fn equation_residual_at(&self, u: &[f64], g: &Absorption, x: NodeId) -> f64 {
        let e = self.epsilon();
        let (big, small) = self.balls.extremes(u, x);
        let target = 0.5 * (big.max(u[x]) + small.min(u[x])) - 0.5 * e * e * g.eval(u[x]);
        (target - u[x]).abs()
    }

    pub fn equation_residual(&self, u: &[f64], g: &Absorption) -> f64 {
        self.interior
            .iter()
            .map(|&x| self.equation_residual_at(u, g, x))
            .fold(0.0, f64::max)
    }

    /// New value at `x` given the current iterate.
    #[inline]
    fn update(&self, u: &[f64], g: &Absorption, x: NodeId, mode: AbsorptionMode, damping: f64) -> f64 {
        let e = self.epsilon();
        let half_e2 = 0.5 * e * e;
        let (big, small) = self.balls.extremes(u, x);
        let old = u[x];
        match mode {
            AbsorptionMode::Explicit => {
                let target = 0.5 * (big.max(old) + small.min(old)) - half_e2 * g.eval(old);
                old + damping * (target - old)
            }
            AbsorptionMode::Implicit => {
                let v = implicit_update(big, small, half_e2, g, old);
                old + damping * (v - old)
            }
        }
    }
}

/// Root of `φ(v) = v − ½(max(M, v) + min(m, v)) + c·g(v)`.
///
/// For nondecreasing `g`, `φ` is increasing with slope at least 1/2, so the
/// root lies within `2|φ(v₀)|` of any start `v₀`; safeguarded Newton inside
/// that bracket.
pub fn implicit_update(big: f64, small: f64, c: f64, g: &Absorption, start: f64) -> f64 {
    let phi = |v: f64| v - 0.5 * (big.max(v) + small.min(v)) + c * g.eval(v);
    let dphi = |v: f64| {
        let mut d = 1.0;
        if v > big {
            d -= 0.5;
        }
        if v < small {
            d -= 0.5;
        }
        d + c * g.derivative(v)
    };
    if c == 0.0 || g.is_zero() {
        // closed form of the piecewise-linear case
        let mid = 0.5 * (big + small);
        return if big >= small { mid } else { start.clamp(big, small) };
    }
    let f0 = phi(start);
    if f0 == 0.0 {
        return start;
    }
    let (mut lo, mut hi) = if f0 > 0.0 {
        (start - 2.0 * f0, start)
    } else {
        (start, start - 2.0 * f0)
    };
    let monotone = match g {
        Absorption::Zero | Absorption::Constant(_) => true,
        Absorption::Power { lambda, .. } => *lambda >= 0.0,
        Absorption::Table(_) => false,
    };
    // widen if g decreases somewhere and the slope bound fails
    let mut widen = 0;
    while !monotone && (phi(lo) > 0.0 || phi(hi) < 0.0) {
        let w = hi - lo;
        lo -= w;
        hi += w;
        widen += 1;
        if widen > 200 {
            return start;
        }
    }
    // the start is usually close to the root: take a Newton step from it
    let d0 = dphi(start);
    let first = start - f0 / d0;
    let mut v = if d0.is_finite() && first > lo && first < hi {
        first
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..100 {
        let f = phi(v);
        if f == 0.0 {
            return v;
        }
        if f > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let d = dphi(v);
        let ulp = 2.0 * f64::EPSILON * v.abs().max(f64::MIN_POSITIVE);
        let step = if d.is_finite() && d > 0.0 { f / d } else { f64::NAN };
        if step.abs() <= ulp {
            return v;
        }
        let mut next = v - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if hi - lo <= 2.0 * ulp {
            return next;
        }
        v = next;
    }
    v
}

fn sweep_orders(interior: &[NodeId], sweep: &SweepOrder) -> (Vec<NodeId>, Option<Vec<NodeId>>) {
    match sweep {
        SweepOrder::Natural => (interior.to_vec(), None),
        SweepOrder::Alternating => {
            let rev: Vec<NodeId> = interior.iter().rev().copied().collect();
            (interior.to_vec(), Some(rev))
        }
        SweepOrder::Shuffled(seed) => {
            let mut order = interior.to_vec();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            (order, None)
        }
    }
}

fn divergence_window(
    space: &QuasiMetricSpace,
    boundary: &GridFunction,
    g: &Absorption,
    obstacle: Option<&[f64]>,
) -> (f64, f64) {
    let (lo, hi) = boundary.boundary_range().unwrap_or((0.0, 0.0));
    let spread = hi - lo;
    // a generous a-priori bound: path lengths are at most n times the largest weight
    let diam = space.len() as f64 * space.max_edge_weight();
    let sup_g = g.sup_abs_on(lo - 1.0 - spread, hi + 1.0 + spread);
    let w = (1.0 + spread) * (1.0 + sup_g * diam * diam);
    let floor = match obstacle {
        Some(psi) => psi.iter().copied().filter(|v| v.is_finite()).fold(lo, f64::min),
        None => lo,
    };
    (floor - w, hi + w)
}

fn run(
    space: &QuasiMetricSpace,
    boundary: &GridFunction,
    g: &Absorption,
    obstacle: Option<&[f64]>,
    config: &SchemeConfig,
) -> Result<SchemeState> {
    config.validate()?;
    if boundary.len() != space.len() {
        return Err(Error::input("boundary data must be defined on every node"));
    }
    if let Some(psi) = obstacle {
        if psi.len() != space.len() {
            return Err(Error::input("obstacle must be defined on every node"));
        }
        for x in boundary.boundary_nodes() {
            if psi[x] < boundary.values[x] {
                return Err(Error::input(format!(
                    "obstacle {} is below the boundary value {} at node {x}",
                    psi[x], boundary.values[x]
                )));
            }
        }
    }
    let scheme = Scheme::new(space, &boundary.boundary, config.epsilon)?;
    let (lo, _) = boundary
        .boundary_range()
        .ok_or_else(|| Error::input("the boundary mask is empty"))?;
    if boundary.boundary_nodes().iter().any(|&x| !boundary.values[x].is_finite()) {
        return Err(Error::input("boundary values must be finite"));
    }
    let (min_ok, max_ok) = divergence_window(space, boundary, g, obstacle);

    let mut u = boundary.values.clone();
    for &x in &scheme.interior {
        u[x] = match obstacle {
            Some(psi) => lo.min(psi[x]),
            None => lo,
        };
    }
    let clip = |x: NodeId, v: f64| match obstacle {
        Some(psi) => v.min(psi[x]),
        None => v,
    };

    let (order_a, order_b) = sweep_orders(&scheme.interior, &config.sweep);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut residual = f64::INFINITY;
    let mut next = u.clone();
    for it in 0..config.max_iter {
        let mut change = 0.0f64;
        match config.iteration {
            Iteration::GaussSeidel => {
                let order = match (&order_b, it % 2) {
                    (Some(rev), 1) => rev,
                    _ => &order_a,
                };
                for &x in order {
                    let v = clip(x, scheme.update(&u, g, x, config.absorption, config.damping));
                    change = change.max((v - u[x]).abs());
                    u[x] = v;
                }
            }
            Iteration::Jacobi => {
                let fresh: Vec<(NodeId, f64)> = scheme
                    .interior
                    .par_iter()
                    .map(|&x| (x, clip(x, scheme.update(&u, g, x, config.absorption, config.damping))))
                    .collect();
                for (x, v) in fresh {
                    change = change.max((v - u[x]).abs());
                    next[x] = v;
                }
                std::mem::swap(&mut u, &mut next);
                next.copy_from_slice(&u);
            }
        }
        residual = change;
        trace.push(change);
        if !change.is_finite() || scheme.interior.iter().any(|&x| !(u[x] >= min_ok && u[x] <= max_ok)) {
            diverged = true;
            break;
        }
        if change <= config.tol {
            converged = true;
            break;
        }
    }
    let equation_residual = scheme.equation_residual(&u, g);
    Ok(SchemeState {
        u: GridFunction {
            values: u,
            boundary: boundary.boundary.clone(),
        },
        epsilon: scheme.epsilon(),
        iterations: trace.len(),
        residual,
        converged,
        diverged,
        trace,
        equation_residual,
    })
}

/// Solves `½(max_{B̄⁺_x(ε)} u + min_{B̄⁻_x(ε)} u) − (ε²/2) g(u(x)) = u(x)` at
/// interior nodes with `u = ζ` on the boundary mask, starting from `min ζ`.
/// Non-convergence is reported in the state, not as an error.
pub fn solve_dirichlet(
    space: &QuasiMetricSpace,
    boundary: &GridFunction,
    g: &Absorption,
    config: &SchemeConfig,
) -> Result<SchemeState> {
    run(space, boundary, g, None, config)
}

/// As [`solve_dirichlet`], clipping every update at the obstacle `ψ`.
pub fn solve_obstacle(
    space: &QuasiMetricSpace,
    boundary: &GridFunction,
    g: &Absorption,
    obstacle: &[f64],
    config: &SchemeConfig,
) -> Result<SchemeState> {
    run(space, boundary, g, Some(obstacle), config)
}
