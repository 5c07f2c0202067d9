use super::report::Report;
use crate::error::{Error, Result};
use crate::gcone::Absorption;
use crate::quasi_metric::{ball, distance_field, sphere, Direction, NodeId, QuasiMetricSpace};
use crate::solver::{eikonal_residual, BallSets, GridFunction};

/// Boundary-versus-interior extremes of a function on `Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct WmpReport {
    pub sup_interior: f64,
    pub sup_boundary: f64,
    /// `sup_Ω u − sup_∂Ω u`; positive values are violations.
    pub gap: f64,
    pub inf_interior: f64,
    pub inf_boundary: f64,
    pub argmax: NodeId,
    /// Largest subsolution defect found while checking the precondition.
    pub worst_defect: f64,
    pub boundary: Vec<NodeId>,
    /// `gap ≤ tol`.
    pub holds: bool,
    /// `sup` over the closure minus `inf` over the closure is at most `tol`.
    pub constant: bool,
}

impl WmpReport {
    pub fn max_on_boundary(&self, tol: f64) -> bool {
        self.sup_boundary >= self.sup_interior - tol
    }

    pub fn min_on_boundary(&self, tol: f64) -> bool {
        self.inf_boundary <= self.inf_interior + tol
    }

    pub fn to_report(&self, experiment: &str, param: &str) -> Report {
        let mut r = Report::new(experiment);
        r.row(param, "sup_interior", self.sup_interior)
            .row(param, "sup_boundary", self.sup_boundary)
            .row(param, "gap", self.gap)
            .row(param, "worst_defect", self.worst_defect)
            .verdict(param, if self.holds { "HOLDS" } else { "VIOLATED" })
            .margin(&format!("{param}/gap"), self.gap)
            .require(self.holds);
        r
    }
}

fn extremes(u: &[f64], set: &[NodeId]) -> (f64, f64, NodeId) {
    let mut hi = (f64::NEG_INFINITY, usize::MAX);
    let mut lo = f64::INFINITY;
    for &x in set {
        if u[x] > hi.0 {
            hi = (u[x], x);
        }
        lo = lo.min(u[x]);
    }
    (hi.0, lo, hi.1)
}

fn check_set(space: &QuasiMetricSpace, values: &[f64], omega: &[NodeId]) -> Result<Vec<bool>> {
    if values.len() != space.len() {
        return Err(Error::input("function must be defined on every node"));
    }
    if omega.is_empty() {
        return Err(Error::input("the set Ω is empty"));
    }
    let mut inside = vec![false; space.len()];
    for &x in omega {
        space.check_node(x)?;
        inside[x] = true;
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("function values must be finite"));
    }
    Ok(inside)
}

fn report_from(u: &[f64], omega: &[NodeId], boundary: Vec<NodeId>, worst_defect: f64, tol: f64) -> Result<WmpReport> {
    if boundary.is_empty() {
        return Err(Error::input("Ω has no boundary nodes"));
    }
    let (sup_interior, inf_interior, argmax) = extremes(u, omega);
    let (sup_boundary, inf_boundary, _) = extremes(u, &boundary);
    let gap = sup_interior - sup_boundary;
    let spread = sup_interior.max(sup_boundary) - inf_interior.min(inf_boundary);
    Ok(WmpReport {
        sup_interior,
        sup_boundary,
        gap,
        inf_interior,
        inf_boundary,
        argmax,
        worst_defect,
        boundary,
        holds: gap <= tol,
        constant: spread <= tol,
    })
}

/// Weak maximum principle for a subsolution of `Δ∞ᴺu ≥ g(u)` on `Ω`.
///
/// The scheme operator with ball radius `epsilon` (default: one hop) must be
/// at least `g(u) − tol` at every node of `Ω`, otherwise the function is
/// rejected. The boundary is the `ε`-collar: nodes outside `Ω` inside a
/// forward or backward closed `ε`-ball of a node of `Ω`.
pub fn wmp_check(
    space: &QuasiMetricSpace,
    u: &GridFunction,
    omega: &[NodeId],
    g: &Absorption,
    epsilon: Option<f64>,
    tol: f64,
) -> Result<WmpReport> {
    let inside = check_set(space, &u.values, omega)?;
    let eps = epsilon.unwrap_or_else(|| space.max_edge_weight());
    let balls = BallSets::new(space, omega, eps)?;
    let mut worst_defect = f64::NEG_INFINITY;
    let mut collar = vec![false; space.len()];
    for &x in omega {
        let defect = g.eval(u.values[x]) - balls.operator(&u.values, x);
        if defect > tol {
            return Err(Error::NotSubsolution { node: x, defect });
        }
        worst_defect = worst_defect.max(defect);
        for &y in balls.forward(x).iter().chain(balls.backward(x)) {
            if !inside[y] {
                collar[y] = true;
            }
        }
    }
    let boundary = space.nodes().filter(|&x| collar[x]).collect();
    report_from(&u.values, omega, boundary, worst_defect, tol)
}

/// Maximum principle for subsolutions of `G(u) − F(∇u) = 0` on `Ω`, `G > 0`.
///
/// The forward eikonal residual must be at most `tol` on `Ω`. The boundary is
/// the set of out-neighbors of `Ω` outside it.
pub fn eikonal_wmp_check(
    space: &QuasiMetricSpace,
    u: &[f64],
    omega: &[NodeId],
    big_g: &dyn Fn(f64) -> f64,
    tol: f64,
) -> Result<WmpReport> {
    let inside = check_set(space, u, omega)?;
    let residual = eikonal_residual(space, u, big_g, Direction::Forward)?;
    let mut worst_defect = f64::NEG_INFINITY;
    let mut out = vec![false; space.len()];
    for &x in omega {
        let gx = big_g(u[x]);
        if !(gx > 0.0) {
            return Err(Error::input(format!("G(u) must be positive, got {gx} at node {x}")));
        }
        if residual[x] > tol {
            return Err(Error::NotSubsolution {
                node: x,
                defect: residual[x],
            });
        }
        worst_defect = worst_defect.max(residual[x]);
        for e in space.out_edges(x) {
            if !inside[e.node] {
                out[e.node] = true;
            }
        }
    }
    let boundary = space.nodes().filter(|&x| out[x]).collect();
    report_from(u, omega, boundary, worst_defect, tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalLipReport {
    /// `sup_{ξ ∈ S⁺_z(r)} (u(ξ) − u(z)) / r`.
    pub sphere_slope: f64,
    /// Largest `LHS − RHS` over the ball; at most `slack` when the estimate holds.
    pub worst_margin: f64,
    pub worst_node: Option<NodeId>,
    pub checked: usize,
    pub holds: bool,
}

/// Checks, for every `w` with `0 < d(z, w) < r`,
///
/// `(u(w) − u(z)) / d(z, w) ≤ max{c₋r, (c₋/2)r + sup_{S⁺_z(r)} (u(ξ) − u(z))/r} + (c₋/2) d(z, w)`
///
/// where `c₋ = max(−c, 0)` and the sphere is the band `|d(z, ξ) − r| ≤ band`.
/// The open ball must avoid the boundary nodes of `u`.
pub fn local_lipschitz_check(
    space: &QuasiMetricSpace,
    u: &GridFunction,
    c: f64,
    z: NodeId,
    r: f64,
    band: f64,
    slack: f64,
) -> Result<LocalLipReport> {
    check_set(space, &u.values, &[z])?;
    let inner = ball(space, z, r, Direction::Forward)?;
    if let Some(&x) = inner.iter().find(|&&x| u.is_boundary(x)) {
        return Err(Error::input(format!(
            "the forward ball of radius {r} around {z} reaches boundary node {x}"
        )));
    }
    let shell = sphere(space, z, r, band, Direction::Forward)?;
    if shell.is_empty() {
        return Err(Error::input(format!("the sphere of radius {r} around {z} is empty")));
    }
    let d = distance_field(space, &[z], Direction::Forward)?;
    let uz = u.values[z];
    let sphere_slope = shell
        .iter()
        .map(|&x| (u.values[x] - uz) / r)
        .fold(f64::NEG_INFINITY, f64::max);
    let cm = (-c).max(0.0);
    let head = (cm * r).max(0.5 * cm * r + sphere_slope);
    let mut worst = (f64::NEG_INFINITY, None);
    let mut checked = 0;
    for &w in inner.iter().filter(|&&w| w != z) {
        let dw = d.get(w);
        let margin = (u.values[w] - uz) / dw - head - 0.5 * cm * dw;
        checked += 1;
        if margin > worst.0 {
            worst = (margin, Some(w));
        }
    }
    Ok(LocalLipReport {
        sphere_slope,
        worst_margin: worst.0,
        worst_node: worst.1,
        checked,
        holds: worst.0 <= slack,
    })
}
