use super::absorption::Absorption;
use super::profile::{radius_bound, solve_eta_on, EtaProfile};
use crate::error::{Error, Result};
use crate::quasi_metric::{distance_field, Direction, NodeId, QuasiMetricSpace};

/// A g-cone `C̄±_{z,b}` evaluated on every node of a space.
///
/// Forward: `η(d(z, w) + R(u(z)))` on `d(z, w) < R(u*) − R(u(z))`, `u*` elsewhere.
/// Backward: `η(R(u(z)) − d(w, z))` on `d(w, z) < R(u(z))`, `u_*` elsewhere.
#[derive(Clone, Debug)]
pub struct GCone {
    pub center: NodeId,
    pub slope: f64,
    pub orientation: Direction,
    pub profile: EtaProfile,
    pub vertex_value: f64,
    pub u_star: f64,
    pub u_upper: f64,
    pub values: Vec<f64>,
}

impl GCone {
    /// Lipschitz bound `sqrt(b² + 2∫_{u_*}^{u*} g₊)` for the extension.
    pub fn lipschitz_bound(&self) -> f64 {
        let g = self.profile.absorption();
        let top = if self.u_upper.is_finite() {
            self.u_upper
        } else {
            self.values.iter().copied().fold(self.u_star, f64::max)
        };
        (self.slope * self.slope + 2.0 * g.positive_integral(self.u_star, top)).sqrt()
    }
}

/// Profile long enough to evaluate every cone argument that can occur.
fn cone_profile(
    g: &Absorption,
    b: f64,
    u_star: f64,
    u_upper: f64,
    t_needed: f64,
) -> Result<EtaProfile> {
    let span = if u_upper.is_finite() {
        radius_bound(g, u_star, b, u_upper).min(t_needed)
    } else {
        t_needed
    };
    let span = if span.is_finite() && span > 0.0 {
        span * (1.0 + 1e-6) + 1e-9
    } else {
        1.0
    };
    solve_eta_on(g, u_star, u_upper, b, span, None)
}

#[allow(clippy::too_many_arguments)]
pub fn make_cone(
    space: &QuasiMetricSpace,
    z: NodeId,
    b: f64,
    g: &Absorption,
    vertex_value: f64,
    orientation: Direction,
    u_star: f64,
    u_upper: f64,
) -> Result<GCone> {
    space.check_node(z)?;
    if !(u_star <= vertex_value && vertex_value <= u_upper && vertex_value.is_finite()) {
        return Err(Error::input(format!(
            "cone vertex value {vertex_value} must lie in [{u_star}, {u_upper}]"
        )));
    }
    if !(b > 0.0) {
        let threshold = g.slope_threshold(u_star, u_upper.min(vertex_value.max(u_star)));
        return Err(Error::SlopeInadmissible { slope: b, threshold });
    }
    let dist = match orientation {
        Direction::Forward => distance_field(space, &[z], Direction::Forward)?,
        Direction::Backward => distance_field(space, &[z], Direction::Backward)?,
    };
    let reach = dist.max_finite();
    let r_vertex_bound = radius_bound(g, u_star, b, vertex_value);
    let t_needed = match orientation {
        Direction::Forward => r_vertex_bound + reach,
        Direction::Backward => r_vertex_bound,
    };
    let profile = cone_profile(g, b, u_star, u_upper, t_needed)?;
    let r_vertex = profile.radius(vertex_value)?;
    if !r_vertex.is_finite() {
        return Err(Error::domain("cone profile does not reach the vertex value"));
    }
    let r_top = if u_upper.is_finite() {
        profile.radius(u_upper)?
    } else {
        f64::INFINITY
    };

    let mut values = Vec::with_capacity(space.len());
    for w in space.nodes() {
        let d = dist.get(w);
        let v = match orientation {
            Direction::Forward => {
                if !d.is_finite() {
                    if u_upper.is_finite() {
                        u_upper
                    } else {
                        return Err(Error::domain(format!("d({z}, {w}) is infinite")));
                    }
                } else if d >= r_top - r_vertex {
                    u_upper
                } else {
                    profile.eta(d + r_vertex).clamp(u_star, u_upper)
                }
            }
            Direction::Backward => {
                let arg = r_vertex - d;
                if arg > 0.0 {
                    profile.eta(arg).clamp(u_star, u_upper)
                } else {
                    u_star
                }
            }
        };
        values.push(v);
    }
    values[z] = vertex_value;
    Ok(GCone {
        center: z,
        slope: b,
        orientation,
        profile,
        vertex_value,
        u_star,
        u_upper,
        values,
    })
}

/// Outcome of testing the cone comparison implication on a set `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    /// Worst boundary excess `max_{∂K} (u − C̄⁺)` (forward) or `max_{∂K} (C̄⁻ − u)`.
    pub boundary_excess: f64,
    /// Whether the cone dominates on `∂K` up to `tol`.
    pub hypothesis_holds: bool,
    /// Worst excess over `K ∪ ∂K`, clamped at 0.
    pub worst_violation: f64,
    pub worst_node: Option<NodeId>,
    /// `!hypothesis_holds || worst_violation <= tol`.
    pub implication_holds: bool,
    pub boundary: Vec<NodeId>,
}

/// Outer boundary of `set`: nodes outside it joined to it by an edge in
/// either direction, sorted by id.
pub fn outer_boundary(space: &QuasiMetricSpace, set: &[NodeId]) -> Vec<NodeId> {
    let mut inside = vec![false; space.len()];
    for &x in set {
        inside[x] = true;
    }
    let mut seen = vec![false; space.len()];
    for &x in set {
        for e in space.out_edges(x).iter().chain(space.in_edges(x)) {
            if !inside[e.node] {
                seen[e.node] = true;
            }
        }
    }
    space.nodes().filter(|&x| seen[x]).collect()
}

/// Checks `u ≤ C̄⁺ on ∂K ⟹ u ≤ C̄⁺ on K̄` (or the reversed inequalities for a
/// backward cone). `∂K` is the outer one-edge boundary of `K`.
pub fn check_cone_comparison(
    space: &QuasiMetricSpace,
    u: &[f64],
    cone: &GCone,
    k: &[NodeId],
    tol: f64,
) -> Result<ComparisonReport> {
    if u.len() != space.len() || cone.values.len() != space.len() {
        return Err(Error::input("function and cone must be defined on every node"));
    }
    for &x in k {
        space.check_node(x)?;
    }
    if k.contains(&cone.center) {
        return Err(Error::input("the cone center must not lie in K"));
    }
    let excess = |x: NodeId| match cone.orientation {
        Direction::Forward => u[x] - cone.values[x],
        Direction::Backward => cone.values[x] - u[x],
    };
    let boundary = outer_boundary(space, k);
    let boundary_excess = boundary
        .iter()
        .map(|&x| excess(x))
        .fold(f64::NEG_INFINITY, f64::max);
    let hypothesis_holds = boundary_excess <= tol;
    let mut worst_violation = 0.0;
    let mut worst_node = None;
    let mut closure: Vec<NodeId> = k.iter().chain(&boundary).copied().collect();
    closure.sort_unstable();
    for x in closure {
        let e = excess(x);
        if e > worst_violation {
            worst_violation = e;
            worst_node = Some(x);
        }
    }
    Ok(ComparisonReport {
        boundary_excess,
        hypothesis_holds,
        worst_violation,
        worst_node,
        implication_holds: !hypothesis_holds || worst_violation <= tol,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasi_metric::{grid_space, lipschitz_constant_global, GridSpec, RandersNorm, Stencil};

    fn drift_grid() -> QuasiMetricSpace {
        let mut spec = GridSpec::integer_box(2, 0, 6, Stencil::Axis);
        spec.norm = RandersNorm::with_drift(&[0.4, -0.2]).unwrap();
        grid_space(&spec).unwrap()
    }

    #[test]
    fn zero_g_cones_are_linear() {
        let s = drift_grid();
        let z = 24;
        let fwd = distance_field(&s, &[z], Direction::Forward).unwrap();
        let bwd = distance_field(&s, &[z], Direction::Backward).unwrap();
        let c = make_cone(&s, z, 0.7, &Absorption::Zero, 1.0, Direction::Forward, -100.0, 100.0).unwrap();
        for w in s.nodes() {
            assert!((c.values[w] - (1.0 + 0.7 * fwd.get(w))).abs() < 1e-12);
        }
        let c = make_cone(&s, z, 0.7, &Absorption::Zero, 1.0, Direction::Backward, -100.0, 100.0).unwrap();
        for w in s.nodes() {
            assert!((c.values[w] - (1.0 - 0.7 * bwd.get(w))).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_g_cone_is_the_quadratic_cone() {
        let s = drift_grid();
        let (z, b, c, uz, lo) = (10, 0.5, 0.8, 0.3, 0.0);
        let cone = make_cone(&s, z, b, &Absorption::Constant(c), uz, Direction::Forward, lo, 1e9).unwrap();
        let rz = (-b + (b * b + 2.0 * c * (uz - lo)).sqrt()) / c;
        let d = distance_field(&s, &[z], Direction::Forward).unwrap();
        for w in s.nodes() {
            let dw = d.get(w);
            let oracle = uz + (b + c * rz) * dw + 0.5 * c * dw * dw;
            assert!((cone.values[w] - oracle).abs() < 1e-9, "{w}");
        }
    }

    #[test]
    fn clamped_cones_obey_the_lipschitz_bound() {
        let s = drift_grid();
        let g = Absorption::Constant(0.5);
        for orientation in [Direction::Forward, Direction::Backward] {
            let cone = make_cone(&s, 17, 0.6, &g, 1.0, orientation, 0.0, 2.5).unwrap();
            let lip = lipschitz_constant_global(&s, &cone.values).unwrap();
            assert!(lip <= cone.lipschitz_bound() + 1e-9, "{lip} {}", cone.lipschitz_bound());
            assert!(cone.values.iter().all(|&v| (0.0..=2.5).contains(&v)));
            assert_eq!(cone.values[17], 1.0);
        }
    }

    #[test]
    fn zero_slope_is_rejected() {
        let s = drift_grid();
        assert!(matches!(
            make_cone(&s, 0, 0.0, &Absorption::Zero, 0.0, Direction::Forward, 0.0, 1.0),
            Err(Error::SlopeInadmissible { .. })
        ));
    }

    #[test]
    fn comparison_reports_a_bump() {
        let s = drift_grid();
        let z = 0;
        let cone = make_cone(&s, z, 1.0, &Absorption::Zero, 0.0, Direction::Forward, -1e9, 1e9).unwrap();
        let k: Vec<NodeId> = s.nodes().filter(|&x| x != z && s.coords(x).unwrap()[0] >= 2.0).collect();
        let mut u = cone.values.clone();
        let report = check_cone_comparison(&s, &u, &cone, &k, 1e-12).unwrap();
        assert_eq!(report.worst_violation, 0.0);
        assert!(report.implication_holds);
        let bump_at = 30;
        assert!(k.contains(&bump_at));
        u[bump_at] += 0.25;
        let report = check_cone_comparison(&s, &u, &cone, &k, 1e-12).unwrap();
        assert!(report.hypothesis_holds);
        assert!((report.worst_violation - 0.25).abs() < 1e-12);
        assert_eq!(report.worst_node, Some(bump_at));
        assert!(!report.implication_holds);
    }
}
