use super::report::Report;
use crate::error::{Error, Result};
use crate::quasi_metric::{forward_distance, NodeId, QuasiMetricSpace};

/// The three inequalities at a candidate point `x̄`, checked over all nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    /// `u(x̄) ≥ u(x₀)`.
    pub value: bool,
    /// `d(x₀, x̄) ≤ δ`.
    pub distance: bool,
    /// `u(y) ≤ u(x̄) + (ε/δ) d(x̄, y)` for every `y`.
    pub cone: bool,
    pub d_x0_xbar: f64,
    /// `max_y (u(y) − u(x̄) − (ε/δ) d(x̄, y))`, at most 0 when `cone` holds.
    pub worst_cone_excess: f64,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.value && self.distance && self.cone
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EkelandPoint {
    pub point: NodeId,
    /// `x₀ = chain[0]`, then every move.
    pub chain: Vec<NodeId>,
    pub certificate: Certificate,
}

impl EkelandPoint {
    pub fn to_report(&self, param: &str) -> Report {
        let c = &self.certificate;
        let mut r = Report::new("ekeland");
        r.row(param, "point", self.point as f64)
            .row(param, "moves", (self.chain.len() - 1) as f64)
            .row(param, "d_x0_xbar", c.d_x0_xbar)
            .row(param, "worst_cone_excess", c.worst_cone_excess)
            .verdict(param, if c.holds() { "CERTIFIED" } else { "FAILED" })
            .margin(&format!("{param}/cone_excess"), c.worst_cone_excess)
            .require(c.holds());
        r
    }
}

fn check_inputs(space: &QuasiMetricSpace, u: &[f64], x0: NodeId, eps: f64, delta: f64) -> Result<()> {
    if u.len() != space.len() {
        return Err(Error::input("function must be defined on every node"));
    }
    space.check_node(x0)?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("function values must be finite"));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::input(format!("eps must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::input(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// Checks the three inequalities for `x̄` against every node.
pub fn verify_ekeland(
    space: &QuasiMetricSpace,
    u: &[f64],
    x0: NodeId,
    eps: f64,
    delta: f64,
    xbar: NodeId,
) -> Result<Certificate> {
    check_inputs(space, u, x0, eps, delta)?;
    space.check_node(xbar)?;
    let d0 = forward_distance(space, &[x0])?.get(xbar);
    let from_bar = forward_distance(space, &[xbar])?;
    let k = eps / delta;
    let mut cone = true;
    let mut worst = f64::NEG_INFINITY;
    for y in space.nodes() {
        let bound = u[xbar] + k * from_bar.get(y);
        if u[y] > bound {
            cone = false;
        }
        worst = worst.max(u[y] - bound);
    }
    Ok(Certificate {
        value: u[xbar] >= u[x0],
        distance: d0 <= delta,
        cone,
        d_x0_xbar: d0,
        worst_cone_excess: worst,
    })
}

/// Finds `x̄` with `u(x̄) ≥ u(x₀)`, `d(x₀, x̄) ≤ δ` and
/// `u(y) ≤ u(x̄) + (ε/δ) d(x̄, y)` for all `y`.
///
/// From the current point, moves to the violator of the last inequality with
/// the largest `u` (smallest id on ties) until there is none. Each move
/// raises `u` by more than `(ε/δ)` times its length, and the total rise is
/// below `ε`, so the path stays within `δ`.
pub fn ekeland_point(space: &QuasiMetricSpace, u: &[f64], x0: NodeId, eps: f64, delta: f64) -> Result<EkelandPoint> {
    check_inputs(space, u, x0, eps, delta)?;
    let sup = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(u[x0] > sup - eps) {
        return Err(Error::input(format!(
            "u(x0) = {} must exceed sup u - eps = {}",
            u[x0],
            sup - eps
        )));
    }
    let k = eps / delta;
    let mut x = x0;
    let mut chain = vec![x0];
    loop {
        let d = forward_distance(space, &[x])?;
        let mut next: Option<NodeId> = None;
        for y in space.nodes() {
            if u[y] > u[x] + k * d.get(y) && next.map_or(true, |b| u[y] > u[b]) {
                next = Some(y);
            }
        }
        match next {
            Some(y) => {
                x = y;
                chain.push(y);
            }
            None => break,
        }
    }
    let certificate = verify_ekeland(space, u, x0, eps, delta, x)?;
    Ok(EkelandPoint {
        point: x,
        chain,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizer_is_its_own_point() {
        let s = QuasiMetricSpace::from_edges(3, [(0, 1, 1.0), (1, 2, 2.0), (2, 0, 0.5)]).unwrap();
        let u = [0.2, 1.0, 0.4];
        let p = ekeland_point(&s, &u, 1, 0.1, 0.5).unwrap();
        assert_eq!(p.point, 1);
        assert_eq!(p.chain, vec![1]);
        assert!(p.certificate.holds());
    }

    #[test]
    fn two_node_space() {
        // u(a) = 0, u(b) = 1 − eps/2, start at b: a never violates the cone at b
        let s = QuasiMetricSpace::from_edges(2, [(0, 1, 1.0), (1, 0, 3.0)]).unwrap();
        let eps = 0.5;
        let u = [0.0, 1.0 - eps / 2.0];
        let p = ekeland_point(&s, &u, 1, eps, 0.2).unwrap();
        assert_eq!(p.point, 1);
        for cand in [0, 1] {
            let c = verify_ekeland(&s, &u, 1, eps, 0.2, cand).unwrap();
            assert_eq!(c.holds(), cand == 1);
        }
    }

    #[test]
    fn climbs_to_a_nearby_higher_point() {
        let edges = (0..5).flat_map(|i| [(i, i + 1, 0.1), (i + 1, i, 0.1)]);
        let s = QuasiMetricSpace::from_edges(6, edges).unwrap();
        let u = [0.0, 0.05, 0.1, 0.3, 0.2, 0.25];
        let p = ekeland_point(&s, &u, 2, 0.4, 0.5).unwrap();
        assert!(p.certificate.holds());
        assert_eq!(p.point, 3);
    }

    #[test]
    fn precondition() {
        let s = QuasiMetricSpace::from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(ekeland_point(&s, &[0.0, 1.0], 0, 1.0, 1.0).is_err());
        assert!(ekeland_point(&s, &[0.0, 1.0], 0, 1.5, 0.0).is_err());
    }
}
