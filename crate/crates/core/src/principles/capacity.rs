use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::exhaustion::{ExhaustionFamily, Truncation};
use super::report::Report;
use crate::error::{Error, Result};
use crate::quasi_metric::{forward_distance, lipschitz_constant_global, NodeId, QuasiMetricSpace};

/// One candidate `u_r = min{−1 + (R/r)(ϱ⁺ − R), 0}` on its truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityRow {
    pub r: f64,
    /// Radius of the truncation the candidate lives on.
    pub truncation_radius: f64,
    pub lipschitz: f64,
    /// `max_x max_{x→y} (u(y) − u(x))₊ / w`, the discrete `‖F(∇u)‖∞`.
    pub slope_sup: f64,
    /// Whether `u_r` vanishes on the metric boundary, i.e. has compact support.
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityEstimate {
    /// `K` as lattice points.
    pub k: Vec<Vec<f64>>,
    pub big_r: f64,
    pub rows: Vec<CapacityRow>,
    /// Smallest Lipschitz number over the admissible candidates.
    pub infimum: f64,
    /// `D = min_{k ∈ K, y ∈ ∂} d(k, y)` over the metric boundary, when there is one.
    pub escape_distance: Option<f64>,
    /// `1/D`: no admissible candidate can have a smaller Lipschitz number.
    pub lower_bound: Option<f64>,
}

impl CapacityEstimate {
    pub fn to_report(&self, label: &str) -> Report {
        let mut r = Report::new("capacity");
        for row in &self.rows {
            let p = format!("{label}/R={};r={}", self.big_r, row.r);
            r.row(&p, "lipschitz", row.lipschitz)
                .row(&p, "slope_sup", row.slope_sup)
                .row(&p, "R_over_r", self.big_r / row.r)
                .row(&p, "admissible", if row.admissible { 1.0 } else { 0.0 });
        }
        r.row(label, "infimum", self.infimum);
        if let (Some(d), Some(lb)) = (self.escape_distance, self.lower_bound) {
            r.row(label, "escape_distance", d).row(label, "lower_bound", lb);
        }
        r
    }
}

/// Forward discrete slope sup `max_{x→y} (u(y) − u(x))₊ / w`.
pub fn slope_sup(space: &QuasiMetricSpace, u: &[f64]) -> f64 {
    space
        .edges()
        .map(|(x, y, w)| (u[y] - u[x]) / w)
        .fold(0.0, f64::max)
}

fn lattice_nodes(t: &Truncation, points: &[Vec<f64>], tol: f64) -> Result<Vec<NodeId>> {
    points
        .iter()
        .map(|p| {
            t.space
                .nearest_node(p)
                .filter(|&x| {
                    let c = t.space.coords(x).unwrap_or(&[]);
                    c.len() == p.len() && c.iter().zip(p).all(|(a, b)| (a - b).abs() <= tol)
                })
                .ok_or_else(|| Error::input(format!("K point {p:?} is not a node of the model")))
        })
        .collect()
}

/// The candidate `min{−1 + (R/r)(ϱ⁺ − R), 0}` from forward distances `rho`.
pub fn candidate(rho: &[f64], big_r: f64, r: f64) -> Vec<f64> {
    rho.iter()
        .map(|&d| (-1.0 + (big_r / r) * (d - big_r)).min(0.0))
        .collect()
}

/// Escape distance from `K` to the metric boundary of `t`, if it has one.
fn escape_distance(t: &Truncation, k: &[NodeId]) -> Result<Option<f64>> {
    if !t.metric_boundary.iter().any(|&b| b) {
        return Ok(None);
    }
    let d = forward_distance(&t.space, k)?;
    let best = t
        .space
        .nodes()
        .filter(|&x| t.metric_boundary[x])
        .map(|x| d.get(x))
        .fold(f64::INFINITY, f64::min);
    Ok(best.is_finite().then_some(best))
}

/// Builds `u_r` for every `r` in `rs` on the truncation of radius
/// `R + r/R + 2h` (so its support is compact there when nothing is masked),
/// and measures `Lip(u_r)`. For models with a metric boundary also reports
/// the lower bound `1/D`.
pub fn capacity(family: &ExhaustionFamily, k: &[Vec<f64>], big_r: f64, rs: &[f64]) -> Result<CapacityEstimate> {
    family.validate()?;
    if k.is_empty() {
        return Err(Error::input("K must not be empty"));
    }
    if !(big_r > 0.0 && big_r.is_finite()) {
        return Err(Error::input(format!("R must be positive, got {big_r}")));
    }
    if rs.is_empty() {
        return Err(Error::input("at least one r is needed"));
    }
    if let Some(&r) = rs.iter().find(|&&r| !(r > big_r && r.is_finite())) {
        return Err(Error::input(format!("every r must exceed R = {big_r}, got {r}")));
    }
    let tol = 1e-9 * family.h;
    let mut rows = Vec::new();
    let mut escape = None;
    for &r in rs {
        let radius = big_r + r / big_r + 2.0 * family.h;
        let t = family.truncation(radius)?;
        let kn = lattice_nodes(&t, k, tol)?;
        if let Some(&x) = kn.iter().find(|&&x| t.rho[x] > big_r + 1e-12) {
            return Err(Error::input(format!(
                "K node {x} lies outside the forward ball of radius {big_r}"
            )));
        }
        let u = candidate(&t.rho, big_r, r);
        let admissible = t.space.nodes().all(|x| !t.boundary[x] || u[x] == 0.0);
        rows.push(CapacityRow {
            r,
            truncation_radius: radius,
            lipschitz: lipschitz_constant_global(&t.space, &u)?,
            slope_sup: slope_sup(&t.space, &u),
            admissible,
        });
        if let Some(d) = escape_distance(&t, &kn)? {
            escape = Some(escape.map_or(d, |e: f64| e.min(d)));
        }
    }
    let infimum = rows
        .iter()
        .filter(|row| row.admissible)
        .map(|row| row.lipschitz)
        .fold(f64::INFINITY, f64::min);
    Ok(CapacityEstimate {
        k: k.to_vec(),
        big_r,
        rows,
        infimum,
        escape_distance: escape,
        lower_bound: escape.map(|d| 1.0 / d),
    })
}

/// Outcome of a random search over admissible candidates on a bounded model.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSearch {
    pub samples: usize,
    pub escape_distance: f64,
    pub lower_bound: f64,
    /// Smallest Lipschitz number seen.
    pub smallest: f64,
    /// Candidates with `Lip < 1/D − tol`.
    pub below_bound: usize,
}

/// Draws `samples` functions with `u ≤ −1` on `K` and `u = 0` on the
/// boundary of the truncation, mixing random values with clipped distance
/// cones, and records their Lipschitz numbers against `1/D`.
pub fn candidate_search(
    family: &ExhaustionFamily,
    k: &[Vec<f64>],
    radius: f64,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CandidateSearch> {
    family.validate()?;
    let t = family.truncation(radius)?;
    let kn = lattice_nodes(&t, k, 1e-9 * family.h)?;
    let escape = escape_distance(&t, &kn)?
        .ok_or_else(|| Error::input("the model has no metric boundary"))?;
    let from_k = forward_distance(&t.space, &kn)?;
    let n = t.space.len();
    let mut in_k = vec![false; n];
    for &x in &kn {
        in_k[x] = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut smallest = f64::INFINITY;
    let mut below = 0;
    for i in 0..samples {
        let mut u: Vec<f64> = match i % 3 {
            // the extremal candidate min{−1 + d(K, ·)/D, 0}
            _ if i == 0 => from_k.values.iter().map(|&d| (-1.0 + d / escape).min(0.0)).collect(),
            0 => (0..n).map(|_| rng.gen_range(-3.0..1.0)).collect(),
            1 => {
                // clipped cone from K with a random slope at least 1/D
                let slope = (1.0 / escape) * (1.0 + rng.gen_range(0.0..2.0f64).powi(3));
                let lift = rng.gen_range(0.0..1.0);
                from_k
                    .values
                    .iter()
                    .map(|&d| (-1.0 - lift + slope * d).min(0.0))
                    .collect()
            }
            _ => {
                let slope = 1.0 / escape;
                from_k
                    .values
                    .iter()
                    .map(|&d| (-1.0 + slope * d).min(0.0) + rng.gen_range(-0.05..0.0))
                    .collect()
            }
        };
        for x in 0..n {
            if in_k[x] {
                u[x] = u[x].min(-1.0);
            }
            if t.boundary[x] {
                u[x] = 0.0;
            }
        }
        let lip = lipschitz_constant_global(&t.space, &u)?;
        smallest = smallest.min(lip);
        if lip < 1.0 / escape - tol {
            below += 1;
        }
    }
    Ok(CandidateSearch {
        samples,
        escape_distance: escape,
        lower_bound: 1.0 / escape,
        smallest,
        below_bound: below,
    })
}
