use serde::{Deserialize, Serialize};

use super::report::Report;
use crate::error::{Error, Result};
use crate::gcone::Absorption;
use crate::quasi_metric::{forward_distance, grid_space, GridSpec, Mask, NodeId, QuasiMetricSpace, RandersNorm, Stencil};
use crate::solver::{solve_dirichlet, GridFunction, SchemeConfig};

const RADIUS_SLACK: f64 = 1e-9;

/// A fixed lattice model `(norm, h, stencil, mask)` truncated at forward
/// radius `r` from `origin`, for each `r` in `radii`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustionFamily {
    pub norm: RandersNorm,
    pub h: f64,
    pub stencil: Stencil,
    pub mask: Mask,
    pub origin: Vec<f64>,
    /// Radius of the core ball `𝓑` where the Dirichlet data is 0.
    pub core_radius: f64,
    /// The probe set is `core_radius < ϱ⁺ ≤ probe_radius`.
    pub probe_radius: f64,
    pub radii: Vec<f64>,
}

/// One member `Ω_r` of an exhaustion family.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub radius: f64,
    pub space: QuasiMetricSpace,
    pub origin: NodeId,
    /// `ϱ⁺ = d(o, ·)` inside the truncation.
    pub rho: Vec<f64>,
    /// Nodes that lost a neighbor of the ambient lattice, by truncation or by the mask.
    pub boundary: Vec<bool>,
    /// Nodes adjacent to masked lattice points: boundary at finite distance.
    pub metric_boundary: Vec<bool>,
}

impl Truncation {
    pub fn core(&self, core_radius: f64) -> Vec<NodeId> {
        self.space
            .nodes()
            .filter(|&x| self.rho[x] <= core_radius + RADIUS_SLACK)
            .collect()
    }

    pub fn shell(&self, inner: f64, outer: f64) -> Vec<NodeId> {
        self.space
            .nodes()
            .filter(|&x| self.rho[x] > inner + RADIUS_SLACK && self.rho[x] <= outer + RADIUS_SLACK)
            .collect()
    }
}

impl ExhaustionFamily {
    /// The unit Euclidean lattice `ℤ^dim` with the axis stencil.
    pub fn lattice(dim: usize, radii: Vec<f64>) -> Self {
        ExhaustionFamily {
            norm: RandersNorm::euclidean(dim),
            h: 1.0,
            stencil: Stencil::Axis,
            mask: Mask::None,
            origin: vec![0.0; dim],
            core_radius: 1.0,
            probe_radius: 2.0,
            radii,
        }
    }

    /// `ℤ²` restricted to a Euclidean disk around the origin. Every truncation
    /// of radius above the disk's graph radius is the same bounded grid.
    pub fn bounded_disk(radius: f64, radii: Vec<f64>) -> Self {
        ExhaustionFamily {
            mask: Mask::OutsideDisk {
                center: vec![0.0, 0.0],
                radius,
            },
            ..Self::lattice(2, radii)
        }
    }

    /// `ℤ²` with the lattice points of a segment removed.
    pub fn slit(from: [f64; 2], to: [f64; 2], radii: Vec<f64>) -> Self {
        ExhaustionFamily {
            mask: Mask::Slit {
                from: from.to_vec(),
                to: to.to_vec(),
            },
            ..Self::lattice(2, radii)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.origin.len() != self.norm.dim() {
            return Err(Error::input("origin dimension does not match the norm"));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::input(format!("h must be positive, got {}", self.h)));
        }
        if self
            .origin
            .iter()
            .any(|o| !o.is_finite() || ((o / self.h).round() * self.h - o).abs() > 1e-9 * self.h)
        {
            return Err(Error::input("the origin must be a point of the lattice h·ℤⁿ"));
        }
        if !(self.core_radius >= 0.0 && self.probe_radius > self.core_radius) {
            return Err(Error::input("need 0 <= core_radius < probe_radius"));
        }
        if self.radii.is_empty() {
            return Err(Error::input("radii must not be empty"));
        }
        if self.radii.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::input("radii must be strictly increasing"));
        }
        if !(self.radii[0] > self.core_radius) || !self.radii.iter().all(|r| r.is_finite()) {
            return Err(Error::input("every radius must be finite and exceed the core radius"));
        }
        Ok(())
    }

    /// `Ω_r = {x : d(o, x) ≤ r}` cut out of a lattice box large enough to
    /// contain it.
    pub fn truncation(&self, r: f64) -> Result<Truncation> {
        let dim = self.norm.dim();
        // path length ≥ m·h·|lattice displacement|_∞, so the ball fits in a box of half-width r/m
        let offsets = self.stencil.offsets(dim)?;
        let m = offsets
            .iter()
            .map(|o| {
                let v: Vec<f64> = o.iter().map(|&c| c as f64).collect();
                let sup = o.iter().map(|c| c.unsigned_abs()).max().unwrap_or(1) as f64;
                self.norm.eval(&v) / sup
            })
            .fold(f64::INFINITY, f64::min);
        let half = (r / (m * self.h)).ceil() + 2.0;
        if half > 5000.0 {
            return Err(Error::input(format!("truncation radius {r} is too large")));
        }
        let spec = GridSpec {
            norm: self.norm.clone(),
            lower: self.origin.iter().map(|o| o - half * self.h).collect(),
            upper: self.origin.iter().map(|o| o + half * self.h).collect(),
            h: self.h,
            stencil: self.stencil.clone(),
            mask: self.mask.clone(),
        };
        let base = grid_space(&spec)?;
        let o = base
            .nearest_node(&self.origin)
            .filter(|&x| {
                let c = base.coords(x).unwrap_or(&[]);
                c.iter().zip(&self.origin).all(|(a, b)| (a - b).abs() <= 1e-9 * self.h)
            })
            .ok_or_else(|| Error::input("the origin is not a lattice point of the model"))?;
        let rho = forward_distance(&base, &[o])?;
        let keep: Vec<bool> = base.nodes().map(|x| rho.get(x) <= r + RADIUS_SLACK).collect();
        let (space, old_of_new) = base.induced(&keep)?;
        let metric_boundary: Vec<bool> = old_of_new.iter().map(|&x| base.is_frontier(x)).collect();
        let boundary = space.nodes().map(|x| space.is_frontier(x)).collect();
        let origin = old_of_new.iter().position(|&x| x == o).expect("origin is kept");
        Ok(Truncation {
            radius: r,
            rho: old_of_new.iter().map(|&x| rho.get(x)).collect(),
            space,
            origin,
            boundary,
            metric_boundary,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    CompleteLike,
    IncompleteLike,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::CompleteLike => "COMPLETE-LIKE",
            Verdict::IncompleteLike => "INCOMPLETE-LIKE",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompletenessConfig {
    pub scheme: SchemeConfig,
    /// COMPLETE-LIKE needs `m_last ≤ decay_ratio · m_first` (and strict decrease);
    /// INCOMPLETE-LIKE needs `m_last > decay_ratio · m_first`.
    pub decay_ratio: f64,
}

impl Default for CompletenessConfig {
    fn default() -> Self {
        CompletenessConfig {
            scheme: SchemeConfig::default(),
            decay_ratio: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletenessReport {
    pub radii: Vec<f64>,
    /// `m_j = max_{probe} u_j`.
    pub maxima: Vec<f64>,
    pub nodes: Vec<usize>,
    pub iterations: Vec<usize>,
    pub strictly_decreasing: bool,
    /// `max m_j − min m_j`.
    pub variation: f64,
    pub verdict: Verdict,
}

impl CompletenessReport {
    pub fn to_report(&self, label: &str) -> Report {
        let mut r = Report::new("detect-completeness");
        for (j, &radius) in self.radii.iter().enumerate() {
            let p = format!("{label}/r={radius}");
            r.row(&p, "probe_max", self.maxima[j])
                .row(&p, "nodes", self.nodes[j] as f64)
                .row(&p, "iterations", self.iterations[j] as f64);
        }
        r.verdict(label, self.verdict)
            .verdict(&format!("{label}/strictly_decreasing"), self.strictly_decreasing)
            .margin(&format!("{label}/variation"), self.variation);
        r
    }
}

fn classify(maxima: &[f64], decay_ratio: f64) -> (bool, Verdict) {
    let strictly = maxima.windows(2).all(|w| w[1] < w[0]);
    let (first, last) = (maxima[0], maxima[maxima.len() - 1]);
    let verdict = if maxima.len() < 2 {
        Verdict::Inconclusive
    } else if last <= decay_ratio * first {
        if strictly {
            Verdict::CompleteLike
        } else {
            Verdict::Inconclusive
        }
    } else {
        Verdict::IncompleteLike
    };
    (strictly, verdict)
}

/// Solves `Δ∞ᴺ u_j = g(u_j)` on `A_j = Ω_j ∖ 𝓑` with `u_j = 0` on the core
/// ball and `u_j = 1` on the boundary of `Ω_j`, and classifies the probe
/// maxima `m_j`. `g` is replaced by its nondecreasing envelope first.
pub fn detect_completeness(
    family: &ExhaustionFamily,
    g: &Absorption,
    config: &CompletenessConfig,
) -> Result<CompletenessReport> {
    family.validate()?;
    let g = g.monotone_envelope();
    if !g.nonnegative_on(0.0, 1.0) {
        return Err(Error::input("g must be nonnegative on [0, 1]"));
    }
    if !(config.decay_ratio > 0.0 && config.decay_ratio < 1.0) {
        return Err(Error::input("decay_ratio must lie in (0, 1)"));
    }
    let mut report = CompletenessReport {
        radii: family.radii.clone(),
        maxima: Vec::new(),
        nodes: Vec::new(),
        iterations: Vec::new(),
        strictly_decreasing: false,
        variation: 0.0,
        verdict: Verdict::Inconclusive,
    };
    for &r in &family.radii {
        let t = family.truncation(r)?;
        let core = t.core(family.core_radius);
        let probe = t.shell(family.core_radius, family.probe_radius);
        if probe.is_empty() {
            return Err(Error::input("the probe set is empty"));
        }
        let mut data = Vec::new();
        for x in t.space.nodes() {
            if core.binary_search(&x).is_ok() {
                if t.boundary[x] {
                    return Err(Error::input("the core ball touches the boundary"));
                }
                data.push((x, 0.0));
            } else if t.boundary[x] {
                data.push((x, 1.0));
            }
        }
        let bd = GridFunction::from_boundary(t.space.len(), &data)?;
        let (u, iterations) = if bd.interior_nodes().is_empty() {
            (bd.values.clone(), 0)
        } else {
            let state = solve_dirichlet(&t.space, &bd, &g, &config.scheme)?;
            if !state.converged {
                return Err(Error::NonConvergence {
                    iterations: state.iterations,
                    residual: state.residual,
                });
            }
            (state.u.values, state.iterations)
        };
        report.maxima.push(probe.iter().map(|&x| u[x]).fold(f64::NEG_INFINITY, f64::max));
        report.nodes.push(t.space.len());
        report.iterations.push(iterations);
    }
    let hi = report.maxima.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = report.maxima.iter().copied().fold(f64::INFINITY, f64::min);
    report.variation = hi - lo;
    let (strictly, verdict) = classify(&report.maxima, config.decay_ratio);
    report.strictly_decreasing = strictly;
    report.verdict = verdict;
    Ok(report)
}
