use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::CliError;
use crate::gcone::Absorption;
use crate::principles::{CompletenessConfig, ExhaustionFamily, ThetaCase};
use crate::quasi_metric::{grid_space, GridSpec, Mask, NodeId, QuasiMetricSpace, RandersNorm, Stencil};
use crate::solver::{GridFunction, SchemeConfig};

/// One experiment: a single JSON document. Sections not used by the chosen
/// subcommand may be omitted.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Seed for every random choice; `--seed` overrides it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub space: Option<SpaceConfig>,
    #[serde(default)]
    pub absorption: AbsorptionConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub boundary: Option<BoundaryConfig>,
    #[serde(default)]
    pub cone: Option<ConeConfig>,
    #[serde(default)]
    pub eta: Option<EtaConfig>,
    #[serde(default)]
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub completeness: Option<CompletenessSection>,
    #[serde(default)]
    pub capacity: Option<CapacitySection>,
    #[serde(default)]
    pub ekeland: Option<EkelandSection>,
    #[serde(default)]
    pub theta: Option<ThetaSection>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    /// Symmetric positive definite matrix; identity when omitted.
    #[serde(default)]
    pub a: Option<Vec<Vec<f64>>>,
    /// Drift vector; zero when omitted.
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    Grid {
        lower: Vec<f64>,
        upper: Vec<f64>,
        h: f64,
        #[serde(default = "axis")]
        stencil: Stencil,
        #[serde(default)]
        norm: Option<NormConfig>,
        #[serde(default)]
        mask: Mask,
    },
    /// Edge list file, relative to the config file.
    Graph { path: PathBuf },
}

fn axis() -> Stencil {
    Stencil::Axis
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AbsorptionConfig {
    #[default]
    Zero,
    Constant {
        c: f64,
    },
    Power {
        lambda: f64,
        theta: f64,
    },
    /// Piecewise-linear `g`, inline or from a two-column `s,g` CSV file.
    Table {
        #[serde(default)]
        knots: Option<Vec<f64>>,
        #[serde(default)]
        values: Option<Vec<f64>>,
        #[serde(default)]
        path: Option<PathBuf>,
    },
}

/// A node given by id, by label, or by lattice coordinates.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum NodeRef {
    Id(usize),
    Label(String),
    Point(Vec<f64>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryValues {
    /// `offset + gradient · x` on the frontier nodes.
    Affine { gradient: Vec<f64>, offset: f64 },
    /// `slope · d(center, x)` on the frontier nodes.
    Distance { center: NodeRef, slope: f64 },
    /// Listed nodes and values; the listed nodes form the boundary.
    Explicit { values: Vec<(NodeRef, f64)> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub values: BoundaryValues,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeConfig {
    pub center: NodeRef,
    pub slope: f64,
    pub vertex_value: f64,
    pub u_star: f64,
    /// Upper clamp `u*`; unbounded when omitted.
    #[serde(default)]
    pub u_upper: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaConfig {
    pub u_star: f64,
    pub b: f64,
    pub span: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Write every `stride`-th sample.
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(default = "two")]
    pub dim: usize,
    #[serde(default = "unit")]
    pub h: f64,
    #[serde(default = "axis")]
    pub stencil: Stencil,
    #[serde(default)]
    pub norm: Option<NormConfig>,
    #[serde(default)]
    pub mask: Mask,
    #[serde(default)]
    pub origin: Option<Vec<f64>>,
    #[serde(default = "unit")]
    pub core_radius: f64,
    #[serde(default = "two_f")]
    pub probe_radius: f64,
    pub radii: Vec<f64>,
}

fn two() -> usize {
    2
}
fn unit() -> f64 {
    1.0
}
fn two_f() -> f64 {
    2.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompletenessSection {
    /// Each absorption is run on the same family; verdicts must agree.
    #[serde(default = "zero_list")]
    pub absorptions: Vec<AbsorptionConfig>,
    #[serde(default = "quarter")]
    pub decay_ratio: f64,
}

fn zero_list() -> Vec<AbsorptionConfig> {
    vec![AbsorptionConfig::Zero]
}
fn quarter() -> f64 {
    0.25
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySection {
    pub k: Vec<Vec<f64>>,
    pub big_r: f64,
    pub rs: Vec<f64>,
    #[serde(default)]
    pub search: Option<SearchConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub radius: f64,
    pub samples: usize,
    #[serde(default = "nano")]
    pub tol: f64,
}

fn nano() -> f64 {
    1e-9
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EkelandSection {
    pub instances: usize,
    pub nodes: usize,
    /// Random edges added on top of a bidirectional ring.
    pub extra_edges: usize,
    /// `ε` is drawn from `[eps_min, eps_max)` and `δ` from `[delta_min, delta_max)`.
    pub eps_min: f64,
    pub eps_max: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaCaseConfig {
    /// Omitted means the normalizing `λ = 2(1+θ)/(1−θ)²`.
    #[serde(default)]
    pub lambda: Option<f64>,
    pub theta: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSection {
    pub cases: Vec<ThetaCaseConfig>,
    pub hs: Vec<f64>,
    #[serde(default = "point_nine")]
    pub min_order: f64,
    #[serde(default)]
    pub scheme: Option<SchemeConfig>,
}

fn point_nine() -> f64 {
    0.9
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Multiplier `κ` in the Lipschitz bound slack `(1 + κh)`.
    #[serde(default = "ten")]
    pub lipschitz_slack: f64,
    /// Ball radii for the sup-convolution check, in multiples of the largest
    /// edge weight (only for `g ≡ 0`).
    #[serde(default)]
    pub convolution_hops: Vec<f64>,
    #[serde(default = "nano")]
    pub convolution_tol: f64,
}

fn ten() -> f64 {
    10.0
}

// ---------------------------------------------------------------------------

pub(crate) fn invalid(path: &str, message: impl ToString) -> CliError {
    CliError::Validation {
        path: path.to_string(),
        message: message.to_string(),
    }
}

/// Wraps a library error raised while building the object at `path`.
pub(crate) fn at(path: &str) -> impl Fn(crate::Error) -> CliError + '_ {
    move |e| match e {
        crate::Error::NonConvergence { .. } => CliError::NonConvergence(format!("{path}: {e}")),
        crate::Error::Io(io) => CliError::Io(io),
        other => invalid(path, other),
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        invalid(if path.is_empty() || path == "." { "$" } else { &path }, e.into_inner())
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid("--config", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive and finite, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be finite, got {v}")))
    }
}

pub(crate) fn build_norm(path: &str, cfg: Option<&NormConfig>, dim: usize) -> Result<RandersNorm, CliError> {
    let Some(cfg) = cfg else {
        return Ok(RandersNorm::euclidean(dim));
    };
    let a = match &cfg.a {
        Some(a) => a.clone(),
        None => (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect(),
    };
    let beta = cfg.beta.clone().unwrap_or_else(|| vec![0.0; dim]);
    if a.len() != dim {
        return Err(invalid(&format!("{path}.a"), format!("must be a {dim}x{dim} matrix")));
    }
    if beta.len() != dim {
        return Err(invalid(&format!("{path}.beta"), format!("must have {dim} entries")));
    }
    RandersNorm::from_rows(&a, &beta).map_err(at(path))
}

/// Builds the space of a config; relative graph paths resolve against `base`.
pub fn build_space(cfg: &ExperimentConfig, base: &Path) -> Result<QuasiMetricSpace, CliError> {
    let space = cfg.space.as_ref().ok_or_else(|| invalid("space", "is required"))?;
    match space {
        SpaceConfig::Grid {
            lower,
            upper,
            h,
            stencil,
            norm,
            mask,
        } => {
            positive("space.h", *h)?;
            let dim = lower.len();
            if !(1..=3).contains(&dim) {
                return Err(invalid("space.lower", "dimension must be 1, 2 or 3"));
            }
            if upper.len() != dim {
                return Err(invalid("space.upper", format!("must have {dim} entries")));
            }
            for (i, (lo, hi)) in lower.iter().zip(upper).enumerate() {
                finite(&format!("space.lower[{i}]"), *lo)?;
                finite(&format!("space.upper[{i}]"), *hi)?;
                if lo > hi {
                    return Err(invalid(&format!("space.upper[{i}]"), "must not be below lower"));
                }
            }
            let spec = GridSpec {
                norm: build_norm("space.norm", norm.as_ref(), dim)?,
                lower: lower.clone(),
                upper: upper.clone(),
                h: *h,
                stencil: stencil.clone(),
                mask: mask.clone(),
            };
            grid_space(&spec).map_err(at("space"))
        }
        SpaceConfig::Graph { path } => {
            let full = base.join(path);
            let text = std::fs::read_to_string(&full)
                .map_err(|e| invalid("space.path", format!("cannot read {}: {e}", full.display())))?;
            QuasiMetricSpace::parse_edge_list(&text).map_err(at("space.path"))
        }
    }
}

pub(crate) fn build_absorption(path: &str, cfg: &AbsorptionConfig, base: &Path) -> Result<Absorption, CliError> {
    match cfg {
        AbsorptionConfig::Zero => Ok(Absorption::Zero),
        AbsorptionConfig::Constant { c } => Absorption::constant(*c).map_err(at(&format!("{path}.c"))),
        AbsorptionConfig::Power { lambda, theta } => {
            Absorption::power(*lambda, *theta).map_err(at(path))
        }
        AbsorptionConfig::Table { knots, values, path: file } => {
            let (knots, values) = match (knots, values, file) {
                (Some(k), Some(v), None) => (k.clone(), v.clone()),
                (None, None, Some(f)) => read_table(&format!("{path}.path"), &base.join(f))?,
                _ => {
                    return Err(invalid(path, "give either knots and values, or path"));
                }
            };
            Absorption::table(knots, values).map_err(at(path))
        }
    }
}

fn read_table(path: &str, file: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| invalid(path, format!("cannot read {}: {e}", file.display())))?;
    let (mut knots, mut values) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with(|c: char| c.is_alphabetic())) {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let parse = |s: Option<&str>| s.and_then(|s| s.parse::<f64>().ok());
        match (parse(parts.next()), parse(parts.next())) {
            (Some(s), Some(g)) => {
                knots.push(s);
                values.push(g);
            }
            _ => return Err(invalid(path, format!("line {}: expected `s,g`", i + 1))),
        }
    }
    Ok((knots, values))
}

pub(crate) fn resolve_node(path: &str, space: &QuasiMetricSpace, r: &NodeRef) -> Result<NodeId, CliError> {
    match r {
        NodeRef::Id(x) => space.check_node(*x).map(|_| *x).map_err(at(path)),
        NodeRef::Label(name) => space
            .node_by_label(name)
            .ok_or_else(|| invalid(path, format!("no node labelled {name:?}"))),
        NodeRef::Point(p) => {
            let x = space
                .nearest_node(p)
                .ok_or_else(|| invalid(path, "the space has no coordinates"))?;
            let c = space.coords(x).unwrap_or(&[]);
            if c.len() != p.len() || c.iter().zip(p).any(|(a, b)| (a - b).abs() > 1e-9) {
                return Err(invalid(path, format!("{p:?} is not a node of the space")));
            }
            Ok(x)
        }
    }
}

pub fn build_boundary(cfg: &ExperimentConfig, space: &QuasiMetricSpace) -> Result<GridFunction, CliError> {
    let b = cfg.boundary.as_ref().ok_or_else(|| invalid("boundary", "is required"))?;
    let n = space.len();
    let frontier = || -> Result<Vec<NodeId>, CliError> {
        let f = space.frontier_nodes();
        if f.is_empty() {
            Err(invalid("boundary.values", "the space has no frontier nodes; list them explicitly"))
        } else {
            Ok(f)
        }
    };
    let data: Vec<(NodeId, f64)> = match &b.values {
        BoundaryValues::Affine { gradient, offset } => {
            finite("boundary.values.offset", *offset)?;
            let mut out = Vec::new();
            for x in frontier()? {
                let c = space.coords(x).unwrap_or(&[]);
                if c.len() != gradient.len() {
                    return Err(invalid("boundary.values.gradient", "length must match the dimension"));
                }
                out.push((x, offset + c.iter().zip(gradient).map(|(a, b)| a * b).sum::<f64>()));
            }
            out
        }
        BoundaryValues::Distance { center, slope } => {
            finite("boundary.values.slope", *slope)?;
            let z = resolve_node("boundary.values.center", space, center)?;
            let d = crate::quasi_metric::forward_distance(space, &[z]).map_err(at("boundary.values.center"))?;
            let mut out = Vec::new();
            for x in frontier()? {
                if !d.get(x).is_finite() {
                    return Err(invalid("boundary.values.center", format!("node {x} is unreachable")));
                }
                out.push((x, slope * d.get(x)));
            }
            out
        }
        BoundaryValues::Explicit { values } => values
            .iter()
            .enumerate()
            .map(|(i, (r, v))| {
                let p = format!("boundary.values.values[{i}]");
                finite(&p, *v)?;
                Ok((resolve_node(&p, space, r)?, *v))
            })
            .collect::<Result<_, CliError>>()?,
    };
    GridFunction::from_boundary(n, &data).map_err(at("boundary"))
}

pub fn validate_scheme(path: &str, s: &SchemeConfig) -> Result<(), CliError> {
    if let Some(e) = s.epsilon {
        positive(&format!("{path}.epsilon"), e)?;
    }
    positive(&format!("{path}.tol"), s.tol)?;
    if s.max_iter == 0 {
        return Err(invalid(&format!("{path}.max_iter"), "must be at least 1"));
    }
    if !(s.damping > 0.0 && s.damping <= 1.0) {
        return Err(invalid(&format!("{path}.damping"), format!("must lie in (0, 1], got {}", s.damping)));
    }
    Ok(())
}

pub fn build_family(cfg: &ExperimentConfig) -> Result<ExhaustionFamily, CliError> {
    let f = cfg.family.as_ref().ok_or_else(|| invalid("family", "is required"))?;
    if !(1..=3).contains(&f.dim) {
        return Err(invalid("family.dim", "must be 1, 2 or 3"));
    }
    positive("family.h", f.h)?;
    for (i, r) in f.radii.iter().enumerate() {
        positive(&format!("family.radii[{i}]"), *r)?;
    }
    let family = ExhaustionFamily {
        norm: build_norm("family.norm", f.norm.as_ref(), f.dim)?,
        h: f.h,
        stencil: f.stencil.clone(),
        mask: f.mask.clone(),
        origin: f.origin.clone().unwrap_or_else(|| vec![0.0; f.dim]),
        core_radius: f.core_radius,
        probe_radius: f.probe_radius,
        radii: f.radii.clone(),
    };
    family.validate().map_err(at("family"))?;
    Ok(family)
}

pub fn completeness_config(cfg: &ExperimentConfig, section: &CompletenessSection) -> Result<CompletenessConfig, CliError> {
    validate_scheme("scheme", &cfg.scheme)?;
    if !(section.decay_ratio > 0.0 && section.decay_ratio < 1.0) {
        return Err(invalid("completeness.decay_ratio", "must lie in (0, 1)"));
    }
    if section.absorptions.is_empty() {
        return Err(invalid("completeness.absorptions", "must not be empty"));
    }
    Ok(CompletenessConfig {
        scheme: cfg.scheme.clone(),
        decay_ratio: section.decay_ratio,
    })
}

pub fn theta_cases(section: &ThetaSection) -> Result<Vec<ThetaCase>, CliError> {
    if section.cases.is_empty() {
        return Err(invalid("theta.cases", "must not be empty"));
    }
    if section.hs.len() < 2 {
        return Err(invalid("theta.hs", "needs at least two grid sizes"));
    }
    for (i, h) in section.hs.iter().enumerate() {
        positive(&format!("theta.hs[{i}]"), *h)?;
    }
    section
        .cases
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let p = format!("theta.cases[{i}]");
            match c.lambda {
                Some(l) => ThetaCase::new(l, c.theta),
                None => ThetaCase::normalized(c.theta),
            }
            .map_err(at(&p))
        })
        .collect()
}

pub(crate) fn check_positive(path: &str, v: f64) -> Result<(), CliError> {
    positive(path, v)
}

pub(crate) fn check_finite(path: &str, v: f64) -> Result<(), CliError> {
    finite(path, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected_with_a_path() {
        let err = parse_config(r#"{"space": {"kind": "grid", "lower": [0], "upper": [1], "h": 0.5, "hh": 1}}"#)
            .unwrap_err();
        let CliError::Validation { path, .. } = err else { panic!() };
        assert_eq!(path, "space");
        let err = parse_config(r#"{"scheme": {"tol": "x"}}"#).unwrap_err();
        let CliError::Validation { path, .. } = err else { panic!() };
        assert_eq!(path, "scheme.tol");
    }

    #[test]
    fn negative_h_names_the_field() {
        let cfg = parse_config(r#"{"space": {"kind": "grid", "lower": [0], "upper": [1], "h": -0.5}}"#).unwrap();
        let err = build_space(&cfg, Path::new(".")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().starts_with("space.h:"), "{err}");
    }

    #[test]
    fn grid_with_drift_and_mask() {
        let cfg = parse_config(
            r#"{"space": {"kind": "grid", "lower": [-3, -3], "upper": [3, 3], "h": 1,
                "stencil": "moore", "norm": {"beta": [0.2, 0]},
                "mask": {"outside_disk": {"center": [0, 0], "radius": 2}}}}"#,
        )
        .unwrap();
        let s = build_space(&cfg, Path::new(".")).unwrap();
        assert_eq!(s.len(), 13);
        assert!(!s.is_symmetric());
    }

    #[test]
    fn node_references() {
        let cfg = parse_config(r#"{"space": {"kind": "grid", "lower": [0, 0], "upper": [2, 2], "h": 1}}"#).unwrap();
        let s = build_space(&cfg, Path::new(".")).unwrap();
        assert_eq!(resolve_node("c", &s, &NodeRef::Point(vec![1.0, 2.0])).unwrap(), 7);
        assert_eq!(resolve_node("c", &s, &NodeRef::Id(4)).unwrap(), 4);
        assert!(resolve_node("c", &s, &NodeRef::Point(vec![0.5, 0.0])).is_err());
        assert!(resolve_node("c", &s, &NodeRef::Id(9)).is_err());
    }
}
