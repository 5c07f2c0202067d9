use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::*;
use super::plot::{emit_plot, PlotStyle, Series};
use super::{CliError, Command, Outcome};
use crate::gcone::{make_cone, solve_eta, Absorption};
use crate::principles::{
    candidate_search, capacity, detect_completeness, ekeland_point, theta_refinement, theta_scheme, wmp_check,
    Report,
};
use crate::quasi_metric::{
    distance_field, lipschitz_constant, lipschitz_constant_global, node_csv, Direction, NodeId, QuasiMetricSpace,
};
use crate::solver::{solve_dirichlet, sup_convolution_gap, SchemeConfig, SchemeState};

type Files = Vec<(String, String)>;

// plotted polylines are thinned to at most this many points
const PLOT_POINTS: usize = 400;

pub(crate) fn execute(command: Command, cfg: &ExperimentConfig, base: &Path, files: &mut Files) -> Result<Outcome, CliError> {
    match command {
        Command::Solve => solve(cfg, base, files),
        Command::Cones => cones(cfg, base, files),
        Command::Eta => eta(cfg, base, files),
        Command::Capacity => capacity_cmd(cfg),
        Command::DetectCompleteness => completeness(cfg, base),
        Command::Ekeland => ekeland(cfg),
        Command::Verify => verify(cfg, base, files),
        Command::Theta => theta(cfg),
    }
}

fn thin(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let n = points.len();
    if n <= PLOT_POINTS {
        return points;
    }
    let mut out: Vec<(f64, f64)> = (0..PLOT_POINTS).map(|k| points[k * n / PLOT_POINTS]).collect();
    out.push(points[n - 1]);
    out
}

fn trace_plot(title: &str, st: &SchemeState) -> String {
    let pts = st.trace.iter().enumerate().map(|(i, &r)| ((i + 1) as f64, r)).collect();
    emit_plot(
        &[Series::new("max change per sweep", thin(pts))],
        &PlotStyle {
            title: title.into(),
            x_label: "sweep".into(),
            y_label: "change".into(),
            log_y: true,
            ..PlotStyle::default()
        },
    )
}

fn outcome(report: Report, plot: String) -> Outcome {
    Outcome {
        report,
        plot,
        violation: None,
        stalled: None,
    }
}

fn dirichlet_setup(
    cfg: &ExperimentConfig,
    base: &Path,
) -> Result<(QuasiMetricSpace, Absorption, crate::solver::GridFunction), CliError> {
    validate_scheme("scheme", &cfg.scheme)?;
    let space = build_space(cfg, base)?;
    let g = build_absorption("absorption", &cfg.absorption, base)?;
    let bd = build_boundary(cfg, &space)?;
    Ok((space, g, bd))
}

fn state_rows(r: &mut Report, param: &str, st: &SchemeState) {
    r.row(param, "epsilon", st.epsilon)
        .row(param, "iterations", st.iterations as f64)
        .row(param, "last_change", st.residual)
        .row(param, "equation_residual", st.equation_residual)
        .verdict(
            param,
            if st.converged {
                "CONVERGED"
            } else if st.diverged {
                "DIVERGED"
            } else {
                "STALLED"
            },
        )
        .require(st.converged);
}

fn stalled(st: &SchemeState) -> Option<String> {
    (!st.converged).then(|| {
        format!(
            "scheme: no convergence after {} sweeps (last change {})",
            st.iterations, st.residual
        )
    })
}

fn solve(cfg: &ExperimentConfig, base: &Path, files: &mut Files) -> Result<Outcome, CliError> {
    let (space, g, bd) = dirichlet_setup(cfg, base)?;
    let st = solve_dirichlet(&space, &bd, &g, &cfg.scheme).map_err(at("scheme"))?;
    files.push(("solution.csv".into(), st.u.to_csv(&space)));
    files.push(("trace.csv".into(), st.trace_csv()));
    let mut r = Report::new("solve");
    r.row("dirichlet", "nodes", space.len() as f64)
        .row("dirichlet", "boundary_nodes", bd.boundary_nodes().len() as f64);
    state_rows(&mut r, "dirichlet", &st);
    r.row("dirichlet", "min", st.u.min())
        .row("dirichlet", "max", st.u.max())
        .row(
            "dirichlet",
            "lipschitz",
            lipschitz_constant_global(&space, &st.u.values).map_err(at("space"))?,
        );
    let mut out = outcome(r, trace_plot("solve", &st));
    out.stalled = stalled(&st);
    Ok(out)
}

fn cones(cfg: &ExperimentConfig, base: &Path, files: &mut Files) -> Result<Outcome, CliError> {
    let c = cfg.cone.as_ref().ok_or_else(|| invalid("cone", "is required"))?;
    check_positive("cone.slope", c.slope)?;
    check_finite("cone.vertex_value", c.vertex_value)?;
    check_finite("cone.u_star", c.u_star)?;
    let upper = c.u_upper.unwrap_or(f64::INFINITY);
    if upper.is_nan() || upper < c.vertex_value || c.vertex_value < c.u_star {
        return Err(invalid("cone.vertex_value", "must lie between u_star and u_upper"));
    }
    let space = build_space(cfg, base)?;
    let g = build_absorption("absorption", &cfg.absorption, base)?;
    let z = resolve_node("cone.center", &space, &c.center)?;
    let build = |dir| make_cone(&space, z, c.slope, &g, c.vertex_value, dir, c.u_star, upper).map_err(at("cone"));
    let fwd = build(Direction::Forward)?;
    let bwd = build(Direction::Backward)?;

    let mut csv = String::new();
    let backward = std::iter::once(String::from("backward")).chain(bwd.values.iter().map(|v| v.to_string()));
    for (line, b) in node_csv(&space, &fwd.values, "forward").lines().zip(backward) {
        csv.push_str(line);
        csv.push(',');
        csv.push_str(&b);
        csv.push('\n');
    }
    files.push(("cones.csv".into(), csv));

    let mut r = Report::new("cones");
    let mut series = Vec::new();
    for (name, cone, dir) in [("forward", &fwd, Direction::Forward), ("backward", &bwd, Direction::Backward)] {
        let lip = lipschitz_constant_global(&space, &cone.values).map_err(at("space"))?;
        let bound = cone.lipschitz_bound();
        r.row(name, "slope", cone.slope)
            .row(name, "vertex_value", cone.vertex_value)
            .row(name, "lipschitz", lip)
            .row(name, "lipschitz_bound", bound)
            .row(name, "min", cone.values.iter().copied().fold(f64::INFINITY, f64::min))
            .row(name, "max", cone.values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .margin(&format!("{name}/lipschitz_excess"), lip - bound);
        let d = distance_field(&space, &[z], dir).map_err(at("cone.center"))?;
        let mut pts: Vec<(f64, f64)> = space
            .nodes()
            .filter(|&x| d.get(x).is_finite())
            .map(|x| (d.get(x), cone.values[x]))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        series.push(Series::new(format!("{name} cone"), thin(pts)));
    }
    r.row("profile", "ko_flag", if fwd.profile.ko_flag() { 1.0 } else { 0.0 });
    let plot = emit_plot(
        &series,
        &PlotStyle {
            title: format!("g-cones, {}", g.describe()),
            x_label: "distance to the vertex".into(),
            y_label: "value".into(),
            ..PlotStyle::default()
        },
    );
    Ok(outcome(r, plot))
}

fn eta(cfg: &ExperimentConfig, base: &Path, files: &mut Files) -> Result<Outcome, CliError> {
    let e = cfg.eta.as_ref().ok_or_else(|| invalid("eta", "is required"))?;
    check_finite("eta.u_star", e.u_star)?;
    check_finite("eta.b", e.b)?;
    if e.b < 0.0 {
        return Err(invalid("eta.b", "must be nonnegative"));
    }
    check_positive("eta.span", e.span)?;
    if let Some(dt) = e.dt {
        check_positive("eta.dt", dt)?;
    }
    if e.stride == 0 {
        return Err(invalid("eta.stride", "must be at least 1"));
    }
    let g = build_absorption("absorption", &cfg.absorption, base)?;
    let p = solve_eta(&g, e.u_star, e.b, e.span, e.dt).map_err(at("eta"))?;
    files.push(("profile.csv".into(), p.to_csv(e.stride)));

    let mut r = Report::new("eta");
    let label = g.describe();
    r.row(&label, "u_star", e.u_star)
        .row(&label, "b", e.b)
        .row(&label, "dt", p.dt())
        .row(&label, "span", p.span())
        .row(&label, "samples", p.samples().len() as f64)
        .row(&label, "first_integral_residual", p.first_integral_residual())
        .row(&label, "ko_flag", if p.ko_flag() { 1.0 } else { 0.0 })
        .row(&label, "truncated", if p.truncated() { 1.0 } else { 0.0 })
        .margin(&format!("{label}/first_integral_residual"), p.first_integral_residual());
    let c = match g {
        Absorption::Zero => Some(0.0),
        Absorption::Constant(c) => Some(c),
        _ => None,
    };
    if let Some(c) = c {
        // closed form u_* + bt + (c/2)t²
        let err = p
            .samples()
            .iter()
            .map(|s| (s.eta - (e.u_star + e.b * s.t + 0.5 * c * s.t * s.t)).abs())
            .fold(0.0, f64::max);
        r.row(&label, "closed_form_error", err)
            .margin(&format!("{label}/closed_form_error"), err);
    }
    let eta_pts = p.samples().iter().map(|s| (s.t, s.eta)).collect();
    let slope_pts = p.samples().iter().map(|s| (s.t, s.eta_prime)).collect();
    let plot = emit_plot(
        &[Series::new("eta", thin(eta_pts)), Series::new("eta'", thin(slope_pts))],
        &PlotStyle {
            title: format!("profile, {label}, b = {}", e.b),
            x_label: "t".into(),
            y_label: "value".into(),
            ..PlotStyle::default()
        },
    );
    Ok(outcome(r, plot))
}

fn capacity_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let family = build_family(cfg)?;
    let c = cfg.capacity.as_ref().ok_or_else(|| invalid("capacity", "is required"))?;
    check_positive("capacity.big_r", c.big_r)?;
    for (i, r) in c.rs.iter().enumerate() {
        check_positive(&format!("capacity.rs[{i}]"), *r)?;
    }
    let est = capacity(&family, &c.k, c.big_r, &c.rs).map_err(at("capacity"))?;
    let mut r = est.to_report("capacity");
    let worst = est
        .rows
        .iter()
        .map(|row| (row.lipschitz - c.big_r / row.r).abs())
        .fold(0.0, f64::max);
    r.margin("capacity/lipschitz_minus_R_over_r", worst);
    let mut series = vec![
        Series::new("Lip(u_r)", est.rows.iter().map(|row| (row.r, row.lipschitz)).collect()),
        Series::new("R/r", est.rows.iter().map(|row| (row.r, c.big_r / row.r)).collect()),
    ];
    if let Some(lb) = est.lower_bound {
        series.push(Series::new("1/D", est.rows.iter().map(|row| (row.r, lb)).collect()));
    }
    if let Some(s) = &c.search {
        check_positive("capacity.search.radius", s.radius)?;
        check_positive("capacity.search.tol", s.tol)?;
        let found = candidate_search(&family, &c.k, s.radius, s.samples, cfg.seed, s.tol).map_err(at("capacity.search"))?;
        r.row("search", "samples", found.samples as f64)
            .row("search", "escape_distance", found.escape_distance)
            .row("search", "lower_bound", found.lower_bound)
            .row("search", "smallest", found.smallest)
            .row("search", "below_bound", found.below_bound as f64)
            .margin("search/smallest_minus_bound", found.smallest - found.lower_bound)
            .verdict("search", if found.below_bound == 0 { "BOUND HOLDS" } else { "BOUND VIOLATED" })
            .require(found.below_bound == 0);
    }
    let plot = emit_plot(
        &series,
        &PlotStyle {
            title: "capacity candidates".into(),
            x_label: "r".into(),
            y_label: "Lipschitz number".into(),
            log_x: true,
            log_y: true,
            ..PlotStyle::default()
        },
    );
    Ok(outcome(r, plot))
}

fn completeness(cfg: &ExperimentConfig, base: &Path) -> Result<Outcome, CliError> {
    let family = build_family(cfg)?;
    let section = cfg.completeness.clone().unwrap_or(CompletenessSection {
        absorptions: vec![AbsorptionConfig::Zero],
        decay_ratio: 0.25,
    });
    let ccfg = completeness_config(cfg, &section)?;
    let mut r = Report::new("detect-completeness");
    let mut series = Vec::new();
    let mut verdicts = Vec::new();
    for (i, a) in section.absorptions.iter().enumerate() {
        let path = format!("completeness.absorptions[{i}]");
        let g = build_absorption(&path, a, base)?;
        let rep = detect_completeness(&family, &g, &ccfg).map_err(at(&path))?;
        let label = g.describe();
        series.push(Series::new(
            format!("m_j, {label}"),
            rep.radii.iter().copied().zip(rep.maxima.iter().copied()).collect(),
        ));
        verdicts.push(rep.verdict);
        r.absorb(&label, rep.to_report("exhaustion"));
    }
    let agree = verdicts.windows(2).all(|w| w[0] == w[1]);
    r.verdict("verdict", verdicts[0])
        .verdict("agreement", if agree { "AGREE" } else { "DISAGREE" })
        .require(agree);
    let plot = emit_plot(
        &series,
        &PlotStyle {
            title: "probe maxima".into(),
            x_label: "truncation radius".into(),
            y_label: "m_j".into(),
            log_x: true,
            log_y: true,
            ..PlotStyle::default()
        },
    );
    Ok(outcome(r, plot))
}

/// A random Ekeland instance: a digraph, a function, a start and `(ε, δ)`.
#[derive(Clone, Debug)]
pub struct EkelandInstance {
    pub space: QuasiMetricSpace,
    pub u: Vec<f64>,
    pub x0: NodeId,
    pub eps: f64,
    pub delta: f64,
}

fn draw(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo < hi {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

fn validate_ekeland(s: &EkelandSection) -> Result<(), CliError> {
    if s.nodes < 2 {
        return Err(invalid("ekeland.nodes", "must be at least 2"));
    }
    check_positive("ekeland.eps_min", s.eps_min)?;
    check_positive("ekeland.delta_min", s.delta_min)?;
    check_finite("ekeland.eps_max", s.eps_max)?;
    check_finite("ekeland.delta_max", s.delta_max)?;
    if s.eps_max < s.eps_min {
        return Err(invalid("ekeland.eps_max", "must not be below eps_min"));
    }
    if s.delta_max < s.delta_min {
        return Err(invalid("ekeland.delta_max", "must not be below delta_min"));
    }
    Ok(())
}

/// Instance `i` of a seeded family: a bidirectional ring plus `extra_edges`
/// random arcs, weights uniform in `(0.1, 2)`, `u` uniform in `[0, 1]`, and
/// `x₀` drawn among the nodes with `u > sup u − ε`.
pub fn ekeland_instance(s: &EkelandSection, seed: u64, i: usize) -> EkelandInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
    let n = s.nodes.max(2);
    let mut edges = Vec::with_capacity(2 * n + s.extra_edges);
    for k in 0..n {
        let next = (k + 1) % n;
        edges.push((k, next, rng.gen_range(0.1..2.0)));
        edges.push((next, k, rng.gen_range(0.1..2.0)));
    }
    for _ in 0..s.extra_edges {
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        edges.push((a, b, rng.gen_range(0.1..2.0)));
    }
    let space = QuasiMetricSpace::from_edges(n, edges).expect("generated edges are valid");
    let u: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let eps = draw(&mut rng, s.eps_min, s.eps_max);
    let delta = draw(&mut rng, s.delta_min, s.delta_max);
    let sup = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let near: Vec<NodeId> = (0..n).filter(|&x| u[x] > sup - eps).collect();
    let x0 = near[rng.gen_range(0..near.len())];
    EkelandInstance {
        space,
        u,
        x0,
        eps,
        delta,
    }
}

fn ekeland(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let s = cfg.ekeland.as_ref().ok_or_else(|| invalid("ekeland", "is required"))?;
    validate_ekeland(s)?;
    let mut r = Report::new("ekeland");
    let mut failures = 0usize;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_ratio = 0.0f64;
    let mut ratios = Vec::with_capacity(s.instances);
    for i in 0..s.instances {
        let inst = ekeland_instance(s, cfg.seed, i);
        let p = ekeland_point(&inst.space, &inst.u, inst.x0, inst.eps, inst.delta).map_err(at("ekeland"))?;
        let c = &p.certificate;
        if !c.holds() {
            failures += 1;
        }
        let ratio = c.d_x0_xbar / inst.delta;
        worst_excess = worst_excess.max(c.worst_cone_excess);
        worst_ratio = worst_ratio.max(ratio);
        ratios.push((i as f64, ratio));
        let param = format!("instance={i}");
        r.row(&param, "x0", inst.x0 as f64)
            .row(&param, "point", p.point as f64)
            .row(&param, "moves", (p.chain.len() - 1) as f64)
            .row(&param, "d_over_delta", ratio)
            .row(&param, "cone_excess", c.worst_cone_excess);
    }
    r.row("all", "instances", s.instances as f64)
        .row("all", "failures", failures as f64)
        .margin("all/cone_excess", worst_excess)
        .margin("all/d_over_delta", worst_ratio)
        .verdict("all", if failures == 0 { "CERTIFIED" } else { "FAILED" })
        .require(failures == 0);
    let plot = emit_plot(
        &[Series::new("d(x0, xbar) / delta", thin(ratios))],
        &PlotStyle {
            title: "Ekeland points".into(),
            x_label: "instance".into(),
            y_label: "distance / delta".into(),
            ..PlotStyle::default()
        },
    );
    Ok(outcome(r, plot))
}

fn theta(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let s = cfg.theta.as_ref().ok_or_else(|| invalid("theta", "is required"))?;
    let cases = theta_cases(s)?;
    let scheme = s.scheme.clone().unwrap_or_else(theta_scheme);
    validate_scheme("theta.scheme", &scheme)?;
    let mut r = Report::new("theta");
    let mut series = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let study = theta_refinement(case, &s.hs, &scheme).map_err(at(&format!("theta.cases[{i}]")))?;
        let ok = study.passes(s.min_order);
        series.push(Series::new(
            format!("lambda = {}, theta = {}", case.lambda, case.theta),
            study.reports.iter().map(|rep| (rep.h, rep.sup_error)).collect(),
        ));
        let label = format!("case={i}");
        let mut rep = study.to_report();
        let verdict = match (study.exact(), ok) {
            (true, _) => "EXACT",
            (false, true) => "OK",
            (false, false) => "TOO LOW",
        };
        rep.verdict("order", verdict).require(ok);
        r.absorb(&label, rep);
    }
    let plot = emit_plot(
        &series,
        &PlotStyle {
            title: "power-absorption witness".into(),
            x_label: "h".into(),
            y_label: "sup error".into(),
            log_x: true,
            log_y: true,
            ..PlotStyle::default()
        },
    );
    Ok(outcome(r, plot))
}

fn verify(cfg: &ExperimentConfig, base: &Path, files: &mut Files) -> Result<Outcome, CliError> {
    let (space, g, bd) = dirichlet_setup(cfg, base)?;
    let vs = cfg.verify.clone().unwrap_or(VerifySection {
        lipschitz_slack: 10.0,
        convolution_hops: Vec::new(),
        convolution_tol: 1e-9,
    });
    if !(vs.lipschitz_slack >= 0.0 && vs.lipschitz_slack.is_finite()) {
        return Err(invalid("verify.lipschitz_slack", "must be nonnegative and finite"));
    }
    check_positive("verify.convolution_tol", vs.convolution_tol)?;
    for (i, k) in vs.convolution_hops.iter().enumerate() {
        let p = format!("verify.convolution_hops[{i}]");
        check_positive(&p, *k)?;
        if *k < 1.0 {
            return Err(invalid(&p, "must be at least one hop"));
        }
    }
    let interior = bd.interior_nodes();
    if interior.is_empty() {
        return Err(invalid("boundary", "leaves no interior nodes"));
    }
    let st = solve_dirichlet(&space, &bd, &g, &cfg.scheme).map_err(at("scheme"))?;
    files.push(("solution.csv".into(), st.u.to_csv(&space)));
    files.push(("trace.csv".into(), st.trace_csv()));
    let mut r = Report::new("verify");
    state_rows(&mut r, "scheme", &st);
    let mut failed = Vec::new();
    let eps = st.epsilon;
    let u = &st.u;
    let lip = lipschitz_constant_global(&space, &u.values).map_err(at("space"))?;

    // the scheme residual bounds the subsolution defect: defect = 2·residual/ε²
    let defect_tol = 4.0 * st.equation_residual / (eps * eps) + 1e-9;
    let wmp_tol = 2.0 * eps * lip;
    match wmp_check(&space, u, &interior, &g, Some(eps), defect_tol) {
        Ok(w) => {
            let gap_ok = w.gap <= wmp_tol;
            let max_ok = w.max_on_boundary(wmp_tol);
            r.row("wmp", "gap", w.gap)
                .row("wmp", "tolerance", wmp_tol)
                .row("wmp", "worst_defect", w.worst_defect)
                .row("wmp", "sup_boundary", w.sup_boundary)
                .row("wmp", "inf_boundary", w.inf_boundary)
                .margin("wmp/gap_minus_tolerance", w.gap - wmp_tol)
                .verdict("wmp", if gap_ok { "HOLDS" } else { "VIOLATED" })
                .verdict("max_on_boundary", max_ok)
                .require(gap_ok && max_ok);
            if !gap_ok {
                failed.push(format!("sup gap {} exceeds {wmp_tol}", w.gap));
            }
            if !max_ok {
                failed.push("maximum is not attained on the boundary".to_string());
            }
            if g.is_zero() {
                let min_ok = w.min_on_boundary(wmp_tol);
                r.verdict("min_on_boundary", min_ok).require(min_ok);
                if !min_ok {
                    failed.push("minimum is not attained on the boundary".to_string());
                }
            }
        }
        Err(crate::Error::NotSubsolution { node, defect }) => {
            r.verdict("wmp", "NOT A SUBSOLUTION").require(false);
            failed.push(format!("solution is not a subsolution at node {node} (defect {defect})"));
        }
        Err(e) => return Err(at("verify")(e)),
    }

    let lip_boundary = lipschitz_constant(&space, &u.values, &bd.boundary_nodes()).map_err(at("boundary"))?;
    let (lo, hi) = (u.min(), u.max());
    let bound = (lip_boundary * lip_boundary + 2.0 * g.positive_integral(lo, hi)).sqrt() * (1.0 + vs.lipschitz_slack * eps);
    let lip_ok = lip <= bound;
    r.row("lipschitz", "interior", lip)
        .row("lipschitz", "boundary", lip_boundary)
        .row("lipschitz", "bound", bound)
        .margin("lipschitz/excess", lip - bound)
        .verdict("lipschitz", if lip_ok { "HOLDS" } else { "VIOLATED" })
        .require(lip_ok);
    if !lip_ok {
        failed.push(format!("Lipschitz constant {lip} exceeds {bound}"));
    }

    if !vs.convolution_hops.is_empty() {
        if g.is_zero() {
            let omega: Vec<bool> = space.nodes().map(|x| !bd.is_boundary(x)).collect();
            for &hops in &vs.convolution_hops {
                let radius = hops * space.max_edge_weight();
                let scheme = SchemeConfig {
                    epsilon: Some(radius),
                    ..cfg.scheme.clone()
                };
                let st2 = solve_dirichlet(&space, &bd, &g, &scheme).map_err(at("scheme"))?;
                let p = format!("convolution/hops={hops}");
                state_rows(&mut r, &p, &st2);
                let (gap, _) = sup_convolution_gap(&space, &st2.u.values, &omega, radius)
                    .map_err(at("verify.convolution_hops"))?;
                let ok = gap <= vs.convolution_tol;
                r.row(&p, "gap", gap)
                    .margin(&format!("{p}/gap"), gap)
                    .verdict(&p, if ok { "HOLDS" } else { "VIOLATED" })
                    .require(ok);
                if !ok {
                    failed.push(format!("sup-convolution gap {gap} at radius {radius}"));
                }
            }
        } else {
            r.verdict("convolution", "SKIPPED: g is not zero");
        }
    }

    let mut out = outcome(r, trace_plot("verify", &st));
    out.stalled = stalled(&st);
    if !failed.is_empty() {
        out.violation = Some(format!("verify: {}", failed.join("; ")));
    }
    Ok(out)
}
