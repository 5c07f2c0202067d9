//! Property tests for the structural invariants of each layer.

use finsler_lab::cli::{ekeland_instance, parse_config};
use finsler_lab::gcone::{make_cone, sliding_slope, solve_eta, Absorption};
use finsler_lab::principles::{candidate, ekeland_point, verify_ekeland, Report};
use finsler_lab::quasi_metric::{
    forward_distance, grid_space, lipschitz_constant, pairwise_distances, reversibility_constant, Direction, GridSpec,
    QuasiMetricSpace, RandersNorm, Stencil,
};
use finsler_lab::solver::{
    discrete_operator, implicit_update, slope_minus, slope_plus, solve_dirichlet, GridFunction, SchemeConfig,
};
use proptest::prelude::*;

/// A strongly connected digraph: a two-way ring with independent weights in
/// each direction, plus random chords.
fn digraph(max_n: usize) -> impl Strategy<Value = QuasiMetricSpace> {
    (3..max_n)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec((0.1f64..2.0, 0.1f64..2.0), n),
                prop::collection::vec((0..n, 1..n, 0.1f64..2.0), 0..2 * n),
            )
        })
        .prop_map(|(n, ring, chords)| {
            let mut edges = Vec::new();
            for (k, (a, b)) in ring.into_iter().enumerate() {
                edges.push((k, (k + 1) % n, a));
                edges.push(((k + 1) % n, k, b));
            }
            for (a, off, w) in chords {
                edges.push((a, (a + off) % n, w));
            }
            QuasiMetricSpace::from_edges(n, edges).unwrap()
        })
}

fn with_values(max_n: usize) -> impl Strategy<Value = (QuasiMetricSpace, Vec<f64>)> {
    (digraph(max_n), prop::collection::vec(-2.0f64..2.0, max_n)).prop_map(|(s, mut u)| {
        u.truncate(s.len());
        (s, u)
    })
}

/// `A ⊆ B` from flag pairs, both containing nodes 0 and 1.
fn nested(flags: &[(bool, bool)]) -> (Vec<usize>, Vec<usize>) {
    let pick = |f: &dyn Fn(&(bool, bool)) -> bool| -> Vec<usize> {
        (0..flags.len()).filter(|&i| i < 2 || f(&flags[i])).collect()
    };
    (pick(&|f| f.0 && f.1), pick(&|f| f.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distances_satisfy_the_directed_triangle_inequality(s in digraph(14)) {
        for src in s.nodes() {
            let d = forward_distance(&s, &[src]).unwrap();
            prop_assert_eq!(d.get(src), 0.0);
            for (x, y, w) in s.edges() {
                prop_assert!(d.get(y) <= d.get(x) + w + 1e-12);
            }
            for y in s.nodes().filter(|&y| y != src) {
                prop_assert!(d.get(y) > 0.0);
            }
        }
    }

    #[test]
    fn lipschitz_constant_is_monotone_and_attained(
        (s, u) in with_values(12),
        flags in prop::collection::vec(any::<(bool, bool)>(), 12),
    ) {
        let (a, b) = nested(&flags[..s.len()]);
        let la = lipschitz_constant(&s, &u, &a).unwrap();
        let lb = lipschitz_constant(&s, &u, &b).unwrap();
        prop_assert!(la <= lb);
        let d = pairwise_distances(&s, &a).unwrap();
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in a.iter().enumerate() {
                prop_assert!(u[y] <= u[x] + la * d[i][j] + 1e-12 * (1.0 + u[x].abs()));
            }
        }
    }

    #[test]
    fn reversibility_is_one_exactly_for_symmetric_distances(s in digraph(10)) {
        let all: Vec<usize> = s.nodes().collect();
        let c = reversibility_constant(&s, &all).unwrap();
        let d = pairwise_distances(&s, &all).unwrap();
        let symmetric = (0..all.len()).all(|i| (0..all.len()).all(|j| d[i][j] == d[j][i]));
        prop_assert!(c >= 1.0);
        prop_assert_eq!(c == 1.0, symmetric);
    }

    #[test]
    fn symmetrized_graphs_have_unit_reversibility(s in digraph(10)) {
        let edges: Vec<_> = s.edges().flat_map(|(x, y, w)| [(x, y, w), (y, x, w)]).collect();
        let sym = QuasiMetricSpace::from_edges(s.len(), edges).unwrap();
        let all: Vec<usize> = sym.nodes().collect();
        let c = reversibility_constant(&sym, &all).unwrap();
        prop_assert!((c - 1.0).abs() <= 4.0 * f64::EPSILON, "{}", c);
    }

    #[test]
    fn dual_norm_dominates_every_quotient(
        beta in (-0.6f64..0.6, -0.6f64..0.6),
        xi in (-3.0f64..3.0, -3.0f64..3.0),
        v in (-3.0f64..3.0, -3.0f64..3.0),
    ) {
        prop_assume!(beta.0.hypot(beta.1) < 0.8 && v.0.hypot(v.1) > 1e-3);
        let f = RandersNorm::with_drift(&[beta.0, beta.1]).unwrap();
        let dual = f.dual(&[xi.0, xi.1]);
        let q = (xi.0 * v.0 + xi.1 * v.1) / f.eval(&[v.0, v.1]);
        prop_assert!(dual >= q - 1e-12 * (1.0 + q.abs()), "{} < {}", dual, q);
    }

    #[test]
    fn quadratic_profiles_satisfy_the_first_integral(c in 0.0f64..3.0, b in 0.1f64..3.0, u0 in -1.0f64..1.0) {
        let p = solve_eta(&Absorption::constant(c).unwrap(), u0, b, 5.0, None).unwrap();
        prop_assert!(p.first_integral_residual() <= 1e-8);
    }

    #[test]
    fn profiles_increase_with_the_slope(lambda in 0.5f64..4.0, theta in 0.3f64..1.5, b1 in 0.05f64..2.0, db in 0.01f64..1.0) {
        let g = Absorption::power(lambda, theta).unwrap();
        let b2 = b1 + db;
        let p1 = solve_eta(&g, 0.0, b1, 2.0, None).unwrap();
        let p2 = solve_eta(&g, 0.0, b2, 2.0, None).unwrap();
        let top = 5.0;
        for k in 0..=200 {
            let t = 2.0 * k as f64 / 200.0;
            let (e1, e2) = (p1.eta(t), p2.eta(t));
            if e2 > top {
                break;
            }
            prop_assert!(e1 <= e2 + 1e-12, "t = {}: {} > {}", t, e1, e2);
        }
        for a in [0.1, 0.5, 1.0, 2.0] {
            let (r1, r2) = (p1.radius(a).unwrap(), p2.radius(a).unwrap());
            prop_assert!(r2 <= r1 + 1e-12);
        }
        prop_assert_eq!(p1.radius(0.0).unwrap(), 0.0);
    }

    #[test]
    fn slope_growth_obeys_the_energy_bound(c in -0.5f64..2.0, b in 1.1f64..3.0, a1 in 0.0f64..1.0, da in 0.0f64..2.0) {
        // max η' on [R(a1), R(a2)] against sqrt(η'(R(a1))² + 2∫_{a1}^{a2} g₊)
        let g = Absorption::constant(c).unwrap();
        let p = solve_eta(&g, 0.0, b, 1.0, None);
        prop_assume!(p.is_ok());
        let p = p.unwrap();
        let a2 = a1 + da;
        let (r1, r2) = (p.radius(a1).unwrap(), p.radius(a2).unwrap());
        prop_assume!(r2.is_finite());
        let start = p.eval_with_slope(r1).1;
        let bound = (start * start + 2.0 * g.positive_integral(a1, a2)).sqrt() + 1e-8;
        for k in 0..=100 {
            let t = r1 + (r2 - r1) * k as f64 / 100.0;
            prop_assert!(p.eval_with_slope(t).1 <= bound);
        }
    }

    #[test]
    fn zero_absorption_cones_are_linear(s in digraph(12), b in 0.1f64..3.0, v in 0.0f64..2.0) {
        let z = 0;
        let fwd = make_cone(&s, z, b, &Absorption::Zero, v, Direction::Forward, 0.0, f64::INFINITY).unwrap();
        let d = forward_distance(&s, &[z]).unwrap();
        for x in s.nodes() {
            prop_assert!((fwd.values[x] - (v + b * d.get(x))).abs() <= 1e-12 * (1.0 + fwd.values[x].abs()));
        }
        let back = finsler_lab::quasi_metric::backward_distance(&s, &[z]).unwrap();
        let floor = v - b * back.max_finite() - 1.0;
        let bwd = make_cone(&s, z, b, &Absorption::Zero, v, Direction::Backward, floor, v).unwrap();
        for x in s.nodes() {
            prop_assert!((bwd.values[x] - (v - b * back.get(x))).abs() <= 1e-12 * (1.0 + bwd.values[x].abs()));
        }
    }

    #[test]
    fn sliding_slope_is_monotone_under_inclusion((s, u) in with_values(8), c in 0.0f64..1.5) {
        let n = s.len();
        let a: Vec<usize> = (0..n / 2 + 1).collect();
        let b: Vec<usize> = (0..n).collect();
        let g = Absorption::constant(c).unwrap();
        let sa = sliding_slope(&s, &u, &a, &g).unwrap();
        let sb = sliding_slope(&s, &u, &b, &g).unwrap();
        prop_assert!(sa <= sb + 2e-8, "{} > {}", sa, sb);
    }

    #[test]
    fn implicit_update_is_monotone(
        big in -1.0f64..2.0, small_gap in 0.0f64..2.0, bump in 0.0f64..0.5,
        c in 0.0f64..0.1, lambda in 0.0f64..3.0,
    ) {
        let small = big - small_gap;
        let g = Absorption::power(lambda.max(1e-9), 1.0).unwrap();
        let base = implicit_update(big, small, c, &g, 0.5 * (big + small));
        let up_big = implicit_update(big + bump, small, c, &g, 0.5 * (big + small));
        let up_small = implicit_update(big, (small + bump).min(big + bump), c, &g, 0.5 * (big + small));
        prop_assert!(up_big >= base - 1e-12);
        prop_assert!(up_small >= base - 1e-12);
    }

    #[test]
    fn ordered_boundary_data_give_ordered_solutions(
        data in prop::collection::vec((-1.0f64..1.0, 0.0f64..0.5), 16),
        beta in -0.4f64..0.4,
    ) {
        let mut spec = GridSpec::integer_box(2, 0, 5, Stencil::Axis);
        spec.norm = RandersNorm::with_drift(&[beta, 0.0]).unwrap();
        let s = grid_space(&spec).unwrap();
        let frontier = s.frontier_nodes();
        let lower: Vec<(usize, f64)> = frontier.iter().zip(data.iter().cycle()).map(|(&x, d)| (x, d.0)).collect();
        let upper: Vec<(usize, f64)> = frontier.iter().zip(data.iter().cycle()).map(|(&x, d)| (x, d.0 + d.1)).collect();
        let cfg = SchemeConfig { tol: 1e-13, ..SchemeConfig::default() };
        let g = Absorption::Zero;
        let u1 = solve_dirichlet(&s, &GridFunction::from_boundary(s.len(), &lower).unwrap(), &g, &cfg).unwrap();
        let u2 = solve_dirichlet(&s, &GridFunction::from_boundary(s.len(), &upper).unwrap(), &g, &cfg).unwrap();
        prop_assert!(u1.converged && u2.converged);
        for x in s.nodes() {
            prop_assert!(u1.u.values[x] <= u2.u.values[x] + 1e-10);
        }
        // extrema sit on the boundary
        let (lo, hi) = u1.u.boundary_range().unwrap();
        prop_assert!(u1.u.max() <= hi + 1e-10 && u1.u.min() >= lo - 1e-10);
    }

    #[test]
    fn ekeland_points_are_certified(seed in any::<u64>(), nodes in 2usize..25, extra in 0usize..40) {
        let cfg = parse_config(&format!(
            r#"{{"ekeland": {{"instances": 1, "nodes": {nodes}, "extra_edges": {extra},
                "eps_min": 0.01, "eps_max": 1.0, "delta_min": 0.05, "delta_max": 3.0}}}}"#
        )).unwrap();
        let inst = ekeland_instance(cfg.ekeland.as_ref().unwrap(), seed, 0);
        let p = ekeland_point(&inst.space, &inst.u, inst.x0, inst.eps, inst.delta).unwrap();
        prop_assert!(p.certificate.holds());
        let again = verify_ekeland(&inst.space, &inst.u, inst.x0, inst.eps, inst.delta, p.point).unwrap();
        prop_assert_eq!(again, p.certificate);
    }

    #[test]
    fn capacity_candidates_have_lipschitz_r_over_big_r(big_r in 1.0f64..4.0, ratio in 1.01f64..10.0) {
        let r = big_r * ratio;
        let s = grid_space(&GridSpec::integer_box(2, -12, 12, Stencil::Axis)).unwrap();
        let z = s.nearest_node(&[0.0, 0.0]).unwrap();
        let rho = forward_distance(&s, &[z]).unwrap().values;
        let u = candidate(&rho, big_r, r);
        let lip = finsler_lab::quasi_metric::lipschitz_constant_global(&s, &u).unwrap();
        // on the integer lattice a unit step realizes the slope when R/r ≤ 1
        prop_assert!((lip - big_r / r).abs() <= 4.0 * f64::EPSILON * (1.0 + big_r * 12.0 / r));
    }

    #[test]
    fn csv_numbers_round_trip_through_the_summary(values in prop::collection::vec(any::<f64>(), 1..20)) {
        let mut rep = Report::new("prop");
        for (i, v) in values.iter().enumerate() {
            rep.row(format!("p{i}"), "value", *v);
        }
        let summary = rep.summary();
        let rows = summary["rows"].as_array().unwrap();
        for (line, row) in rep.csv().lines().skip(1).zip(rows) {
            let from_csv: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            let from_json: f64 = match &row["value"] {
                serde_json::Value::Number(n) => n.as_f64().unwrap(),
                serde_json::Value::String(s) => s.parse().unwrap(),
                other => panic!("unexpected {other}"),
            };
            prop_assert!(from_csv.to_bits() == from_json.to_bits() || (from_csv.is_nan() && from_json.is_nan()));
        }
    }
}

/// `op(η∘φ) ≈ η'(φ)·op(φ) + η''(φ)·(S⁺φ² + S⁻φ²)/2` with an error that
/// shrinks with the ball radius.
#[test]
fn discrete_chain_rule_is_consistent() {
    let x0 = [0.3, 0.2];
    let phi = |p: &[f64]| p[0] + 0.5 * p[1] * p[1] + 0.3 * p[0] * p[1];
    let mut errors = Vec::new();
    for h in [0.1, 0.05, 0.025] {
        let spec = GridSpec {
            norm: RandersNorm::with_drift(&[0.2, -0.1]).unwrap(),
            lower: vec![-1.0, -1.0],
            upper: vec![1.0, 1.0],
            h,
            stencil: Stencil::Moore,
            mask: Default::default(),
        };
        let s = grid_space(&spec).unwrap();
        let x = s.nearest_node(&x0).unwrap();
        let f: Vec<f64> = s.nodes().map(|y| phi(s.coords(y).unwrap())).collect();
        let composed: Vec<f64> = f.iter().map(|v| v.exp()).collect();
        let eps = 2.0 * h;
        let lhs = discrete_operator(&s, &composed, x, eps).unwrap();
        let sp = slope_plus(&s, &f, x, eps).unwrap();
        let sm = slope_minus(&s, &f, x, eps).unwrap();
        let e = f[x].exp();
        let rhs = e * discrete_operator(&s, &f, x, eps).unwrap() + e * 0.5 * (sp * sp + sm * sm);
        errors.push((lhs - rhs).abs());
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 0.9, "errors {errors:?}");
    }
}
