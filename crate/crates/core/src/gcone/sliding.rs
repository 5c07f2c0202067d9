use super::absorption::Absorption;
use super::profile::{radius_bound, solve_eta_on, EtaProfile};
use crate::error::{Error, Result};
use crate::quasi_metric::{lipschitz_constant, pairwise_distances, NodeId, QuasiMetricSpace};

const TOLERANCE: f64 = 1e-8;
// slack in the sandwich test, far below the bisection tolerance
const SANDWICH_SLACK: f64 = 1e-11;

/// Whether `C̄⁻_{z,b} ≤ u ≤ C̄⁺_{z,b}` on `A` for every `z ∈ A`.
fn sandwiched(
    profile: &EtaProfile,
    u: &[f64],
    set: &[NodeId],
    dist: &[Vec<f64>],
    lo: f64,
    hi: f64,
) -> Result<bool> {
    let r_top = profile.radius(hi)?;
    let slack = SANDWICH_SLACK * (1.0 + lo.abs().max(hi.abs()));
    for (i, &z) in set.iter().enumerate() {
        let rz = profile.radius(u[z])?;
        for (j, &w) in set.iter().enumerate() {
            if i == j {
                continue;
            }
            let d_zw = dist[i][j];
            let upper = if d_zw >= r_top - rz {
                hi
            } else {
                profile.eta(d_zw + rz).min(hi)
            };
            if u[w] > upper + slack {
                return Ok(false);
            }
            let arg = rz - dist[j][i];
            let lower = if arg > 0.0 { profile.eta(arg).max(lo) } else { lo };
            if u[w] < lower - slack {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The sliding slope `b_A`: the infimum of slopes `b` for which forward and
/// backward g-cones centered anywhere in `A` sandwich `u` on `A`. The clamp
/// values `u_*`, `u*` are the min and max of `u` over the whole space.
/// Computed by bisection to `1e-8`.
pub fn sliding_slope(space: &QuasiMetricSpace, u: &[f64], set: &[NodeId], g: &Absorption) -> Result<f64> {
    if u.len() != space.len() {
        return Err(Error::input("function must be defined on every node"));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("function values must be finite"));
    }
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !g.nonnegative_on(lo, hi) {
        return Err(Error::input("sliding slope needs g >= 0 on the range of u"));
    }
    let lip = lipschitz_constant(space, u, set)?;
    let dist = pairwise_distances(space, set)?;
    let floor = g.slope_threshold(lo, hi);
    if hi == lo {
        return Ok(floor);
    }
    let admissible = |b: f64| -> Result<bool> {
        let span = radius_bound(g, lo, b, hi) * (1.0 + 1e-6) + 1e-9;
        let profile = solve_eta_on(g, lo, hi, b, span, None)?;
        sandwiched(&profile, u, set, &dist, lo, hi)
    };
    let (mut a, mut b) = (floor, lip + 1.0);
    let mut grow = 0;
    while !admissible(b)? {
        a = b;
        b *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::domain("no admissible sliding slope found"));
        }
    }
    while b - a > TOLERANCE {
        let mid = 0.5 * (a + b);
        if mid > 0.0 && admissible(mid)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasi_metric::{grid_space, GridSpec, RandersNorm, Stencil};

    #[test]
    fn zero_g_gives_the_lipschitz_constant() {
        let mut spec = GridSpec::integer_box(2, 0, 3, Stencil::Axis);
        spec.norm = RandersNorm::with_drift(&[0.3, 0.1]).unwrap();
        let s = grid_space(&spec).unwrap();
        let u: Vec<f64> = s.nodes().map(|x| ((x * 7919) % 13) as f64 / 13.0).collect();
        let set: Vec<NodeId> = s.nodes().collect();
        let lip = lipschitz_constant(&s, &u, &set).unwrap();
        let b = sliding_slope(&s, &u, &set, &Absorption::Zero).unwrap();
        assert!((b - lip).abs() <= 2e-8, "{b} vs {lip}");
    }

    #[test]
    fn constant_function_has_zero_slope() {
        let s = grid_space(&GridSpec::integer_box(1, 0, 4, Stencil::Axis)).unwrap();
        let set: Vec<NodeId> = s.nodes().collect();
        assert_eq!(sliding_slope(&s, &[1.0; 5], &set, &Absorption::Constant(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn positive_g_slope_stays_below_lipschitz() {
        let s = grid_space(&GridSpec::integer_box(1, 0, 6, Stencil::Axis)).unwrap();
        let u: Vec<f64> = s.nodes().map(|x| (x as f64 * 0.9).sin()).collect();
        let set: Vec<NodeId> = s.nodes().collect();
        let lip = lipschitz_constant(&s, &u, &set).unwrap();
        let b = sliding_slope(&s, &u, &set, &Absorption::Constant(0.7)).unwrap();
        assert!(b <= lip + 1e-8);
        let b_small = sliding_slope(&s, &u, &set[..3], &Absorption::Constant(0.7)).unwrap();
        assert!(b_small <= b + 1e-8);
    }
}
