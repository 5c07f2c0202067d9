use super::absorption::Absorption;
use super::quad::{gk15, integrate};
use crate::error::{Error, Result};

/// Number of steps used when no explicit `dt` is given.
pub const DEFAULT_STEPS: usize = 100_000;

/// Margin by which a positive slope must exceed its admissibility threshold.
pub const SLOPE_MARGIN: f64 = 1e-12;

// values beyond this are treated as blow-up
const BLOW_UP: f64 = 1e150;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub eta: f64,
    pub eta_prime: f64,
}

/// Sampled solution of `η'' = g(η)`, `η(0) = u_*`, `η'(0) = b` on `[0, T]`.
#[derive(Clone, Debug)]
pub struct EtaProfile {
    g: Absorption,
    b: f64,
    u_star: f64,
    dt: f64,
    samples: Vec<Sample>,
    ko: bool,
    truncated: bool,
}

/// Solves the profile equation on `[0, span]`.
///
/// With `b > 0`, fourth-order Runge–Kutta at fixed step `dt` (default
/// `span / 10⁵`); the slope must exceed `sqrt(max(-G_*, 0))` on the range
/// the profile sweeps. With `b = 0` and `g ≥ 0`: if the Keller–Osserman
/// integral converges, the profile is the inverse of
/// `t = ∫_{u_*}^η ds / sqrt(G(s))`; otherwise `η ≡ u_*`.
pub fn solve_eta(g: &Absorption, u_star: f64, b: f64, span: f64, dt: Option<f64>) -> Result<EtaProfile> {
    solve_eta_on(g, u_star, f64::INFINITY, b, span, dt)
}

/// As [`solve_eta`], with admissibility checked up front on `[u_star, u_upper]`.
pub fn solve_eta_on(
    g: &Absorption,
    u_star: f64,
    u_upper: f64,
    b: f64,
    span: f64,
    dt: Option<f64>,
) -> Result<EtaProfile> {
    if !u_star.is_finite() {
        return Err(Error::input("u_star must be finite"));
    }
    if !(u_upper >= u_star) {
        return Err(Error::input("u_upper must be at least u_star"));
    }
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::input(format!("profile span must be positive, got {span}")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::input(format!("slope must be finite and nonnegative, got {b}")));
    }
    let dt = dt.unwrap_or(span / DEFAULT_STEPS as f64);
    if !(dt > 0.0 && dt <= span) {
        return Err(Error::input(format!("step dt must lie in (0, span], got {dt}")));
    }
    if u_upper.is_finite() {
        check_slope(g, u_star, u_upper, b)?;
    }
    let profile = if b == 0.0 {
        if g.eval(u_star) < 0.0 {
            return Err(Error::SlopeInadmissible { slope: 0.0, threshold: 0.0 });
        }
        if g.keller_osserman(u_star) {
            integral_branch(g, u_star, span, dt)
        } else {
            constant_branch(g, u_star, span, dt)
        }
    } else {
        runge_kutta(g, u_star, b, span, dt)?
    };
    if !u_upper.is_finite() {
        let top = profile.samples.last().map_or(u_star, |s| s.eta);
        check_slope(g, u_star, top, b)?;
    }
    Ok(profile)
}

fn check_slope(g: &Absorption, u_star: f64, u_upper: f64, b: f64) -> Result<()> {
    let threshold = g.slope_threshold(u_star, u_upper);
    let ok = if b == 0.0 {
        g.nonnegative_on(u_star, u_upper)
    } else if threshold == 0.0 {
        true
    } else {
        b > threshold + SLOPE_MARGIN
    };
    if ok {
        Ok(())
    } else {
        Err(Error::SlopeInadmissible { slope: b, threshold })
    }
}

fn runge_kutta(g: &Absorption, u_star: f64, b: f64, span: f64, dt: f64) -> Result<EtaProfile> {
    let steps = (span / dt).ceil() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    let (mut y, mut v) = (u_star, b);
    let (mut cy, mut cv) = (0.0, 0.0);
    samples.push(Sample { t: 0.0, eta: y, eta_prime: v });
    let mut truncated = false;
    for k in 1..=steps {
        let t = (k as f64 * dt).min(span);
        let h = t - samples[k - 1].t;
        let k1y = v;
        let k1v = g.eval(y);
        let k2y = v + 0.5 * h * k1v;
        let k2v = g.eval(y + 0.5 * h * k1y);
        let k3y = v + 0.5 * h * k2v;
        let k3v = g.eval(y + 0.5 * h * k2y);
        let k4y = v + h * k3v;
        let k4v = g.eval(y + h * k3y);
        // compensated sums keep round-off from piling up over 10⁵ steps
        let dy = h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) - cy;
        let ny = y + dy;
        cy = (ny - y) - dy;
        y = ny;
        let dv = h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) - cv;
        let nv = v + dv;
        cv = (nv - v) - dv;
        v = nv;
        if !(y.abs() < BLOW_UP && v.abs() < BLOW_UP) {
            truncated = true;
            break;
        }
        if v <= 0.0 {
            // the slope ran out: a turning point, so b is below the threshold
            let threshold = g.slope_threshold(u_star, y.max(samples[k - 1].eta));
            return Err(Error::SlopeInadmissible { slope: b, threshold });
        }
        samples.push(Sample { t, eta: y, eta_prime: v });
    }
    Ok(EtaProfile {
        g: g.clone(),
        b,
        u_star,
        dt,
        samples,
        ko: g.keller_osserman(u_star),
        truncated,
    })
}

fn constant_branch(g: &Absorption, u_star: f64, span: f64, dt: f64) -> EtaProfile {
    let steps = (span / dt).ceil() as usize;
    let samples = (0..=steps)
        .map(|k| Sample {
            t: (k as f64 * dt).min(span),
            eta: u_star,
            eta_prime: 0.0,
        })
        .collect();
    EtaProfile {
        g: g.clone(),
        b: 0.0,
        u_star,
        dt,
        samples,
        ko: false,
        truncated: false,
    }
}

/// `t(η) = ∫_{u_*}^{η} ds / sqrt(G(s))`, through `s = u_* + σ²` so that the
/// endpoint singularity becomes integrable and mild.
pub fn implicit_time(g: &Absorption, u_star: f64, eta: f64) -> f64 {
    if eta <= u_star {
        return 0.0;
    }
    let q = (eta - u_star).sqrt();
    let f = |sigma: f64| {
        if sigma == 0.0 {
            // limit 2σ / sqrt(2 g(u_*) σ²) when g(u_*) > 0
            let g0 = g.eval(u_star);
            return if g0 > 0.0 { 2.0 / (2.0 * g0).sqrt() } else { f64::INFINITY };
        }
        let big_g = 2.0 * g.increment(u_star, sigma * sigma);
        2.0 * sigma / big_g.max(f64::MIN_POSITIVE).sqrt()
    };
    integrate(&f, 0.0, q, 0.0, 1e-14)
}

// ∫_a^b ds / sqrt(G(s)) for u_star < a < b, on a smooth stretch
fn time_between(g: &Absorption, u_star: f64, a: f64, b: f64) -> f64 {
    let f = |s: f64| 1.0 / (2.0 * g.increment(u_star, s - u_star)).max(f64::MIN_POSITIVE).sqrt();
    let (val, err) = gk15(&f, a, b);
    if err <= 1e-15 * val.abs().max(1e-300) {
        val
    } else {
        integrate(&f, a, b, 0.0, 1e-14)
    }
}

fn integral_branch(g: &Absorption, u_star: f64, span: f64, dt: f64) -> EtaProfile {
    let steps = (span / dt).ceil() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(Sample { t: 0.0, eta: u_star, eta_prime: 0.0 });
    let slope = |eta: f64| (2.0 * g.increment(u_star, eta - u_star)).max(0.0).sqrt();
    let mut truncated = false;

    // first sample: invert t(η) = dt by bisection-safeguarded Newton in q = sqrt(η - u_*)
    let target = dt.min(span);
    let t_of_q = |q: f64| implicit_time(g, u_star, u_star + q * q);
    let mut hi = 1e-8f64.max(target.sqrt() * 1e-3);
    while t_of_q(hi) < target {
        hi *= 2.0;
        if hi * hi > BLOW_UP {
            truncated = true;
            break;
        }
    }
    if truncated {
        return EtaProfile {
            g: g.clone(),
            b: 0.0,
            u_star,
            dt,
            samples,
            ko: true,
            truncated,
        };
    }
    let mut lo = 0.0;
    let mut q = 0.5 * hi;
    for _ in 0..200 {
        let val = t_of_q(q) - target;
        if val > 0.0 {
            hi = q;
        } else {
            lo = q;
        }
        let deriv = 2.0 * q / slope(u_star + q * q).max(f64::MIN_POSITIVE);
        let mut next = q - val / deriv;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - q).abs() <= 1e-15 * q.max(1e-300) || hi - lo <= 1e-16 * hi {
            q = next;
            break;
        }
        q = next;
    }
    let mut eta = u_star + q * q;
    let mut t_eta = t_of_q(q);
    samples.push(Sample { t: target, eta, eta_prime: slope(eta) });

    for k in 2..=steps {
        let t = (k as f64 * dt).min(span);
        let need = t - t_eta;
        // Taylor guess, then Newton on ∫_η^x ds / sqrt(G) = need
        let s0 = slope(eta);
        let mut x = eta + s0 * need + 0.5 * g.eval(eta) * need * need;
        let mut lo = eta;
        let mut hi = f64::INFINITY;
        let mut ok = false;
        for _ in 0..100 {
            let val = time_between(g, u_star, eta, x) - need;
            if val > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - val * slope(x);
            if !(next > lo && next < hi) {
                next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x - eta };
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
                x = next;
                ok = true;
                break;
            }
            x = next;
        }
        if !ok && !(hi - lo <= 1e-12 * x.abs()) || !(x.abs() < BLOW_UP) {
            truncated = true;
            break;
        }
        t_eta += time_between(g, u_star, eta, x);
        eta = x;
        samples.push(Sample { t, eta, eta_prime: slope(eta) });
    }
    EtaProfile {
        g: g.clone(),
        b: 0.0,
        u_star,
        dt,
        samples,
        ko: true,
        truncated,
    }
}

impl EtaProfile {
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn u_star(&self) -> f64 {
        self.u_star
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn absorption(&self) -> &Absorption {
        &self.g
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// End of the sampled interval.
    pub fn span(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Whether the Keller–Osserman integral converges at `u_*`.
    pub fn ko_flag(&self) -> bool {
        self.ko
    }

    /// True when the profile blew up before the requested span.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    fn locate(&self, t: f64) -> usize {
        let k = self.samples.partition_point(|s| s.t <= t);
        k.clamp(1, self.samples.len() - 1) - 1
    }

    /// `(η(t), η'(t))` by cubic Hermite interpolation between samples. Before 0
    /// the profile is `u_*`; past the span, a Taylor step of the equation.
    pub fn eval_with_slope(&self, t: f64) -> (f64, f64) {
        let first = self.samples[0];
        if t <= 0.0 || self.samples.len() == 1 {
            return (first.eta, first.eta_prime);
        }
        let last = *self.samples.last().unwrap();
        if t >= last.t {
            let s = t - last.t;
            let gl = self.g.eval(last.eta);
            return (last.eta + last.eta_prime * s + 0.5 * gl * s * s, last.eta_prime + gl * s);
        }
        let k = self.locate(t);
        let (p, q) = (self.samples[k], self.samples[k + 1]);
        let h = q.t - p.t;
        let x = (t - p.t) / h;
        let (x2, x3) = (x * x, x * x * x);
        let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let h10 = x3 - 2.0 * x2 + x;
        let h01 = -2.0 * x3 + 3.0 * x2;
        let h11 = x3 - x2;
        let eta = h00 * p.eta + h10 * h * p.eta_prime + h01 * q.eta + h11 * h * q.eta_prime;
        let d00 = 6.0 * x2 - 6.0 * x;
        let d10 = 3.0 * x2 - 4.0 * x + 1.0;
        let d01 = -6.0 * x2 + 6.0 * x;
        let d11 = 3.0 * x2 - 2.0 * x;
        let slope = (d00 * p.eta + d01 * q.eta) / h + d10 * p.eta_prime + d11 * q.eta_prime;
        (eta, slope)
    }

    pub fn eta(&self, t: f64) -> f64 {
        self.eval_with_slope(t).0
    }

    /// `R_b(a) = inf{t : η(t) ≥ a}`, `+∞` when `a` is not reached within the span.
    pub fn radius(&self, a: f64) -> Result<f64> {
        if a.is_nan() {
            return Err(Error::input("radius of NaN"));
        }
        if a < self.u_star {
            return Err(Error::input(format!(
                "radius needs a >= u_star = {}, got {a}",
                self.u_star
            )));
        }
        if a == self.u_star {
            return Ok(0.0);
        }
        let k = self.samples.partition_point(|s| s.eta < a);
        if k == self.samples.len() {
            return Ok(f64::INFINITY);
        }
        let (mut lo, mut hi) = (self.samples[k - 1].t, self.samples[k].t);
        // refine well below 1e-10 in t; the loop stops once the interval is one ulp
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eta(mid) >= a {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Max of `|η'² − b² − G(η)|` over the samples.
    pub fn first_integral_residual(&self) -> f64 {
        first_integral_residual(
            &self.g,
            self.u_star,
            self.b,
            self.samples.iter().map(|s| (s.eta, s.eta_prime)),
        )
    }

    /// Profile as CSV `t,eta,eta_prime`, keeping every `stride`-th sample and the last.
    pub fn to_csv(&self, stride: usize) -> String {
        let stride = stride.max(1);
        let mut out = String::from("t,eta,eta_prime\n");
        let n = self.samples.len();
        for (k, s) in self.samples.iter().enumerate() {
            if k % stride == 0 || k + 1 == n {
                out.push_str(&format!("{},{},{}\n", s.t, s.eta, s.eta_prime));
            }
        }
        out
    }
}

/// `max |η'² − b² − G(η)|` over given `(η, η')` pairs.
pub fn first_integral_residual(
    g: &Absorption,
    u_star: f64,
    b: f64,
    points: impl IntoIterator<Item = (f64, f64)>,
) -> f64 {
    points
        .into_iter()
        .map(|(eta, d)| (d * d - b * b - g.primitive(u_star, eta)).abs())
        .fold(0.0, f64::max)
}

/// `max |η'' − g(η)|` over given `(η, η'')` pairs.
pub fn ode_residual(g: &Absorption, points: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    points
        .into_iter()
        .map(|(eta, dd)| (dd - g.eval(eta)).abs())
        .fold(0.0, f64::max)
}

/// Upper bound for `R_b(a)`: `η' ≥ sqrt(b² + G_*)` gives `(a − u_*) / sqrt(b² + G_*)`;
/// for `b = 0` under Keller–Osserman the exact implicit time.
pub fn radius_bound(g: &Absorption, u_star: f64, b: f64, a: f64) -> f64 {
    if a <= u_star {
        return 0.0;
    }
    let floor = b * b + g.g_star(u_star, a);
    if b > 0.0 && floor > 0.0 {
        (a - u_star) / floor.sqrt()
    } else if b == 0.0 && g.keller_osserman(u_star) {
        implicit_time(g, u_star, a)
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_g_is_linear() {
        let p = solve_eta(&Absorption::Zero, 0.0, 2.0, 3.0, None).unwrap();
        for s in p.samples().iter().step_by(997) {
            assert!((s.eta - 2.0 * s.t).abs() < 1e-12);
            assert_eq!(s.eta_prime, 2.0);
        }
        assert!((p.radius(3.0).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(p.radius(0.0).unwrap(), 0.0);
        assert!(p.radius(100.0).unwrap().is_infinite());
        assert!(p.radius(-1.0).is_err());
    }

    #[test]
    fn constant_g_radius_matches_quadratic_root() {
        let c = 2.0;
        let (u0, b) = (1.0, 0.5);
        let p = solve_eta(&Absorption::Constant(c), u0, b, 4.0, None).unwrap();
        for &a in &[1.1, 2.0, 7.5] {
            let root = (-b + (b * b + 2.0 * c * (a - u0)).sqrt()) / c;
            assert!((p.radius(a).unwrap() - root).abs() < 1e-10, "a = {a}");
        }
    }

    #[test]
    fn negative_g_needs_a_large_slope() {
        let g = Absorption::Constant(-1.0);
        // G_* on [0, 2] is -4, threshold 2
        assert!(matches!(
            solve_eta_on(&g, 0.0, 2.0, 1.5, 1.0, None),
            Err(Error::SlopeInadmissible { .. })
        ));
        assert!(solve_eta_on(&g, 0.0, 2.0, 2.5, 1.0, None).is_ok());
        // without an upper value the turning point is detected while integrating
        assert!(solve_eta(&g, 0.0, 1.0, 3.0, None).is_err());
    }

    #[test]
    fn ko_failure_gives_constant_profile() {
        let p = solve_eta(&Absorption::Zero, 0.5, 0.0, 1.0, Some(0.1)).unwrap();
        assert!(!p.ko_flag());
        assert!(p.samples().iter().all(|s| s.eta == 0.5));
        assert!(p.radius(0.6).unwrap().is_infinite());
    }

    #[test]
    fn ko_branch_reproduces_power_profile() {
        let (lambda, theta) = (12.0, 0.5);
        let g = Absorption::power(lambda, theta).unwrap();
        let p = solve_eta(&g, 0.0, 0.0, 1.0, Some(1e-3)).unwrap();
        assert!(p.ko_flag());
        let tau: f64 = (lambda * (1.0 - theta).powi(2) / (2.0 * (1.0 + theta))).powf(1.0 / (1.0 - theta));
        assert!((tau - 1.0).abs() < 1e-15);
        let err = p
            .samples()
            .iter()
            .map(|s| (s.eta - tau * s.t.powi(4)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-11, "sup error {err}");
        assert!(p.first_integral_residual() < 1e-10);
    }

    #[test]
    fn ko_branch_constant_g_selects_the_quadratic() {
        let p = solve_eta(&Absorption::Constant(2.0), 1.0, 0.0, 2.0, Some(0.01)).unwrap();
        let err = p
            .samples()
            .iter()
            .map(|s| (s.eta - 1.0 - s.t * s.t).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-11, "sup error {err}");
    }

    #[test]
    fn hermite_interpolation_is_exact_for_quadratics() {
        let p = solve_eta(&Absorption::Constant(1.0), 0.0, 1.0, 2.0, Some(0.25)).unwrap();
        let t = 0.8123;
        assert!((p.eta(t) - (t + 0.5 * t * t)).abs() < 1e-14);
    }

    #[test]
    fn csv_header_and_rows() {
        let p = solve_eta(&Absorption::Zero, 0.0, 1.0, 1.0, Some(0.5)).unwrap();
        assert_eq!(p.to_csv(1), "t,eta,eta_prime\n0,0,1\n0.5,0.5,1\n1,1,1\n");
    }
}
