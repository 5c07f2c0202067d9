use crate::error::{Error, Result};

/// Piecewise-linear `g` through `(knots[i], values[i])`, extended by constants
/// outside the knot range.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    knots: Vec<f64>,
    values: Vec<f64>,
    // prefix[i] = ∫_{knots[0]}^{knots[i]} g
    prefix: Vec<f64>,
}

impl Table {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::input(
                "a g table needs at least two knots and one value per knot",
            ));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::input("g table entries must be finite"));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::input("g table knots must be strictly increasing"));
        }
        let mut prefix = vec![0.0; knots.len()];
        for i in 1..knots.len() {
            prefix[i] = prefix[i - 1] + 0.5 * (values[i - 1] + values[i]) * (knots[i] - knots[i - 1]);
        }
        Ok(Table {
            knots,
            values,
            prefix,
        })
    }

    /// Samples `g` on a uniform grid of `n ≥ 2` points over `[lo, hi]`.
    pub fn sample(g: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(lo < hi) {
            return Err(Error::input("table sampling needs n >= 2 and lo < hi"));
        }
        let knots: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let values = knots.iter().map(|&s| g(s)).collect();
        Self::new(knots, values)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    // index i with knots[i] <= s < knots[i + 1], clamped to the interior pieces
    fn piece(&self, s: f64) -> usize {
        let n = self.knots.len();
        match self.knots.partition_point(|&k| k <= s) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        }
    }

    fn eval(&self, s: f64) -> f64 {
        let n = self.knots.len();
        if s <= self.knots[0] {
            return self.values[0];
        }
        if s >= self.knots[n - 1] {
            return self.values[n - 1];
        }
        let i = self.piece(s);
        let (k0, k1) = (self.knots[i], self.knots[i + 1]);
        let w = (s - k0) / (k1 - k0);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    fn slope(&self, s: f64) -> f64 {
        let n = self.knots.len();
        if s < self.knots[0] || s >= self.knots[n - 1] {
            return 0.0;
        }
        let i = self.piece(s);
        (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i])
    }

    // ∫_{knots[0]}^s g
    fn antiderivative(&self, s: f64) -> f64 {
        let n = self.knots.len();
        if s <= self.knots[0] {
            return self.values[0] * (s - self.knots[0]);
        }
        if s >= self.knots[n - 1] {
            return self.prefix[n - 1] + self.values[n - 1] * (s - self.knots[n - 1]);
        }
        let i = self.piece(s);
        self.prefix[i] + 0.5 * (self.values[i] + self.eval(s)) * (s - self.knots[i])
    }

    // linear pieces of g restricted to [a, b], as (s0, g0, s1, g1)
    fn pieces(&self, a: f64, b: f64) -> Vec<(f64, f64, f64, f64)> {
        let mut cuts = vec![a];
        cuts.extend(self.knots.iter().copied().filter(|&k| k > a && k < b));
        cuts.push(b);
        cuts.windows(2)
            .map(|w| (w[0], self.eval(w[0]), w[1], self.eval(w[1])))
            .collect()
    }
}

/// The absorption term `g` of `Δ∞ᴺu = g(u)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Absorption {
    Zero,
    Constant(f64),
    /// `λ·s₊^θ` with `θ > 0`.
    Power { lambda: f64, theta: f64 },
    Table(Table),
}

impl Absorption {
    pub fn constant(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::input("constant g must be finite"));
        }
        Ok(Absorption::Constant(c))
    }

    pub fn power(lambda: f64, theta: f64) -> Result<Self> {
        if !(lambda.is_finite() && theta.is_finite() && theta > 0.0) {
            return Err(Error::input(format!(
                "power g needs finite lambda and theta > 0, got lambda = {lambda}, theta = {theta}"
            )));
        }
        Ok(Absorption::Power { lambda, theta })
    }

    pub fn table(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Table::new(knots, values).map(Absorption::Table)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Absorption::Zero)
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Absorption::Zero => 0.0,
            Absorption::Constant(c) => *c,
            Absorption::Power { lambda, theta } => {
                if s > 0.0 {
                    lambda * s.powf(*theta)
                } else {
                    0.0
                }
            }
            Absorption::Table(t) => t.eval(s),
        }
    }

    /// Right derivative `g'(s)`; may be infinite for `λ s₊^θ` with `θ < 1` at 0.
    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            Absorption::Zero | Absorption::Constant(_) => 0.0,
            Absorption::Power { lambda, theta } => {
                if s > 0.0 {
                    lambda * theta * s.powf(theta - 1.0)
                } else if *theta < 1.0 {
                    f64::INFINITY.copysign(*lambda)
                } else if *theta == 1.0 {
                    *lambda
                } else {
                    0.0
                }
            }
            Absorption::Table(t) => t.slope(s),
        }
    }

    /// `∫_a^b g`, exact for every variant.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Absorption::Zero => 0.0,
            Absorption::Constant(c) => c * (b - a),
            Absorption::Power { lambda, theta } => {
                let p = |s: f64| if s > 0.0 { s.powf(theta + 1.0) } else { 0.0 };
                lambda * (p(b) - p(a)) / (theta + 1.0)
            }
            Absorption::Table(t) => t.antiderivative(b) - t.antiderivative(a),
        }
    }

    /// `∫_a^{a+delta} g`, avoiding the cancellation of [`Absorption::integral`]
    /// when `delta` is tiny compared to `a`.
    pub fn increment(&self, a: f64, delta: f64) -> f64 {
        match self {
            Absorption::Zero => 0.0,
            Absorption::Constant(c) => c * delta,
            Absorption::Power { lambda, theta } if a > 0.0 && delta > -a => {
                let e = theta + 1.0;
                lambda * a.powf(e) * (e * (delta / a).ln_1p()).exp_m1() / e
            }
            Absorption::Table(t) if t.piece(a) == t.piece(a + delta)
                && a > t.knots[0]
                && a + delta < t.knots[t.knots.len() - 1] => {
                // same linear piece: exact trapezoid on [a, a + delta]
                let ga = t.eval(a);
                let slope = t.slope(a);
                delta * (ga + 0.5 * slope * delta)
            }
            _ => self.integral(a, a + delta),
        }
    }

    /// `∫_a^b g₊` for `a ≤ b`.
    pub fn positive_integral(&self, a: f64, b: f64) -> f64 {
        if !(a < b) {
            return 0.0;
        }
        match self {
            Absorption::Zero => 0.0,
            Absorption::Constant(c) => c.max(0.0) * (b - a),
            Absorption::Power { lambda, .. } => {
                if *lambda > 0.0 {
                    self.integral(a, b)
                } else {
                    0.0
                }
            }
            Absorption::Table(t) => t
                .pieces(a, b)
                .into_iter()
                .map(|(s0, g0, s1, g1)| {
                    if g0 >= 0.0 && g1 >= 0.0 {
                        0.5 * (g0 + g1) * (s1 - s0)
                    } else if g0 <= 0.0 && g1 <= 0.0 {
                        0.0
                    } else {
                        // one sign change: triangle above the axis
                        let frac = g0.abs() / (g0.abs() + g1.abs());
                        let width = if g0 > 0.0 { frac } else { 1.0 - frac } * (s1 - s0);
                        0.5 * g0.max(g1) * width
                    }
                })
                .sum(),
        }
    }

    /// `G(s) = 2∫_{u_star}^s g`.
    pub fn primitive(&self, u_star: f64, s: f64) -> f64 {
        2.0 * self.integral(u_star, s)
    }

    /// `G_* = inf_{s ∈ [lo, hi]} G(s)` with `G` based at `lo`; always `≤ 0`.
    pub fn g_star(&self, lo: f64, hi: f64) -> f64 {
        if !(lo < hi) {
            return 0.0;
        }
        match self {
            Absorption::Table(t) => {
                let mut best = 0.0f64;
                for (s0, g0, s1, g1) in t.pieces(lo, hi) {
                    best = best.min(self.primitive(lo, s1));
                    if g0 < 0.0 && g1 > 0.0 {
                        let s = s0 + (s1 - s0) * (-g0) / (g1 - g0);
                        best = best.min(self.primitive(lo, s));
                    }
                }
                best
            }
            // g has one sign on any interval, so G is monotone
            _ => self.primitive(lo, hi).min(0.0),
        }
    }

    /// Threshold `sqrt(max(-G_*, 0))` that slopes must exceed on `[lo, hi]`.
    pub fn slope_threshold(&self, lo: f64, hi: f64) -> f64 {
        (-self.g_star(lo, hi)).max(0.0).sqrt()
    }

    pub fn nonnegative_on(&self, lo: f64, hi: f64) -> bool {
        match self {
            Absorption::Zero => true,
            Absorption::Constant(c) => *c >= 0.0,
            Absorption::Power { lambda, .. } => *lambda >= 0.0 || hi <= 0.0,
            Absorption::Table(t) => {
                t.eval(lo) >= 0.0
                    && t.eval(hi) >= 0.0
                    && t.knots
                        .iter()
                        .zip(&t.values)
                        .all(|(&k, &v)| k <= lo || k >= hi || v >= 0.0)
            }
        }
    }

    pub fn nondecreasing_on(&self, lo: f64, hi: f64) -> bool {
        match self {
            Absorption::Zero | Absorption::Constant(_) => true,
            Absorption::Power { lambda, .. } => *lambda >= 0.0 || hi <= 0.0,
            Absorption::Table(t) => t.pieces(lo, hi).iter().all(|&(_, g0, _, g1)| g1 >= g0),
        }
    }

    /// `sup_{s ∈ [lo, hi]} |g(s)|`.
    pub fn sup_abs_on(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Absorption::Table(t) => t
                .pieces(lo, hi)
                .iter()
                .map(|&(_, g0, _, g1)| g0.abs().max(g1.abs()))
                .fold(0.0, f64::max),
            _ => self.eval(lo).abs().max(self.eval(hi).abs()),
        }
    }

    /// The monotone envelope `ḡ(t) = sup_{s ≤ t} g(s)`, which is nondecreasing
    /// and satisfies `ḡ ≥ g`.
    pub fn monotone_envelope(&self) -> Absorption {
        match self {
            Absorption::Power { lambda, .. } if *lambda < 0.0 => Absorption::Zero,
            Absorption::Table(t) => {
                let mut knots = vec![t.knots[0]];
                let mut values = vec![t.values[0]];
                let mut top = t.values[0];
                for i in 0..t.knots.len() - 1 {
                    let (k0, v0, k1, v1) = (t.knots[i], t.values[i], t.knots[i + 1], t.values[i + 1]);
                    if v1 <= top {
                        knots.push(k1);
                        values.push(top);
                        continue;
                    }
                    if v0 < top {
                        let s = k0 + (top - v0) / (v1 - v0) * (k1 - k0);
                        if s > *knots.last().unwrap() && s < k1 {
                            knots.push(s);
                            values.push(top);
                        }
                    }
                    top = v1;
                    knots.push(k1);
                    values.push(v1);
                }
                Absorption::Table(Table::new(knots, values).expect("envelope keeps table invariants"))
            }
            other => other.clone(),
        }
    }

    /// Whether `∫_{u_star} ds / sqrt(G(s))` converges at its lower end, for `g ≥ 0`.
    pub fn keller_osserman(&self, u_star: f64) -> bool {
        match self {
            Absorption::Zero => false,
            Absorption::Constant(c) => *c > 0.0,
            Absorption::Power { lambda, theta } => {
                *lambda > 0.0 && (u_star > 0.0 || (u_star == 0.0 && *theta < 1.0))
            }
            Absorption::Table(t) => t.eval(u_star) > 0.0,
        }
    }

    /// Short human-readable description, e.g. `power(12,0.5)`.
    pub fn describe(&self) -> String {
        match self {
            Absorption::Zero => "zero".into(),
            Absorption::Constant(c) => format!("constant({c})"),
            Absorption::Power { lambda, theta } => format!("power({lambda},{theta})"),
            Absorption::Table(t) => format!("table({} knots)", t.knots.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcone::quad::integrate;

    fn wiggle() -> Absorption {
        Absorption::table(vec![0.0, 1.0, 2.0, 3.0], vec![-1.0, 2.0, 0.5, 3.0]).unwrap()
    }

    #[test]
    fn closed_form_integrals() {
        assert_eq!(Absorption::Constant(2.0).integral(1.0, 4.0), 6.0);
        let p = Absorption::power(3.0, 0.5).unwrap();
        assert!((p.integral(-1.0, 4.0) - 3.0 * 8.0 / 1.5).abs() < 1e-14);
        assert_eq!(p.primitive(0.0, 0.0), 0.0);
    }

    #[test]
    fn table_integrals_match_quadrature() {
        let g = wiggle();
        for &(a, b) in &[(-0.5, 3.5), (0.3, 2.7), (1.5, 1.6)] {
            let q = integrate(&|s| g.eval(s), a, b, 1e-13, 1e-13);
            assert!((g.integral(a, b) - q).abs() < 1e-10, "{a} {b}");
            let qp = integrate(&|s| g.eval(s).max(0.0), a, b, 1e-13, 1e-13);
            assert!((g.positive_integral(a, b) - qp).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn g_star_finds_the_interior_minimum() {
        let g = wiggle();
        // g < 0 on [0, 1/3): G bottoms out at s = 1/3 with G = 2 * (-1/6)
        assert!((g.g_star(0.0, 3.0) + 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(Absorption::Constant(-1.0).g_star(0.0, 2.0), -4.0);
        assert_eq!(Absorption::Constant(1.0).g_star(0.0, 2.0), 0.0);
        assert!((Absorption::Constant(-1.0).slope_threshold(0.0, 2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn flags() {
        let g = wiggle();
        assert!(!g.nonnegative_on(0.0, 3.0));
        assert!(g.nonnegative_on(0.5, 3.0));
        assert!(!g.nondecreasing_on(0.0, 3.0));
        assert!(g.nondecreasing_on(0.0, 1.0));
        assert!(Absorption::power(-1.0, 0.5).unwrap().nonnegative_on(-2.0, 0.0));
    }

    #[test]
    fn envelope_is_running_max() {
        let g = wiggle();
        let e = g.monotone_envelope();
        for i in 0..=300 {
            let s = -0.5 + 4.0 * i as f64 / 300.0;
            let oracle = (0..=i)
                .map(|j| g.eval(-0.5 + 4.0 * j as f64 / 300.0))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(e.eval(s) >= g.eval(s) - 1e-15);
            // the sampled running max can only lag the exact one
            assert!(e.eval(s) >= oracle - 1e-15);
            assert!(e.eval(s) <= oracle + 4.0 * 3.0 / 300.0);
        }
        assert!(e.nondecreasing_on(-1.0, 4.0));
        assert_eq!(Absorption::power(-2.0, 0.5).unwrap().monotone_envelope(), Absorption::Zero);
    }

    #[test]
    fn keller_osserman_flags() {
        assert!(!Absorption::Zero.keller_osserman(0.0));
        assert!(Absorption::Constant(1.0).keller_osserman(0.0));
        let p = Absorption::power(1.0, 0.5).unwrap();
        assert!(p.keller_osserman(0.0));
        assert!(!p.keller_osserman(-1.0));
        assert!(!Absorption::power(1.0, 1.0).unwrap().keller_osserman(0.0));
        assert!(Absorption::power(1.0, 2.0).unwrap().keller_osserman(0.5));
    }
}
