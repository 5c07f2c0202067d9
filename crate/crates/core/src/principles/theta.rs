use super::report::Report;
use crate::error::{Error, Result};
use crate::gcone::{first_integral_residual, ode_residual, Absorption};
use crate::quasi_metric::{grid_space, GridSpec, RandersNorm, Stencil};
use crate::solver::{solve_dirichlet, GridFunction, SchemeConfig};

/// `g(s) = λ s₊^θ` together with the sharp constant `τ(λ, θ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaCase {
    pub lambda: f64,
    pub theta: f64,
}

impl ThetaCase {
    pub fn new(lambda: f64, theta: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::input(format!("lambda must be positive, got {lambda}")));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::input(format!("theta must lie in (0, 1), got {theta}")));
        }
        Ok(ThetaCase { lambda, theta })
    }

    /// The case with `λ = 2(1+θ)/(1−θ)²`, for which `τ = 1`.
    pub fn normalized(theta: f64) -> Result<Self> {
        Self::new(2.0 * (1.0 + theta) / (1.0 - theta).powi(2), theta)
    }

    /// `τ = (λ(1−θ)² / (2(1+θ)))^{1/(1−θ)}`.
    pub fn tau(&self) -> f64 {
        let (l, t) = (self.lambda, self.theta);
        (l * (1.0 - t).powi(2) / (2.0 * (1.0 + t))).powf(1.0 / (1.0 - t))
    }

    /// `p = 2/(1−θ)`.
    pub fn exponent(&self) -> f64 {
        2.0 / (1.0 - self.theta)
    }

    pub fn absorption(&self) -> Absorption {
        Absorption::Power {
            lambda: self.lambda,
            theta: self.theta,
        }
    }

    /// `(η, η', η'')` of `τ t^p` at `t ≥ 0`.
    pub fn profile(&self, t: f64) -> (f64, f64, f64) {
        let (tau, p) = (self.tau(), self.exponent());
        (
            tau * t.powf(p),
            tau * p * t.powf(p - 1.0),
            tau * p * (p - 1.0) * t.powf(p - 2.0),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaReport {
    pub case: ThetaCase,
    pub tau: f64,
    /// `max |η'' − λη₊^θ|` of the exact profile on `[0, 1]`.
    pub ode_residual: f64,
    /// `max |η'² − 2∫₀^η g|` of the exact profile on `[0, 1]`.
    pub first_integral_residual: f64,
    pub h: f64,
    /// `max |u_h − τt^p|` over the grid.
    pub sup_error: f64,
    pub iterations: usize,
}

/// Sample count for the exact-profile residuals.
const WITNESS_SAMPLES: usize = 1000;

/// The exact profile's residuals: `(ODE, first integral)`.
pub fn theta_witness(case: &ThetaCase) -> (f64, f64) {
    let g = case.absorption();
    let pts: Vec<(f64, f64, f64)> = (0..=WITNESS_SAMPLES)
        .map(|k| case.profile(k as f64 / WITNESS_SAMPLES as f64))
        .collect();
    let ode = ode_residual(&g, pts.iter().map(|&(e, _, dd)| (e, dd)));
    let fi = first_integral_residual(&g, 0.0, 0.0, pts.iter().map(|&(e, d, _)| (e, d)));
    (ode, fi)
}

/// Scheme settings for the witness solves: a stopping tolerance far below the
/// discretization error.
pub fn theta_scheme() -> SchemeConfig {
    SchemeConfig {
        tol: 1e-15,
        max_iter: 5_000_000,
        ..SchemeConfig::default()
    }
}

/// Solves `Δ∞ᴺu = λu₊^θ` on the grid `h·ℤ ∩ [0, 1]` with `u(0) = 0`,
/// `u(1) = τ` and compares with `τt^{2/(1−θ)}`.
pub fn theta_liouville_check(case: &ThetaCase, h: f64, config: &SchemeConfig) -> Result<ThetaReport> {
    let case = ThetaCase::new(case.lambda, case.theta)?;
    let steps = (1.0 / h).round();
    if !(h > 0.0 && steps >= 2.0 && (steps * h - 1.0).abs() < 1e-12) {
        return Err(Error::input(format!("h must be 1/n for an integer n >= 2, got {h}")));
    }
    let spec = GridSpec {
        norm: RandersNorm::euclidean(1),
        lower: vec![0.0],
        upper: vec![1.0],
        h,
        stencil: Stencil::Axis,
        mask: Default::default(),
    };
    let space = grid_space(&spec)?;
    let n = space.len();
    let tau = case.tau();
    let bd = GridFunction::from_boundary(n, &[(0, 0.0), (n - 1, tau)])?;
    let state = solve_dirichlet(&space, &bd, &case.absorption(), config)?;
    if !state.converged {
        return Err(Error::NonConvergence {
            iterations: state.iterations,
            residual: state.residual,
        });
    }
    let sup_error = space
        .nodes()
        .map(|x| {
            let t = space.coords(x).expect("grid nodes have coordinates")[0];
            (state.u.values[x] - case.profile(t).0).abs()
        })
        .fold(0.0, f64::max);
    let (ode, fi) = theta_witness(&case);
    Ok(ThetaReport {
        case,
        tau,
        ode_residual: ode,
        first_integral_residual: fi,
        h,
        sup_error,
        iterations: state.iterations,
    })
}

/// Errors on a sequence of grids and the observed orders
/// `log(e_k / e_{k+1}) / log(h_k / h_{k+1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementStudy {
    pub case: ThetaCase,
    pub reports: Vec<ThetaReport>,
    pub orders: Vec<f64>,
}

/// Errors below this are at the level of the stopping tolerance: the scheme
/// reproduces the profile exactly (it does for cubic profiles, `θ = 1/3`).
pub const EXACT_FLOOR: f64 = 1e-10;

impl RefinementStudy {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Every grid reproduces the profile to [`EXACT_FLOOR`], so no order can be observed.
    pub fn exact(&self) -> bool {
        self.reports.iter().all(|r| r.sup_error <= EXACT_FLOOR)
    }

    /// Observed order at least `min_order`, or exact reproduction.
    pub fn passes(&self, min_order: f64) -> bool {
        self.exact() || self.min_order() >= min_order
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new("theta");
        let label = format!("lambda={};theta={}", self.case.lambda, self.case.theta);
        for rep in &self.reports {
            let p = format!("{label};h={}", rep.h);
            r.row(&p, "sup_error", rep.sup_error).row(&p, "iterations", rep.iterations as f64);
        }
        for (k, o) in self.orders.iter().enumerate() {
            r.row(&label, &format!("order_{k}"), *o);
        }
        if let Some(first) = self.reports.first() {
            r.row(&label, "tau", first.tau)
                .row(&label, "ode_residual", first.ode_residual)
                .row(&label, "first_integral_residual", first.first_integral_residual)
                .margin(&format!("{label}/ode_residual"), first.ode_residual);
        }
        r.margin(&format!("{label}/min_order"), self.min_order())
            .verdict(&format!("{label}/exact"), self.exact());
        r
    }
}

pub fn theta_refinement(case: &ThetaCase, hs: &[f64], config: &SchemeConfig) -> Result<RefinementStudy> {
    if hs.len() < 2 {
        return Err(Error::input("a refinement study needs at least two grids"));
    }
    let reports = hs
        .iter()
        .map(|&h| theta_liouville_check(case, h, config))
        .collect::<Result<Vec<_>>>()?;
    let orders = reports
        .windows(2)
        .map(|w| (w[0].sup_error / w[1].sup_error).ln() / (w[0].h / w[1].h).ln())
        .collect();
    Ok(RefinementStudy {
        case: *case,
        reports,
        orders,
    })
}
