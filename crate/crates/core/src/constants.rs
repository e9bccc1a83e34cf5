//! Contraction metric and the constant ledger of the convergence bound.
//!
//! The metric is built from the chain
//! `h(r) = βℓ min(r,R)²/8`, `φ = e^{−h}`, `Φ(r) = ∫₀ʳ φ`,
//! `ξ⁻¹ = ∫₀^{R₁} Φ/φ`, `g(r) = 1 − (ξ/2) ∫₀^{min(r,R₁)} Φ/φ`,
//! `δ(r) = ∫₀ʳ φ g`, with
//! `R₁ = R/2 + ½√(R² + 32/(μβ) · e^{βℓR²/8})`.
//!
//! On `[0, R]` the integrals are tabulated by adaptive Simpson quadrature
//! on a uniform grid; values between grid nodes add a 5-point
//! Gauss–Legendre correction over the partial panel. On `[R, ∞)` the
//! integrands are polynomial and are integrated in closed form.

use rand::SeedableRng;
use serde::Serialize;

use crate::error::{check_dim, invalid, Error, Result};
use crate::mixing::MixingDescriptor;
use crate::objective::ObjectiveModel;
use crate::polytope::{ChebyshevStatus, Polyhedron};
use crate::quadrature::{integrate, REL_TOL};
use crate::rng::SimRng;
use crate::skorokhod::SkorokhodConstants;

const TABLE_PANELS: usize = 1024;

/// Problem constants entering the bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemParams {
    pub n: usize,
    pub beta: f64,
    pub eta: f64,
    pub ell: f64,
    pub mu: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub varsigma: f64,
    pub grad0_norm: f64,
    pub fbar0: f64,
    pub m2z: f64,
    pub psi2z: f64,
    pub skorokhod: SkorokhodConstants,
}

impl ProblemParams {
    pub fn from_model(
        model: &ObjectiveModel,
        data: &MixingDescriptor,
        skorokhod: SkorokhodConstants,
        eta: f64,
        beta: f64,
        varsigma: f64,
    ) -> Self {
        Self {
            n: model.dim(),
            beta,
            eta,
            ell: model.ell,
            mu: model.mu,
            radius: model.radius,
            varsigma,
            grad0_norm: model.grad0_norm,
            fbar0: model.fbar0,
            m2z: data.m2(),
            psi2z: data.big_psi2(),
            skorokhod,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        let nonneg = |name: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be nonnegative and finite, got {v}")))
            }
        };
        if self.n == 0 {
            return Err(invalid("n", "must be ≥ 1"));
        }
        pos("beta", self.beta)?;
        pos("eta", self.eta)?;
        pos("ell", self.ell)?;
        pos("mu", self.mu)?;
        nonneg("R", self.radius)?;
        nonneg("varsigma", self.varsigma)?;
        nonneg("grad0_norm", self.grad0_norm)?;
        nonneg("m2z", self.m2z)?;
        nonneg("psi2z", self.psi2z)?;
        Ok(())
    }

    /// `min{1/4, μ/(4ℓ²)}`.
    pub fn step_size_limit(&self) -> f64 {
        (0.25f64).min(self.mu / (4.0 * self.ell * self.ell))
    }

    pub fn check_step_size(&self) -> Result<()> {
        let lim = self.step_size_limit();
        if self.eta > lim {
            return Err(invalid(
                "eta",
                format!("{} exceeds min{{1/4, μ/(4ℓ²)}} = {lim}", self.eta),
            ));
        }
        Ok(())
    }
}

/// `κ(r) = ηℓ` for `r < R`, `−ημ` for `r ≥ R`.
pub fn kappa(params: &ProblemParams, r: f64) -> f64 {
    if r < params.radius {
        params.eta * params.ell
    } else {
        -params.eta * params.mu
    }
}

/// 5-point Gauss–Legendre rule on `[a, b]`.
fn gauss5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let s70 = 70f64.sqrt();
    let t = 2.0 * (10.0f64 / 7.0).sqrt();
    let x1 = (5.0 - t).sqrt() / 3.0;
    let x2 = (5.0 + t).sqrt() / 3.0;
    let w0 = 128.0 / 225.0;
    let w1 = (322.0 + 13.0 * s70) / 900.0;
    let w2 = (322.0 - 13.0 * s70) / 900.0;
    let m = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    h * (w0 * f(m) + w1 * (f(m - h * x1) + f(m + h * x1)) + w2 * (f(m - h * x2) + f(m + h * x2)))
}

/// The contraction metric `δ` and its building blocks.
#[derive(Debug, Clone)]
pub struct MetricChain {
    beta: f64,
    ell: f64,
    mu: f64,
    radius: f64,
    c: f64,
    r1: f64,
    xi_inv: f64,
    step: f64,
    big_phi_tab: Vec<f64>,
    j_tab: Vec<f64>,
    delta_tab: Vec<f64>,
}

impl MetricChain {
    pub fn new(beta: f64, ell: f64, mu: f64, radius: f64) -> Result<Self> {
        for (name, v) in [("beta", beta), ("ell", ell), ("mu", mu)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(invalid("R", format!("must be ≥ 0, got {radius}")));
        }
        let c = beta * ell / 8.0;
        let h_r = c * radius * radius;
        let r1 = radius / 2.0 + 0.5 * (radius * radius + 32.0 / (mu * beta) * h_r.exp()).sqrt();
        if !r1.is_finite() {
            return Err(invalid("beta", format!("βℓR²/8 = {h_r} overflows")));
        }
        let mut chain = Self {
            beta,
            ell,
            mu,
            radius,
            c,
            r1,
            xi_inv: f64::NAN,
            step: radius / TABLE_PANELS as f64,
            big_phi_tab: vec![0.0],
            j_tab: vec![0.0],
            delta_tab: vec![0.0],
        };
        if radius > 0.0 {
            for i in 0..TABLE_PANELS {
                let (a, b) = chain.panel(i);
                let v = integrate(|t| chain.phi(t), a, b, REL_TOL * 1e-3)?;
                chain.big_phi_tab.push(chain.big_phi_tab[i] + v);
            }
            for i in 0..TABLE_PANELS {
                let (a, b) = chain.panel(i);
                let v = integrate(|t| chain.ratio_in_panel(i, t), a, b, REL_TOL * 1e-3)?;
                chain.j_tab.push(chain.j_tab[i] + v);
            }
        }
        chain.xi_inv = chain.j(r1);
        if !(chain.xi_inv > 0.0 && chain.xi_inv.is_finite()) {
            return Err(Error::Internal(format!(
                "ξ⁻¹ = {} is not a positive number",
                chain.xi_inv
            )));
        }
        if radius > 0.0 {
            for i in 0..TABLE_PANELS {
                let (a, b) = chain.panel(i);
                let v = integrate(|t| chain.phi(t) * chain.g_in_panel(i, t), a, b, REL_TOL * 1e-3)?;
                chain.delta_tab.push(chain.delta_tab[i] + v);
            }
        }
        Ok(chain)
    }

    pub fn from_params(p: &ProblemParams) -> Result<Self> {
        Self::new(p.beta, p.ell, p.mu, p.radius)
    }

    fn panel(&self, i: usize) -> (f64, f64) {
        let a = i as f64 * self.step;
        let b = if i + 1 == TABLE_PANELS {
            self.radius
        } else {
            (i + 1) as f64 * self.step
        };
        (a, b)
    }

    fn panel_of(&self, r: f64) -> usize {
        ((r / self.step) as usize).min(TABLE_PANELS - 1)
    }

    fn big_phi_in_panel(&self, i: usize, t: f64) -> f64 {
        let a = i as f64 * self.step;
        self.big_phi_tab[i] + gauss5(|s| self.phi(s), a, t)
    }

    /// `Φ(t)/φ(t)` for `t` in panel `i`.
    fn ratio_in_panel(&self, i: usize, t: f64) -> f64 {
        self.big_phi_in_panel(i, t) * self.h(t).exp()
    }

    fn j_in_panel(&self, i: usize, t: f64) -> f64 {
        let a = i as f64 * self.step;
        self.j_tab[i] + gauss5(|s| self.ratio_in_panel(i, s), a, t)
    }

    fn g_in_panel(&self, i: usize, t: f64) -> f64 {
        1.0 - 0.5 * self.j_in_panel(i, t) / self.xi_inv
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn xi(&self) -> f64 {
        1.0 / self.xi_inv
    }

    pub fn xi_inverse(&self) -> f64 {
        self.xi_inv
    }

    pub fn h(&self, r: f64) -> f64 {
        let m = r.min(self.radius);
        self.c * m * m
    }

    pub fn phi(&self, r: f64) -> f64 {
        (-self.h(r)).exp()
    }

    pub fn h_at_r(&self) -> f64 {
        self.h(self.radius)
    }

    pub fn phi_at_r(&self) -> f64 {
        self.phi(self.radius)
    }

    /// `Φ(r) = ∫₀ʳ φ`.
    pub fn big_phi(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r < self.radius {
            return self.big_phi_in_panel(self.panel_of(r), r);
        }
        self.big_phi_tab[self.big_phi_tab.len() - 1] + (r - self.radius) * self.phi_at_r()
    }

    /// `∫₀ʳ Φ/φ` (not truncated at `R₁`).
    pub fn j(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r < self.radius {
            return self.j_in_panel(self.panel_of(r), r);
        }
        let u = r - self.radius;
        let a = self.big_phi(self.radius) * self.h_at_r().exp();
        self.j_tab[self.j_tab.len() - 1] + a * u + 0.5 * u * u
    }

    pub fn g(&self, r: f64) -> f64 {
        1.0 - 0.5 * self.j(r.min(self.r1)) / self.xi_inv
    }

    pub fn delta_prime(&self, r: f64) -> f64 {
        self.phi(r) * self.g(r)
    }

    /// `δ(r) = ∫₀ʳ φ g`.
    pub fn delta(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r < self.radius {
            let i = self.panel_of(r);
            let a = i as f64 * self.step;
            return self.delta_tab[i] + gauss5(|t| self.phi(t) * self.g_in_panel(i, t), a, r);
        }
        let d_r = self.delta_tab[self.delta_tab.len() - 1];
        let jr = self.j_tab[self.j_tab.len() - 1];
        let a = self.big_phi(self.radius) * self.h_at_r().exp();
        let xi = self.xi();
        // ∫₀ᵁ g(R + u) du on [R, R₁], where J(R + u) = J(R) + a u + u²/2.
        let partial = |u: f64| u - 0.5 * xi * (jr * u + 0.5 * a * u * u + u * u * u / 6.0);
        let phi_r = self.phi_at_r();
        let u1 = self.r1 - self.radius;
        if r <= self.r1 {
            d_r + phi_r * partial(r - self.radius)
        } else {
            d_r + phi_r * partial(u1) + 0.5 * phi_r * (r - self.r1)
        }
    }
}

/// One ledger entry: value and the formula it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub value: f64,
    pub formula_ref: &'static str,
}

/// Every named constant of the convergence bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantLedger {
    pub h_at_r: f64,
    pub phi_at_r: f64,
    pub r1: f64,
    pub xi: f64,
    pub a: f64,
    pub a_lower: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
    pub c11: f64,
    pub alpha: f64,
    pub c_diam: f64,
}

/// Builds the ledger. Fails if the metric quadrature fails.
pub fn ledger(params: &ProblemParams) -> Result<ConstantLedger> {
    params.validate()?;
    let chain = MetricChain::from_params(params)?;
    ledger_with_chain(params, &chain)
}

pub fn ledger_with_chain(p: &ProblemParams, chain: &MetricChain) -> Result<ConstantLedger> {
    let n = p.n as f64;
    let (ell, mu, r, g0, beta) = (p.ell, p.mu, p.radius, p.grad0_norm, p.beta);
    let phi_r = chain.phi_at_r();
    let phi_inv = 1.0 / phi_r;
    let xi = chain.xi();
    let a = 2.0 * xi / beta;
    if !(a > 0.0) {
        return Err(Error::Internal(format!("contraction rate a = {a} is not positive")));
    }
    let c5 = p.skorokhod.c_diam;
    let c6 = (ell + mu) * r * r + r * g0 + n / beta;
    let c7 = (4.0 / mu)
        * (n / beta + (ell + mu) * r * r + (2.0 + r) * g0 + (8.0 * ell * ell + 1.0 / mu) * ell * ell * p.m2z);
    let c8 = (c5 + 1.0) * (2.0 * ell * ell * c6 / mu + 2.0 * g0 * g0).sqrt();
    let c9 = (c5 + 1.0) * (2.0 * ell * ell).sqrt();
    let c10 = (c5 + 1.0) * n * (8.0 / beta).sqrt();
    let c11 = c8 + 2.0 * ell * p.psi2z;
    let factor = ell.exp() * (1.0 + 2.0 * phi_inv / -(-a / 2.0).exp_m1());
    let c3 = (c11 + c9 * c7.sqrt() + 2f64.sqrt() * c10) * factor;
    let c4 = c9 * factor;
    let a_lower = 2.0 / (beta * r * r / 2.0 + 16.0 / mu) * (-beta * ell * r * r / 4.0).exp();
    Ok(ConstantLedger {
        h_at_r: chain.h_at_r(),
        phi_at_r: phi_r,
        r1: chain.r1(),
        xi,
        a,
        a_lower,
        c1: 2.0 * phi_inv * (2.0 * c6 / mu).sqrt(),
        c2: 4.0 * phi_inv,
        c3,
        c4,
        c5,
        c6,
        c7,
        c8,
        c9,
        c10,
        c11,
        alpha: p.skorokhod.alpha,
        c_diam: c5,
    })
}

impl ConstantLedger {
    /// Flat `{name: {value, formula_ref}}` listing.
    pub fn entries(&self) -> Vec<(&'static str, LedgerEntry)> {
        let e = |value, formula_ref| LedgerEntry { value, formula_ref };
        vec![
            ("h_R", e(self.h_at_r, "beta*ell*R^2/8")),
            ("phi_R", e(self.phi_at_r, "exp(-h(R))")),
            ("R1", e(self.r1, "R/2 + sqrt(R^2 + 32/(mu*beta)*exp(beta*ell*R^2/8))/2")),
            ("xi", e(self.xi, "1 / int_0^R1 Phi(s)/phi(s) ds")),
            ("a", e(self.a, "2*xi/beta")),
            (
                "a_lower",
                e(self.a_lower, "2/(beta*R^2/2 + 16/mu) * exp(-beta*ell*R^2/4)"),
            ),
            ("c1", e(self.c1, "2/phi(R) * sqrt(2*c6/mu)")),
            ("c2", e(self.c2, "4/phi(R)")),
            (
                "c3",
                e(
                    self.c3,
                    "(c11 + c9*sqrt(c7) + sqrt(2)*c10) * e^ell * (1 + 2/phi(R)/(1 - exp(-a/2)))",
                ),
            ),
            ("c4", e(self.c4, "c9 * e^ell * (1 + 2/phi(R)/(1 - exp(-a/2)))")),
            ("c5", e(self.c5, "c_diam")),
            ("c6", e(self.c6, "(ell+mu)*R^2 + R*|grad fbar(0)| + n/beta")),
            (
                "c7",
                e(
                    self.c7,
                    "(4/mu)*(n/beta + (ell+mu)*R^2 + (2+R)*|grad fbar(0)| + (8*ell^2 + 1/mu)*ell^2*M2(z))",
                ),
            ),
            ("c8", e(self.c8, "(c5+1)*sqrt(2*ell^2*c6/mu + 2*|grad fbar(0)|^2)")),
            ("c9", e(self.c9, "(c5+1)*sqrt(2*ell^2)")),
            ("c10", e(self.c10, "(c5+1)*n*sqrt(8/beta)")),
            ("c11", e(self.c11, "c8 + 2*ell*Psi2(z)")),
            ("alpha", e(self.alpha, "min ||P_I a_j||^2 / 2 over nonzero values")),
            ("c_diam", e(self.c_diam, "6*(1/alpha)^(rank(A)/2)")),
        ]
    }

    pub fn to_json(&self, extra: &[(&'static str, LedgerEntry)]) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (k, v) in self.entries().into_iter().chain(extra.iter().cloned()) {
            map.insert(
                k.to_string(),
                serde_json::to_value(v).expect("ledger entries serialize"),
            );
        }
        serde_json::Value::Object(map)
    }

    /// Coefficients of the two terms of the bound at second moment `ς`.
    pub fn theorem_coefficients(&self, varsigma: f64) -> (f64, f64) {
        let s = varsigma.sqrt();
        (self.c1 + self.c2 * s, self.c3 + self.c4 * s)
    }
}

/// `(c1 + c2√ς) e^{−ηak} + (c3 + c4√ς) √(η log(1/η))`.
pub fn theorem_bound(params: &ProblemParams, ledger: &ConstantLedger, k: usize) -> Result<f64> {
    if params.eta >= 1.0 {
        return Err(invalid("eta", "log(1/η) must be positive (η < 1)"));
    }
    if k < 4 {
        return Err(invalid("k", "the bound is stated for k ≥ 4"));
    }
    let (first, second) = ledger.theorem_coefficients(params.varsigma);
    let eta = params.eta;
    Ok(first * (-eta * ledger.a * k as f64).exp() + second * (eta * (1.0 / eta).ln()).sqrt())
}

/// The bound under the schedule `η = log T/(2aT)`:
/// `(c1 + c2√ς + (c3 + c4√ς)/√(2a)) T^{−1/2} log T`.
pub fn theorem_bound_schedule(ledger: &ConstantLedger, varsigma: f64, steps: usize) -> Result<f64> {
    if steps < 4 {
        return Err(invalid("steps", "the bound is stated for T ≥ 4"));
    }
    let (first, second) = ledger.theorem_coefficients(varsigma);
    let t = steps as f64;
    Ok((first + second / (2.0 * ledger.a).sqrt()) * t.ln() / t.sqrt())
}

/// Step size `log T/(2aT)` for horizon `T`.
pub fn scheduled_eta(a: f64, steps: usize) -> f64 {
    let t = steps as f64;
    t.ln() / (2.0 * a * t)
}

/// `log n + 2 log(1 + c6/μ) + (1/6) log 3 + log(2√π) − log r_min`.
pub fn c13(params: &ProblemParams, ledger: &ConstantLedger, r_min: f64) -> Result<f64> {
    if !(r_min > 0.0) {
        return Err(invalid("r_min", format!("must be positive, got {r_min}")));
    }
    let pi = std::f64::consts::PI;
    Ok(
        (params.n as f64).ln() + 2.0 * (1.0 + ledger.c6 / params.mu).ln() + 3f64.ln() / 6.0 + (2.0 * pi.sqrt()).ln()
            - r_min.ln(),
    )
}

/// Gap bound `E f̄(x) − min f̄ ≤ c12·w1 + (n/β)(max{log ς, 0} + c13)` for
/// compact `K` of diameter `D`, with `c12 = ℓD + ‖∇f̄(0)‖`.
pub fn suboptimality_compact(
    params: &ProblemParams,
    ledger: &ConstantLedger,
    p: &Polyhedron,
    diameter: f64,
    w1: f64,
    r_min: f64,
) -> Result<f64> {
    check_dim(p.dim(), params.n)?;
    if p.bounding_box()?.is_none() {
        return Err(invalid("P", "suboptimality bound needs a bounded polyhedron"));
    }
    if !(diameter > 0.0) {
        return Err(invalid("diameter", "must be positive"));
    }
    if !(w1 >= 0.0) {
        return Err(invalid("w1", "must be nonnegative"));
    }
    let c12 = params.ell * diameter + params.grad0_norm;
    let c13 = c13(params, ledger, r_min)?;
    let log_s = if params.varsigma > 0.0 {
        params.varsigma.ln().max(0.0)
    } else {
        0.0
    };
    Ok(c12 * w1 + params.n as f64 / params.beta * (log_s + c13))
}

/// Radius of the ball around the minimizer on which `f̄` stays within
/// `log 2/β` of its minimum.
pub fn entropy_ball_radius(params: &ProblemParams) -> f64 {
    let c = params.radius.max(params.grad0_norm / params.mu);
    let lin = params.ell * c + params.grad0_norm;
    (-lin + (lin * lin + 2.0 * params.ell * std::f64::consts::LN_2 / params.beta).sqrt()) / params.ell
}

/// Sampled estimate of the smallest Chebyshev radius over points of `K`.
#[derive(Debug, Clone, Serialize)]
pub struct RMinEstimate {
    pub value: f64,
    pub epsilon: f64,
    pub points: usize,
    /// Always `"sampled"`: the minimum over a finite set of boundary points
    /// is an estimate, not a certified lower bound.
    pub provenance: &'static str,
    pub argmin: Vec<f64>,
}

/// Shoots rays from the Chebyshev centre of `K` in `n_points` random
/// directions (plus the `±e_i` axes), and at every boundary point solves
/// the Chebyshev problem for `K ∩ B(x, ε(β))`. Returns the minimum radius.
pub fn estimate_r_min(p: &Polyhedron, params: &ProblemParams, n_points: usize, seed: u64) -> Result<RMinEstimate> {
    check_dim(p.dim(), params.n)?;
    let centre = p.chebyshev_center(None)?;
    if centre.status != ChebyshevStatus::Optimal {
        return Err(invalid("P", "r_min estimation needs a bounded polyhedron"));
    }
    let eps = entropy_ball_radius(params);
    let n = p.dim();
    let mut rng = SimRng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let mut argmin = centre.center.clone();
    let mut count = 0;
    let consider = |x: Vec<f64>, best: &mut f64, argmin: &mut Vec<f64>| -> Result<()> {
        let ball = p.chebyshev_center(Some((&x, eps)))?;
        if ball.radius < *best {
            *best = ball.radius;
            *argmin = x;
        }
        Ok(())
    };
    for j in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[j] = s;
            if let Some(t) = p.ray_exit(&centre.center, &d)? {
                let x = centre.center.iter().zip(&d).map(|(c, v)| c + t * v).collect();
                consider(x, &mut best, &mut argmin)?;
                count += 1;
            }
        }
    }
    for _ in 0..n_points {
        if let Some(x) = p.sample_boundary_point(&centre.center, &mut rng)? {
            consider(x, &mut best, &mut argmin)?;
            count += 1;
        }
    }
    if !(best > 0.0) {
        return Err(Error::Internal("sampled Chebyshev radius is not positive".into()));
    }
    Ok(RMinEstimate {
        value: best,
        epsilon: eps,
        points: count,
        provenance: "sampled",
        argmin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skorokhod::constants_for;

    fn params(n: usize, beta: f64, ell: f64, mu: f64, r: f64) -> ProblemParams {
        ProblemParams {
            n,
            beta,
            eta: 0.01,
            ell,
            mu,
            radius: r,
            varsigma: 0.0,
            grad0_norm: 0.0,
            fbar0: 0.0,
            m2z: 1.0,
            psi2z: 1.0,
            skorokhod: constants_for(&Polyhedron::cube(n.min(4), 1.0).unwrap()).unwrap(),
        }
    }

    #[test]
    fn kappa_examples() {
        let mut p = params(1, 1.0, 2.0, 1.0, 2.0);
        p.eta = 0.1;
        assert!((kappa(&p, 0.0) - 0.2).abs() < 1e-15);
        assert_eq!(kappa(&p, 2.0), -0.1);
        assert!((kappa(&p, 1.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn h_at_radius() {
        let m = MetricChain::new(1.0, 2.0, 1.0, 2.0).unwrap();
        assert!((m.h_at_r() - 1.0).abs() < 1e-15);
        assert_eq!(m.delta(0.0), 0.0);
        assert!((m.delta_prime(0.0) - 1.0).abs() < 1e-12);
        assert!((m.delta_prime(m.r1()) / (0.5 * m.phi_at_r()) - 1.0).abs() < 1e-6);
    }

    /// Φ on [0, R] has the closed form √π/(2√c) erf(√c r); compare with a
    /// Taylor series of erf.
    #[test]
    fn big_phi_matches_series() {
        let m = MetricChain::new(1.0, 2.0, 1.0, 2.0).unwrap();
        let c: f64 = 0.25;
        for &r in &[0.3, 1.0, 1.7, 2.0] {
            let x = c.sqrt() * r;
            let mut term = x;
            let mut sum = x;
            for k in 1..60 {
                term *= -x * x / k as f64;
                sum += term / (2 * k + 1) as f64;
            }
            let want = sum / c.sqrt();
            assert!((m.big_phi(r) - want).abs() < 1e-13, "{r}");
        }
    }

    /// Trapezoid-rule recomputation of ξ⁻¹ on a uniform grid.
    fn xi_inverse_trapezoid(beta: f64, ell: f64, mu: f64, r: f64, n: usize) -> f64 {
        let c = beta * ell / 8.0;
        let hr = c * r * r;
        let r1 = r / 2.0 + 0.5 * (r * r + 32.0 / (mu * beta) * hr.exp()).sqrt();
        let step = r1 / n as f64;
        let mut big_phi = 0.0;
        let mut acc = 0.0;
        let phi = |s: f64| (-c * s.min(r).powi(2)).exp();
        let mut prev_ratio = 0.0;
        for i in 1..=n {
            let s0 = (i - 1) as f64 * step;
            let s1 = i as f64 * step;
            big_phi += 0.5 * step * (phi(s0) + phi(s1));
            let ratio = big_phi / phi(s1);
            acc += 0.5 * step * (prev_ratio + ratio);
            prev_ratio = ratio;
        }
        acc
    }

    #[test]
    fn xi_matches_trapezoid_oracle() {
        for &(beta, ell, mu, r) in &[(1.0, 2.0, 1.0, 2.0), (4.0, 11.0, 1.25, 1.0), (0.5, 1.0, 2.0, 0.0)] {
            let m = MetricChain::new(beta, ell, mu, r).unwrap();
            let coarse = xi_inverse_trapezoid(beta, ell, mu, r, 200_000);
            let fine = xi_inverse_trapezoid(beta, ell, mu, r, 400_000);
            // Richardson extrapolation of the O(h²) oracle.
            let extrapolated = (4.0 * fine - coarse) / 3.0;
            assert!((m.xi_inverse() / extrapolated - 1.0).abs() < 1e-6, "{beta} {ell} {r}");
            assert!((m.xi_inverse() / fine - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn metric_sanity() {
        let m = MetricChain::new(2.0, 3.0, 1.0, 1.5).unwrap();
        let top = 3.0 * m.r1();
        let mut prev = f64::INFINITY;
        for i in 0..10_000 {
            let r = top * i as f64 / 9_999.0;
            let d = m.delta_prime(r);
            assert!(d > 0.0 && d <= prev * (1.0 + 1e-12));
            prev = d;
            if r > 0.0 {
                let v = m.delta(r);
                assert!(v >= 0.5 * r * m.phi_at_r() * (1.0 - 1e-12) && v <= r * (1.0 + 1e-12));
            }
        }
        // ξ⁻¹ ≤ ½ R₁² e^{h(R)}.
        assert!(m.xi_inverse() <= 0.5 * m.r1().powi(2) * m.h_at_r().exp());
    }

    #[test]
    fn delta_derivative_consistency() {
        let m = MetricChain::new(2.0, 3.0, 1.0, 1.5).unwrap();
        for &r in &[0.2, 0.9, 1.49, 1.501, 2.0, m.r1() * 0.99, m.r1() * 1.5] {
            let h = 1e-5 * r.max(1.0);
            let fd = (m.delta(r + h) - m.delta(r - h)) / (2.0 * h);
            assert!(
                (fd - m.delta_prime(r)).abs() < 1e-7 * m.delta_prime(r).max(1e-3),
                "{r}: {fd} vs {}",
                m.delta_prime(r)
            );
        }
    }

    #[test]
    fn degenerate_radius_ledger() {
        let p = params(1, 1.0, 1.0, 1.0, 0.0);
        let l = ledger(&p).unwrap();
        assert_eq!(l.c6, 1.0);
        assert_eq!(l.phi_at_r, 1.0);
        let m = MetricChain::from_params(&p).unwrap();
        assert_eq!(m.h(0.7), 0.0);
    }

    #[test]
    fn a_exceeds_floor_and_c2_scales() {
        for &beta in &[0.5, 1.0, 2.0, 4.0] {
            let l = ledger(&params(2, beta, 2.0, 1.0, 1.5)).unwrap();
            assert!(l.a >= l.a_lower, "β={beta}: {} < {}", l.a, l.a_lower);
            assert!((l.a - 2.0 * l.xi / beta).abs() <= 1e-15 * l.a);
        }
        let l1 = ledger(&params(2, 1.0, 2.0, 1.0, 1.5)).unwrap();
        let l2 = ledger(&params(2, 2.0, 2.0, 1.0, 1.5)).unwrap();
        let want = (2.0 * 1.5f64.powi(2) / 8.0).exp();
        assert!((l2.c2 / l1.c2 / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entries_finite_and_dimension_scaling() {
        for n in [1usize, 2, 4, 8] {
            let l = ledger(&params(n, 1.0, 2.0, 1.0, 1.0)).unwrap();
            for (name, e) in l.entries() {
                assert!(e.value.is_finite() && e.value > 0.0, "{name} = {}", e.value);
            }
            let mut p2 = params(2 * n, 1.0, 2.0, 1.0, 1.0);
            p2.skorokhod = params(n, 1.0, 2.0, 1.0, 1.0).skorokhod;
            let l2 = ledger(&p2).unwrap();
            assert!(l2.c2 / l.c2 <= 2.0 * (1.0 + 1e-9));
            assert!(l2.c10 / l.c10 <= 2.0 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn bound_shapes() {
        let mut p = params(1, 1.0, 2.0, 1.0, 1.0);
        p.eta = 0.05;
        p.varsigma = 0.0;
        let l = ledger(&p).unwrap();
        let b4 = theorem_bound(&p, &l, 4).unwrap();
        let b100 = theorem_bound(&p, &l, 100).unwrap();
        assert!(b100 < b4);
        let limit = l.c3 * (0.05f64 * 20f64.ln()).sqrt();
        let far = theorem_bound(&p, &l, usize::MAX / 2).unwrap();
        assert!((far - limit).abs() < 1e-9 * limit);
        let with_s = {
            let mut q = p.clone();
            q.varsigma = 4.0;
            theorem_bound(&q, &l, 4).unwrap()
        };
        assert!(with_s > b4);
        p.eta = 1.0;
        assert!(theorem_bound(&p, &l, 10).is_err());
        assert!(theorem_bound_schedule(&l, 0.0, 1024).unwrap() > 0.0);
    }

    #[test]
    fn suboptimality_examples() {
        let bx = Polyhedron::cube(1, 2.0).unwrap();
        let mut p = params(1, 4.0, 11.0, 1.25, 3.0);
        p.varsigma = 0.5;
        let l = ledger(&p).unwrap();
        let est = estimate_r_min(&bx, &p, 1000, 1).unwrap();
        assert_eq!(est.provenance, "sampled");
        assert!(est.value > 0.0 && est.value <= est.epsilon);
        let c = c13(&p, &l, est.value).unwrap();
        assert!(c.is_finite() && c > 0.0);
        let s0 = suboptimality_compact(&p, &l, &bx, 4.0, 0.0, est.value).unwrap();
        assert!((s0 - c / 4.0).abs() < 1e-12);
        let mut p2 = p.clone();
        p2.beta = 8.0;
        let s1 = suboptimality_compact(&p2, &l, &bx, 4.0, 0.0, est.value).unwrap();
        assert!((s1 - s0 / 2.0).abs() < 1e-12);
        assert!(suboptimality_compact(&p, &l, &bx, 4.0, 0.0, 0.0).is_err());
    }
}
