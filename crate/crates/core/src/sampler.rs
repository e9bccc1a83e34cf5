//! The projected Langevin algorithm and its auxiliary processes.
//!
//! Every process here is driven by one [`NoiseRealization`]: Brownian
//! increments on a fine grid (`substeps` per unit step) and a data sequence
//! `z_0, …, z_{T−1}`. Coarse increments `ŵ_k` are stored as the sum of their
//! fine increments, so coarse and fine processes see the same Brownian path.
//! All processes share [`advance`], which is what makes the reductions
//! between them hold bit for bit:
//!
//! | process | drift at step k |
//! |---|---|
//! | `x^A` | `∇ₓf(x_k, z_k)` |
//! | `x^M` | `∇f̄(x_k)` |
//! | `x^{M,s}` | `E[∇ₓf(x_k, z_k) \| z_{k−s}]` |
//! | `x^{B,s}` | `E[∇ₓf(x^{M,s}_k, z_k) \| z_{k−s−1}]` |
//! | `x^C` | `∇f̄` on the fine grid, step `Δt = 1/substeps` |
//! | `x^D` | `Σ_j ∇f̄(x^C_{k,j}) Δt` over the fine states of step k |

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::mixing::Ar1Stream;
use crate::objective::ObjectiveModel;
use crate::polytope::Polyhedron;
use crate::rng::{derive_seed, rng_from_seed, substream_seed};
use crate::skorokhod::DiscretePath;

/// Distance below which a coupled pair is merged.
pub const COUPLING_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub eta: f64,
    /// Inverse temperature; `f64::INFINITY` switches the noise off.
    pub beta: f64,
    pub steps: usize,
    pub seed: u64,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

fn default_substeps() -> usize {
    64
}

impl SamplerConfig {
    pub fn new(eta: f64, beta: f64, steps: usize, seed: u64) -> Self {
        Self {
            eta,
            beta,
            steps,
            seed,
            substeps: default_substeps(),
        }
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid("eta", format!("must be positive, got {}", self.eta)));
        }
        if !(self.beta > 0.0) {
            return Err(invalid("beta", format!("must be positive, got {}", self.beta)));
        }
        if self.substeps == 0 {
            return Err(invalid("substeps", "must be ≥ 1"));
        }
        Ok(())
    }

    /// `√(2η/β)`.
    pub fn noise_scale(&self) -> f64 {
        if self.beta.is_infinite() {
            0.0
        } else {
            (2.0 * self.eta / self.beta).sqrt()
        }
    }

    /// Largest step size admitted by the convergence bound,
    /// `min{1/4, μ/(4ℓ²)}`.
    pub fn step_size_limit(model: &ObjectiveModel) -> f64 {
        (0.25f64).min(model.mu / (4.0 * model.ell * model.ell))
    }

    pub fn check_step_size(&self, model: &ObjectiveModel) -> Result<()> {
        let limit = Self::step_size_limit(model);
        if self.eta > limit {
            return Err(invalid(
                "eta",
                format!("{} exceeds min{{1/4, μ/(4ℓ²)}} = {limit}", self.eta),
            ));
        }
        Ok(())
    }
}

/// A trajectory stored as a flat array of `len × dim` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    data: Vec<f64>,
}

impl Trajectory {
    fn with_capacity(dim: usize, len: usize) -> Self {
        Self {
            dim,
            data: Vec::with_capacity(dim * len),
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.data.extend_from_slice(x);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.get(self.len() - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Every `stride`-th point, starting with the first.
    pub fn thin(&self, stride: usize) -> Trajectory {
        let mut out = Trajectory::with_capacity(self.dim, self.len() / stride + 1);
        for k in (0..self.len()).step_by(stride) {
            out.push(self.get(k));
        }
        out
    }

    pub fn to_path(&self) -> DiscretePath {
        DiscretePath::new(self.iter().map(|p| p.to_vec()).collect())
            .expect("trajectories are nonempty with constant dimension")
    }

    /// `‖self_k − other_k‖` for every `k`.
    pub fn distances(&self, other: &Trajectory) -> Vec<f64> {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt())
            .collect()
    }

    /// Bitwise equality of all stored values.
    pub fn bitwise_eq(&self, other: &Trajectory) -> bool {
        self.dim == other.dim
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Brownian increments on the fine grid plus the data sequence.
#[derive(Debug, Clone)]
pub struct NoiseRealization {
    dim: usize,
    data_dim: usize,
    steps: usize,
    substeps: usize,
    fine: Vec<f64>,
    coarse: Vec<f64>,
    innovations: Vec<f64>,
    data: Vec<f64>,
}

impl NoiseRealization {
    /// Draws a realization for `cfg.steps` steps. The data stream starts
    /// from an exact stationary draw; `data_seed` (if given) decouples the
    /// data from the Brownian seed.
    pub fn generate(stream: &Ar1Stream, dim: usize, cfg: &SamplerConfig, data_seed: Option<u64>) -> Self {
        let steps = cfg.steps;
        let substeps = cfg.substeps.max(1);
        let mut wrng = rng_from_seed(substream_seed(cfg.seed, "brownian"));
        let data_base = data_seed.map_or(cfg.seed, |s| derive_seed(cfg.seed, s));
        let mut zrng = rng_from_seed(substream_seed(data_base, "data"));
        let sq = (1.0 / substeps as f64).sqrt();
        let mut fine = Vec::with_capacity(steps * substeps * dim);
        let mut coarse = vec![0.0; steps * dim];
        for k in 0..steps {
            let c = &mut coarse[k * dim..(k + 1) * dim];
            for _ in 0..substeps {
                for ci in c.iter_mut() {
                    let dw = sq * wrng.sample::<f64, _>(StandardNormal);
                    fine.push(dw);
                    *ci += dw;
                }
            }
        }
        let d = stream.dim();
        let mut z = stream.clone();
        z.init_stationary(&mut zrng);
        let mut data = Vec::with_capacity(steps * d);
        let mut innovations = vec![0.0; steps * d];
        for k in 0..steps {
            data.extend_from_slice(z.state());
            let xi = &mut innovations[k * d..(k + 1) * d];
            stream.draw_innovation(&mut zrng, xi);
            z.ar1_step(xi);
        }
        Self {
            dim,
            data_dim: d,
            steps,
            substeps,
            fine,
            coarse,
            innovations,
            data,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// `ŵ_k`.
    pub fn coarse(&self, k: usize) -> &[f64] {
        &self.coarse[k * self.dim..(k + 1) * self.dim]
    }

    /// Fine increment `j` (global index on the fine grid).
    pub fn fine(&self, j: usize) -> &[f64] {
        &self.fine[j * self.dim..(j + 1) * self.dim]
    }

    /// `z_k`.
    pub fn z(&self, k: usize) -> &[f64] {
        &self.data[k * self.data_dim..(k + 1) * self.data_dim]
    }

    /// Innovation `ξ_k` with `z_{k+1} = c z_k + ξ_k` (around the mean).
    pub fn innovation(&self, k: usize) -> &[f64] {
        &self.innovations[k * self.data_dim..(k + 1) * self.data_dim]
    }

    /// Whether `ŵ_k` equals the sum of its substep increments exactly.
    pub fn coarse_matches_fine(&self) -> bool {
        (0..self.steps).all(|k| {
            let mut acc = vec![0.0; self.dim];
            for j in 0..self.substeps {
                for (a, v) in acc.iter_mut().zip(self.fine(k * self.substeps + j)) {
                    *a += v;
                }
            }
            acc.iter().zip(self.coarse(k)).all(|(a, b)| a.to_bits() == b.to_bits())
        })
    }
}

/// One projected step: `x ← Π_K(x − h·drift + σ·w)`.
#[inline]
pub fn advance(p: &Polyhedron, x: &mut [f64], drift: &[f64], h: f64, w: &[f64], sigma: f64) -> Result<()> {
    for ((xi, g), wi) in x.iter_mut().zip(drift).zip(w) {
        *xi = *xi - h * *g + sigma * *wi;
    }
    p.project_in_place(x)
}

fn check_inputs(
    p: &Polyhedron,
    model: &ObjectiveModel,
    cfg: &SamplerConfig,
    noise: &NoiseRealization,
    x0: &[f64],
) -> Result<()> {
    cfg.validate()?;
    check_dim(p.dim(), model.dim())?;
    check_dim(p.dim(), x0.len())?;
    check_dim(noise.dim, p.dim())?;
    check_dim(model.data_dim(), noise.data_dim)?;
    if noise.steps < cfg.steps {
        return Err(invalid(
            "noise",
            format!("{} steps available, {} needed", noise.steps, cfg.steps),
        ));
    }
    if !p.contains(x0, 1e-12)? {
        return Err(invalid("x0", "initial point is outside K"));
    }
    Ok(())
}

fn run_coarse<F>(
    p: &Polyhedron,
    cfg: &SamplerConfig,
    noise: &NoiseRealization,
    x0: &[f64],
    mut drift: F,
) -> Result<Trajectory>
where
    F: FnMut(usize, &[f64], &mut [f64]),
{
    let n = x0.len();
    let sigma = cfg.noise_scale();
    let mut traj = Trajectory::with_capacity(n, cfg.steps + 1);
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    traj.push(&x);
    for k in 0..cfg.steps {
        drift(k, &x, &mut g);
        advance(p, &mut x, &g, cfg.eta, noise.coarse(k), sigma)?;
        traj.push(&x);
    }
    Ok(traj)
}

/// `x^A`: the algorithm itself, `x_{k+1} = Π_K(x_k − η∇ₓf(x_k, z_k) + √(2η/β) ŵ_k)`.
pub fn run_algorithm(
    p: &Polyhedron,
    model: &ObjectiveModel,
    cfg: &SamplerConfig,
    noise: &NoiseRealization,
    x0: &[f64],
) -> Result<Trajectory> {
    check_inputs(p, model, cfg, noise, x0)?;
    run_coarse(p, cfg, noise, x0, |k, x, g| model.grad(x, noise.z(k), g))
}

/// `x^M`: the algorithm with the data averaged out.
pub fn run_mean(
    p: &Polyhedron,
    model: &ObjectiveModel,
    cfg: &SamplerConfig,
    noise: &NoiseRealization,
    x0: &[f64],
) -> Result<Trajectory> {
    check_inputs(p, model, cfg, noise, x0)?;
    run_coarse(p, cfg, noise, x0, |_, x, g| model.mean_grad(x, g))
}

/// `(x^{M,s}, x^{B,s})`, simulated together because `x^{B,s}` evaluates its
/// gradient at `x^{M,s}`.
pub fn run_partially_averaged(
    p: &Polyhedron,
    model: &ObjectiveModel,
    stream: &Ar1Stream,
    cfg: &SamplerConfig,
    noise: &NoiseRealization,
    x0: &[f64],
    s: usize,
) -> Result<(Trajectory, Trajectory)> {
    check_inputs(p, model, cfg, noise, x0)?;
    check_dim(stream.dim(), model.data_dim())?;
    let n = x0.len();
    let sigma = cfg.noise_scale();
    let mut tm = Trajectory::with_capacity(n, cfg.steps + 1);
    let mut tb = Trajectory::with_capacity(n, cfg.steps + 1);
    let (mut xm, mut xb) = (x0.to_vec(), x0.to_vec());
    let (mut gm, mut gb) = (vec![0.0; n], vec![0.0; n]);
    let mut scratch = vec![0.0; model.data_dim()];
    tm.push(&xm);
    tb.push(&xb);
    let past = |k: usize, lag: usize| (k >= lag).then(|| noise.z(k - lag));
    for k in 0..cfg.steps {
        model.conditional_grad(&xm, stream, past(k, s), s, &mut gm, &mut scratch);
        model.conditional_grad(&xm, stream, past(k, s + 1), s + 1, &mut gb, &mut scratch);
        advance(p, &mut xm, &gm, cfg.eta, noise.coarse(k), sigma)?;
        advance(p, &mut xb, &gb, cfg.eta, noise.coarse(k), sigma)?;
        tm.push(&xm);
        tb.push(&xb);
    }
    Ok((tm, tb))
}

/// `x^C`: projected Euler–Maruyama for the averaged dynamics on the fine
/// grid. The returned trajectory has `steps·substeps + 1` points; coarse
/// samples are every `substeps`-th point.
pub fn run_fine_c(
    p: &Polyhedron,
    model: &ObjectiveModel,
    cfg: &SamplerConfig,
    noise: &NoiseRealization,
    x0: &[f64],
) -> Result<Trajectory> {
    check_inputs(p, model, cfg, noise, x0)?;
    if noise.substeps != cfg.substeps {
        return Err(invalid("substeps", "noise realization was drawn on a different grid"));
    }
    let n = x0.len();
    let sigma = cfg.noise_scale();
    let h = cfg.eta * (1.0 / cfg.substeps as f64);
    let total = cfg.steps * cfg.substeps;
    let mut traj = Trajectory::with_capacity(n, total + 1);
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    traj.push(&x);
    for j in 0..total {
        model.mean_grad(&x, &mut g);
        advance(p, &mut x, &g, h, noise.fine(j), sigma)?;
        traj.push(&x);
    }
    Ok(traj)
}

/// `x^D`: the coarse recursion driven by the fine-grid drift integral of
/// `x^C`, `x_{k+1} = Π_K(x_k − η Σ_j ∇f̄(x^C_{k,j}) Δt + √(2η/β) ŵ_k)`.
pub fn run_d(
    p: &Polyhedron,
    model: &ObjectiveModel,
    cfg: &SamplerConfig,
    fine_c: &Trajectory,
    noise: &NoiseRealization,
    x0: &[f64],
) -> Result<Trajectory> {
    check_inputs(p, model, cfg, noise, x0)?;
    let sub = cfg.substeps;
    if fine_c.len() < cfg.steps * sub + 1 {
        return Err(invalid("fine_c", "fine trajectory is shorter than the horizon"));
    }
    let n = x0.len();
    let dt = 1.0 / sub as f64;
    let mut g = vec![0.0; n];
    let mut acc = vec![0.0; n];
    run_coarse(p, cfg, noise, x0, |k, _x, drift| {
        acc.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..sub {
            model.mean_grad(fine_c.get(k * sub + j), &mut g);
            for (a, v) in acc.iter_mut().zip(&g) {
                *a += *v;
            }
        }
        for (d, a) in drift.iter_mut().zip(&acc) {
            *d = *a * dt;
        }
    })
}

/// All processes for one noise realization.
#[derive(Debug, Clone)]
pub struct ProcessBundle {
    pub a: Trajectory,
    pub m: Trajectory,
    /// `(s, x^{M,s}, x^{B,s})` for every requested lag.
    pub partial: Vec<(usize, Trajectory, Trajectory)>,
    pub c_fine: Trajectory,
    pub d: Trajectory,
    pub substeps: usize,
}

impl ProcessBundle {
    /// Coarse samples `x^C_k`.
    pub fn c_coarse(&self) -> Trajectory {
        self.c_fine.thin(self.substeps)
    }

    fn named(&self) -> Vec<(String, Trajectory)> {
        let mut v = vec![
            ("A".to_string(), self.a.clone()),
            ("M".to_string(), self.m.clone()),
            ("C".to_string(), self.c_coarse()),
            ("D".to_string(), self.d.clone()),
        ];
        for (s, ms, bs) in &self.partial {
            v.push((format!("M{s}"), ms.clone()));
            v.push((format!("B{s}"), bs.clone()));
        }
        v
    }

    /// Terminal points and pairwise sup-distances over the coarse grid.
    pub fn summary(&self) -> BundleSummary {
        let named = self.named();
        let terminal = named.iter().map(|(k, t)| (k.clone(), t.last().to_vec())).collect();
        let mut sup = Vec::new();
        for i in 0..named.len() {
            for j in i + 1..named.len() {
                let d = named[i].1.distances(&named[j].1).into_iter().fold(0.0, f64::max);
                sup.push((named[i].0.clone(), named[j].0.clone(), d));
            }
        }
        BundleSummary {
            terminal,
            sup_distances: sup,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BundleSummary {
    pub terminal: Vec<(String, Vec<f64>)>,
    pub sup_distances: Vec<(String, String, f64)>,
}

pub fn run_bundle(
    p: &Polyhedron,
    model: &ObjectiveModel,
    stream: &Ar1Stream,
    cfg: &SamplerConfig,
    noise: &NoiseRealization,
    x0: &[f64],
    lags: &[usize],
) -> Result<ProcessBundle> {
    let a = run_algorithm(p, model, cfg, noise, x0)?;
    let m = run_mean(p, model, cfg, noise, x0)?;
    let partial = lags
        .iter()
        .map(|&s| run_partially_averaged(p, model, stream, cfg, noise, x0, s).map(|(ms, bs)| (s, ms, bs)))
        .collect::<Result<Vec<_>>>()?;
    let c_fine = run_fine_c(p, model, cfg, noise, x0)?;
    let d = run_d(p, model, cfg, &c_fine, noise, x0)?;
    Ok(ProcessBundle {
        a,
        m,
        partial,
        c_fine,
        d,
        substeps: cfg.substeps,
    })
}

/// Result of [`run_coupled_pair`].
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub a: Trajectory,
    pub b: Trajectory,
    /// Fine step at which the pair merged, if it did.
    pub coupling_step: Option<usize>,
    /// Fine steps between recorded points.
    pub stride: usize,
    pub substeps: usize,
}

impl CoupledRun {
    /// Coupling time in units of coarse steps.
    pub fn coupling_time(&self) -> Option<f64> {
        self.coupling_step.map(|j| j as f64 / self.substeps as f64)
    }
}

/// Two fine-grid chains of the averaged dynamics under a reflection
/// coupling.
///
/// Before the chains meet, the second chain receives the Gaussian increment
/// mirrored in the hyperplane orthogonal to `u`, the unit vector along the
/// difference of the two pre-noise positions. Each step is a maximal
/// coupling of the two Gaussian proposals: with the largest possible
/// probability both chains are sent to the same point, otherwise the
/// increment is reflected. Once the chains are closer than
/// [`COUPLING_THRESHOLD`] they are merged and move together.
pub fn run_coupled_pair(
    p: &Polyhedron,
    model: &ObjectiveModel,
    cfg: &SamplerConfig,
    x0_a: &[f64],
    x0_b: &[f64],
    stride: usize,
) -> Result<CoupledRun> {
    cfg.validate()?;
    check_dim(p.dim(), x0_a.len())?;
    check_dim(p.dim(), x0_b.len())?;
    if cfg.beta.is_infinite() {
        return Err(invalid("beta", "coupling needs finite β"));
    }
    let stride = stride.max(1);
    let n = p.dim();
    let mut rng = rng_from_seed(substream_seed(cfg.seed, "coupling"));
    let dt = 1.0 / cfg.substeps as f64;
    let h = cfg.eta * dt;
    let sigma = (2.0 * cfg.eta * dt / cfg.beta).sqrt();
    let total = cfg.steps * cfg.substeps;
    let mut xa = p.project(x0_a)?;
    let mut xb = p.project(x0_b)?;
    let mut ta = Trajectory::with_capacity(n, total / stride + 1);
    let mut tb = Trajectory::with_capacity(n, total / stride + 1);
    ta.push(&xa);
    tb.push(&xb);
    let mut coupled = xa == xb;
    let mut coupling_step = coupled.then_some(0);
    let (mut ga, mut gb) = (vec![0.0; n], vec![0.0; n]);
    let mut xi = vec![0.0; n];
    let mut zeta = vec![0.0; n];
    for j in 0..total {
        for v in xi.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        model.mean_grad(&xa, &mut ga);
        for i in 0..n {
            xa[i] -= h * ga[i];
        }
        if coupled {
            for i in 0..n {
                xa[i] += sigma * xi[i];
            }
            p.project_in_place(&mut xa)?;
            xb.copy_from_slice(&xa);
        } else {
            model.mean_grad(&xb, &mut gb);
            for i in 0..n {
                xb[i] -= h * gb[i];
                zeta[i] = (xa[i] - xb[i]) / sigma;
            }
            let zn2: f64 = zeta.iter().map(|v| v * v).sum();
            let shifted: f64 = xi.iter().zip(&zeta).map(|(a, b)| (a + b).powi(2)).sum();
            let log_u = rng.random::<f64>().ln();
            let meet = log_u <= -0.5 * shifted + 0.5 * xi.iter().map(|v| v * v).sum::<f64>();
            for i in 0..n {
                xa[i] += sigma * xi[i];
            }
            if meet {
                xb.copy_from_slice(&xa);
            } else {
                let zn = zn2.sqrt();
                let proj: f64 = xi.iter().zip(&zeta).map(|(a, b)| a * b).sum::<f64>() / zn.max(f64::MIN_POSITIVE);
                for i in 0..n {
                    xb[i] += sigma * (xi[i] - 2.0 * proj * zeta[i] / zn.max(f64::MIN_POSITIVE));
                }
            }
            p.project_in_place(&mut xa)?;
            p.project_in_place(&mut xb)?;
            let d2: f64 = xa.iter().zip(&xb).map(|(a, b)| (a - b).powi(2)).sum();
            if d2.sqrt() < COUPLING_THRESHOLD {
                xb.copy_from_slice(&xa);
                coupled = true;
                coupling_step = Some(j + 1);
            }
        }
        if (j + 1) % stride == 0 {
            ta.push(&xa);
            tb.push(&xb);
        }
    }
    Ok(CoupledRun {
        a: ta,
        b: tb,
        coupling_step,
        stride,
        substeps: cfg.substeps,
    })
}

/// Runs `f(index, seed)` for `replicas` replicas on `workers` threads
/// (`0` = rayon default). Results are returned in replica order, so any
/// reduction over them is independent of scheduling.
pub fn run_replicas<T, F>(replicas: usize, workers: usize, base_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync + Send,
{
    let body = || {
        (0..replicas)
            .into_par_iter()
            .map(|i| f(i, derive_seed(base_seed, i as u64)))
            .collect::<Result<Vec<T>>>()
    };
    if workers == 0 {
        return body();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
        .install(body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn interval() -> Polyhedron {
        Polyhedron::cube(1, 2.0).unwrap()
    }

    fn quad1() -> ObjectiveModel {
        ObjectiveModel::coupled_quadratic(1.0, DMatrix::from_element(1, 1, 1.0), vec![0.0], 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn zero_noise_is_projected_gradient_descent() {
        let cfg = SamplerConfig::new(0.1, f64::INFINITY, 30, 0).with_substeps(1);
        let stream = Ar1Stream::constant(vec![0.0]).unwrap();
        let noise = NoiseRealization::generate(&stream, 1, &cfg, None);
        let t = run_algorithm(&interval(), &quad1(), &cfg, &noise, &[1.0]).unwrap();
        for (k, x) in t.iter().enumerate() {
            assert!((x[0] - 0.9f64.powi(k as i32)).abs() < 1e-14);
        }
        let m = run_mean(&interval(), &quad1(), &cfg, &noise, &[1.0]).unwrap();
        assert!(m.bitwise_eq(&t));
    }

    #[test]
    fn single_step_trace() {
        // Independent scalar re-implementation of one step with zero gradient.
        let zero = ObjectiveModel::coupled_quadratic(0.0, DMatrix::zeros(1, 1), vec![0.0], 1.0, 1.0, 0.0).unwrap();
        let cfg = SamplerConfig::new(0.1, 2.0, 1, 42).with_substeps(4);
        let stream = Ar1Stream::new(0.0, 1.0, 1).unwrap();
        let noise = NoiseRealization::generate(&stream, 1, &cfg, None);
        let w0 = noise.coarse(0)[0];
        let t = run_algorithm(&interval(), &zero, &cfg, &noise, &[0.0]).unwrap();
        let want = (0.0 + (2.0f64 * 0.1 / 2.0).sqrt() * w0).clamp(-2.0, 2.0);
        assert_eq!(t.get(1)[0], want);
        assert!(noise.coarse_matches_fine());
        // With ŵ₀ = 0.5 the step is √0.1·0.5.
        let x = interval().project(&[0.1f64.sqrt() * 0.5]).unwrap();
        assert!((x[0] - 0.158_113_883_008_418_97).abs() < 1e-15);
    }

    #[test]
    fn iterates_stay_in_k() {
        let p = Polyhedron::from_rows(
            vec![vec![1.0, 0.2], vec![-0.3, 1.0], vec![-1.0, -1.0]],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let m = ObjectiveModel::coupled_quadratic(1.0, DMatrix::identity(2, 2), vec![0.0, 0.0], 1.0, 1.0, 0.0).unwrap();
        let stream = Ar1Stream::new(0.5, 1.0, 2).unwrap();
        for r in 0..1000u64 {
            let cfg = SamplerConfig::new(0.2, 0.5, 20, r).with_substeps(1);
            let noise = NoiseRealization::generate(&stream, 2, &cfg, None);
            let t = run_algorithm(&p, &m, &cfg, &noise, &[0.0, 0.0]).unwrap();
            assert!(t.iter().all(|x| p.contains(x, 1e-8).unwrap()));
        }
    }

    #[test]
    fn reductions_hold_bitwise() {
        let p = Polyhedron::cube(2, 1.0).unwrap();
        let m = ObjectiveModel::coupled_quadratic(
            1.0,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]),
            vec![0.0, 0.0],
            2.0,
            1.0,
            0.0,
        )
        .unwrap();
        let ar = Ar1Stream::new(0.5, 1.0, 2).unwrap();
        let cfg = SamplerConfig::new(0.05, 1.0, 40, 3).with_substeps(8);
        let noise = NoiseRealization::generate(&ar, 2, &cfg, None);
        let x0 = [0.3, -0.2];
        let b = run_bundle(&p, &m, &ar, &cfg, &noise, &x0, &[0, 1, 2, 41]).unwrap();
        assert!(b.partial[0].1.bitwise_eq(&b.a));
        assert!(b.partial[3].1.bitwise_eq(&b.m));
        assert!(!b.a.bitwise_eq(&b.m));
        // Lag 2: identical to x^M for k ≤ 2 only.
        let m2 = &b.partial[2].1;
        for k in 0..=2 {
            assert_eq!(m2.get(k), b.m.get(k));
        }
        assert!(b.d.len() == 41 && b.c_fine.len() == 40 * 8 + 1);
        let s = b.summary();
        assert!(s.sup_distances.iter().any(|(a, c, _)| a == "A" && c == "M"));

        // IID data: x^{M,1} coincides with x^M.
        let iid = Ar1Stream::new(0.0, 1.0, 2).unwrap();
        let noise = NoiseRealization::generate(&iid, 2, &cfg, None);
        let (m1, _) = run_partially_averaged(&p, &m, &iid, &cfg, &noise, &x0, 1).unwrap();
        assert!(m1.bitwise_eq(&run_mean(&p, &m, &cfg, &noise, &x0).unwrap()));

        // Constant data at the mean: algorithm equals mean process.
        let c = Ar1Stream::constant(vec![0.0, 0.0]).unwrap();
        let noise = NoiseRealization::generate(&c, 2, &cfg, None);
        assert!(run_algorithm(&p, &m, &cfg, &noise, &x0)
            .unwrap()
            .bitwise_eq(&run_mean(&p, &m, &cfg, &noise, &x0).unwrap()));
    }

    #[test]
    fn single_substep_collapses_c_and_d_onto_m() {
        let p = Polyhedron::cube(1, 2.0).unwrap();
        let m = ObjectiveModel::double_well(0.1, 0.0, 11.0, 1.25, 3.0).unwrap();
        let ar = Ar1Stream::new(0.5, 1.0, 1).unwrap();
        let cfg = SamplerConfig::new(0.05, 4.0, 60, 9).with_substeps(1);
        let noise = NoiseRealization::generate(&ar, 1, &cfg, None);
        let b = run_bundle(&p, &m, &ar, &cfg, &noise, &[0.5], &[]).unwrap();
        assert!(b.c_coarse().bitwise_eq(&b.m));
        assert!(b.d.bitwise_eq(&b.m));
    }

    #[test]
    fn drift_free_fine_chain_matches_reflected_walk() {
        // K = [−1, ∞), zero drift: Lindley recursion on the fine increments.
        let p = Polyhedron::new(vec![vec![-1.0]], vec![1.0]).unwrap();
        let zero = ObjectiveModel::coupled_quadratic(0.0, DMatrix::zeros(1, 1), vec![0.0], 1.0, 1.0, 0.0).unwrap();
        let cfg = SamplerConfig::new(0.1, 1.0, 20, 5).with_substeps(16);
        let stream = Ar1Stream::new(0.0, 1.0, 1).unwrap();
        let noise = NoiseRealization::generate(&stream, 1, &cfg, None);
        let c = run_fine_c(&p, &zero, &cfg, &noise, &[-0.5]).unwrap();
        let s = cfg.noise_scale();
        let mut u = -0.5 + 1.0;
        let mut running_min = u;
        for j in 0..20 * 16 {
            u += s * noise.fine(j)[0];
            running_min = f64::min(running_min, u);
            let want = u - running_min.min(0.0) - 1.0;
            assert!((c.get(j + 1)[0] - want).abs() < 1e-12);
        }
        // x^D with zero drift is the discrete Skorokhod map of the coarse walk.
        let d = run_d(&p, &zero, &cfg.with_substeps(16), &c, &noise, &[-0.5]).unwrap();
        let mut y = vec![vec![0.0]];
        for k in 0..20 {
            let last = y[k][0];
            y.push(vec![last + s * noise.coarse(k)[0]]);
        }
        let y = DiscretePath::new(y).unwrap();
        let x = crate::skorokhod::discrete_map(&p, &y, &[-0.5]).unwrap();
        for (a, b) in d.iter().zip(x.points()) {
            assert!((a[0] - b[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn determinism_and_coupling_basics() {
        let p = Polyhedron::cube(2, 1.0).unwrap();
        let m = ObjectiveModel::rotated_double_well(0.3, DMatrix::zeros(2, 1), vec![0.0], 30.0, 0.5, 4.0).unwrap();
        let cfg = SamplerConfig::new(0.1, 1.0, 30, 77).with_substeps(16);
        let r1 = run_coupled_pair(&p, &m, &cfg, &[1.0, 1.0], &[-1.0, -1.0], 16).unwrap();
        let r2 = run_coupled_pair(&p, &m, &cfg, &[1.0, 1.0], &[-1.0, -1.0], 16).unwrap();
        assert!(r1.a.bitwise_eq(&r2.a) && r1.b.bitwise_eq(&r2.b));
        assert_eq!(r1.a.len(), 31);
        let same = run_coupled_pair(&p, &m, &cfg, &[0.2, 0.1], &[0.2, 0.1], 1).unwrap();
        assert_eq!(same.coupling_step, Some(0));
        assert!(same.a.bitwise_eq(&same.b));
        if let Some(j) = r1.coupling_step {
            let k = j.div_ceil(16);
            for t in k..r1.a.len() {
                assert_eq!(r1.a.get(t), r1.b.get(t));
            }
        }
    }

    #[test]
    fn one_dimensional_reflection_mirrors_increment() {
        // Far apart chains essentially never meet in one step, so the second
        // chain moves by exactly the negated increment (no drift, interior).
        let p = Polyhedron::cube(1, 100.0).unwrap();
        let zero = ObjectiveModel::coupled_quadratic(0.0, DMatrix::zeros(1, 1), vec![0.0], 1.0, 1.0, 0.0).unwrap();
        let cfg = SamplerConfig::new(0.01, 1.0, 1, 1).with_substeps(1);
        let r = run_coupled_pair(&p, &zero, &cfg, &[10.0], &[-10.0], 1).unwrap();
        let da = r.a.get(1)[0] - 10.0;
        let db = r.b.get(1)[0] + 10.0;
        assert!((da + db).abs() < 1e-12 && da != 0.0);
    }

    #[test]
    fn replicas_are_ordered_and_deterministic() {
        let a = run_replicas(50, 2, 9, |i, s| Ok((i, s))).unwrap();
        let b = run_replicas(50, 0, 9, |i, s| Ok((i, s))).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, (j, _))| i == *j));
    }

    #[test]
    fn strict_step_size() {
        let m = ObjectiveModel::double_well(0.1, 0.0, 11.0, 1.25, 3.0).unwrap();
        let limit = SamplerConfig::step_size_limit(&m);
        assert!((limit - 1.25 / 484.0).abs() < 1e-15);
        assert!(SamplerConfig::new(0.01, 1.0, 1, 0).check_step_size(&m).is_err());
        assert!(SamplerConfig::new(limit, 1.0, 1, 0).check_step_size(&m).is_ok());
    }
}
