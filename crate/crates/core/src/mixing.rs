//! External data streams `z_k` and their mixing descriptors.
//!
//! All supported streams are vector AR(1) filters around a fixed mean,
//! `z_{k+1} − m = c (z_k − m) + ξ_k` with `ξ_k ~ N(0, σ² I_d)`. IID Gaussian
//! data is the case `c = 0`, a constant stream is `σ = 0`. Conditional
//! expectations are therefore available in closed form:
//! `E[z_k | z_{k−s}] = m + c^s (z_{k−s} − m)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::rng::rng_from_seed;
use crate::stats::{mean_se, MeanSe};

/// Stream description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StreamSpec {
    IidGaussian {
        #[serde(default = "one")]
        dim: usize,
        #[serde(default = "unit")]
        noise_std: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    Ar1 {
        #[serde(default = "one")]
        dim: usize,
        coeff: f64,
        #[serde(default = "unit")]
        noise_std: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    Constant {
        value: Vec<f64>,
    },
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl StreamSpec {
    pub fn dim(&self) -> usize {
        match self {
            StreamSpec::IidGaussian { dim, .. } | StreamSpec::Ar1 { dim, .. } => *dim,
            StreamSpec::Constant { value } => value.len(),
        }
    }

    /// Seed offset for the data innovations, if the spec pins one.
    pub fn seed(&self) -> Option<u64> {
        match self {
            StreamSpec::IidGaussian { seed, .. } | StreamSpec::Ar1 { seed, .. } => *seed,
            StreamSpec::Constant { .. } => None,
        }
    }

    pub fn build(&self) -> Result<Ar1Stream> {
        match self {
            StreamSpec::IidGaussian { dim, noise_std, .. } => Ar1Stream::new(0.0, *noise_std, *dim),
            StreamSpec::Ar1 {
                dim, coeff, noise_std, ..
            } => Ar1Stream::new(*coeff, *noise_std, *dim),
            StreamSpec::Constant { value } => Ar1Stream::constant(value.clone()),
        }
    }
}

/// A vector AR(1) stream; see the module documentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Ar1Stream {
    coeff: f64,
    noise_std: f64,
    mean: Vec<f64>,
    state: Vec<f64>,
    burn_in: usize,
}

impl Ar1Stream {
    /// Zero-mean stream in dimension `dim`, started at its mean.
    pub fn new(coeff: f64, noise_std: f64, dim: usize) -> Result<Self> {
        if !(coeff.abs() < 1.0) {
            return Err(invalid("coeff", format!("|coeff| must be < 1, got {coeff}")));
        }
        if !(noise_std >= 0.0) || !noise_std.is_finite() {
            return Err(invalid("noise_std", format!("must be finite and ≥ 0, got {noise_std}")));
        }
        if dim == 0 {
            return Err(invalid("dim", "must be ≥ 1"));
        }
        Ok(Self {
            coeff,
            noise_std,
            mean: vec![0.0; dim],
            state: vec![0.0; dim],
            burn_in: 0,
        })
    }

    /// The deterministic stream `z_k ≡ value`.
    pub fn constant(value: Vec<f64>) -> Result<Self> {
        if value.is_empty() {
            return Err(invalid("value", "constant stream needs at least one entry"));
        }
        Ok(Self {
            coeff: 0.0,
            noise_std: 0.0,
            state: value.clone(),
            mean: value,
            burn_in: 0,
        })
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn is_deterministic(&self) -> bool {
        self.noise_std == 0.0
    }

    /// Burn-in length `⌈50/(1 − |c|)⌉` after which a start at the mean is
    /// close to stationary.
    pub fn recommended_burn_in(&self) -> usize {
        (50.0 / (1.0 - self.coeff.abs()) - 1e-9).ceil() as usize
    }

    /// Stationary standard deviation per coordinate, `σ/√(1 − c²)`.
    pub fn stationary_std(&self) -> f64 {
        self.noise_std / (1.0 - self.coeff * self.coeff).sqrt()
    }

    pub fn set_state(&mut self, z: &[f64]) -> Result<()> {
        check_dim(self.dim(), z.len())?;
        self.state.copy_from_slice(z);
        Ok(())
    }

    /// Exact draw from the stationary law.
    pub fn init_stationary<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let sd = self.stationary_std();
        for (s, m) in self.state.iter_mut().zip(&self.mean) {
            *s = m + sd * rng.sample::<f64, _>(StandardNormal);
        }
    }

    /// Starts at the mean and discards `steps` transitions.
    pub fn init_burn_in<R: Rng + ?Sized>(&mut self, steps: usize, rng: &mut R) {
        self.state.copy_from_slice(&self.mean);
        for _ in 0..steps {
            self.next(rng);
        }
        self.burn_in = steps;
    }

    /// Applies one transition with the given innovation.
    pub fn ar1_step(&mut self, xi: &[f64]) -> &[f64] {
        for ((s, m), x) in self.state.iter_mut().zip(&self.mean).zip(xi) {
            *s = m + self.coeff * (*s - m) + x;
        }
        &self.state
    }

    /// Draws one innovation vector.
    pub fn draw_innovation<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.noise_std * rng.sample::<f64, _>(StandardNormal);
        }
    }

    /// Advances by one step, consuming exactly one innovation vector.
    pub fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[f64] {
        let mut xi = vec![0.0; self.dim()];
        self.draw_innovation(rng, &mut xi);
        self.ar1_step(&xi)
    }

    /// `E[z_k | z_{k−s}]`, or the mean when the conditioning index is
    /// negative (`past = None`).
    pub fn conditional_mean(&self, past: Option<&[f64]>, s: usize, out: &mut [f64]) {
        match past {
            None => out.copy_from_slice(&self.mean),
            Some(z) if s == 0 => out.copy_from_slice(z),
            Some(z) => {
                let f = self.coeff.powi(s.min(i32::MAX as usize) as i32);
                for ((o, m), v) in out.iter_mut().zip(&self.mean).zip(z) {
                    *o = m + f * (v - m);
                }
            }
        }
    }

    pub fn descriptor(&self) -> MixingDescriptor {
        MixingDescriptor {
            coeff: self.coeff,
            noise_std: self.noise_std,
            dim: self.dim(),
            mean_norm: self.mean.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// Closed-form second-order mixing descriptors of an AR(1) stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingDescriptor {
    pub coeff: f64,
    pub noise_std: f64,
    pub dim: usize,
    pub mean_norm: f64,
}

/// Descriptors of a scalar zero-mean AR(1) stream.
pub fn ar1_descriptor(coeff: f64, noise_std: f64) -> Result<MixingDescriptor> {
    Ok(Ar1Stream::new(coeff, noise_std, 1)?.descriptor())
}

impl MixingDescriptor {
    fn scale(&self) -> f64 {
        self.noise_std * (self.dim as f64).sqrt() / (1.0 - self.coeff * self.coeff).sqrt()
    }

    /// `ψ₂(τ) = σ√d |c|^τ / √(1 − c²)`.
    pub fn psi2(&self, tau: usize) -> f64 {
        self.scale() * self.coeff.abs().powi(tau.min(i32::MAX as usize) as i32)
    }

    /// `Ψ₂ = Σ_τ ψ₂(τ) = σ√d / ((1 − |c|)√(1 − c²))`.
    pub fn big_psi2(&self) -> f64 {
        self.scale() / (1.0 - self.coeff.abs())
    }

    /// `M₂ = sup_k E^{1/2}‖z_k‖²`.
    pub fn m2(&self) -> f64 {
        (self.mean_norm.powi(2) + self.scale().powi(2)).sqrt()
    }
}

/// Monte-Carlo estimate of `ψ₂(τ)` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Psi2Estimate {
    pub value: f64,
    pub se: f64,
    pub n_samples: usize,
}

/// Estimates `ψ₂(τ)` by replaying innovations.
///
/// `z_k − E[z_k | ξ_{k−τ+1}, …, ξ_k]` has the same law as `(z_k − z'_k)/√2`,
/// where `z'_k` is produced from an independent stationary past by the same
/// last `τ` innovations. Hence `ψ₂(τ)² = ½ E‖z_k − z'_k‖²`, estimated without
/// nested sampling.
pub fn estimate_psi2(stream: &Ar1Stream, tau: usize, n_samples: usize, seed: u64) -> Result<Psi2Estimate> {
    if n_samples < 100 {
        return Err(Error::InvalidParameter {
            name: "n_samples",
            reason: format!("at least 100 samples required, got {n_samples}"),
        });
    }
    let mut rng = rng_from_seed(seed);
    let d = stream.dim();
    let mut a = stream.clone();
    let mut b = stream.clone();
    let mut xi = vec![0.0; d];
    let mut halves = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        a.init_stationary(&mut rng);
        b.init_stationary(&mut rng);
        for _ in 0..tau {
            stream.draw_innovation(&mut rng, &mut xi);
            a.ar1_step(&xi);
            b.ar1_step(&xi);
        }
        let sq: f64 = a.state().iter().zip(b.state()).map(|(u, v)| (u - v).powi(2)).sum();
        halves.push(0.5 * sq);
    }
    let MeanSe { mean, se, .. } = mean_se(&halves);
    let value = mean.max(0.0).sqrt();
    let se = if value > 0.0 { se / (2.0 * value) } else { 0.0 };
    Ok(Psi2Estimate { value, se, n_samples })
}
