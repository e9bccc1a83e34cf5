//! Objectives `f(x, z)` whose gradient is affine in the data:
//! `∇ₓf(x, z) = g₀(x) + G₁(x) z`.
//!
//! Affinity makes every conditional expectation of the gradient exact, since
//! `E[∇ₓf(x, z_k) | F] = g₀(x) + G₁(x) E[z_k | F]`. The regularity constants
//! `ℓ`, `μ` and `R` are declared by the caller and checked numerically by
//! [`validate_regularity`]; they are never inferred.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::mixing::Ar1Stream;
use crate::polytope::Polyhedron;
use crate::rng::rng_from_seed;

/// The data-independent and data-linear parts of a gradient field.
pub trait GradientField: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn data_dim(&self) -> usize;
    /// `f(x, z)`, up to an additive function of `z` alone.
    fn value(&self, x: &[f64], z: &[f64]) -> f64;
    /// Writes `g₀(x)` into `out`.
    fn grad_base(&self, x: &[f64], out: &mut [f64]);
    /// Adds `G₁(x) z` to `out`.
    fn apply_coupling(&self, x: &[f64], z: &[f64], out: &mut [f64]);
}

fn add_matvec(b: &DMatrix<f64>, z: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, zc) in z.iter().enumerate() {
            acc += b[(r, c)] * zc;
        }
        *o += acc;
    }
}

fn bilinear(x: &[f64], b: &DMatrix<f64>, z: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (r, xr) in x.iter().enumerate() {
        for (c, zc) in z.iter().enumerate() {
            acc += xr * b[(r, c)] * zc;
        }
    }
    acc
}

/// `f(x, z) = ½ κ‖x‖² + xᵀBz`.
#[derive(Debug, Clone)]
pub struct CoupledQuadratic {
    pub curvature: f64,
    pub coupling: DMatrix<f64>,
}

impl GradientField for CoupledQuadratic {
    fn dim(&self) -> usize {
        self.coupling.nrows()
    }
    fn data_dim(&self) -> usize {
        self.coupling.ncols()
    }
    fn value(&self, x: &[f64], z: &[f64]) -> f64 {
        0.5 * self.curvature * x.iter().map(|v| v * v).sum::<f64>() + bilinear(x, &self.coupling, z)
    }
    fn grad_base(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = self.curvature * v;
        }
    }
    fn apply_coupling(&self, _x: &[f64], z: &[f64], out: &mut [f64]) {
        add_matvec(&self.coupling, z, out);
    }
}

/// `f(x, z) = x⁴/4 − x²/2 + c·x·z` on the line.
#[derive(Debug, Clone)]
pub struct DoubleWell {
    pub coupling: f64,
}

impl GradientField for DoubleWell {
    fn dim(&self) -> usize {
        1
    }
    fn data_dim(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64], z: &[f64]) -> f64 {
        let x = x[0];
        x.powi(4) / 4.0 - x * x / 2.0 + self.coupling * x * z[0]
    }
    fn grad_base(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[0].powi(3) - x[0];
    }
    fn apply_coupling(&self, _x: &[f64], z: &[f64], out: &mut [f64]) {
        out[0] += self.coupling * z[0];
    }
}

/// A double well along the direction at `angle`, harmonic across it, plus
/// `xᵀBz`. In rotated coordinates `u = Rᵀx`:
/// `f = u₁⁴/4 − u₁²/2 + u₂²/2 + xᵀBz`.
#[derive(Debug, Clone)]
pub struct RotatedDoubleWell {
    pub angle: f64,
    pub coupling: DMatrix<f64>,
}

impl RotatedDoubleWell {
    fn rotate_in(&self, x: &[f64]) -> (f64, f64) {
        let (s, c) = self.angle.sin_cos();
        (c * x[0] + s * x[1], -s * x[0] + c * x[1])
    }
}

impl GradientField for RotatedDoubleWell {
    fn dim(&self) -> usize {
        2
    }
    fn data_dim(&self) -> usize {
        self.coupling.ncols()
    }
    fn value(&self, x: &[f64], z: &[f64]) -> f64 {
        let (u1, u2) = self.rotate_in(x);
        u1.powi(4) / 4.0 - u1 * u1 / 2.0 + u2 * u2 / 2.0 + bilinear(x, &self.coupling, z)
    }
    fn grad_base(&self, x: &[f64], out: &mut [f64]) {
        let (u1, u2) = self.rotate_in(x);
        let (g1, g2) = (u1.powi(3) - u1, u2);
        let (s, c) = self.angle.sin_cos();
        out[0] = c * g1 - s * g2;
        out[1] = s * g1 + c * g2;
    }
    fn apply_coupling(&self, _x: &[f64], z: &[f64], out: &mut [f64]) {
        add_matvec(&self.coupling, z, out);
    }
}

/// A gradient field together with the data mean and declared constants.
#[derive(Debug, Clone)]
pub struct ObjectiveModel {
    field: Arc<dyn GradientField>,
    mean_z: Vec<f64>,
    pub ell: f64,
    pub mu: f64,
    pub radius: f64,
    pub grad0_norm: f64,
    pub fbar0: f64,
}

impl ObjectiveModel {
    pub fn new(field: Arc<dyn GradientField>, mean_z: Vec<f64>, ell: f64, mu: f64, radius: f64) -> Result<Self> {
        check_dim(field.data_dim(), mean_z.len())?;
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(invalid("ell", format!("must be positive, got {ell}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(invalid("mu", format!("must be positive, got {mu}")));
        }
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(invalid("R", format!("must be ≥ 0, got {radius}")));
        }
        let mut model = Self {
            field,
            mean_z,
            ell,
            mu,
            radius,
            grad0_norm: 0.0,
            fbar0: 0.0,
        };
        let zero = vec![0.0; model.dim()];
        model.grad0_norm = norm(&model.mean_grad_vec(&zero));
        model.fbar0 = model.fbar(&zero);
        Ok(model)
    }

    pub fn coupled_quadratic(
        curvature: f64,
        coupling: DMatrix<f64>,
        mean_z: Vec<f64>,
        ell: f64,
        mu: f64,
        radius: f64,
    ) -> Result<Self> {
        Self::new(
            Arc::new(CoupledQuadratic { curvature, coupling }),
            mean_z,
            ell,
            mu,
            radius,
        )
    }

    pub fn double_well(coupling: f64, mean_z: f64, ell: f64, mu: f64, radius: f64) -> Result<Self> {
        Self::new(Arc::new(DoubleWell { coupling }), vec![mean_z], ell, mu, radius)
    }

    pub fn rotated_double_well(
        angle: f64,
        coupling: DMatrix<f64>,
        mean_z: Vec<f64>,
        ell: f64,
        mu: f64,
        radius: f64,
    ) -> Result<Self> {
        if coupling.nrows() != 2 {
            return Err(invalid("coupling", "rotated double well needs 2 rows"));
        }
        Self::new(Arc::new(RotatedDoubleWell { angle, coupling }), mean_z, ell, mu, radius)
    }

    /// Same field with a different data mean.
    pub fn with_mean_z(&self, mean_z: Vec<f64>) -> Result<Self> {
        Self::new(self.field.clone(), mean_z, self.ell, self.mu, self.radius)
    }

    pub fn field(&self) -> &Arc<dyn GradientField> {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn data_dim(&self) -> usize {
        self.field.data_dim()
    }

    pub fn mean_z(&self) -> &[f64] {
        &self.mean_z
    }

    /// `∇ₓf(x, z)` into `out`.
    pub fn grad(&self, x: &[f64], z: &[f64], out: &mut [f64]) {
        self.field.grad_base(x, out);
        self.field.apply_coupling(x, z, out);
    }

    pub fn grad_vec(&self, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.data_dim(), z.len())?;
        let mut out = vec![0.0; self.dim()];
        self.grad(x, z, &mut out);
        Ok(out)
    }

    /// `∇f̄(x) = g₀(x) + G₁(x) E[z]`.
    pub fn mean_grad(&self, x: &[f64], out: &mut [f64]) {
        self.grad(x, &self.mean_z, out);
    }

    pub fn mean_grad_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.mean_grad(x, &mut out);
        out
    }

    /// `f̄(x) = f(x, E[z])`, exact up to a constant because `f` is affine in
    /// `z` modulo terms that do not depend on `x`.
    pub fn fbar(&self, x: &[f64]) -> f64 {
        self.field.value(x, &self.mean_z)
    }

    /// `E[∇ₓf(x, z_k) | z_{k−s}]`; `past = None` means the conditioning
    /// index is negative and the unconditional mean is used.
    pub fn conditional_grad(
        &self,
        x: &[f64],
        stream: &Ar1Stream,
        past: Option<&[f64]>,
        s: usize,
        out: &mut [f64],
        scratch: &mut [f64],
    ) {
        stream.conditional_mean(past, s, scratch);
        self.grad(x, scratch, out);
    }
}

/// Model description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `½ κ‖x‖² + xᵀBz` with `B` given row-major (`dim × data_dim`).
    Quadratic {
        dim: usize,
        #[serde(default = "default_curvature")]
        curvature: f64,
        coupling: Vec<f64>,
        ell: f64,
        mu: f64,
        #[serde(rename = "R")]
        radius: f64,
    },
    DoubleWell {
        #[serde(default = "default_dw_coupling")]
        coupling: f64,
        ell: f64,
        mu: f64,
        #[serde(rename = "R")]
        radius: f64,
    },
    RotatedDoubleWell {
        angle: f64,
        coupling: Vec<f64>,
        ell: f64,
        mu: f64,
        #[serde(rename = "R")]
        radius: f64,
    },
}

fn default_curvature() -> f64 {
    1.0
}

fn default_dw_coupling() -> f64 {
    0.1
}

fn coupling_matrix(rows: usize, data: &[f64]) -> Result<DMatrix<f64>> {
    if rows == 0 || data.is_empty() || !data.len().is_multiple_of(rows) {
        return Err(invalid(
            "coupling",
            format!("{} entries do not form a matrix with {rows} rows", data.len()),
        ));
    }
    Ok(DMatrix::from_row_slice(rows, data.len() / rows, data))
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Quadratic { dim, .. } => *dim,
            ModelSpec::DoubleWell { .. } => 1,
            ModelSpec::RotatedDoubleWell { .. } => 2,
        }
    }

    pub fn build(&self, mean_z: &[f64]) -> Result<ObjectiveModel> {
        match self {
            ModelSpec::Quadratic {
                dim,
                curvature,
                coupling,
                ell,
                mu,
                radius,
            } => ObjectiveModel::coupled_quadratic(
                *curvature,
                coupling_matrix(*dim, coupling)?,
                mean_z.to_vec(),
                *ell,
                *mu,
                *radius,
            ),
            ModelSpec::DoubleWell {
                coupling,
                ell,
                mu,
                radius,
            } => {
                check_dim(1, mean_z.len())?;
                ObjectiveModel::double_well(*coupling, mean_z[0], *ell, *mu, *radius)
            }
            ModelSpec::RotatedDoubleWell {
                angle,
                coupling,
                ell,
                mu,
                radius,
            } => ObjectiveModel::rotated_double_well(
                *angle,
                coupling_matrix(2, coupling)?,
                mean_z.to_vec(),
                *ell,
                *mu,
                *radius,
            ),
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

/// A pair of points and the value that made a check fail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub pairs: usize,
    pub max_x_lipschitz: f64,
    pub max_z_lipschitz: f64,
    /// Smallest monotonicity ratio over pairs at distance ≥ R.
    pub min_convexity: f64,
    pub convexity_pairs: usize,
    pub max_fd_rel_error: f64,
    pub x_lipschitz_ok: bool,
    pub z_lipschitz_ok: bool,
    pub convexity_ok: bool,
    pub fd_ok: bool,
    pub witness: Option<Witness>,
    pub failed_check: Option<String>,
}

impl RegularityReport {
    pub fn passed(&self) -> bool {
        self.x_lipschitz_ok && self.z_lipschitz_ok && self.convexity_ok && self.fd_ok
    }
}

/// Draws a point of `K`: uniform in `[lo, hi]`, projected onto `K`.
fn draw_point<R: Rng + ?Sized>(domain: &Polyhedron, lo: &[f64], hi: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let x: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| rng.random_range(*l..=*h)).collect();
    domain.project(&x)
}

/// Numerically checks the declared `ℓ`, `μ` and `R` of `model` on `domain`.
///
/// `sampling_box` is required when `domain` is unbounded. Half of the pairs
/// are independent draws, the other half are placed at distance about `R`
/// or more so that the convexity-outside-a-ball check has witnesses.
pub fn validate_regularity(
    model: &ObjectiveModel,
    domain: &Polyhedron,
    n_pairs: usize,
    seed: u64,
    sampling_box: Option<(&[f64], &[f64])>,
) -> Result<RegularityReport> {
    check_dim(domain.dim(), model.dim())?;
    let (lo, hi) = match sampling_box {
        Some((l, h)) => (l.to_vec(), h.to_vec()),
        None => domain
            .bounding_box()?
            .ok_or_else(|| invalid("sampling_box", "domain is unbounded; supply a sampling box"))?,
    };
    let n = model.dim();
    let d = model.data_dim();
    let mut rng = rng_from_seed(seed);
    let mut rep = RegularityReport {
        pairs: n_pairs,
        max_x_lipschitz: 0.0,
        max_z_lipschitz: 0.0,
        min_convexity: f64::INFINITY,
        convexity_pairs: 0,
        max_fd_rel_error: 0.0,
        x_lipschitz_ok: true,
        z_lipschitz_ok: true,
        convexity_ok: true,
        fd_ok: true,
        witness: None,
        failed_check: None,
    };
    let fail = |rep: &mut RegularityReport, name: &str, w: Witness| {
        if rep.witness.is_none() {
            rep.witness = Some(w);
            rep.failed_check = Some(name.to_string());
        }
    };
    let (mut g1, mut g2) = (vec![0.0; n], vec![0.0; n]);
    let ms = model.mean_z().to_vec();
    for i in 0..n_pairs {
        let x1 = draw_point(domain, &lo, &hi, &mut rng)?;
        let x2 = if i % 2 == 0 {
            draw_point(domain, &lo, &hi, &mut rng)?
        } else {
            let mut dir: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let nd = norm(&dir);
            let len = model.radius * rng.random_range(1.0..2.0) + 1e-3;
            dir.iter_mut().for_each(|v| *v = *v / nd * len);
            let y: Vec<f64> = x1.iter().zip(&dir).map(|(a, b)| a + b).collect();
            domain.project(&y)?
        };
        let z: Vec<f64> = (0..d).map(|j| ms[j] + rng.sample::<f64, _>(StandardNormal)).collect();
        let z2: Vec<f64> = (0..d)
            .map(|j| ms[j] + 2.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let dx = diff_norm(&x1, &x2);
        if dx > 1e-12 {
            model.grad(&x1, &z, &mut g1);
            model.grad(&x2, &z, &mut g2);
            let ratio = diff_norm(&g1, &g2) / dx;
            rep.max_x_lipschitz = rep.max_x_lipschitz.max(ratio);
            if ratio > model.ell * (1.0 + 1e-6) {
                rep.x_lipschitz_ok = false;
                fail(
                    &mut rep,
                    "x_lipschitz",
                    Witness {
                        x1: x1.clone(),
                        x2: x2.clone(),
                        value: ratio,
                    },
                );
            }
            if dx >= model.radius {
                model.mean_grad(&x1, &mut g1);
                model.mean_grad(&x2, &mut g2);
                let inner: f64 = x1
                    .iter()
                    .zip(&x2)
                    .zip(g1.iter().zip(&g2))
                    .map(|((a, b), (u, v))| (a - b) * (u - v))
                    .sum();
                let ratio = inner / (dx * dx);
                rep.convexity_pairs += 1;
                rep.min_convexity = rep.min_convexity.min(ratio);
                if ratio < model.mu * (1.0 - 1e-6) {
                    rep.convexity_ok = false;
                    fail(
                        &mut rep,
                        "strong_convexity",
                        Witness {
                            x1: x1.clone(),
                            x2: x2.clone(),
                            value: ratio,
                        },
                    );
                }
            }
        }
        let dz = diff_norm(&z, &z2);
        if dz > 1e-12 {
            model.grad(&x1, &z, &mut g1);
            model.grad(&x1, &z2, &mut g2);
            let ratio = diff_norm(&g1, &g2) / dz;
            rep.max_z_lipschitz = rep.max_z_lipschitz.max(ratio);
            if ratio > model.ell * (1.0 + 1e-6) {
                rep.z_lipschitz_ok = false;
                fail(
                    &mut rep,
                    "z_lipschitz",
                    Witness {
                        x1: z.clone(),
                        x2: z2.clone(),
                        value: ratio,
                    },
                );
            }
        }
        // Central differences of f̄ against ∇f̄.
        let h = 1e-5;
        model.mean_grad(&x1, &mut g1);
        let mut xp = x1.clone();
        for j in 0..n {
            xp[j] = x1[j] + h;
            let fp = model.fbar(&xp);
            xp[j] = x1[j] - h;
            let fm = model.fbar(&xp);
            xp[j] = x1[j];
            g2[j] = (fp - fm) / (2.0 * h);
        }
        let rel = diff_norm(&g1, &g2) / norm(&g1).max(1.0);
        rep.max_fd_rel_error = rep.max_fd_rel_error.max(rel);
        if rel > 1e-5 {
            rep.fd_ok = false;
            fail(
                &mut rep,
                "finite_difference",
                Witness {
                    x1: x1.clone(),
                    x2: x1.clone(),
                    value: rel,
                },
            );
        }
    }
    if rep.convexity_pairs == 0 {
        rep.min_convexity = f64::NAN;
    }
    Ok(rep)
}
