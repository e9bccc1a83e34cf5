//! Half-space polyhedra `K = {x : a_iᵀx ≤ b_i}` with unit normals and the
//! origin strictly inside.
//!
//! Projection onto `K` uses cyclic Dykstra iteration, followed by an
//! active-set polish that snaps the iterate onto the face it identified.
//! Axis-aligned boxes are recognised at construction and projected by
//! clamping.

pub mod lp;

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use lp::LpOutcome;

/// Tolerance for deciding that a constraint is active.
pub const ACTIVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct BoxBounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    dim: usize,
    normals: Vec<f64>,
    offsets: Vec<f64>,
    boxed: Option<BoxBounds>,
    options: ProjectionOptions,
}

/// Outcome of a Chebyshev centering problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChebyshevStatus {
    Optimal,
    /// The feasible set is empty; the reported radius is 0.
    Degenerate,
    /// The inscribed radius is unbounded.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub status: ChebyshevStatus,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Polyhedron {
    /// Builds a polyhedron from unit normals (row by row) and positive offsets.
    pub fn new(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        let m = normals.len();
        if m == 0 {
            return Err(Error::InvalidPolyhedron("no constraints".into()));
        }
        if offsets.len() != m {
            return Err(Error::InvalidPolyhedron(format!(
                "{m} normals but {} offsets",
                offsets.len()
            )));
        }
        let dim = normals[0].len();
        if dim == 0 {
            return Err(Error::InvalidPolyhedron("zero-dimensional normals".into()));
        }
        let mut flat = Vec::with_capacity(m * dim);
        for (i, row) in normals.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidPolyhedron(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) || !offsets[i].is_finite() {
                return Err(Error::InvalidPolyhedron(format!("row {i} is not finite")));
            }
            let nrm = norm(row);
            if (nrm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidPolyhedron(format!("row {i} has norm {nrm}, expected 1")));
            }
            if offsets[i] <= 0.0 {
                return Err(Error::InvalidPolyhedron(format!(
                    "offset {i} is {} but the origin must be interior (b > 0)",
                    offsets[i]
                )));
            }
            flat.extend_from_slice(row);
        }
        let boxed = detect_box(dim, &flat, &offsets);
        Ok(Self {
            dim,
            normals: flat,
            offsets,
            boxed,
            options: ProjectionOptions::default(),
        })
    }

    /// Builds a polyhedron from arbitrary nonzero rows, rescaling each
    /// constraint so its normal has unit length.
    pub fn from_rows(rows: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if rows.len() != offsets.len() {
            return Err(Error::InvalidPolyhedron(format!(
                "{} rows but {} offsets",
                rows.len(),
                offsets.len()
            )));
        }
        let mut normals = Vec::with_capacity(rows.len());
        let mut b = Vec::with_capacity(rows.len());
        for (i, (row, off)) in rows.into_iter().zip(offsets).enumerate() {
            let nrm = norm(&row);
            if nrm == 0.0 || !nrm.is_finite() {
                return Err(Error::InvalidPolyhedron(format!("row {i} has zero norm")));
            }
            normals.push(row.iter().map(|v| v / nrm).collect());
            b.push(off / nrm);
        }
        Self::new(normals, b)
    }

    /// The box `∏ [lo_j, hi_j]`, which must contain the origin in its interior.
    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        let n = lo.len();
        let mut normals = Vec::with_capacity(2 * n);
        let mut offsets = Vec::with_capacity(2 * n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            normals.push(e.clone());
            offsets.push(hi[j]);
            e[j] = -1.0;
            normals.push(e);
            offsets.push(-lo[j]);
        }
        Self::new(normals, offsets)
    }

    /// The cube `[-h, h]ⁿ`.
    pub fn cube(n: usize, half_width: f64) -> Result<Self> {
        Self::axis_box(&vec![-half_width; n], &vec![half_width; n])
    }

    /// The single half-space `{aᵀx ≤ b}` for a (not necessarily unit) `a`.
    pub fn half_space(a: &[f64], b: f64) -> Result<Self> {
        Self::from_rows(vec![a.to_vec()], vec![b])
    }

    /// Parses the text format: one constraint per line, `a_1 … a_n | b`.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut offsets = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lhs, rhs) = line
                .split_once('|')
                .ok_or_else(|| Error::InvalidPolyhedron(format!("line {}: missing `|`", lineno + 1)))?;
            let parse = |tok: &str| {
                tok.parse::<f64>()
                    .map_err(|e| Error::InvalidPolyhedron(format!("line {}: `{tok}`: {e}", lineno + 1)))
            };
            let row = lhs.split_whitespace().map(parse).collect::<Result<Vec<_>>>()?;
            let b = parse(rhs.trim())?;
            rows.push(row);
            offsets.push(b);
        }
        Self::from_rows(rows, offsets)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read polyhedron file {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.num_constraints() {
            let row: Vec<String> = self.normal(i).iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{} | {:e}", row.join(" "), self.offsets[i]);
        }
        out
    }

    pub fn with_projection_options(mut self, options: ProjectionOptions) -> Self {
        self.options = options;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_constraints(&self) -> usize {
        self.offsets.len()
    }

    pub fn normal(&self, i: usize) -> &[f64] {
        &self.normals[i * self.dim..(i + 1) * self.dim]
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.offsets[i]
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Normals as an `m × n` matrix.
    pub fn normal_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.num_constraints(), self.dim, &self.normals)
    }

    pub fn is_axis_box(&self) -> bool {
        self.boxed.is_some()
    }

    /// `a_iᵀx − b_i` for every constraint.
    pub fn slacks(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        Ok((0..self.num_constraints())
            .map(|i| dot(self.normal(i), x) - self.offsets[i])
            .collect())
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        Ok(self.contains_unchecked(x, tol))
    }

    fn contains_unchecked(&self, x: &[f64], tol: f64) -> bool {
        (0..self.num_constraints()).all(|i| dot(self.normal(i), x) <= self.offsets[i] + tol)
    }

    /// Indices of constraints with `a_iᵀx ≥ b_i − ACTIVE_TOL`.
    pub fn active_set(&self, x: &[f64]) -> Result<Vec<usize>> {
        check_dim(self.dim, x.len())?;
        Ok((0..self.num_constraints())
            .filter(|&i| dot(self.normal(i), x) >= self.offsets[i] - ACTIVE_TOL)
            .collect())
    }

    /// Euclidean projection onto `K`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        self.project_in_place(&mut y)?;
        Ok(y)
    }

    pub fn project_in_place(&self, x: &mut [f64]) -> Result<()> {
        check_dim(self.dim, x.len())?;
        if let Some(bx) = &self.boxed {
            for ((v, lo), hi) in x.iter_mut().zip(&bx.lo).zip(&bx.hi) {
                *v = v.clamp(*lo, *hi);
            }
            return Ok(());
        }
        if self.contains_unchecked(x, 0.0) {
            return Ok(());
        }
        if self.num_constraints() == 1 {
            let a = self.normal(0);
            let viol = dot(a, x) - self.offsets[0];
            for (v, ai) in x.iter_mut().zip(a) {
                *v -= viol * ai;
            }
            return Ok(());
        }
        let y = self.dykstra(x)?;
        let polished = self.polish(x, &y);
        x.copy_from_slice(polished.as_deref().unwrap_or(&y));
        Ok(())
    }

    fn dykstra(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        let m = self.num_constraints();
        let mut y = x.to_vec();
        let mut incr = vec![0.0; m * n];
        let mut z = vec![0.0; n];
        let mut change = f64::INFINITY;
        for _ in 0..self.options.max_sweeps {
            change = 0.0;
            for i in 0..m {
                let a = self.normal(i);
                let p = &mut incr[i * n..(i + 1) * n];
                for j in 0..n {
                    z[j] = y[j] + p[j];
                }
                let viol = (dot(a, &z) - self.offsets[i]).max(0.0);
                for j in 0..n {
                    let ynew = z[j] - viol * a[j];
                    let pnew = viol * a[j];
                    change = change.max((ynew - y[j]).abs()).max((pnew - p[j]).abs());
                    y[j] = ynew;
                    p[j] = pnew;
                }
            }
            if change < self.options.tol {
                return Ok(y);
            }
        }
        Err(Error::ProjectionFailed {
            sweeps: self.options.max_sweeps,
            residual: change,
        })
    }

    /// Re-solves the projection restricted to the face identified by `y`:
    /// minimize ‖p − x‖ subject to `a_iᵀp = b_i` on the active set. The
    /// result is accepted only when it is feasible, has nonnegative
    /// multipliers, and stays close to `y`.
    fn polish(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        let active: Vec<usize> = (0..self.num_constraints())
            .filter(|&i| dot(self.normal(i), y) >= self.offsets[i] - ACTIVE_TOL)
            .collect();
        if active.is_empty() {
            return None;
        }
        let k = active.len();
        let n = self.dim;
        let a = DMatrix::from_fn(k, n, |r, c| self.normal(active[r])[c]);
        let xv = DVector::from_column_slice(x);
        let rhs = DVector::from_fn(k, |r, _| self.offsets[active[r]]);
        let gram = &a * a.transpose();
        let resid = &a * &xv - rhs;
        let lambda = gram.svd(true, true).solve(&resid, 1e-12).ok()?;
        if lambda.iter().any(|&l| l < -1e-12) {
            return None;
        }
        let p = xv - a.transpose() * lambda;
        let p: Vec<f64> = p.iter().copied().collect();
        let scale = 1.0 + norm(x);
        if !self.contains_unchecked(&p, 1e-13 * scale) {
            return None;
        }
        let dist: f64 = p.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        if dist > 1e-6 * scale {
            return None;
        }
        Some(p)
    }

    /// Whether `v` lies in the normal cone of `K` at `x`, i.e. is a
    /// nonnegative combination of the active normals up to residual `tol`.
    pub fn normal_cone_contains(&self, x: &[f64], v: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, v.len())?;
        let vnorm = norm(v);
        if vnorm <= tol {
            return Ok(true);
        }
        let active = self.active_set(x)?;
        if active.is_empty() {
            return Ok(false);
        }
        let e = DMatrix::from_fn(self.dim, active.len(), |r, c| self.normal(active[c])[r]);
        let (_, resid) = nnls(&e, &DVector::from_column_slice(v));
        Ok(resid <= tol.max(1e-12 * vnorm))
    }

    /// Largest ball `{y + r u : ‖u‖ ≤ 1}` inside `K`, optionally also inside
    /// the ball of radius `eps` around `c`, i.e. `‖c − y‖ + r ≤ eps`.
    ///
    /// The ball constraint is handled by Kelley cutting planes on top of the
    /// linear program, so the returned radius is feasible and within about
    /// `1e-9` of optimal.
    pub fn chebyshev_center(&self, ball: Option<(&[f64], f64)>) -> Result<ChebyshevBall> {
        let n = self.dim;
        let m = self.num_constraints();
        // Variables: y⁺ (n), y⁻ (n), r.
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m + 2 * n);
        let mut rhs: Vec<f64> = Vec::with_capacity(m + 2 * n);
        let push_row = |rows: &mut Vec<Vec<f64>>, u: &[f64]| {
            let mut row = Vec::with_capacity(2 * n + 1);
            row.extend_from_slice(u);
            row.extend(u.iter().map(|v| -v));
            row.push(1.0);
            rows.push(row);
        };
        for i in 0..m {
            push_row(&mut rows, self.normal(i));
            rhs.push(self.offsets[i]);
        }
        let mut cost = vec![0.0; 2 * n + 1];
        cost[2 * n] = 1.0;

        let Some((c, eps)) = ball else {
            return match lp::maximize(&cost, &rows, &rhs)? {
                LpOutcome::Optimal { x, objective } => Ok(ChebyshevBall {
                    center: (0..n).map(|j| x[j] - x[n + j]).collect(),
                    radius: objective,
                    status: ChebyshevStatus::Optimal,
                }),
                LpOutcome::Infeasible => Ok(degenerate(n)),
                LpOutcome::Unbounded => Ok(ChebyshevBall {
                    center: vec![0.0; n],
                    radius: f64::INFINITY,
                    status: ChebyshevStatus::Unbounded,
                }),
            };
        };
        check_dim(n, c.len())?;
        if !(eps > 0.0) {
            return Err(crate::error::invalid("eps", "ball radius must be positive"));
        }
        // ‖y − c‖ + r ≤ eps is implied by uᵀ(y − c) + r ≤ eps for all unit u;
        // start with the 2n coordinate directions.
        for j in 0..n {
            for s in [1.0, -1.0] {
                let mut u = vec![0.0; n];
                u[j] = s;
                push_row(&mut rows, &u);
                rhs.push(eps + dot(&u, c));
            }
        }
        let mut best: Option<ChebyshevBall> = None;
        for _ in 0..500 {
            let (x, objective) = match lp::maximize(&cost, &rows, &rhs)? {
                LpOutcome::Optimal { x, objective } => (x, objective),
                LpOutcome::Infeasible => return Ok(degenerate(n)),
                LpOutcome::Unbounded => return Err(Error::Internal("ball-constrained LP unbounded".into())),
            };
            if objective < -1e-12 {
                return Ok(degenerate(n));
            }
            let y: Vec<f64> = (0..n).map(|j| x[j] - x[n + j]).collect();
            let d: Vec<f64> = y.iter().zip(c).map(|(a, b)| a - b).collect();
            let dn = norm(&d);
            let r_feasible = objective.min(eps - dn);
            if best.as_ref().is_none_or(|b| r_feasible > b.radius) {
                best = Some(ChebyshevBall {
                    center: y.clone(),
                    radius: r_feasible.max(0.0),
                    status: ChebyshevStatus::Optimal,
                });
            }
            if dn + objective <= eps + 1e-10 || objective - r_feasible <= 1e-10 {
                break;
            }
            let u: Vec<f64> = d.iter().map(|v| v / dn).collect();
            push_row(&mut rows, &u);
            rhs.push(eps + dot(&u, c));
        }
        let best = best.unwrap_or_else(|| degenerate(n));
        if best.radius <= 0.0 {
            return Ok(ChebyshevBall {
                status: ChebyshevStatus::Degenerate,
                ..best
            });
        }
        Ok(best)
    }

    /// Per-coordinate bounds of `K` from linear programs, or `None` if `K`
    /// is unbounded.
    pub fn bounding_box(&self) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        if let Some(bx) = &self.boxed {
            if bx.lo.iter().chain(&bx.hi).all(|v| v.is_finite()) {
                return Ok(Some((bx.lo.clone(), bx.hi.clone())));
            }
            return Ok(None);
        }
        let n = self.dim;
        let rows: Vec<Vec<f64>> = (0..self.num_constraints())
            .map(|i| {
                let a = self.normal(i);
                a.iter().copied().chain(a.iter().map(|v| -v)).collect()
            })
            .collect();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for j in 0..n {
            for (sign, slot) in [(1.0, &mut hi[j]), (-1.0, &mut lo[j])] {
                let mut cost = vec![0.0; 2 * n];
                cost[j] = sign;
                cost[n + j] = -sign;
                match lp::maximize(&cost, &rows, &self.offsets)? {
                    LpOutcome::Optimal { objective, .. } => *slot = sign * objective,
                    LpOutcome::Unbounded => return Ok(None),
                    LpOutcome::Infeasible => {
                        return Err(Error::Internal("polyhedron with 0 inside is infeasible".into()))
                    }
                }
            }
        }
        Ok(Some((lo, hi)))
    }

    /// Upper bound on the diameter: the diagonal of the bounding box.
    pub fn diameter_bound(&self) -> Result<Option<f64>> {
        Ok(self
            .bounding_box()?
            .map(|(lo, hi)| lo.iter().zip(&hi).map(|(l, h)| (h - l).powi(2)).sum::<f64>().sqrt()))
    }

    /// Distance `t ≥ 0` at which the ray `origin + t·dir` leaves `K`, or
    /// `None` if the ray stays inside forever.
    pub fn ray_exit(&self, origin: &[f64], dir: &[f64]) -> Result<Option<f64>> {
        check_dim(self.dim, origin.len())?;
        check_dim(self.dim, dir.len())?;
        let mut t_exit: Option<f64> = None;
        for i in 0..self.num_constraints() {
            let a = self.normal(i);
            let rate = dot(a, dir);
            if rate > 1e-15 {
                let t = ((self.offsets[i] - dot(a, origin)) / rate).max(0.0);
                t_exit = Some(t_exit.map_or(t, |s: f64| s.min(t)));
            }
        }
        Ok(t_exit)
    }

    /// A uniformly random direction followed to the boundary from `origin`.
    pub fn sample_boundary_point<R: Rng + ?Sized>(&self, origin: &[f64], rng: &mut R) -> Result<Option<Vec<f64>>> {
        let mut dir: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        let nrm = norm(&dir);
        dir.iter_mut().for_each(|v| *v /= nrm);
        Ok(self
            .ray_exit(origin, &dir)?
            .map(|t| origin.iter().zip(&dir).map(|(o, d)| o + t * d).collect()))
    }
}

fn degenerate(n: usize) -> ChebyshevBall {
    ChebyshevBall {
        center: vec![0.0; n],
        radius: 0.0,
        status: ChebyshevStatus::Degenerate,
    }
}

fn detect_box(dim: usize, normals: &[f64], offsets: &[f64]) -> Option<BoxBounds> {
    let mut lo = vec![f64::NEG_INFINITY; dim];
    let mut hi = vec![f64::INFINITY; dim];
    for (i, &b) in offsets.iter().enumerate() {
        let row = &normals[i * dim..(i + 1) * dim];
        let mut axis = None;
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                if axis.is_some() || (v.abs() - 1.0).abs() > 1e-15 {
                    return None;
                }
                axis = Some((j, v.signum()));
            }
        }
        let (j, s) = axis?;
        if s > 0.0 {
            hi[j] = hi[j].min(b);
        } else {
            lo[j] = lo[j].max(-b);
        }
    }
    Some(BoxBounds { lo, hi })
}

/// Lawson–Hanson nonnegative least squares: `min ‖Eλ − v‖` over `λ ≥ 0`.
/// Returns the minimizer and the residual norm.
pub fn nnls(e: &DMatrix<f64>, v: &DVector<f64>) -> (DVector<f64>, f64) {
    let k = e.ncols();
    let mut lambda = DVector::zeros(k);
    let mut passive = vec![false; k];
    let tol = 1e-12 * (1.0 + v.norm()) * (1.0 + e.norm());
    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
        let sub = DMatrix::from_fn(e.nrows(), idx.len(), |r, c| e[(r, idx[c])]);
        let sol = sub
            .svd(true, true)
            .solve(v, 1e-14)
            .unwrap_or_else(|_| DVector::zeros(idx.len()));
        let mut full = DVector::zeros(k);
        for (c, &j) in idx.iter().enumerate() {
            full[j] = sol[c];
        }
        full
    };
    for _ in 0..(3 * k + 10) {
        let w = e.transpose() * (v - e * &lambda);
        let candidate = (0..k)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let s = solve_passive(&passive);
            if (0..k).all(|i| !passive[i] || s[i] > 0.0) {
                lambda = s;
                break;
            }
            let mut step = 1.0_f64;
            for i in 0..k {
                if passive[i] && s[i] <= 0.0 {
                    step = step.min(lambda[i] / (lambda[i] - s[i]));
                }
            }
            lambda += (s - &lambda) * step;
            for i in 0..k {
                if passive[i] && lambda[i] <= 1e-15 {
                    passive[i] = false;
                    lambda[i] = 0.0;
                }
            }
        }
    }
    let resid = (e * &lambda - v).norm();
    (lambda, resid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn square() -> Polyhedron {
        Polyhedron::cube(2, 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Polyhedron::new(vec![vec![2.0, 0.0]], vec![1.0]).is_err());
        assert!(Polyhedron::new(vec![vec![1.0, 0.0]], vec![0.0]).is_err());
        assert!(Polyhedron::new(vec![], vec![]).is_err());
        assert!(Polyhedron::parse("1 0 | -1").is_err());
        assert!(Polyhedron::parse("1 0 1").is_err());
    }

    #[test]
    fn membership() {
        let p = square();
        assert!(p.contains(&[0.0, 0.0], 0.0).unwrap());
        assert!(p.contains(&[1.0, 1.0], 0.0).unwrap());
        assert!(!p.contains(&[1.1, 0.0], 0.0).unwrap());
        assert!(p.contains(&[0.0], 0.0).is_err());
    }

    #[test]
    fn projection_examples() {
        assert_eq!(square().project(&[2.0, 0.5]).unwrap(), vec![1.0, 0.5]);
        let h = Polyhedron::half_space(&[1.0, 0.0], 1.0).unwrap();
        assert_eq!(h.project(&[3.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let diag = Polyhedron::new(vec![vec![s, s]], vec![2.0_f64.sqrt()]).unwrap();
        let p = diag.project(&[2.0, 2.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12);
    }

    /// Brute-force projection by enumerating every active set.
    fn oracle_project(p: &Polyhedron, x: &[f64]) -> Vec<f64> {
        let m = p.num_constraints();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0u32..(1 << m) {
            let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            let cand = if idx.is_empty() {
                x.to_vec()
            } else {
                let a = DMatrix::from_fn(idx.len(), p.dim(), |r, c| p.normal(idx[r])[c]);
                let xv = DVector::from_column_slice(x);
                let b = DVector::from_fn(idx.len(), |r, _| p.offset(idx[r]));
                let Ok(l) = (&a * a.transpose()).svd(true, true).solve(&(&a * &xv - b), 1e-12) else {
                    continue;
                };
                (xv - a.transpose() * l).iter().copied().collect()
            };
            if p.contains(&cand, 1e-9).unwrap() {
                let d: f64 = cand.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((d, cand));
                }
            }
        }
        best.unwrap().1
    }

    fn pentagon() -> Polyhedron {
        Polyhedron::from_rows(
            vec![
                vec![1.0, 0.3],
                vec![0.2, 1.0],
                vec![-1.0, 0.5],
                vec![-0.4, -1.0],
                vec![0.7, -0.9],
            ],
            vec![1.0, 1.2, 0.8, 1.1, 0.9],
        )
        .unwrap()
    }

    #[test]
    fn dykstra_matches_active_set_oracle() {
        let p = pentagon();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-4.0..4.0)).collect();
            let got = p.project(&x).unwrap();
            let want = oracle_project(&p, &x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-9, "{x:?}: {got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn normal_cone_examples() {
        let p = square();
        assert!(p.normal_cone_contains(&[1.0, 0.0], &[1.0, 0.0], 1e-9).unwrap());
        assert!(!p.normal_cone_contains(&[0.0, 0.0], &[1.0, 0.0], 1e-9).unwrap());
        assert!(p.normal_cone_contains(&[1.0, 1.0], &[1.0, 2.0], 1e-9).unwrap());
        assert!(p.normal_cone_contains(&[0.0, 0.0], &[0.0, 0.0], 0.0).unwrap());
        assert!(!p.normal_cone_contains(&[1.0, 0.0], &[-1.0, 0.0], 1e-9).unwrap());
    }

    #[test]
    fn nnls_recovers_combination() {
        // v = 1·e1 + 2·e2 exactly; the solver must find λ = (1, 2).
        let e = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let (l, r) = nnls(&e, &DVector::from_vec(vec![1.0, 2.0]));
        assert!((l[0] - 1.0).abs() < 1e-12 && (l[1] - 2.0).abs() < 1e-12 && r < 1e-12);
        let (l, r) = nnls(&e, &DVector::from_vec(vec![-1.0, 2.0]));
        assert!(l[0] == 0.0 && (r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_box_and_cube() {
        let c = square().chebyshev_center(None).unwrap();
        assert_eq!(c.status, ChebyshevStatus::Optimal);
        assert!((c.radius - 1.0).abs() < 1e-12);
        assert!(c.center.iter().all(|v| v.abs() < 1e-12));
        for n in 1..5 {
            let r = Polyhedron::cube(n, 1.0).unwrap().chebyshev_center(None).unwrap();
            assert_eq!(r.radius, 1.0);
        }
    }

    /// Grid search over (y, r) at resolution `h`.
    fn grid_oracle(p: &Polyhedron, c: &[f64], eps: f64, h: f64) -> f64 {
        let mut best = 0.0_f64;
        let steps = (2.0 * eps / h).round() as i64;
        for i in 0..=steps {
            for j in 0..=steps {
                let y = [c[0] - eps + i as f64 * h, c[1] - eps + j as f64 * h];
                let d = ((y[0] - c[0]).powi(2) + (y[1] - c[1]).powi(2)).sqrt();
                let slack = (0..p.num_constraints())
                    .map(|k| p.offset(k) - dot(p.normal(k), &y))
                    .fold(f64::INFINITY, f64::min);
                best = best.max(slack.min(eps - d));
            }
        }
        best
    }

    #[test]
    fn chebyshev_with_ball_matches_grid_search() {
        let p = square();
        let got = p.chebyshev_center(Some((&[1.0, 1.0], 0.5))).unwrap();
        let want = grid_oracle(&p, &[1.0, 1.0], 0.5, 1e-3);
        assert!((got.radius - want).abs() < 1e-3, "{} vs {want}", got.radius);
        assert!((got.radius - 0.5 * (2.0_f64.sqrt() - 1.0)).abs() < 1e-8);

        let h = Polyhedron::half_space(&[1.0, 0.0], 1.0).unwrap();
        let got = h.chebyshev_center(Some((&[1.0, 0.0], 1.0))).unwrap();
        let want = grid_oracle(&h, &[1.0, 0.0], 1.0, 1e-3);
        assert!((got.radius - 0.5).abs() < 1e-8);
        assert!((want - 0.5).abs() < 1e-3);
        assert!((got.center[0] - 0.5).abs() < 1e-6 && got.center[1].abs() < 1e-6);
    }

    #[test]
    fn chebyshev_signals_unbounded_and_degenerate() {
        let h = Polyhedron::half_space(&[1.0, 0.0], 1.0).unwrap();
        assert_eq!(h.chebyshev_center(None).unwrap().status, ChebyshevStatus::Unbounded);
        let far = h.chebyshev_center(Some((&[5.0, 0.0], 1.0))).unwrap();
        assert_eq!(far.status, ChebyshevStatus::Degenerate);
        assert_eq!(far.radius, 0.0);
    }

    #[test]
    fn bounding_box_and_rays() {
        let p = pentagon();
        let (lo, hi) = p.bounding_box().unwrap().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-5.0..5.0)).collect();
            let y = p.project(&x).unwrap();
            for j in 0..2 {
                assert!(y[j] >= lo[j] - 1e-9 && y[j] <= hi[j] + 1e-9);
            }
        }
        let b = p.sample_boundary_point(&[0.0, 0.0], &mut rng).unwrap().unwrap();
        assert!(p.contains(&b, 1e-12).unwrap());
        assert!(!p.active_set(&b).unwrap().is_empty());
        let h = Polyhedron::half_space(&[1.0, 0.0], 1.0).unwrap();
        assert!(h.bounding_box().unwrap().is_none());
        assert_eq!(h.ray_exit(&[0.0, 0.0], &[-1.0, 0.0]).unwrap(), None);
    }

    #[test]
    fn text_round_trip_normalizes_rows() {
        let p = Polyhedron::parse("# triangle\n2 0 | 2\n0 3 | 3\n-1 -1 | 1\n").unwrap();
        assert_eq!(p.normal(0), &[1.0, 0.0]);
        assert_eq!(p.offset(1), 1.0);
        let q = Polyhedron::parse(&p.to_text()).unwrap();
        for i in 0..3 {
            assert!((p.offset(i) - q.offset(i)).abs() < 1e-15);
            for (a, b) in p.normal(i).iter().zip(q.normal(i)) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    fn random_polyhedron(seed: u64, n: usize, m: usize) -> Polyhedron {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..m)
            .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let b = (0..m).map(|_| rng.random_range(0.3..1.5)).collect();
        Polyhedron::from_rows(rows, b).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn projection_properties(
            seed in 0u64..1000,
            x in proptest::collection::vec(-5.0f64..5.0, 3),
            y in proptest::collection::vec(-5.0f64..5.0, 3),
        ) {
            let tol = 1e-9;
            let p = random_polyhedron(seed, 3, 6);
            let px = p.project(&x).unwrap();
            let py = p.project(&y).unwrap();
            prop_assert!(p.contains(&px, tol).unwrap());
            let ppx = p.project(&px).unwrap();
            let d: f64 = ppx.iter().zip(&px).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(d <= 2.0 * tol);
            let dp: f64 = px.iter().zip(&py).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let dx: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(dp <= dx + 4.0 * tol);
            // Variational inequality against the other projected point.
            let r: Vec<f64> = x.iter().zip(&px).map(|(a, b)| a - b).collect();
            let w: Vec<f64> = py.iter().zip(&px).map(|(a, b)| a - b).collect();
            prop_assert!(dot(&r, &w) <= tol * norm(&w) + 1e-12);
            // x − Π(x) is in the normal cone at Π(x).
            prop_assert!(p.normal_cone_contains(&px, &r, 1e-7).unwrap());
        }
    }
}
