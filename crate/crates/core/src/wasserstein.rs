//! Empirical 1-Wasserstein distances and Gibbs reference measures.
//!
//! The sliced estimator averages 1-D distances of random projections and
//! only lower-bounds the true distance; use it for trends, not bounds.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{check_dim, invalid, Error, Result};
use crate::objective::ObjectiveModel;
use crate::polytope::Polyhedron;
use crate::rng::rng_from_seed;
use crate::stats::{mean_se, neumaier_sum, MeanSe};

/// Largest sample size accepted by [`w1_exact`].
pub const ASSIGNMENT_CAP: usize = 2048;

/// Uniformly weighted point cloud in `ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    data: Vec<f64>,
}

impl SampleSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptySamples)?.len();
        if dim == 0 {
            return Err(invalid("points", "dimension must be ≥ 1"));
        }
        let mut data = Vec::with_capacity(dim * points.len());
        for p in &points {
            check_dim(dim, p.len())?;
            data.extend_from_slice(p);
        }
        Ok(Self { dim, data })
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySamples);
        }
        Ok(Self {
            dim: 1,
            data: values.to_vec(),
        })
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::EmptySamples);
        }
        Ok(Self { dim, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| neumaier_sum(self.iter().map(|p| p[j])) / self.len() as f64)
            .collect()
    }

    /// `⟨θ, x⟩` for every point.
    pub fn project(&self, theta: &[f64]) -> Vec<f64> {
        self.iter()
            .map(|p| p.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn sorted_scalars(&self) -> Vec<f64> {
        let mut v = self.data.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// `∫₀¹ |F_a⁻¹(u) − F_b⁻¹(u)| du` for sorted samples.
fn quantile_l1(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == b.len() {
        return neumaier_sum(a.iter().zip(b).map(|(x, y)| (x - y).abs())) / a.len() as f64;
    }
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut terms = Vec::with_capacity(n + m);
    // Breakpoints i/n and j/m compared exactly as i·m vs j·n.
    let mut last = 0u128;
    let denom = (n as u128) * (m as u128);
    while i < n && j < m {
        let next_a = (i as u128 + 1) * m as u128;
        let next_b = (j as u128 + 1) * n as u128;
        let next = next_a.min(next_b);
        terms.push((next - last) as f64 / denom as f64 * (a[i] - b[j]).abs());
        last = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    neumaier_sum(terms)
}

/// Exact empirical `W₁` in dimension 1 by the quantile coupling.
pub fn w1_1d(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySamples);
    }
    check_dim(1, a.dim())?;
    check_dim(1, b.dim())?;
    Ok(quantile_l1(&a.sorted_scalars(), &b.sorted_scalars()))
}

/// Minimum-cost perfect matching of a square cost matrix (row-major).
/// Shortest augmenting paths with dual potentials; returns the column
/// assigned to every row.
pub fn solve_assignment(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    // 1-based arrays with a virtual column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|f| *f = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    col_of
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Exact empirical `W₁` between equal-size sets by optimal assignment.
pub fn w1_exact(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySamples);
    }
    check_dim(a.dim(), b.dim())?;
    check_dim(a.len(), b.len())?;
    let n = a.len();
    if n > ASSIGNMENT_CAP {
        return Err(Error::AssignmentCap {
            size: n,
            cap: ASSIGNMENT_CAP,
        });
    }
    let mut cost = vec![0.0; n * n];
    cost.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let p = a.point(i);
        for (j, c) in row.iter_mut().enumerate() {
            *c = euclid(p, b.point(j));
        }
    });
    let cols = solve_assignment(n, &cost);
    Ok(neumaier_sum(cols.iter().enumerate().map(|(i, &j)| cost[i * n + j])) / n as f64)
}

/// Sliced `W₁`: mean of 1-D distances along `n_proj` uniform directions,
/// with its standard error.
pub fn w1_sliced(a: &SampleSet, b: &SampleSet, n_proj: usize, seed: u64) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySamples);
    }
    check_dim(a.dim(), b.dim())?;
    if n_proj < 8 {
        return Err(invalid("n_proj", "need at least 8 projections"));
    }
    let mut rng = rng_from_seed(seed);
    let dirs: Vec<Vec<f64>> = (0..n_proj)
        .map(|_| loop {
            let g: Vec<f64> = (0..a.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break g.into_iter().map(|v| v / norm).collect();
            }
        })
        .collect();
    let values: Vec<f64> = dirs
        .par_iter()
        .map(|theta| {
            let mut pa = a.project(theta);
            let mut pb = b.project(theta);
            pa.sort_by(f64::total_cmp);
            pb.sort_by(f64::total_cmp);
            quantile_l1(&pa, &pb)
        })
        .collect();
    let MeanSe { mean, se, .. } = mean_se(&values);
    Ok((mean, se))
}

/// Density `∝ e^{−βf̄}` on an interval, tabulated on a uniform grid.
#[derive(Debug, Clone)]
pub struct GibbsReference1D {
    lo: f64,
    hi: f64,
    step: f64,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

impl GibbsReference1D {
    /// Tabulates `e^{−β f(x)}` on `grid_size` panels, normalizes by
    /// composite Simpson and checks the normalization against the rule on
    /// half the panels.
    pub fn from_fn<F: Fn(f64) -> f64>(f: F, beta: f64, lo: f64, hi: f64, grid_size: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(invalid("interval", format!("need lo < hi, got [{lo}, {hi}]")));
        }
        if !(beta > 0.0) {
            return Err(invalid("beta", "must be positive"));
        }
        if grid_size < 4 || !grid_size.is_multiple_of(4) {
            return Err(invalid("grid_size", "must be a positive multiple of 4"));
        }
        let step = (hi - lo) / grid_size as f64;
        // Values on the half-step grid give per-panel Simpson masses.
        let energies: Vec<f64> = (0..=2 * grid_size).map(|i| f(lo + 0.5 * step * i as f64)).collect();
        let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        if !e_min.is_finite() {
            return Err(invalid("model", "f̄ is not finite on the interval"));
        }
        let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
        let mut cdf = vec![0.0; grid_size + 1];
        let mut acc = 0.0;
        let mut comp = 0.0;
        for k in 0..grid_size {
            let mass = step / 6.0 * (w[2 * k] + 4.0 * w[2 * k + 1] + w[2 * k + 2]);
            let t = acc + mass;
            comp += if acc.abs() >= mass.abs() {
                (acc - t) + mass
            } else {
                (mass - t) + acc
            };
            acc = t;
            cdf[k + 1] = acc + comp;
        }
        let z = cdf[grid_size];
        let coarse: Vec<f64> = w.iter().step_by(2).copied().collect();
        let z_coarse = crate::quadrature::composite_simpson(&coarse, step);
        let residual = (z_coarse / z - 1.0).abs();
        if residual > 1e-6 {
            return Err(Error::CoarseGrid(residual));
        }
        let density = w.iter().step_by(2).map(|v| v / z).collect();
        cdf.iter_mut().for_each(|c| *c /= z);
        Ok(Self {
            lo,
            hi,
            step,
            density,
            cdf,
        })
    }

    /// Reference for a one-dimensional model on `[lo, hi]`.
    pub fn new(model: &ObjectiveModel, beta: f64, lo: f64, hi: f64, grid_size: usize) -> Result<Self> {
        check_dim(1, model.dim())?;
        Self::from_fn(|x| model.fbar(&[x]), beta, lo, hi, grid_size)
    }

    /// Reference on the interval `P` (which must be bounded and 1-D).
    pub fn for_interval(model: &ObjectiveModel, beta: f64, p: &Polyhedron, grid_size: usize) -> Result<Self> {
        check_dim(1, p.dim())?;
        let (lo, hi) = p
            .bounding_box()?
            .ok_or_else(|| invalid("P", "Gibbs reference needs a bounded interval"))?;
        Self::new(model, beta, lo[0], hi[0], grid_size)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn grid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.density
            .iter()
            .enumerate()
            .map(|(i, &d)| (self.lo + self.step * i as f64, d))
    }

    /// Normalized density, linearly interpolated between nodes.
    pub fn density(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        let t = (x - self.lo) / self.step;
        let i = (t as usize).min(self.density.len() - 2);
        let f = t - i as f64;
        self.density[i] * (1.0 - f) + self.density[i + 1] * f
    }

    /// Cumulative distribution, linear between nodes.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let t = (x - self.lo) / self.step;
        let i = (t as usize).min(self.cdf.len() - 2);
        let f = t - i as f64;
        self.cdf[i] * (1.0 - f) + self.cdf[i + 1] * f
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1) - 1;
        let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
        let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.lo + self.step * (i as f64 + f.clamp(0.0, 1.0))
    }

    /// `∫ x^p dπ` by composite Simpson on the density grid.
    pub fn moment(&self, p: i32) -> f64 {
        let vals: Vec<f64> = self.grid().map(|(x, d)| x.powi(p) * d).collect();
        crate::quadrature::composite_simpson(&vals, self.step)
    }

    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.cdf(b) - self.cdf(a)
    }

    /// Inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> SampleSet {
        let v: Vec<f64> = (0..n).map(|_| self.quantile(rng.random::<f64>())).collect();
        SampleSet { dim: 1, data: v }
    }

    /// `∫ |F_N(x) − F(x)| dx` between the empirical CDF and this reference.
    pub fn w1_to_density(&self, samples: &SampleSet) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        check_dim(1, samples.dim())?;
        let xs = samples.sorted_scalars();
        let n = xs.len() as f64;
        let lo = self.lo.min(xs[0]);
        let hi = self.hi.max(xs[xs.len() - 1]);
        let mut breaks: Vec<f64> = self.grid().map(|(x, _)| x).chain(xs.iter().copied()).collect();
        breaks.push(lo);
        breaks.push(hi);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut terms = Vec::with_capacity(breaks.len());
        let mut count = 0usize;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            while count < xs.len() && xs[count] <= a {
                count += 1;
            }
            let fe = count as f64 / n;
            let d0 = fe - self.cdf(a);
            let d1 = fe - self.cdf(b);
            let len = b - a;
            // |fe − F| is |linear| on the segment.
            let area = if d0 * d1 >= 0.0 {
                0.5 * len * (d0.abs() + d1.abs())
            } else {
                0.5 * len * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
            };
            terms.push(area);
        }
        Ok(neumaier_sum(terms))
    }

    /// Mean and standard deviation of `w1_to_density` for `n`-sample draws
    /// from the reference itself: the estimator's noise floor.
    pub fn noise_floor(&self, n: usize, draws: usize, seed: u64) -> Result<MeanSe> {
        let mut rng = rng_from_seed(seed);
        let vals = (0..draws)
            .map(|_| self.w1_to_density(&self.sample(&mut rng, n)))
            .collect::<Result<Vec<_>>>()?;
        Ok(mean_se(&vals))
    }
}

/// Result of [`gibbs_rejection_nd`].
#[derive(Debug, Clone)]
pub struct RejectionSample {
    pub samples: SampleSet,
    pub proposals: u64,
    pub acceptance_rate: f64,
    pub fbar_min: f64,
}

/// Exact samples from `∝ e^{−βf̄}` on bounded `K` by rejection from the
/// uniform law on `[lo, hi]`. The envelope uses a grid-scan estimate of
/// `min f̄`; if a proposal undercuts it, the minimum is lowered and the
/// draw restarts.
pub fn gibbs_rejection_nd<R: Rng + ?Sized>(
    model: &ObjectiveModel,
    beta: f64,
    p: &Polyhedron,
    lo: &[f64],
    hi: &[f64],
    rng: &mut R,
    n: usize,
) -> Result<RejectionSample> {
    let dim = p.dim();
    check_dim(dim, model.dim())?;
    check_dim(dim, lo.len())?;
    check_dim(dim, hi.len())?;
    if lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
        return Err(invalid("bounding_box", "need lo < hi in every coordinate"));
    }
    if !(beta > 0.0) {
        return Err(invalid("beta", "must be positive"));
    }
    let per_axis = ((200_000f64).powf(1.0 / dim as f64) as usize).max(2);
    let mut fmin = f64::INFINITY;
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    loop {
        for j in 0..dim {
            x[j] = lo[j] + (hi[j] - lo[j]) * idx[j] as f64 / (per_axis - 1) as f64;
        }
        if p.contains(&x, 1e-12)? {
            fmin = fmin.min(model.fbar(&x));
        }
        let mut j = 0;
        while j < dim {
            idx[j] += 1;
            if idx[j] < per_axis {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == dim {
            break;
        }
    }
    if !fmin.is_finite() {
        return Err(invalid("P", "no grid point of the bounding box lies in K"));
    }
    let floor = 1e-4;
    let mut out = Vec::with_capacity(n * dim);
    let mut proposals = 0u64;
    let mut accepted_total = 0u64;
    while out.len() < n * dim {
        proposals += 1;
        for j in 0..dim {
            x[j] = lo[j] + (hi[j] - lo[j]) * rng.random::<f64>();
        }
        if p.contains(&x, 0.0)? {
            let f = model.fbar(&x);
            if f < fmin {
                fmin = f;
                out.clear();
                continue;
            }
            if rng.random::<f64>() < (-beta * (f - fmin)).exp() {
                out.extend_from_slice(&x);
                accepted_total += 1;
            }
        }
        if proposals >= 100_000 && (accepted_total as f64) < floor * proposals as f64 {
            return Err(Error::LowAcceptance {
                rate: accepted_total as f64 / proposals as f64,
                floor,
            });
        }
    }
    Ok(RejectionSample {
        samples: SampleSet { dim, data: out },
        proposals,
        acceptance_rate: accepted_total as f64 / proposals as f64,
        fbar_min: fmin,
    })
}

/// Spectral gap of the reflected diffusion `dX = −f'(X)dt + √(2/β)dW` on
/// `[lo, hi]`, from a reversible finite-volume discretization with
/// `cells` cells.
pub fn reflected_spectral_gap_1d<F: Fn(f64) -> f64>(f: F, beta: f64, lo: f64, hi: f64, cells: usize) -> Result<f64> {
    if !(hi > lo) || !(beta > 0.0) || cells < 3 {
        return Err(invalid("interval", "need lo < hi, β > 0 and at least 3 cells"));
    }
    let h = (hi - lo) / cells as f64;
    let e: Vec<f64> = (0..cells).map(|i| f(lo + h * (i as f64 + 0.5))).collect();
    let k = 1.0 / (beta * h * h);
    // Symmetrized generator: off-diagonals k, rates k·e^{∓β Δf/2}.
    let mut m = DMatrix::zeros(cells, cells);
    for i in 0..cells - 1 {
        let d = beta * (e[i + 1] - e[i]) / 2.0;
        m[(i, i)] += k * (-d).exp();
        m[(i + 1, i + 1)] += k * d.exp();
        m[(i, i + 1)] = -k;
        m[(i + 1, i)] = -k;
    }
    let eig = SymmetricEigen::new(m);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::Rng;

    fn s(v: &[f64]) -> SampleSet {
        SampleSet::from_scalars(v).unwrap()
    }

    fn pts(v: &[[f64; 2]]) -> SampleSet {
        SampleSet::new(v.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn w1_1d_examples() {
        assert_eq!(w1_1d(&s(&[0.0, 1.0]), &s(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(w1_1d(&s(&[0.0, 2.0]), &s(&[1.0, 3.0])).unwrap(), 1.0);
        assert_eq!(w1_1d(&s(&[0.0, 0.0, 0.0, 4.0]), &s(&[1.0; 4])).unwrap(), 1.5);
        assert!(w1_1d(&s(&[0.0]), &pts(&[[0.0, 0.0]])).is_err());
    }

    #[test]
    fn unequal_sizes() {
        // {0, 1} vs {0, 0.5, 1}: quantiles differ by 0.5 on [1/3, 2/3].
        let v = w1_1d(&s(&[0.0, 1.0]), &s(&[0.0, 0.5, 1.0])).unwrap();
        assert!((v - 0.5 * (1.0 / 6.0) * 2.0).abs() < 1e-15);
        // Point mass vs two points.
        let v = w1_1d(&s(&[1.0]), &s(&[0.0, 3.0])).unwrap();
        assert!((v - 1.5).abs() < 1e-15);
    }

    #[test]
    fn w1_exact_examples() {
        let a = pts(&[[0.0, 0.0], [1.0, 1.0]]);
        assert_eq!(w1_exact(&a, &a).unwrap(), 0.0);
        assert_eq!(w1_exact(&a, &pts(&[[1.0, 1.0], [0.0, 0.0]])).unwrap(), 0.0);
        let v = w1_exact(&pts(&[[0.0, 0.0], [2.0, 0.0]]), &pts(&[[1.0, 0.0], [3.0, 0.0]])).unwrap();
        assert_eq!(v, 1.0);
        let big = SampleSet::from_flat(1, vec![0.0; ASSIGNMENT_CAP + 1]).unwrap();
        assert!(matches!(w1_exact(&big, &big), Err(Error::AssignmentCap { .. })));
    }

    /// Brute force over all permutations.
    fn brute_assignment(n: usize, cost: &[f64]) -> f64 {
        fn rec(n: usize, cost: &[f64], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(n, cost, row + 1, used, acc + cost[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(n, cost, 0, &mut vec![false; n], 0.0, &mut best);
        best
    }

    #[test]
    fn assignment_matches_brute_force() {
        let mut rng = rng_from_seed(3);
        for n in 1..=7 {
            for _ in 0..20 {
                let cost: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
                let cols = solve_assignment(n, &cost);
                let mut seen = cols.clone();
                seen.sort();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
                let got: f64 = cols.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
                assert!((got - brute_assignment(n, &cost)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_agrees_with_1d() {
        let mut rng = rng_from_seed(11);
        for _ in 0..100 {
            let n = rng.random_range(1..40);
            let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let b: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let d1 = w1_1d(&s(&a), &s(&b)).unwrap();
            let de = w1_exact(&s(&a), &s(&b)).unwrap();
            assert!((d1 - de).abs() <= 1e-12, "{d1} vs {de}");
        }
    }

    #[test]
    fn sliced_examples() {
        let a = s(&[0.0, 1.0, 5.0]);
        let b = s(&[2.0, 2.0, 3.0]);
        let (est, se) = w1_sliced(&a, &b, 16, 1).unwrap();
        assert!((est - w1_1d(&a, &b).unwrap()).abs() < 1e-15);
        assert!(se < 1e-15);
        let c = pts(&[[0.0, 1.0], [2.0, 3.0]]);
        assert_eq!(w1_sliced(&c, &c, 8, 1).unwrap().0, 0.0);
        assert!(w1_sliced(&c, &c, 4, 1).is_err());
    }

    #[test]
    fn sliced_point_shift() {
        // A rigid shift by v: every projection is a shift by |⟨v, θ⟩|.
        let mut rng = rng_from_seed(5);
        let base: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..3).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let v = [0.6, -0.3, 0.2];
        let shifted: Vec<Vec<f64>> = base
            .iter()
            .map(|p| p.iter().zip(&v).map(|(a, b)| a + b).collect())
            .collect();
        let a = SampleSet::new(base).unwrap();
        let b = SampleSet::new(shifted).unwrap();
        let (est, se) = w1_sliced(&a, &b, 4000, 9).unwrap();
        // E|⟨v, θ⟩| for θ uniform on S² is ‖v‖/2.
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((est - norm / 2.0).abs() < 4.0 * se, "{est} ± {se}");
        // Direct Monte Carlo of the projected mean shift.
        let mut r2 = rng_from_seed(9);
        let direct: Vec<f64> = (0..4000)
            .map(|_| {
                let g: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut r2)).collect();
                let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                g.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().abs() / n
            })
            .collect();
        assert!((est - mean_se(&direct).mean).abs() < 1e-12);
    }

    #[test]
    fn metric_axioms() {
        let mut rng = rng_from_seed(17);
        for _ in 0..50 {
            let mk = |rng: &mut crate::rng::SimRng| -> SampleSet {
                let v: Vec<f64> = (0..12).map(|_| rng.random::<f64>() * 3.0).collect();
                SampleSet::from_flat(2, v).unwrap()
            };
            let (a, b, c) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
            assert_eq!(w1_exact(&a, &b).unwrap(), w1_exact(&b, &a).unwrap());
            let ab = w1_exact(&a, &b).unwrap();
            let bc = w1_exact(&b, &c).unwrap();
            let ac = w1_exact(&a, &c).unwrap();
            assert!(ac <= ab + bc + 1e-9);
            let a1 = SampleSet::from_flat(1, a.as_flat().to_vec()).unwrap();
            let b1 = SampleSet::from_flat(1, b.as_flat().to_vec()).unwrap();
            let c1 = SampleSet::from_flat(1, c.as_flat()[..7].to_vec()).unwrap();
            assert_eq!(w1_1d(&a1, &b1).unwrap(), w1_1d(&b1, &a1).unwrap());
            assert!(w1_1d(&a1, &c1).unwrap() <= w1_1d(&a1, &b1).unwrap() + w1_1d(&b1, &c1).unwrap() + 1e-9);
        }
    }

    #[test]
    fn uniform_reference() {
        let r = GibbsReference1D::from_fn(|_| 0.0, 1.0, -1.0, 3.0, 400).unwrap();
        for (_, d) in r.grid() {
            assert!((d - 0.25).abs() < 1e-14);
        }
        assert!((r.quantile(0.5) - 1.0).abs() < 1e-12);
        assert!((r.moment(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_normal_moments() {
        let r = GibbsReference1D::from_fn(|x| 0.5 * x * x, 1.0, -5.0, 5.0, 4000).unwrap();
        assert!(r.moment(1).abs() < 1e-12);
        // Var = 1 − 2·5·ϕ(5)/(2Φ(5) − 1) for the standard normal truncated to [−5, 5].
        let pdf5 = (-12.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mass = 1.0 - 5.733031438470704e-7;
        let var = 1.0 - 10.0 * pdf5 / mass;
        assert!((r.moment(2) - var).abs() < 1e-9, "{} vs {var}", r.moment(2));
        assert!((r.moment(0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn double_well_symmetry_and_coarse_grid() {
        let m = ObjectiveModel::double_well(0.1, 0.0, 11.0, 1.25, 3.0).unwrap();
        let r = GibbsReference1D::new(&m, 4.0, -2.0, 2.0, 4000).unwrap();
        assert!((r.mass(-2.0, 0.0) - r.mass(0.0, 2.0)).abs() < 1e-8);
        assert!(r.density(1.0) > r.density(0.0));
        let sharp = GibbsReference1D::from_fn(|x| 0.5 * x * x, 400.0, -5.0, 5.0, 8);
        assert!(matches!(sharp, Err(Error::CoarseGrid(_))));
    }

    #[test]
    fn w1_to_density_against_exact_quantiles() {
        let r = GibbsReference1D::from_fn(|_| 0.0, 1.0, 0.0, 1.0, 100).unwrap();
        // Point mass at 0.5 against U[0, 1] is E|U − 1/2| = 1/4.
        let v = r.w1_to_density(&s(&[0.5])).unwrap();
        assert!((v - 0.25).abs() < 1e-14);
        // A point outside the support.
        let v = r.w1_to_density(&s(&[2.0])).unwrap();
        assert!((v - 1.5).abs() < 1e-14);
    }

    #[test]
    fn self_distance_shrinks() {
        let m = ObjectiveModel::double_well(0.1, 0.0, 11.0, 1.25, 3.0).unwrap();
        let r = GibbsReference1D::new(&m, 4.0, -2.0, 2.0, 4000).unwrap();
        let f: Vec<f64> = [100, 1000, 10_000]
            .iter()
            .map(|&n| r.noise_floor(n, 20, 1).unwrap().mean)
            .collect();
        assert!(f[0] > f[1] && f[1] > f[2], "{f:?}");
        let mut rng = rng_from_seed(2);
        let a = r.sample(&mut rng, 1000);
        let b = r.sample(&mut rng, 1000);
        let d100: f64 = w1_1d(&a, &b).unwrap();
        assert!(d100 < 0.2);
    }

    #[test]
    fn rejection_examples() {
        let bx = Polyhedron::cube(2, 1.0).unwrap();
        let flat = ObjectiveModel::coupled_quadratic(0.0, DMatrix::zeros(2, 1), vec![0.0], 1.0, 1.0, 0.0).unwrap();
        let mut rng = rng_from_seed(4);
        let out = gibbs_rejection_nd(&flat, 1.0, &bx, &[-1.0, -1.0], &[1.0, 1.0], &mut rng, 4000).unwrap();
        // χ² uniformity on a 4×4 grid, 15 degrees of freedom; 99.9% quantile 37.7.
        let mut counts = [0.0; 16];
        for p in out.samples.iter() {
            let i = (((p[0] + 1.0) * 2.0) as usize).min(3);
            let j = (((p[1] + 1.0) * 2.0) as usize).min(3);
            counts[4 * i + j] += 1.0;
        }
        let chi2: f64 = counts.iter().map(|c| (c - 250.0) * (c - 250.0) / 250.0).sum();
        assert!(chi2 < 37.7, "{chi2}");
        assert_eq!(out.acceptance_rate, 1.0);

        let quad = ObjectiveModel::coupled_quadratic(1.0, DMatrix::zeros(2, 1), vec![0.0], 1.0, 1.0, 0.0).unwrap();
        let hot = gibbs_rejection_nd(&quad, 0.01, &bx, &[-1.0, -1.0], &[1.0, 1.0], &mut rng, 2000).unwrap();
        assert!(hot.acceptance_rate > 0.98);
        let cold = gibbs_rejection_nd(&quad, 50.0, &bx, &[-1.0, -1.0], &[1.0, 1.0], &mut rng, 2000).unwrap();
        let mean = cold.samples.mean();
        assert!(mean[0].abs() < 0.02 && mean[1].abs() < 0.02);
        // E x² under N(0, 1/50) truncated to [−1, 1] is 1/50 to many digits.
        let m2 = cold.samples.iter().map(|p| p[0] * p[0]).sum::<f64>() / 2000.0;
        assert!((m2 - 0.02).abs() < 0.003, "{m2}");

        let tri = Polyhedron::from_rows(
            vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]],
            vec![0.5, 0.5, 0.5],
        )
        .unwrap();
        let t = gibbs_rejection_nd(&quad, 1.0, &tri, &[-1.0, -1.0], &[1.0, 1.0], &mut rng, 500).unwrap();
        for p in t.samples.iter() {
            assert!(tri.contains(p, 0.0).unwrap());
        }
    }

    #[test]
    fn spectral_gap_of_flat_interval() {
        // Neumann Laplacian on [0, π] scaled by 1/β: first gap 1/β.
        let gap = reflected_spectral_gap_1d(|_| 0.0, 2.0, 0.0, std::f64::consts::PI, 400).unwrap();
        assert!((gap - 0.5).abs() < 1e-4, "{gap}");
        // Quadratic potential on a wide interval: Ornstein–Uhlenbeck gap = curvature.
        let gap = reflected_spectral_gap_1d(|x| 1.5 * x * x, 1.0, -8.0, 8.0, 800).unwrap();
        assert!((gap - 3.0).abs() < 1e-2, "{gap}");
    }

    proptest! {
        #[test]
        fn w1_1d_translation(v in proptest::collection::vec(-5.0f64..5.0, 1..30), t in -3.0f64..3.0) {
            let a = s(&v);
            let b = s(&v.iter().map(|x| x + t).collect::<Vec<_>>());
            prop_assert!((w1_1d(&a, &b).unwrap() - t.abs()).abs() < 1e-12);
        }
    }
}
