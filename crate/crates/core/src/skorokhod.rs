//! Discrete Skorokhod map over polyhedra and its Lipschitz constants.
//!
//! For a polyhedron with normals `A`, let `P_I` be the orthogonal projector
//! onto the null space of the rows indexed by `I`. Then
//! `α = ½ · min ‖P_I a_j‖²` over all nonzero values, and the reflection map
//! is Lipschitz in the sup norm with constant `c_diam + 1` where
//! `c_diam = 6 (1/α)^{rank(A)/2}`.

use std::collections::{HashSet, VecDeque};
use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::polytope::Polyhedron;

/// Default refusal threshold for the number of constraints in [`compute_alpha`].
pub const SUBSET_CAP: usize = 20;

const RANK_CUTOFF: f64 = 1e-10;

/// A finite sequence of points in `ℝⁿ` indexed by step.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    values: Vec<Vec<f64>>,
}

impl DiscretePath {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = values.first() else {
            return Err(Error::InvalidPath("empty path".into()));
        };
        let n = first.len();
        if n == 0 {
            return Err(Error::InvalidPath("zero-dimensional points".into()));
        }
        if let Some(k) = values.iter().position(|v| v.len() != n) {
            return Err(Error::InvalidPath(format!(
                "point {k} has dimension {}, expected {n}",
                values[k].len()
            )));
        }
        Ok(Self { values })
    }

    /// A one-dimensional path from scalars.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn into_points(self) -> Vec<Vec<f64>> {
        self.values
    }

    /// `sup_k ‖self_k − other_k‖`.
    pub fn sup_distance(&self, other: &DiscretePath) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::InvalidPath(format!(
                "length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| dist(a, b))
            .fold(0.0, f64::max))
    }

    /// Writes CSV with header `k,x1,…,xn`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["k".to_string()];
        header.extend((1..=self.dim()).map(|j| format!("x{j}")));
        w.write_record(&header).map_err(csv_err)?;
        for (k, p) in self.values.iter().enumerate() {
            let mut rec = vec![k.to_string()];
            rec.extend(p.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let mut values = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let k: usize = rec
                .get(0)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::InvalidPath(format!("row {row}: bad step index")))?;
            if k != row {
                return Err(Error::InvalidPath(format!("row {row}: step index {k} out of order")));
            }
            let p = rec
                .iter()
                .skip(1)
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidPath(format!("row {row}: `{s}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(p);
        }
        Self::new(values)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidPath(e.to_string())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `x_0 = x0`, `x_{k+1} = Π_K(x_k + y_{k+1} − y_k)`.
pub fn discrete_map(p: &Polyhedron, y: &DiscretePath, x0: &[f64]) -> Result<DiscretePath> {
    check_dim(p.dim(), y.dim())?;
    check_dim(p.dim(), x0.len())?;
    let mut out = Vec::with_capacity(y.len());
    let mut x = x0.to_vec();
    out.push(x.clone());
    for w in y.points().windows(2) {
        for ((xi, a), b) in x.iter_mut().zip(&w[0]).zip(&w[1]) {
            *xi += b - a;
        }
        p.project_in_place(&mut x)?;
        out.push(x.clone());
    }
    Ok(DiscretePath { values: out })
}

/// Numeric rank from singular values `σ ≥ 1e-10·σ_max`.
pub fn numeric_rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s >= RANK_CUTOFF * smax).count()
}

fn span_key(basis: &[Vec<f64>], n: usize) -> Vec<i64> {
    // Entries of the projector QQᵀ onto the span, rounded.
    let mut key = Vec::with_capacity(n * (n + 1) / 2);
    for r in 0..n {
        for c in r..n {
            let v: f64 = basis.iter().map(|q| q[r] * q[c]).sum();
            key.push((v * 1e8).round() as i64);
        }
    }
    key
}

fn residual(basis: &[Vec<f64>], a: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    // Two passes of Gram–Schmidt for stability.
    for _ in 0..2 {
        for q in basis {
            let c: f64 = q.iter().zip(&r).map(|(u, v)| u * v).sum();
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= c * qi;
            }
        }
    }
    r
}

/// `(α, rank A)` with the default subset cap.
pub fn compute_alpha(p: &Polyhedron) -> Result<(f64, usize)> {
    compute_alpha_with_cap(p, SUBSET_CAP)
}

/// Computes `α` by a breadth-first search over the distinct row spans of
/// subsets of constraints. Two subsets with the same span share `P_I`, so
/// the search visits each span once instead of each of the `2^m` subsets.
pub fn compute_alpha_with_cap(p: &Polyhedron, cap: usize) -> Result<(f64, usize)> {
    let m = p.num_constraints();
    if m > cap {
        return Err(Error::SubsetCapExceeded { count: m, cap });
    }
    let n = p.dim();
    let mut min_sq = f64::INFINITY;
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut queue: VecDeque<Vec<Vec<f64>>> = VecDeque::new();
    seen.insert(span_key(&[], n));
    queue.push_back(Vec::new());
    while let Some(basis) = queue.pop_front() {
        for j in 0..m {
            let r = residual(&basis, p.normal(j));
            let sq: f64 = r.iter().map(|v| v * v).sum();
            if sq.sqrt() <= RANK_CUTOFF {
                continue;
            }
            min_sq = min_sq.min(sq);
            let nrm = sq.sqrt();
            let mut next = basis.clone();
            next.push(r.iter().map(|v| v / nrm).collect());
            if seen.insert(span_key(&next, n)) {
                queue.push_back(next);
            }
        }
    }
    let rank = numeric_rank(&p.normal_matrix());
    Ok((0.5 * min_sq, rank))
}

/// Constructive constants of the polyhedral Skorokhod map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkorokhodConstants {
    pub alpha: f64,
    pub rank: usize,
    pub c_diam: f64,
    pub x0: f64,
    pub epsilon: f64,
    /// `radii[k]` for rank deficit `k = 0..=rank`.
    pub radii: Vec<f64>,
}

/// `1 − 1/(9(√2 − 1)²)`, chosen so that `(√2 − 1)√(1 − x0) = 1/3`.
pub fn base_x0() -> f64 {
    let s = std::f64::consts::SQRT_2 - 1.0;
    1.0 - 1.0 / (9.0 * s * s)
}

impl SkorokhodConstants {
    pub fn from_alpha(alpha: f64, rank: usize) -> Self {
        let x0 = base_x0();
        let radii = (0..=rank)
            .map(|k| (1.0 - alpha.powi(k as i32) * (1.0 - x0)).sqrt())
            .collect();
        let half_rank = rank as f64 / 2.0;
        Self {
            alpha,
            rank,
            c_diam: 6.0 * (1.0 / alpha).powf(half_rank),
            x0,
            epsilon: alpha.powf(half_rank) / 3.0,
            radii,
        }
    }

    /// The Lipschitz bound `c_diam + 1`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.c_diam + 1.0
    }
}

pub fn constants_for(p: &Polyhedron) -> Result<SkorokhodConstants> {
    let (alpha, rank) = compute_alpha(p)?;
    Ok(SkorokhodConstants::from_alpha(alpha, rank))
}

/// Ratio of output to input sup-distances for two reflected paths.
///
/// The inputs are compared with their initial values replaced by the
/// starting points, i.e. as `x0 + y_k − y_0` and `x02 + y2_k − y2_0`.
pub fn lipschitz_ratio(p: &Polyhedron, y: &DiscretePath, y2: &DiscretePath, x0: &[f64], x02: &[f64]) -> Result<f64> {
    if y.len() != y2.len() {
        return Err(Error::InvalidPath(format!(
            "length mismatch: {} vs {}",
            y.len(),
            y2.len()
        )));
    }
    let x = discrete_map(p, y, x0)?;
    let xp = discrete_map(p, y2, x02)?;
    let num = x.sup_distance(&xp)?;
    let shift = |path: &DiscretePath, start: &[f64]| -> DiscretePath {
        let y0 = &path.points()[0];
        DiscretePath {
            values: path
                .points()
                .iter()
                .map(|v| v.iter().zip(y0).zip(start).map(|((a, b), s)| s + a - b).collect())
                .collect(),
        }
    };
    let den = shift(y, x0).sup_distance(&shift(y2, x02))?;
    if den == 0.0 {
        if num == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Internal(format!(
            "identical inputs produced outputs {num:e} apart"
        )));
    }
    Ok(num / den)
}

/// Gaussian random-walk path of `len` points starting at `start`.
pub fn random_walk<R: Rng + ?Sized>(start: &[f64], len: usize, step: f64, rng: &mut R) -> DiscretePath {
    let mut values = Vec::with_capacity(len);
    let mut cur = start.to_vec();
    values.push(cur.clone());
    for _ in 1..len {
        for v in cur.iter_mut() {
            *v += step * rng.sample::<f64, _>(StandardNormal);
        }
        values.push(cur.clone());
    }
    DiscretePath { values }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub pairs: usize,
    pub max_ratio: f64,
    pub bound: f64,
    pub violations: usize,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Draws `pairs` random path pairs and records the largest
/// [`lipschitz_ratio`]. Half the pairs are independent random walks, the
/// other half are small perturbations of each other, which probes the
/// local constant. Starting points are projections of Gaussian draws.
pub fn lipschitz_sweep<R: Rng + ?Sized>(
    p: &Polyhedron,
    constants: &SkorokhodConstants,
    pairs: usize,
    len: usize,
    scale: f64,
    rng: &mut R,
) -> Result<SweepReport> {
    let n = p.dim();
    let mut max_ratio = 0.0_f64;
    let mut violations = 0;
    let bound = constants.lipschitz_bound();
    for i in 0..pairs {
        let draw = |rng: &mut R| -> Result<Vec<f64>> {
            let g: Vec<f64> = (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
            p.project(&g)
        };
        let x0 = draw(rng)?;
        let step = scale * rng.random_range(0.05..0.6);
        let y = random_walk(&x0, len, step, rng);
        let (x02, y2) = if i % 2 == 0 {
            let x02 = draw(rng)?;
            let y2 = random_walk(&x02, len, step, rng);
            (x02, y2)
        } else {
            let eps = scale * 10f64.powf(rng.random_range(-4.0..-0.5));
            let mut x02 = x0.clone();
            for v in x02.iter_mut() {
                *v += eps * rng.sample::<f64, _>(StandardNormal);
            }
            let x02 = p.project(&x02)?;
            let noise = random_walk(&vec![0.0; n], len, eps, rng);
            let values = y
                .points()
                .iter()
                .zip(noise.points())
                .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u + v).collect())
                .collect();
            (x02, DiscretePath { values })
        };
        let r = lipschitz_ratio(p, &y, &y2, &x0, &x02)?;
        if r > bound {
            violations += 1;
        }
        max_ratio = max_ratio.max(r);
    }
    Ok(SweepReport {
        pairs,
        max_ratio,
        bound,
        violations,
    })
}
