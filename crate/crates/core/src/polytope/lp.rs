//! Dense two-phase simplex for small linear programs.
//!
//! Solves `maximize cᵀx subject to Ax ≤ b, x ≥ 0` with `b` of arbitrary
//! sign. Bland's rule is used for both entering and leaving variables, so
//! the method terminates on degenerate problems.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    rhs: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        let mut d = cost[j];
        for (i, row) in self.rows.iter().enumerate() {
            d -= cost[self.basis[i]] * row[j];
        }
        d
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| cost[self.basis[i]] * row[self.rhs])
            .sum()
    }

    /// Runs primal simplex iterations maximizing `cost`; returns false when
    /// the objective is unbounded above.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..self.rhs).find(|&j| allowed[j] && self.reduced_cost(cost, j) > 1e-10);
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > PIVOT_EPS {
                    let ratio = row[self.rhs] / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || ((ratio - lr).abs() <= 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, c),
            }
        }
        Err(Error::LinearProgram(format!("pivot cap of {MAX_PIVOTS} reached")))
    }
}

/// Maximize `cᵀx` subject to `Ax ≤ b`, `x ≥ 0`.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpOutcome> {
    let m = a.len();
    let nx = c.len();
    if b.len() != m || a.iter().any(|row| row.len() != nx) {
        return Err(Error::LinearProgram("inconsistent problem dimensions".into()));
    }
    let n_art = b.iter().filter(|&&bi| bi < 0.0).count();
    let ncols = nx + m + n_art;
    let rhs = ncols;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = nx + m;
    for i in 0..m {
        let mut row = vec![0.0; ncols + 1];
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..nx {
            row[j] = sign * a[i][j];
        }
        row[nx + i] = sign;
        row[rhs] = sign * b[i];
        if b[i] < 0.0 {
            row[art] = 1.0;
            basis.push(art);
            art += 1;
        } else {
            basis.push(nx + i);
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, basis, rhs };

    if n_art > 0 {
        let mut cost1 = vec![0.0; ncols];
        for cj in cost1.iter_mut().skip(nx + m) {
            *cj = -1.0;
        }
        let allowed = vec![true; ncols];
        t.optimize(&cost1, &allowed)?;
        if t.objective(&cost1) < -1e-9 {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive remaining artificials out of the basis.
        for r in 0..m {
            if t.basis[r] >= nx + m {
                if let Some(cidx) = (0..nx + m).find(|&j| t.rows[r][j].abs() > PIVOT_EPS) {
                    t.pivot(r, cidx);
                }
            }
        }
    }

    let mut cost2 = vec![0.0; ncols];
    cost2[..nx].copy_from_slice(c);
    let mut allowed = vec![true; ncols];
    for flag in allowed.iter_mut().skip(nx + m) {
        *flag = false;
    }
    if !t.optimize(&cost2, &allowed)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![0.0; nx];
    for (i, &bj) in t.basis.iter().enumerate() {
        if bj < nx {
            x[bj] = t.rows[i][rhs];
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpOutcome::Optimal { x, objective })
}
