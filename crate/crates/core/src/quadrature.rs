//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

/// Default relative tolerance.
pub const REL_TOL: f64 = 1e-9;
/// Maximum number of subintervals visited by one integration.
pub const INTERVAL_CAP: usize = 1_000_000;

struct Segment {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// `∫_a^b f` by adaptive Simpson with Richardson correction, to relative
/// tolerance `rel_tol` measured against a coarse estimate of `∫|f|`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, rel_tol).map(|v| -v);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    // Scale from a 17-point composite rule on |f|.
    let probe = 16;
    let h = (b - a) / probe as f64;
    let mut scale = 0.0;
    for i in 0..=probe {
        let w = if i == 0 || i == probe { 0.5 } else { 1.0 };
        scale += w * f(a + i as f64 * h).abs();
    }
    scale *= h;
    let tol = (rel_tol * scale).max(1e-300);
    let mut stack = vec![Segment {
        a,
        b,
        fa,
        fm,
        fb,
        whole: simpson(a, b, fa, fm, fb),
        tol,
        depth: 0,
    }];
    let mut total = 0.0;
    let mut comp = 0.0;
    let mut visited = 0usize;
    while let Some(s) = stack.pop() {
        visited += 1;
        if visited > INTERVAL_CAP {
            return Err(Error::Quadrature { lo: a, hi: b });
        }
        let m = 0.5 * (s.a + s.b);
        let lm = 0.5 * (s.a + m);
        let rm = 0.5 * (m + s.b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(s.a, m, s.fa, flm, s.fm);
        let right = simpson(m, s.b, s.fm, frm, s.fb);
        let delta = left + right - s.whole;
        if !delta.is_finite() {
            return Err(Error::Quadrature { lo: s.a, hi: s.b });
        }
        if (s.depth >= 4 && delta.abs() <= 15.0 * s.tol) || s.depth >= 60 {
            if s.depth >= 60 && delta.abs() > 15.0 * s.tol {
                return Err(Error::Quadrature { lo: s.a, hi: s.b });
            }
            let v = left + right + delta / 15.0;
            // Neumaier accumulation.
            let t = total + v;
            if total.abs() >= v.abs() {
                comp += (total - t) + v;
            } else {
                comp += (v - t) + total;
            }
            total = t;
        } else {
            stack.push(Segment {
                a: s.a,
                b: m,
                fa: s.fa,
                fm: flm,
                fb: s.fm,
                whole: left,
                tol: 0.5 * s.tol,
                depth: s.depth + 1,
            });
            stack.push(Segment {
                a: m,
                b: s.b,
                fa: s.fm,
                fm: frm,
                fb: s.fb,
                whole: right,
                tol: 0.5 * s.tol,
                depth: s.depth + 1,
            });
        }
    }
    Ok(total + comp)
}

/// Composite Simpson rule on `2k` equal panels.
pub fn composite_simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "composite Simpson needs an odd number of nodes");
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_integrals() {
        let v = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        let g = integrate(|x: f64| (-x * x).exp(), -6.0, 6.0, 1e-12).unwrap();
        assert!((g - std::f64::consts::PI.sqrt()).abs() < 1e-11);
        let r = integrate(|x: f64| x * x, 1.0, 0.0, 1e-12).unwrap();
        assert!((r + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_is_exact_on_cubics() {
        let h = 0.25;
        let vals: Vec<f64> = (0..=8).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((composite_simpson(&vals, h) - 4.0).abs() < 1e-12);
    }
}
