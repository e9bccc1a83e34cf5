//! Monte-Carlo checks of the bounds, shared by the CLI and the tests.
//!
//! Every check returns a serializable report with a [`Verdict`]. A mean
//! that exceeds its bound by more than three standard errors is a
//! violation; checks without enough replicas to estimate an error are
//! inconclusive.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constants::{ledger, ConstantLedger, MetricChain, ProblemParams};
use crate::error::{check_dim, invalid, Result};
use crate::mixing::Ar1Stream;
use crate::objective::ObjectiveModel;
use crate::polytope::Polyhedron;
use crate::rng::{derive_seed, rng_from_seed};
use crate::sampler::{
    run_algorithm, run_coupled_pair, run_d, run_fine_c, run_mean, run_partially_averaged, run_replicas,
    NoiseRealization, SamplerConfig,
};
use crate::skorokhod::{constants_for, lipschitz_sweep, SkorokhodConstants, SweepReport};
use crate::stats::{fit_line, mean_se, LineFit, MeanSe};
use crate::wasserstein::{
    gibbs_rejection_nd, reflected_spectral_gap_1d, w1_exact, GibbsReference1D, SampleSet, ASSIGNMENT_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Violation,
    Inconclusive,
}

impl Verdict {
    /// 0 pass, 1 violation, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Violation => 1,
            Verdict::Inconclusive => 2,
        }
    }

    /// Violation dominates inconclusive, which dominates pass.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Violation, _) | (_, Violation) => Violation,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

/// The three ingredients every experiment needs.
#[derive(Debug, Clone)]
pub struct Setup {
    pub polyhedron: Polyhedron,
    pub model: ObjectiveModel,
    pub stream: Ar1Stream,
}

impl Setup {
    pub fn new(polyhedron: Polyhedron, model: ObjectiveModel, stream: Ar1Stream) -> Result<Self> {
        check_dim(polyhedron.dim(), model.dim())?;
        check_dim(model.data_dim(), stream.dim())?;
        Ok(Self {
            polyhedron,
            model,
            stream,
        })
    }

    pub fn dim(&self) -> usize {
        self.polyhedron.dim()
    }

    pub fn skorokhod(&self) -> Result<SkorokhodConstants> {
        constants_for(&self.polyhedron)
    }

    pub fn params(&self, eta: f64, beta: f64, varsigma: f64) -> Result<ProblemParams> {
        Ok(ProblemParams::from_model(
            &self.model,
            &self.stream.descriptor(),
            self.skorokhod()?,
            eta,
            beta,
            varsigma,
        ))
    }

    pub fn ledger(&self, eta: f64, beta: f64, varsigma: f64) -> Result<(ProblemParams, ConstantLedger)> {
        let p = self.params(eta, beta, varsigma)?;
        let l = ledger(&p)?;
        Ok((p, l))
    }

    fn start(&self, x0: &Option<Vec<f64>>) -> Result<Vec<f64>> {
        let x = x0.clone().unwrap_or_else(|| vec![0.0; self.dim()]);
        check_dim(self.dim(), x.len())?;
        if !self.polyhedron.contains(&x, 1e-12)? {
            return Err(invalid("x0", "initial point is outside K"));
        }
        Ok(x)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

/// `mean ≤ bound + 3·se`.
fn within(m: &MeanSe, bound: f64) -> bool {
    m.mean <= bound + 3.0 * m.se
}

/// Column `j` of per-replica rows, summarized.
fn column(rows: &[Vec<f64>], j: usize) -> MeanSe {
    mean_se(&rows.iter().map(|r| r[j]).collect::<Vec<_>>())
}

// ---------------------------------------------------------------- Skorokhod

#[derive(Debug, Clone)]
pub struct SkorokhodFamily {
    pub name: String,
    pub polyhedron: Polyhedron,
}

/// Half-line, interval, square, a wedge with normals `e₁` and
/// `(1,1)/√2`, and a random polyhedron with `n = 3`, `m = 6`.
pub fn standard_families(seed: u64) -> Result<Vec<SkorokhodFamily>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut rng = rng_from_seed(seed);
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..3).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let offsets = (0..6).map(|_| rng.random_range(0.5..2.0)).collect();
    let fam = |name: &str, polyhedron: Polyhedron| SkorokhodFamily {
        name: name.into(),
        polyhedron,
    };
    Ok(vec![
        fam("half_line", Polyhedron::half_space(&[-1.0], 1.0)?),
        fam("interval", Polyhedron::cube(1, 1.0)?),
        fam("box_2d", Polyhedron::cube(2, 1.0)?),
        fam(
            "wedge_2d",
            Polyhedron::new(vec![vec![1.0, 0.0], vec![h, h]], vec![1.0, 1.0])?,
        ),
        fam("random_3x6", Polyhedron::from_rows(rows, offsets)?),
    ])
}

#[derive(Debug, Clone, Serialize)]
pub struct SkorokhodRow {
    pub family: String,
    pub alpha: f64,
    pub c_diam: f64,
    #[serde(flatten)]
    pub sweep: SweepReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkorokhodReport {
    pub rows: Vec<SkorokhodRow>,
    pub verdict: Verdict,
}

pub fn skorokhod_check(families: &[SkorokhodFamily], pairs: usize, len: usize, seed: u64) -> Result<SkorokhodReport> {
    let mut rows = Vec::new();
    let mut verdict = Verdict::Pass;
    for (i, f) in families.iter().enumerate() {
        let c = constants_for(&f.polyhedron)?;
        let mut rng = rng_from_seed(derive_seed(seed, i as u64));
        let sweep = lipschitz_sweep(&f.polyhedron, &c, pairs, len, 1.0, &mut rng)?;
        if !sweep.passed() {
            verdict = Verdict::Violation;
        }
        rows.push(SkorokhodRow {
            family: f.name.clone(),
            alpha: c.alpha,
            c_diam: c.c_diam,
            sweep,
        });
    }
    Ok(SkorokhodReport { rows, verdict })
}

// ---------------------------------------------------------------- Averaging

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AveragingSettings {
    pub eta: f64,
    pub beta: f64,
    pub steps: usize,
    pub lags: Vec<usize>,
    pub replicas: usize,
    pub seed: u64,
    pub workers: usize,
    pub x0: Option<Vec<f64>>,
}

impl Default for AveragingSettings {
    fn default() -> Self {
        Self {
            eta: 0.05,
            beta: 1.0,
            steps: 100,
            lags: vec![0, 1, 2],
            replicas: 10_000,
            seed: 0,
            workers: 0,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AveragingRow {
    pub s: usize,
    pub k: usize,
    /// `E‖x^{M,s}_k − x^{B,s}_k‖`.
    pub gap_mean: f64,
    pub gap_se: f64,
    pub gap_bound: f64,
    /// `E‖x^{B,s}_k − x^{M,s+1}_k‖`.
    pub between_mean: f64,
    pub between_se: f64,
    pub between_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AveragingReport {
    pub rows: Vec<AveragingRow>,
    /// `x^{M,0} ≡ x^A` bitwise on the first replica.
    pub lag_zero_is_algorithm: bool,
    /// `x^{M,s} ≡ x^M` bitwise for `s` beyond the horizon.
    pub long_lag_is_mean: bool,
    pub gap_violations: usize,
    pub between_violations: usize,
    /// Largest `(mean − bound)/se` over all rows with `se > 0`.
    pub worst_z: f64,
    pub verdict: Verdict,
}

pub fn averaging_check(setup: &Setup, st: &AveragingSettings) -> Result<AveragingReport> {
    let x0 = setup.start(&st.x0)?;
    let base = SamplerConfig::new(st.eta, st.beta, st.steps, st.seed).with_substeps(1);
    base.validate()?;
    let p = &setup.polyhedron;
    let model = &setup.model;
    let stream = &setup.stream;
    let mut all_lags: Vec<usize> = st.lags.iter().flat_map(|&s| [s, s + 1]).collect();
    all_lags.sort_unstable();
    all_lags.dedup();

    let (lag_zero_is_algorithm, long_lag_is_mean) = {
        let noise = NoiseRealization::generate(stream, setup.dim(), &base, None);
        let a = run_algorithm(p, model, &base, &noise, &x0)?;
        let m = run_mean(p, model, &base, &noise, &x0)?;
        let (m0, _) = run_partially_averaged(p, model, stream, &base, &noise, &x0, 0)?;
        let (mlong, _) = run_partially_averaged(p, model, stream, &base, &noise, &x0, st.steps + 1)?;
        (m0.bitwise_eq(&a), mlong.bitwise_eq(&m))
    };

    // Per replica: for every requested lag, the gap and between-process
    // distances at every k.
    let per = run_replicas(st.replicas, st.workers, st.seed, |_, seed| {
        let cfg = base.with_seed(seed);
        let noise = NoiseRealization::generate(stream, setup.dim(), &cfg, None);
        let mut runs = Vec::with_capacity(all_lags.len());
        for &s in &all_lags {
            runs.push((s, run_partially_averaged(p, model, stream, &cfg, &noise, &x0, s)?));
        }
        let find = |s: usize| &runs.iter().find(|(l, _)| *l == s).expect("lag simulated").1;
        let mut out = Vec::with_capacity(st.lags.len());
        for &s in &st.lags {
            let (ms, bs) = find(s);
            let (ms1, _) = find(s + 1);
            let gap: Vec<f64> = ms.distances(bs);
            let between: Vec<f64> = bs.distances(ms1);
            out.push((gap, between));
        }
        Ok(out)
    })?;

    let d = stream.descriptor();
    let ell = model.ell;
    let mut rows = Vec::new();
    let mut gap_violations = 0;
    let mut between_violations = 0;
    let mut worst_z = f64::NEG_INFINITY;
    for (li, &s) in st.lags.iter().enumerate() {
        let psi = d.psi2(s);
        for k in 0..=st.steps {
            let gap = mean_se(&per.iter().map(|r| r[li].0[k]).collect::<Vec<_>>());
            let between = mean_se(&per.iter().map(|r| r[li].1[k]).collect::<Vec<_>>());
            let kf = k as f64;
            let gap_bound = 2.0 * ell * psi * st.eta * kf.sqrt();
            let between_bound = gap_bound * ((st.eta * kf * ell).exp() - 1.0);
            if !within(&gap, gap_bound) {
                gap_violations += 1;
            }
            if !within(&between, between_bound) {
                between_violations += 1;
            }
            for (m, b) in [(&gap, gap_bound), (&between, between_bound)] {
                if m.se > 0.0 {
                    worst_z = worst_z.max((m.mean - b) / m.se);
                }
            }
            rows.push(AveragingRow {
                s,
                k,
                gap_mean: gap.mean,
                gap_se: gap.se,
                gap_bound,
                between_mean: between.mean,
                between_se: between.se,
                between_bound,
            });
        }
    }
    let mut verdict = if gap_violations + between_violations == 0 && lag_zero_is_algorithm && long_lag_is_mean {
        Verdict::Pass
    } else {
        Verdict::Violation
    };
    if st.replicas < 2 {
        verdict = verdict.and(Verdict::Inconclusive);
    }
    Ok(AveragingReport {
        rows,
        lag_zero_is_algorithm,
        long_lag_is_mean,
        gap_violations,
        between_violations,
        worst_z,
        verdict,
    })
}

// ------------------------------------------------------------------ Moments

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentSettings {
    pub eta: f64,
    pub beta: f64,
    pub steps: usize,
    pub substeps: usize,
    pub replicas: usize,
    pub seed: u64,
    pub workers: usize,
    pub x0: Option<Vec<f64>>,
    /// Coarse steps between reported rows.
    pub stride: usize,
    pub strict_eta: bool,
}

impl Default for MomentSettings {
    fn default() -> Self {
        Self {
            eta: 0.05,
            beta: 1.0,
            steps: 1000,
            substeps: 16,
            replicas: 1000,
            seed: 0,
            workers: 0,
            x0: None,
            stride: 10,
            strict_eta: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub k: usize,
    pub a_mean: f64,
    pub a_se: f64,
    pub c_mean: f64,
    pub c_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub varsigma: f64,
    pub bound_a: f64,
    pub bound_c: f64,
    pub rows: Vec<MomentRow>,
    pub max_a: f64,
    pub max_c: f64,
    pub verdict: Verdict,
}

/// `E‖x^A_k‖² ≤ ς + c₇` and `E‖x^C_k‖² ≤ ς + c₆/μ`.
pub fn moment_check(setup: &Setup, st: &MomentSettings) -> Result<MomentReport> {
    let x0 = setup.start(&st.x0)?;
    let cfg = SamplerConfig::new(st.eta, st.beta, st.steps, st.seed).with_substeps(st.substeps);
    cfg.validate()?;
    if st.strict_eta {
        cfg.check_step_size(&setup.model)?;
    }
    let varsigma = norm(&x0).powi(2);
    let (params, l) = setup.ledger(st.eta, st.beta, varsigma)?;
    let bound_a = varsigma + l.c7;
    let bound_c = varsigma + l.c6 / params.mu;
    let ks: Vec<usize> = (0..=st.steps).step_by(st.stride.max(1)).collect();
    let p = &setup.polyhedron;
    let per = run_replicas(st.replicas, st.workers, st.seed, |_, seed| {
        let cfg = cfg.with_seed(seed);
        let noise = NoiseRealization::generate(&setup.stream, setup.dim(), &cfg, None);
        let a = run_algorithm(p, &setup.model, &cfg, &noise, &x0)?;
        let c = run_fine_c(p, &setup.model, &cfg, &noise, &x0)?;
        let mut row = Vec::with_capacity(2 * ks.len());
        for &k in &ks {
            row.push(norm(a.get(k)).powi(2));
            row.push(norm(c.get(k * st.substeps)).powi(2));
        }
        Ok(row)
    })?;
    let mut rows = Vec::new();
    let mut ok = true;
    let (mut max_a, mut max_c) = (0.0f64, 0.0f64);
    for (i, &k) in ks.iter().enumerate() {
        let a = column(&per, 2 * i);
        let c = column(&per, 2 * i + 1);
        ok &= within(&a, bound_a) && within(&c, bound_c);
        max_a = max_a.max(a.mean);
        max_c = max_c.max(c.mean);
        rows.push(MomentRow {
            k,
            a_mean: a.mean,
            a_se: a.se,
            c_mean: c.mean,
            c_se: c.se,
        });
    }
    let verdict = if !ok {
        Verdict::Violation
    } else if st.replicas < 2 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(MomentReport {
        varsigma,
        bound_a,
        bound_c,
        rows,
        max_a,
        max_c,
        verdict,
    })
}

// ----------------------------------------------------------- Discretization

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationSettings {
    pub etas: Vec<f64>,
    pub beta: f64,
    pub steps: usize,
    pub substeps: usize,
    pub replicas: usize,
    pub seed: u64,
    pub workers: usize,
    pub x0: Option<Vec<f64>>,
    pub strict_eta: bool,
}

impl Default for DiscretizationSettings {
    fn default() -> Self {
        Self {
            etas: vec![0.1, 0.01],
            beta: 1.0,
            steps: 200,
            substeps: 32,
            replicas: 1000,
            seed: 0,
            workers: 0,
            x0: None,
            strict_eta: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscretizationRow {
    pub eta: f64,
    pub k: usize,
    pub mean: f64,
    pub se: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscretizationReport {
    pub rows: Vec<DiscretizationRow>,
    pub violations: usize,
    /// Largest `mean/bound` over all rows.
    pub max_ratio: f64,
    pub verdict: Verdict,
}

/// `E‖x^C_k − x^D_k‖ ≤ (c₈ + c₉√ς)ηk^{1/2} + c₁₀√(η log 4k)` for `k ≥ 1`.
pub fn discretization_check(setup: &Setup, st: &DiscretizationSettings) -> Result<DiscretizationReport> {
    let x0 = setup.start(&st.x0)?;
    let varsigma = norm(&x0).powi(2);
    let p = &setup.polyhedron;
    let mut rows = Vec::new();
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    for (ei, &eta) in st.etas.iter().enumerate() {
        let cfg = SamplerConfig::new(eta, st.beta, st.steps, st.seed).with_substeps(st.substeps);
        cfg.validate()?;
        if st.strict_eta {
            cfg.check_step_size(&setup.model)?;
        }
        let (_, l) = setup.ledger(eta, st.beta, varsigma)?;
        let per = run_replicas(st.replicas, st.workers, derive_seed(st.seed, ei as u64), |_, seed| {
            let cfg = cfg.with_seed(seed);
            let noise = NoiseRealization::generate(&setup.stream, setup.dim(), &cfg, None);
            let c = run_fine_c(p, &setup.model, &cfg, &noise, &x0)?;
            let d = run_d(p, &setup.model, &cfg, &c, &noise, &x0)?;
            Ok((0..=st.steps)
                .map(|k| dist(c.get(k * st.substeps), d.get(k)))
                .collect::<Vec<_>>())
        })?;
        for k in 1..=st.steps {
            let m = column(&per, k);
            let kf = k as f64;
            let bound = (l.c8 + l.c9 * varsigma.sqrt()) * eta * kf.sqrt() + l.c10 * (eta * (4.0 * kf).ln()).sqrt();
            if !within(&m, bound) {
                violations += 1;
            }
            max_ratio = max_ratio.max(m.mean / bound);
            rows.push(DiscretizationRow {
                eta,
                k,
                mean: m.mean,
                se: m.se,
                bound,
            });
        }
    }
    let verdict = if violations > 0 {
        Verdict::Violation
    } else if st.replicas < 2 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(DiscretizationReport {
        rows,
        violations,
        max_ratio,
        verdict,
    })
}

// ----------------------------------------------------------------- Coupling

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingSettings {
    pub eta: f64,
    pub beta: f64,
    pub steps: usize,
    pub substeps: usize,
    pub pairs: usize,
    pub seed: u64,
    pub workers: usize,
    /// Starting points; default to opposite corners of the bounding box.
    pub x0_a: Option<Vec<f64>>,
    pub x0_b: Option<Vec<f64>>,
    /// Coarse steps between checkpoints.
    pub checkpoint_every: usize,
    pub min_coupled_fraction: f64,
}

impl Default for CouplingSettings {
    fn default() -> Self {
        Self {
            eta: 0.1,
            beta: 2.0,
            steps: 200,
            substeps: 16,
            pairs: 500,
            seed: 0,
            workers: 0,
            x0_a: None,
            x0_b: None,
            checkpoint_every: 10,
            min_coupled_fraction: 0.95,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingRow {
    /// Coarse step.
    pub k: usize,
    pub delta_mean: f64,
    pub delta_se: f64,
    pub distance_mean: f64,
    pub coupled_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    pub x0_a: Vec<f64>,
    pub x0_b: Vec<f64>,
    pub rows: Vec<CouplingRow>,
    pub coupled_fraction: f64,
    /// Mean coupling time (coarse units) among coupled pairs.
    pub mean_coupling_time: Option<f64>,
    pub monotone: bool,
    /// Largest increase of `E δ(r)` between checkpoints, in standard errors.
    pub worst_increase_z: f64,
    pub verdict: Verdict,
}

pub fn coupling_experiment(setup: &Setup, st: &CouplingSettings) -> Result<CouplingReport> {
    let p = &setup.polyhedron;
    let (x0_a, x0_b) = match (&st.x0_a, &st.x0_b) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        _ => p
            .bounding_box()?
            .ok_or_else(|| invalid("x0_a", "unbounded K needs explicit starting points"))?,
    };
    for x in [&x0_a, &x0_b] {
        check_dim(setup.dim(), x.len())?;
        if !p.contains(x, 1e-9)? {
            return Err(invalid("x0_a", "starting points must lie in K"));
        }
    }
    let cfg = SamplerConfig::new(st.eta, st.beta, st.steps, st.seed).with_substeps(st.substeps);
    cfg.validate()?;
    let chain = MetricChain::new(st.beta, setup.model.ell, setup.model.mu, setup.model.radius)?;
    let every = st.checkpoint_every.max(1);
    let stride = every * st.substeps;
    let checkpoints = st.steps / every + 1;
    let per = run_replicas(st.pairs, st.workers, st.seed, |_, seed| {
        let run = run_coupled_pair(p, &setup.model, &cfg.with_seed(seed), &x0_a, &x0_b, stride)?;
        let d: Vec<f64> = run.a.distances(&run.b);
        Ok((d, run.coupling_time()))
    })?;
    let mut rows = Vec::new();
    let mut prev: Option<MeanSe> = None;
    let mut monotone = true;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..checkpoints {
        let deltas: Vec<f64> = per.iter().map(|(d, _)| chain.delta(d[i])).collect();
        let m = mean_se(&deltas);
        let dm = mean_se(&per.iter().map(|(d, _)| d[i]).collect::<Vec<_>>()).mean;
        let k = i * every;
        let coupled = per.iter().filter(|(_, t)| t.is_some_and(|t| t <= k as f64)).count();
        if let Some(q) = &prev {
            let se = (q.se * q.se + m.se * m.se).sqrt();
            let inc = m.mean - q.mean;
            if se > 0.0 {
                worst = worst.max(inc / se);
            }
            if inc > 3.0 * se {
                monotone = false;
            }
        }
        rows.push(CouplingRow {
            k,
            delta_mean: m.mean,
            delta_se: m.se,
            distance_mean: dm,
            coupled_fraction: coupled as f64 / st.pairs as f64,
        });
        prev = Some(m);
    }
    let times: Vec<f64> = per.iter().filter_map(|(_, t)| *t).collect();
    let coupled_fraction = times.len() as f64 / st.pairs as f64;
    let mean_coupling_time = (!times.is_empty()).then(|| mean_se(&times).mean);
    let verdict = if !monotone || coupled_fraction < st.min_coupled_fraction {
        Verdict::Violation
    } else if st.pairs < 2 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(CouplingReport {
        x0_a,
        x0_b,
        rows,
        coupled_fraction,
        mean_coupling_time,
        monotone,
        worst_increase_z: worst,
        verdict,
    })
}

// -------------------------------------------------------------------- Gibbs

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GibbsSettings {
    /// Coarse step; the fine step is `eta/substeps`.
    pub eta: f64,
    pub beta: f64,
    pub fine_steps: usize,
    pub substeps: usize,
    /// Fine steps between retained samples.
    pub thin: usize,
    pub burn_in_fraction: f64,
    pub grid: usize,
    pub threshold: f64,
    pub seed: u64,
    pub x0: Option<Vec<f64>>,
}

impl Default for GibbsSettings {
    fn default() -> Self {
        Self {
            eta: 2.56,
            beta: 4.0,
            fine_steps: 1_000_000,
            substeps: 256,
            thin: 10,
            burn_in_fraction: 0.1,
            grid: 8192,
            threshold: 0.05,
            seed: 0,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GibbsReport {
    pub estimator: &'static str,
    pub samples: usize,
    pub fine_step: f64,
    pub w1: f64,
    pub noise_floor: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Long fine-grid run of the reflected averaged dynamics compared with
/// the Gibbs measure `∝ e^{−βf̄}` on `K`.
pub fn gibbs_check(setup: &Setup, st: &GibbsSettings) -> Result<GibbsReport> {
    let x0 = setup.start(&st.x0)?;
    if st.substeps == 0 || st.fine_steps < st.substeps {
        return Err(invalid("fine_steps", "need at least one coarse step"));
    }
    let steps = st.fine_steps / st.substeps;
    let cfg = SamplerConfig::new(st.eta, st.beta, steps, st.seed).with_substeps(st.substeps);
    cfg.validate()?;
    let noise = NoiseRealization::generate(&setup.stream, setup.dim(), &cfg, None);
    let fine = run_fine_c(&setup.polyhedron, &setup.model, &cfg, &noise, &x0)?;
    let start = ((fine.len() as f64) * st.burn_in_fraction) as usize;
    let thin = st.thin.max(1);
    let kept: Vec<f64> = (start..fine.len())
        .step_by(thin)
        .flat_map(|j| fine.get(j).to_vec())
        .collect();
    let samples = SampleSet::from_flat(setup.dim(), kept)?;
    let (estimator, w1, noise_floor) = if setup.dim() == 1 {
        let r = GibbsReference1D::for_interval(&setup.model, st.beta, &setup.polyhedron, st.grid)?;
        let floor = r.noise_floor(samples.len(), 8, derive_seed(st.seed, 1))?.mean;
        ("w1_to_density", r.w1_to_density(&samples)?, floor)
    } else {
        let (w, floor) = exact_vs_rejection(setup, st.beta, &samples, derive_seed(st.seed, 1))?;
        ("w1_exact", w, floor)
    };
    let verdict = if w1 < st.threshold {
        Verdict::Pass
    } else {
        Verdict::Violation
    };
    Ok(GibbsReport {
        estimator,
        samples: samples.len(),
        fine_step: st.eta / st.substeps as f64,
        w1,
        noise_floor,
        threshold: st.threshold,
        verdict,
    })
}

/// `w1_exact` between (a subsample of) `samples` and an equal-size
/// rejection sample from the Gibbs measure, plus the self-distance of two
/// reference draws.
fn exact_vs_rejection(setup: &Setup, beta: f64, samples: &SampleSet, seed: u64) -> Result<(f64, f64)> {
    let (lo, hi) = setup
        .polyhedron
        .bounding_box()?
        .ok_or_else(|| invalid("P", "reference sampling needs a bounded K"))?;
    let n = samples.len().min(ASSIGNMENT_CAP);
    let stride = samples.len() / n;
    let sub: Vec<f64> = (0..n).flat_map(|i| samples.point(i * stride).to_vec()).collect();
    let sub = SampleSet::from_flat(samples.dim(), sub)?;
    let mut rng = rng_from_seed(seed);
    let r1 = gibbs_rejection_nd(&setup.model, beta, &setup.polyhedron, &lo, &hi, &mut rng, n)?;
    let r2 = gibbs_rejection_nd(&setup.model, beta, &setup.polyhedron, &lo, &hi, &mut rng, n)?;
    Ok((w1_exact(&sub, &r1.samples)?, w1_exact(&r1.samples, &r2.samples)?))
}

// --------------------------------------------------------------------- Rate

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateSettings {
    pub beta: f64,
    /// Horizons `T = 2^e`.
    pub exponents: Vec<u32>,
    pub replicas: usize,
    pub seed: u64,
    pub workers: usize,
    pub x0: Option<Vec<f64>>,
    /// Replaces the ledger contraction rate in `η = log T/(2aT)`.
    pub a_override: Option<f64>,
    /// In dimension 1, use the numerical spectral gap of the reflected
    /// diffusion as the rate (ignored when `a_override` is set).
    pub a_from_spectral_gap: bool,
    pub grid: usize,
    pub floor_draws: usize,
    pub slope_min: f64,
    pub slope_max: f64,
    pub strict_eta: bool,
}

impl Default for RateSettings {
    fn default() -> Self {
        Self {
            beta: 4.0,
            exponents: (8..=14).collect(),
            replicas: 64,
            seed: 0,
            workers: 0,
            x0: None,
            a_override: None,
            a_from_spectral_gap: false,
            grid: 8192,
            floor_draws: 32,
            slope_min: -0.75,
            slope_max: -0.30,
            strict_eta: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub t: usize,
    pub eta: f64,
    pub w1: f64,
    pub noise_floor: f64,
    pub used_in_fit: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub estimator: &'static str,
    pub a: f64,
    pub a_source: &'static str,
    pub a_ledger: f64,
    pub a_lower: f64,
    pub points: Vec<RatePoint>,
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    /// 95% normal interval for the slope.
    pub slope_ci: Option<(f64, f64)>,
    pub ci_reliable: bool,
    pub eta_above_limit: usize,
    pub verdict: Verdict,
}

/// Runs the algorithm with `η = log T/(2aT)` for every horizon, pools the
/// terminal points of all replicas and measures `W₁` to the Gibbs measure.
/// Points within twice the noise floor are left out of the log-log fit.
pub fn rate_experiment(setup: &Setup, st: &RateSettings) -> Result<RateReport> {
    let x0 = setup.start(&st.x0)?;
    let (_, l) = setup.ledger(0.01, st.beta, norm(&x0).powi(2))?;
    let (a, a_source) = match st.a_override {
        Some(a) if a > 0.0 => (a, "override"),
        Some(a) => return Err(invalid("a_override", format!("must be positive, got {a}"))),
        None if st.a_from_spectral_gap => (spectral_gap(setup, st.beta)?, "spectral_gap"),
        None => (l.a, "ledger"),
    };
    if st.exponents.is_empty() {
        return Err(invalid("exponents", "need at least one horizon"));
    }
    let p = &setup.polyhedron;
    let limit = SamplerConfig::step_size_limit(&setup.model);
    let reference = if setup.dim() == 1 {
        Some(GibbsReference1D::for_interval(&setup.model, st.beta, p, st.grid)?)
    } else {
        None
    };
    let mut points = Vec::new();
    let mut eta_above_limit = 0;
    for &e in &st.exponents {
        let t = 1usize << e;
        let eta = crate::constants::scheduled_eta(a, t);
        if eta > limit {
            if st.strict_eta {
                return Err(invalid(
                    "eta",
                    format!("scheduled η = {eta} at T = {t} exceeds {limit}"),
                ));
            }
            eta_above_limit += 1;
        }
        let cfg = SamplerConfig::new(eta, st.beta, t, 0).with_substeps(1);
        cfg.validate()?;
        let seed_t = derive_seed(st.seed, t as u64);
        let finals = run_replicas(st.replicas, st.workers, seed_t, |_, seed| {
            let cfg = cfg.with_seed(seed);
            let noise = NoiseRealization::generate(&setup.stream, setup.dim(), &cfg, None);
            Ok(run_algorithm(p, &setup.model, &cfg, &noise, &x0)?.last().to_vec())
        })?;
        let samples = SampleSet::from_flat(setup.dim(), finals.concat())?;
        let (w1, floor) = match &reference {
            Some(r) => (
                r.w1_to_density(&samples)?,
                r.noise_floor(st.replicas, st.floor_draws, derive_seed(seed_t, 1))?.mean,
            ),
            None => exact_vs_rejection(setup, st.beta, &samples, derive_seed(seed_t, 1))?,
        };
        points.push(RatePoint {
            t,
            eta,
            w1,
            noise_floor: floor,
            used_in_fit: w1 > 2.0 * floor,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|q| q.used_in_fit)
        .map(|q| ((q.t as f64).ln(), q.w1.ln()))
        .unzip();
    let fit: Option<LineFit> = if xs.len() >= 3 { fit_line(&xs, &ys) } else { None };
    let ci_reliable = st.replicas > 1 && xs.len() >= 3;
    let verdict = match &fit {
        None => Verdict::Inconclusive,
        Some(f) if f.slope >= st.slope_min && f.slope <= st.slope_max => Verdict::Pass,
        Some(_) => Verdict::Violation,
    };
    Ok(RateReport {
        estimator: if reference.is_some() {
            "w1_to_density"
        } else {
            "w1_exact"
        },
        a,
        a_source,
        a_ledger: l.a,
        a_lower: l.a_lower,
        points,
        slope: fit.as_ref().map(|f| f.slope),
        slope_se: fit.as_ref().map(|f| f.slope_se),
        slope_ci: fit
            .as_ref()
            .map(|f| (f.slope - 1.96 * f.slope_se, f.slope + 1.96 * f.slope_se)),
        ci_reliable,
        eta_above_limit,
        verdict,
    })
}

/// Spectral gap of the reflected averaged dynamics on a bounded interval.
pub fn spectral_gap(setup: &Setup, beta: f64) -> Result<f64> {
    check_dim(1, setup.dim())?;
    let (lo, hi) = setup
        .polyhedron
        .bounding_box()?
        .ok_or_else(|| invalid("P", "spectral gap needs a bounded interval"))?;
    reflected_spectral_gap_1d(|x| setup.model.fbar(&[x]), beta, lo[0], hi[0], 1000)
}

/// Largest `|w1_a − w1_b|` at matching horizons, in units of the larger
/// noise floor.
pub fn curve_gap_in_floors(a: &RateReport, b: &RateReport) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for pa in &a.points {
        if let Some(pb) = b.points.iter().find(|q| q.t == pa.t) {
            let floor = pa.noise_floor.max(pb.noise_floor);
            let g = (pa.w1 - pb.w1).abs() / floor;
            worst = Some(worst.map_or(g, |w: f64| w.max(g)));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn quad_setup(coeff: f64) -> Setup {
        let model =
            ObjectiveModel::coupled_quadratic(1.0, DMatrix::from_element(1, 1, 0.5), vec![0.0], 1.0, 1.0, 0.0).unwrap();
        Setup::new(
            Polyhedron::cube(1, 2.0).unwrap(),
            model,
            Ar1Stream::new(coeff, 1.0, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn verdict_combination() {
        assert_eq!(Verdict::Pass.and(Verdict::Inconclusive), Verdict::Inconclusive);
        assert_eq!(Verdict::Inconclusive.and(Verdict::Violation), Verdict::Violation);
        assert_eq!(Verdict::Violation.exit_code(), 1);
    }

    #[test]
    fn averaging_lag_zero_is_trivial() {
        let st = AveragingSettings {
            lags: vec![0],
            replicas: 50,
            steps: 20,
            ..Default::default()
        };
        let r = averaging_check(&quad_setup(0.5), &st).unwrap();
        assert!(r.lag_zero_is_algorithm && r.long_lag_is_mean);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn single_replica_is_inconclusive() {
        let st = AveragingSettings {
            lags: vec![1],
            replicas: 1,
            steps: 10,
            ..Default::default()
        };
        let r = averaging_check(&quad_setup(0.5), &st).unwrap();
        assert_ne!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn families_have_expected_constants() {
        let f = standard_families(1).unwrap();
        assert_eq!(f.len(), 5);
        let r = skorokhod_check(&f[..4], 20, 20, 3).unwrap();
        assert_eq!(r.rows[2].alpha, 0.5);
        assert!((r.rows[3].alpha - 0.25).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn rate_is_deterministic() {
        let st = RateSettings {
            exponents: vec![4, 5, 6],
            replicas: 8,
            a_override: Some(1.0),
            beta: 1.0,
            ..Default::default()
        };
        let a = rate_experiment(&quad_setup(0.0), &st).unwrap();
        let b = rate_experiment(&quad_setup(0.0), &st).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.w1.to_bits(), q.w1.to_bits());
        }
        assert_eq!(a.a_source, "override");
    }
}
