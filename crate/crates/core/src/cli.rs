//! Configuration files and the commands behind the `polylangevin` binary.
//!
//! A configuration is a TOML file with optional top-level `seed`,
//! `replicas` and `workers`, and sections `[polyhedron]`, `[model]`,
//! `[stream]`, `[sampler]`, `[constants]`, `[skorokhod]`, `[rate]`,
//! `[averaging]`, `[moments]`, `[discretization]`, `[coupling]` and
//! `[gibbs]`. Relative paths are resolved against the directory of the
//! configuration file.
//!
//! Every command writes `summary.json` to the output directory; most also
//! write a CSV. Each output starts with (CSV: a `#` comment line) the
//! SHA-256 of the configuration bytes and the command-line overrides.
//!
//! CSV schemas:
//! * `constants`: `ledger.csv` with `name,value,formula`.
//! * `rate`: `rate.csv` with `T,eta,w1,noise_floor,used_in_fit`.
//! * `skorokhod-check`: `skorokhod.csv` with
//!   `family,alpha,c_diam,bound,pairs,max_ratio,violations`.
//! * `averaging-check`: `averaging.csv` with
//!   `s,k,gap_mean,gap_se,gap_bound,between_mean,between_se,between_bound`,
//!   plus `moments.csv` (`k,a_mean,a_se,c_mean,c_se`) and
//!   `discretization.csv` (`eta,k,mean,se,bound`) when those sections are
//!   present.
//! * `coupling`: `coupling.csv` with
//!   `k,delta_mean,delta_se,distance_mean,coupled_fraction`.
//! * `sample`: `trajectory.csv` with `k,x1,…,xn`.
//!
//! Exit codes: 0 pass, 1 violation, 2 inconclusive, 3 input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::constants::{
    c13, estimate_r_min, ledger, scheduled_eta, suboptimality_compact, theorem_bound, theorem_bound_schedule,
    LedgerEntry,
};
use crate::error::{Error, Result};
use crate::experiments::{
    averaging_check, coupling_experiment, discretization_check, gibbs_check, moment_check, rate_experiment,
    skorokhod_check, standard_families, AveragingSettings, CouplingSettings, DiscretizationSettings, GibbsSettings,
    MomentSettings, RateSettings, Setup, SkorokhodFamily, Verdict,
};
use crate::mixing::StreamSpec;
use crate::objective::ModelSpec;
use crate::polytope::Polyhedron;
use crate::sampler::{run_algorithm, NoiseRealization, SamplerConfig};

#[derive(Debug, Parser)]
#[command(name = "polylangevin", version, about = "Projected Langevin sampling over polyhedra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the replica (or pair) count of the command.
    #[arg(long, global = true)]
    pub replicas: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Reject step sizes above min{1/4, μ/(4ℓ²)} instead of warning.
    #[arg(long, global = true)]
    pub strict_eta: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Constant ledger, Skorokhod constants and bound evaluations.
    Constants,
    /// Log-log slope of W1 against the horizon.
    Rate,
    /// Lipschitz ratios of the discrete Skorokhod map.
    SkorokhodCheck,
    /// Averaging, moment and discretization bounds.
    AveragingCheck,
    /// Reflection coupling and the contraction metric.
    Coupling,
    /// Long-run invariance of the Gibbs measure.
    GibbsCheck,
    /// One trajectory of the algorithm.
    Sample,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyhedronSpec {
    /// Text file with one `a_1 … a_n | b` row per line.
    pub file: Option<PathBuf>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub rows: Option<Vec<Vec<f64>>>,
    pub offsets: Option<Vec<f64>>,
}

impl PolyhedronSpec {
    pub fn build(&self, base: &Path) -> Result<Polyhedron> {
        match self {
            PolyhedronSpec {
                file: Some(f),
                lo: None,
                hi: None,
                rows: None,
                offsets: None,
            } => {
                let path = base.join(f);
                let text = fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read polyhedron file {}: {e}", path.display())))?;
                Polyhedron::parse(&text)
            }
            PolyhedronSpec {
                file: None,
                lo: Some(lo),
                hi: Some(hi),
                rows: None,
                offsets: None,
            } => Polyhedron::axis_box(lo, hi),
            PolyhedronSpec {
                file: None,
                lo: None,
                hi: None,
                rows: Some(r),
                offsets: Some(b),
            } => Polyhedron::from_rows(r.clone(), b.clone()),
            _ => Err(Error::Config(
                "[polyhedron] needs exactly one of `file`, `lo`+`hi`, or `rows`+`offsets`".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub eta: f64,
    pub beta: f64,
    pub steps: usize,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    pub x0: Option<Vec<f64>>,
}

fn default_substeps() -> usize {
    64
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsSection {
    /// Boundary points used for the sampled `r_min`; 0 skips it.
    pub r_min_points: usize,
    /// Horizons at which the bound is evaluated.
    pub horizons: Vec<usize>,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        Self {
            r_min_points: 1000,
            horizons: vec![4, 64, 1024, 16384],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SkorokhodSection {
    pub pairs: usize,
    pub len: usize,
    /// Include the built-in families in addition to `[polyhedron]`.
    pub standard: bool,
    pub seed: u64,
}

impl Default for SkorokhodSection {
    fn default() -> Self {
        Self {
            pairs: 200,
            len: 40,
            standard: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub workers: Option<usize>,
    pub polyhedron: Option<PolyhedronSpec>,
    pub model: Option<ModelSpec>,
    pub stream: Option<StreamSpec>,
    pub sampler: Option<SamplerSection>,
    pub constants: Option<ConstantsSection>,
    pub skorokhod: Option<SkorokhodSection>,
    pub rate: Option<RateSettings>,
    pub averaging: Option<AveragingSettings>,
    pub moments: Option<MomentSettings>,
    pub discretization: Option<DiscretizationSettings>,
    pub coupling: Option<CouplingSettings>,
    pub gibbs: Option<GibbsSettings>,
}

/// A parsed configuration with its provenance.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
    pub hash: String,
}

impl LoadedConfig {
    pub fn from_str(text: &str, base_dir: &Path, overrides: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut h = Sha256::new();
        h.update(text.as_bytes());
        h.update(b"\0");
        h.update(overrides.as_bytes());
        let hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self {
            config,
            base_dir: base_dir.to_path_buf(),
            hash,
        })
    }

    pub fn load(path: &Path, overrides: &str) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, &base, overrides)
    }

    fn polyhedron(&self) -> Result<Polyhedron> {
        self.config
            .polyhedron
            .as_ref()
            .ok_or_else(|| Error::Config("missing [polyhedron] section".into()))?
            .build(&self.base_dir)
    }

    pub fn setup(&self) -> Result<Setup> {
        let p = self.polyhedron()?;
        let model_spec = self
            .config
            .model
            .as_ref()
            .ok_or_else(|| Error::Config("missing [model] section".into()))?;
        let stream_spec = self
            .config
            .stream
            .as_ref()
            .ok_or_else(|| Error::Config("missing [stream] section".into()))?;
        let stream = stream_spec.build()?;
        let model = model_spec.build(stream.mean())?;
        Setup::new(p, model, stream)
    }

    fn sampler(&self) -> Result<&SamplerSection> {
        self.config
            .sampler
            .as_ref()
            .ok_or_else(|| Error::Config("missing [sampler] section".into()))
    }
}

/// Writes outputs into one directory, stamping each with the config hash.
struct Outputs {
    dir: PathBuf,
    hash: String,
}

impl Outputs {
    fn new(dir: &Path, hash: &str) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: hash.to_string(),
        })
    }

    fn csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<()> {
        let mut f = fs::File::create(self.dir.join(name))?;
        writeln!(f, "# config_hash={}", self.hash)?;
        let mut w = csv::Writer::from_writer(f);
        for r in rows {
            w.serialize(r).map_err(|e| Error::Internal(format!("csv: {e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    fn summary(&self, command: &str, verdict: Verdict, mut body: Value) -> Result<()> {
        let obj = body.as_object_mut().expect("summary body is an object");
        obj.insert("command".into(), json!(command));
        obj.insert("config_hash".into(), json!(self.hash));
        obj.insert("verdict".into(), json!(verdict));
        let text = serde_json::to_string_pretty(&body).map_err(|e| Error::Internal(e.to_string()))?;
        fs::write(self.dir.join("summary.json"), text + "\n")?;
        Ok(())
    }
}

fn overrides_string(cli: &Cli) -> String {
    format!(
        "seed={:?};replicas={:?};workers={:?};strict_eta={}",
        cli.seed, cli.replicas, cli.workers, cli.strict_eta
    )
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(v) => v.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            3
        }
    }
}

pub fn run(cli: &Cli) -> Result<Verdict> {
    let loaded = match &cli.config {
        Some(p) => LoadedConfig::load(p, &overrides_string(cli))?,
        None => LoadedConfig::from_str("", Path::new("."), &overrides_string(cli))?,
    };
    run_loaded(cli, &loaded)
}

pub fn run_loaded(cli: &Cli, loaded: &LoadedConfig) -> Result<Verdict> {
    let out = Outputs::new(&cli.out_dir, &loaded.hash)?;
    let cfg = &loaded.config;
    let seed = cli.seed.or(cfg.seed);
    let replicas = cli.replicas.or(cfg.replicas);
    let workers = cli.workers.or(cfg.workers).unwrap_or(0);
    match cli.command {
        Command::Constants => cmd_constants(cli, loaded, &out),
        Command::Rate => {
            let setup = loaded.setup()?;
            let mut st = cfg.rate.clone().unwrap_or_default();
            apply(&mut st.seed, seed);
            apply(&mut st.replicas, replicas);
            st.workers = workers;
            st.strict_eta |= cli.strict_eta;
            let r = rate_experiment(&setup, &st)?;
            #[derive(Serialize)]
            struct Row {
                #[serde(rename = "T")]
                t: usize,
                eta: f64,
                w1: f64,
                noise_floor: f64,
                used_in_fit: bool,
            }
            let rows: Vec<Row> = r
                .points
                .iter()
                .map(|p| Row {
                    t: p.t,
                    eta: p.eta,
                    w1: p.w1,
                    noise_floor: p.noise_floor,
                    used_in_fit: p.used_in_fit,
                })
                .collect();
            out.csv("rate.csv", &rows)?;
            if r.eta_above_limit > 0 {
                eprintln!(
                    "warning: {} scheduled step sizes exceed min{{1/4, μ/(4ℓ²)}}",
                    r.eta_above_limit
                );
            }
            println!(
                "a = {:.6e} ({}), ledger a = {:.6e}, a_lower = {:.6e}",
                r.a, r.a_source, r.a_ledger, r.a_lower
            );
            match (r.slope, r.slope_ci) {
                (Some(s), Some((lo, hi))) => println!(
                    "slope = {s:.4} [{lo:.4}, {hi:.4}]{}",
                    if r.ci_reliable { "" } else { " (unreliable)" }
                ),
                _ => println!("slope: too few points above the noise floor"),
            }
            let v = r.verdict;
            out.summary("rate", v, json!({ "replicas": st.replicas, "report": r }))?;
            Ok(v)
        }
        Command::SkorokhodCheck => {
            let mut st = cfg.skorokhod.clone().unwrap_or_default();
            apply(&mut st.seed, seed);
            apply(&mut st.pairs, replicas);
            let mut families: Vec<SkorokhodFamily> = if st.standard {
                standard_families(st.seed)?
            } else {
                Vec::new()
            };
            if cfg.polyhedron.is_some() {
                families.push(SkorokhodFamily {
                    name: "configured".into(),
                    polyhedron: loaded.polyhedron()?,
                });
            }
            if families.is_empty() {
                return Err(Error::Config("no polyhedra to check".into()));
            }
            let r = skorokhod_check(&families, st.pairs, st.len, st.seed)?;
            #[derive(Serialize)]
            struct Row<'a> {
                family: &'a str,
                alpha: f64,
                c_diam: f64,
                bound: f64,
                pairs: usize,
                max_ratio: f64,
                violations: usize,
            }
            let rows: Vec<Row> = r
                .rows
                .iter()
                .map(|x| Row {
                    family: &x.family,
                    alpha: x.alpha,
                    c_diam: x.c_diam,
                    bound: x.sweep.bound,
                    pairs: x.sweep.pairs,
                    max_ratio: x.sweep.max_ratio,
                    violations: x.sweep.violations,
                })
                .collect();
            for x in &rows {
                println!(
                    "{:<12} alpha={:.6} c_diam+1={:.4} max_ratio={:.4} violations={}",
                    x.family, x.alpha, x.bound, x.max_ratio, x.violations
                );
            }
            out.csv("skorokhod.csv", &rows)?;
            let v = r.verdict;
            out.summary("skorokhod-check", v, json!({ "report": r }))?;
            Ok(v)
        }
        Command::AveragingCheck => {
            let setup = loaded.setup()?;
            let mut st = cfg.averaging.clone().unwrap_or_default();
            apply(&mut st.seed, seed);
            apply(&mut st.replicas, replicas);
            st.workers = workers;
            let r = averaging_check(&setup, &st)?;
            out.csv("averaging.csv", &r.rows)?;
            println!(
                "averaging: {} gap and {} between-process rows above bound + 3 SE; lag 0 ≡ x^A: {}; long lag ≡ x^M: {}",
                r.gap_violations, r.between_violations, r.lag_zero_is_algorithm, r.long_lag_is_mean
            );
            let mut v = r.verdict;
            let mut body = json!({ "averaging": summarize_rows(&r, |r| &r.rows) });
            if let Some(ms) = &cfg.moments {
                let mut ms = ms.clone();
                apply(&mut ms.seed, seed);
                apply(&mut ms.replicas, replicas);
                ms.workers = workers;
                ms.strict_eta |= cli.strict_eta;
                let m = moment_check(&setup, &ms)?;
                out.csv("moments.csv", &m.rows)?;
                println!(
                    "moments: max E|x^A|^2 = {:.4} (bound {:.4}), max E|x^C|^2 = {:.4} (bound {:.4})",
                    m.max_a, m.bound_a, m.max_c, m.bound_c
                );
                v = v.and(m.verdict);
                body["moments"] = summarize_rows(&m, |m| &m.rows);
            }
            if let Some(ds) = &cfg.discretization {
                let mut ds = ds.clone();
                apply(&mut ds.seed, seed);
                apply(&mut ds.replicas, replicas);
                ds.workers = workers;
                ds.strict_eta |= cli.strict_eta;
                let d = discretization_check(&setup, &ds)?;
                out.csv("discretization.csv", &d.rows)?;
                println!(
                    "discretization: max mean/bound = {:.4e}, violations = {}",
                    d.max_ratio, d.violations
                );
                v = v.and(d.verdict);
                body["discretization"] = summarize_rows(&d, |d| &d.rows);
            }
            out.summary("averaging-check", v, body)?;
            Ok(v)
        }
        Command::Coupling => {
            let setup = loaded.setup()?;
            let mut st = cfg.coupling.clone().unwrap_or_default();
            apply(&mut st.seed, seed);
            apply(&mut st.pairs, replicas);
            st.workers = workers;
            let r = coupling_experiment(&setup, &st)?;
            out.csv("coupling.csv", &r.rows)?;
            println!(
                "coupled fraction = {:.4}, mean coupling time = {:?}, E delta(r) non-increasing: {}",
                r.coupled_fraction, r.mean_coupling_time, r.monotone
            );
            let v = r.verdict;
            out.summary("coupling", v, summarize_rows(&r, |r| &r.rows))?;
            Ok(v)
        }
        Command::GibbsCheck => {
            let setup = loaded.setup()?;
            let mut st = cfg.gibbs.clone().unwrap_or_default();
            apply(&mut st.seed, seed);
            let r = gibbs_check(&setup, &st)?;
            println!(
                "W1 = {:.5} (threshold {}, noise floor {:.5}, {} samples)",
                r.w1, r.threshold, r.noise_floor, r.samples
            );
            let v = r.verdict;
            out.summary("gibbs-check", v, json!({ "report": r }))?;
            Ok(v)
        }
        Command::Sample => {
            let setup = loaded.setup()?;
            let s = loaded.sampler()?;
            let mut sc = SamplerConfig::new(s.eta, s.beta, s.steps, seed.unwrap_or(0)).with_substeps(1);
            sc.validate()?;
            check_eta(cli, &sc, &setup)?;
            let x0 = s.x0.clone().unwrap_or_else(|| vec![0.0; setup.dim()]);
            sc.seed = seed.unwrap_or(0);
            let data_seed = cfg.stream.as_ref().and_then(|s| s.seed());
            let noise = NoiseRealization::generate(&setup.stream, setup.dim(), &sc, data_seed);
            let t = run_algorithm(&setup.polyhedron, &setup.model, &sc, &noise, &x0)?;
            let mut f = fs::File::create(out.dir.join("trajectory.csv"))?;
            writeln!(f, "# config_hash={}", out.hash)?;
            t.to_path().write_csv(f)?;
            println!("final point: {:?}", t.last());
            out.summary("sample", Verdict::Pass, json!({ "steps": s.steps, "final": t.last() }))?;
            Ok(Verdict::Pass)
        }
    }
}

fn apply<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Report without its row table (rows go to CSV).
fn summarize_rows<R: Serialize, T>(report: &R, _rows: impl Fn(&R) -> &Vec<T>) -> Value {
    let mut v = serde_json::to_value(report).unwrap_or(Value::Null);
    if let Some(o) = v.as_object_mut() {
        o.remove("rows");
    }
    v
}

fn check_eta(cli: &Cli, sc: &SamplerConfig, setup: &Setup) -> Result<()> {
    match sc.check_step_size(&setup.model) {
        Err(e) if cli.strict_eta => Err(e),
        Err(e) => {
            eprintln!("warning: {e}");
            Ok(())
        }
        Ok(()) => Ok(()),
    }
}

fn cmd_constants(cli: &Cli, loaded: &LoadedConfig, out: &Outputs) -> Result<Verdict> {
    let setup = loaded.setup()?;
    let s = loaded.sampler()?;
    let sc = SamplerConfig::new(s.eta, s.beta, s.steps, 0);
    sc.validate()?;
    check_eta(cli, &sc, &setup)?;
    let x0 = s.x0.clone().unwrap_or_else(|| vec![0.0; setup.dim()]);
    let varsigma = x0.iter().map(|v| v * v).sum::<f64>();
    let params = setup.params(s.eta, s.beta, varsigma)?;
    let l = ledger(&params)?;
    let cs = loaded.config.constants.clone().unwrap_or_default();
    let mut extra: Vec<(&'static str, LedgerEntry)> = Vec::new();
    let mut sub = Value::Null;
    let bounded = setup.polyhedron.bounding_box()?;
    if let (Some((lo, hi)), true) = (&bounded, cs.r_min_points > 0) {
        let diameter = lo.iter().zip(hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
        let seed = cli.seed.or(loaded.config.seed).unwrap_or(0);
        let r = estimate_r_min(&setup.polyhedron, &params, cs.r_min_points, seed)?;
        let c12 = params.ell * diameter + params.grad0_norm;
        let c13v = c13(&params, &l, r.value)?;
        extra.push((
            "c12",
            LedgerEntry {
                value: c12,
                formula_ref: "ell*D + |grad fbar(0)|",
            },
        ));
        extra.push((
            "c13",
            LedgerEntry {
                value: c13v,
                formula_ref: "log n + 2 log(1 + c6/mu) + log(3)/6 + log(2 sqrt(pi)) - log r_min",
            },
        ));
        extra.push((
            "r_min",
            LedgerEntry {
                value: r.value,
                formula_ref: "sampled Chebyshev radius (estimate)",
            },
        ));
        let gap0 = suboptimality_compact(&params, &l, &setup.polyhedron, diameter, 0.0, r.value)?;
        sub = json!({ "diameter_bound": diameter, "r_min": r, "gap_bound_at_w1_zero": gap0 });
    }
    let sk = setup.skorokhod()?;
    let mut bounds = Vec::new();
    for &k in &cs.horizons {
        let fixed = if params.eta < 1.0 && k >= 4 {
            theorem_bound(&params, &l, k).ok()
        } else {
            None
        };
        let sched = theorem_bound_schedule(&l, varsigma, k).ok();
        bounds.push(json!({
            "k": k,
            "bound_fixed_eta": fixed,
            "scheduled_eta": scheduled_eta(l.a, k),
            "bound_scheduled": sched,
        }));
    }
    let ledger_json = l.to_json(&extra);
    fs::write(
        out.dir.join("ledger.json"),
        serde_json::to_string_pretty(&ledger_json).map_err(|e| Error::Internal(e.to_string()))? + "\n",
    )?;
    #[derive(Serialize)]
    struct Row<'a> {
        name: &'a str,
        value: f64,
        formula: &'a str,
    }
    let entries: Vec<(&str, LedgerEntry)> = l.entries().into_iter().chain(extra.iter().cloned()).collect();
    let rows: Vec<Row> = entries
        .iter()
        .map(|(n, e)| Row {
            name: n,
            value: e.value,
            formula: e.formula_ref,
        })
        .collect();
    out.csv("ledger.csv", &rows)?;
    println!("{:<8} {:>16}  formula", "name", "value");
    for r in &rows {
        println!("{:<8} {:>16.8e}  {}", r.name, r.value, r.formula);
    }
    println!("x0 = {:.6}, alpha = {}, c_diam = {}", sk.x0, sk.alpha, sk.c_diam);
    println!("a = {:.6e}, a_lower = {:.6e}", l.a, l.a_lower);
    out.summary(
        "constants",
        Verdict::Pass,
        json!({
            "params": params,
            "skorokhod": sk,
            "ledger": ledger_json,
            "bounds": bounds,
            "suboptimality": sub,
        }),
    )?;
    Ok(Verdict::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOX: &str = r#"
seed = 3
[polyhedron]
lo = [-1.0, -1.0]
hi = [1.0, 1.0]
[model]
kind = "quadratic"
dim = 2
coupling = [0.5, 0.0, 0.0, 0.5]
ell = 1.0
mu = 1.0
R = 0.0
[stream]
kind = "ar1"
dim = 2
coeff = 0.5
[sampler]
eta = 0.05
beta = 1.0
steps = 50
"#;

    fn cli(command: Command, out: &Path) -> Cli {
        Cli {
            command,
            config: None,
            out_dir: out.to_path_buf(),
            seed: None,
            replicas: None,
            workers: Some(1),
            strict_eta: false,
        }
    }

    #[test]
    fn constants_for_box() {
        let dir = tempfile::tempdir().unwrap();
        let loaded = LoadedConfig::from_str(BOX, dir.path(), "").unwrap();
        let c = cli(Command::Constants, dir.path());
        assert_eq!(run_loaded(&c, &loaded).unwrap(), Verdict::Pass);
        let s: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(s["skorokhod"]["alpha"], 0.5);
        assert_eq!(s["skorokhod"]["c_diam"], 12.0);
        let x0 = s["skorokhod"]["x0"].as_f64().unwrap();
        assert!((x0 - 0.352).abs() < 5e-4);
        let l: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("ledger.json")).unwrap()).unwrap();
        for key in ["a", "xi", "R1", "alpha", "c_diam", "c1", "c11", "c12", "c13"] {
            assert!(l[key]["value"].as_f64().unwrap().is_finite(), "{key}");
        }
    }

    #[test]
    fn missing_polyhedron_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let text = BOX.replace("lo = [-1.0, -1.0]\nhi = [1.0, 1.0]", "file = \"nowhere.txt\"");
        let loaded = LoadedConfig::from_str(&text, dir.path(), "").unwrap();
        let err = run_loaded(&cli(Command::Constants, dir.path()), &loaded).unwrap_err();
        assert!(err.to_string().contains("nowhere.txt"), "{err}");
        assert!(LoadedConfig::load(Path::new("/no/such/config.toml"), "")
            .unwrap_err()
            .to_string()
            .contains("config.toml"));
    }

    #[test]
    fn sample_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let loaded = LoadedConfig::from_str(BOX, dir.path(), "").unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        run_loaded(&cli(Command::Sample, &a), &loaded).unwrap();
        run_loaded(&cli(Command::Sample, &b), &loaded).unwrap();
        let ta = fs::read(a.join("trajectory.csv")).unwrap();
        assert_eq!(ta, fs::read(b.join("trajectory.csv")).unwrap());
        let text = String::from_utf8(ta).unwrap();
        assert!(text.starts_with("# config_hash="));
        let path = crate::skorokhod::DiscretePath::read_csv(text.as_bytes()).unwrap();
        assert_eq!(path.len(), 51);
    }

    #[test]
    fn rate_with_one_replica_is_unreliable() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("{BOX}\n[rate]\nexponents = [4, 5, 6]\nreplicas = 1\na_override = 1.0\nbeta = 1.0\n");
        let loaded = LoadedConfig::from_str(&text, dir.path(), "").unwrap();
        run_loaded(&cli(Command::Rate, dir.path()), &loaded).unwrap();
        let s: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(s["report"]["ci_reliable"], false);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(LoadedConfig::from_str(
            "[sampler]\neta = 1\nbeta = 1\nsteps = 1\nbogus = 2\n",
            Path::new("."),
            ""
        )
        .is_err());
    }
}
