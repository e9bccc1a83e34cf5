//! Reflection coupling from opposite corners and the contraction metric.

use nalgebra::DMatrix;
use polylangevin::constants::MetricChain;
use polylangevin::sampler::run_coupled_pair;
use polylangevin::{ObjectiveModel, Polyhedron, Result, SamplerConfig};

fn main() -> Result<()> {
    let k = Polyhedron::cube(2, 1.5)?;
    let model = ObjectiveModel::rotated_double_well(
        std::f64::consts::FRAC_PI_6,
        DMatrix::zeros(2, 1),
        vec![0.0],
        13.0,
        0.5,
        3.0,
    )?;
    let chain = MetricChain::new(2.0, model.ell, model.mu, model.radius)?;
    println!("R1 = {:.4}, xi = {:.4e}", chain.r1(), chain.xi());
    for seed in 0..5 {
        let cfg = SamplerConfig::new(0.1, 2.0, 200, seed).with_substeps(16);
        let run = run_coupled_pair(&k, &model, &cfg, &[-1.5, -1.5], &[1.5, 1.5], 16)?;
        let d = run.a.distances(&run.b);
        let deltas: Vec<String> = d
            .iter()
            .step_by(20)
            .map(|r| format!("{:.3}", chain.delta(*r)))
            .collect();
        println!(
            "seed {seed}: coupled at {:?}, delta(r) = {}",
            run.coupling_time(),
            deltas.join(" ")
        );
    }
    Ok(())
}
