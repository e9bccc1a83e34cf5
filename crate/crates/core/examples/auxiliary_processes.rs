//! The algorithm and its auxiliary processes driven by one noise realization.

use nalgebra::DMatrix;
use polylangevin::sampler::{run_bundle, NoiseRealization};
use polylangevin::{Ar1Stream, ObjectiveModel, Polyhedron, Result, SamplerConfig};

fn main() -> Result<()> {
    let k = Polyhedron::cube(2, 1.0)?;
    let stream = Ar1Stream::new(0.5, 1.0, 2)?;
    let b = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.4]);
    let model = ObjectiveModel::coupled_quadratic(1.0, b, stream.mean().to_vec(), 1.0, 1.0, 0.0)?;
    let cfg = SamplerConfig::new(0.05, 1.0, 100, 5).with_substeps(32);
    let noise = NoiseRealization::generate(&stream, 2, &cfg, None);
    let bundle = run_bundle(&k, &model, &stream, &cfg, &noise, &[0.5, -0.5], &[0, 1, 2])?;
    let s = bundle.summary();
    for (name, x) in &s.terminal {
        println!("{name:<3} x_T = [{:+.4}, {:+.4}]", x[0], x[1]);
    }
    for (a, b, d) in s.sup_distances.iter().filter(|(a, _, _)| a == "A" || a == "C") {
        println!("sup |{a} - {b}| = {d:.4}");
    }
    Ok(())
}
