//! One run of projected Langevin dynamics with AR(1) data on a square.

use nalgebra::DMatrix;
use polylangevin::sampler::{run_algorithm, NoiseRealization};
use polylangevin::{Ar1Stream, ObjectiveModel, Polyhedron, Result, SamplerConfig};

fn main() -> Result<()> {
    let k = Polyhedron::cube(2, 1.0)?;
    let stream = Ar1Stream::new(0.5, 1.0, 2)?;
    let b = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.4]);
    let model = ObjectiveModel::coupled_quadratic(1.0, b, stream.mean().to_vec(), 1.0, 1.0, 0.0)?;
    let cfg = SamplerConfig::new(0.05, 4.0, 2000, 3);
    cfg.check_step_size(&model)?;
    let noise = NoiseRealization::generate(&stream, 2, &cfg, None);
    let t = run_algorithm(&k, &model, &cfg, &noise, &[0.9, -0.9])?;
    for step in (0..=2000).step_by(400) {
        println!("k = {step:>4}  x = {:?}", t.get(step));
    }
    t.to_path().write_csv(std::io::stdout().lock())?;
    Ok(())
}
