//! Quadrature reference for a Gibbs measure on an interval and W1 to it.

use polylangevin::wasserstein::GibbsReference1D;
use polylangevin::{ObjectiveModel, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let model = ObjectiveModel::double_well(0.1, 0.0, 11.0, 1.25, 3.0)?;
    let reference = GibbsReference1D::new(&model, 4.0, -2.0, 2.0, 8192)?;
    println!(
        "mass on [0, 2] = {:.6}, second moment = {:.6}",
        reference.mass(0.0, 2.0),
        reference.moment(2)
    );
    for u in [0.05, 0.25, 0.5, 0.75, 0.95] {
        println!("quantile({u}) = {:+.4}", reference.quantile(u));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [100, 1_000, 10_000] {
        let s = reference.sample(&mut rng, n);
        println!("n = {n:>6}: W1 to density = {:.5}", reference.w1_to_density(&s)?);
    }
    Ok(())
}
