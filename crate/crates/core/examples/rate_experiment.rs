//! Small rate experiment: W1 to the Gibbs measure against the horizon.
//!
//! Uses 256 replicas, so the noise floor is high; the acceptance suite
//! uses far more.

use polylangevin::experiments::{rate_experiment, RateSettings, Setup};
use polylangevin::{Ar1Stream, ObjectiveModel, Polyhedron, Result};

fn main() -> Result<()> {
    let stream = Ar1Stream::new(0.5, 1.0, 1)?;
    let model = ObjectiveModel::double_well(0.1, 0.0, 11.0, 1.25, 3.0)?;
    let setup = Setup::new(Polyhedron::cube(1, 2.0)?, model, stream)?;
    let st = RateSettings {
        exponents: (6..=11).collect(),
        replicas: 256,
        a_from_spectral_gap: true,
        x0: Some(vec![2.0]),
        ..Default::default()
    };
    let r = rate_experiment(&setup, &st)?;
    println!("a = {:.4} ({}), ledger a = {:.3e}", r.a, r.a_source, r.a_ledger);
    for p in &r.points {
        println!(
            "T = {:>5}  eta = {:.4e}  W1 = {:.4}  floor = {:.4}",
            p.t, p.eta, p.w1, p.noise_floor
        );
    }
    println!("slope {:?}, verdict {:?}", r.slope, r.verdict);
    Ok(())
}
