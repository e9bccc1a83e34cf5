//! Constructive Skorokhod constants and an empirical Lipschitz sweep.

use polylangevin::experiments::standard_families;
use polylangevin::skorokhod::{constants_for, lipschitz_sweep};
use polylangevin::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!(
        "{:<12} {:>8} {:>5} {:>10} {:>10}",
        "family", "alpha", "rank", "c_diam", "max ratio"
    );
    for f in standard_families(1)? {
        let c = constants_for(&f.polyhedron)?;
        let sweep = lipschitz_sweep(&f.polyhedron, &c, 100, 30, 1.0, &mut rng)?;
        println!(
            "{:<12} {:>8.4} {:>5} {:>10.3} {:>10.4}",
            f.name, c.alpha, c.rank, c.c_diam, sweep.max_ratio
        );
    }
    Ok(())
}
