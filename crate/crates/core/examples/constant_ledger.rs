//! Constant ledger for a one-dimensional double well and the resulting bounds.

use polylangevin::constants::{estimate_r_min, ledger, suboptimality_compact, theorem_bound, theorem_bound_schedule};
use polylangevin::experiments::Setup;
use polylangevin::{Ar1Stream, ObjectiveModel, Polyhedron, Result};

fn main() -> Result<()> {
    let stream = Ar1Stream::new(0.5, 1.0, 1)?;
    let model = ObjectiveModel::double_well(0.1, 0.0, 11.0, 1.25, 3.0)?;
    let setup = Setup::new(Polyhedron::cube(1, 2.0)?, model, stream)?;
    let params = setup.params(0.01, 4.0, 0.0)?;
    let l = ledger(&params)?;
    for (name, e) in l.entries() {
        println!("{name:<8} {:>14.6e}  {}", e.value, e.formula_ref);
    }
    for k in [16, 256, 4096] {
        println!(
            "k = {k:>5}: fixed-step bound {:.4e}, scheduled bound {:.4e}",
            theorem_bound(&params, &l, k)?,
            theorem_bound_schedule(&l, 0.0, k)?
        );
    }
    let r = estimate_r_min(&setup.polyhedron, &params, 200, 1)?;
    let gap = suboptimality_compact(&params, &l, &setup.polyhedron, 4.0, 0.01, r.value)?;
    println!("r_min ~ {:.4}, suboptimality bound at W1 = 0.01: {gap:.4}", r.value);
    Ok(())
}
