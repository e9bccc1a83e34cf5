//! AR(1) data stream: closed-form mixing coefficients against Monte Carlo.

use polylangevin::mixing::estimate_psi2;
use polylangevin::{Ar1Stream, Result};

fn main() -> Result<()> {
    let stream = Ar1Stream::new(0.5, 1.0, 1)?;
    let d = stream.descriptor();
    println!(
        "burn-in {} steps, Psi2 = {:.4}, M2 = {:.4}",
        stream.recommended_burn_in(),
        d.big_psi2(),
        d.m2()
    );
    for tau in [1, 2, 4, 8] {
        let est = estimate_psi2(&stream, tau, 20_000, 7)?;
        println!(
            "psi2({tau}) = {:.4}  estimate {:.4} +- {:.4}",
            d.psi2(tau),
            est.value,
            est.se
        );
    }
    Ok(())
}
