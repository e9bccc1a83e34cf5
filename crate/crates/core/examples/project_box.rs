//! Euclidean projection onto a box and onto a non-orthogonal wedge.

use polylangevin::{Polyhedron, Result};

fn main() -> Result<()> {
    let square = Polyhedron::cube(2, 1.0)?;
    for x in [[2.0, 0.5], [-3.0, -3.0], [0.2, -0.4]] {
        println!("box   {x:?} -> {:?}", square.project(&x)?);
    }

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let wedge = Polyhedron::new(vec![vec![1.0, 0.0], vec![h, h]], vec![1.0, 1.0])?;
    for x in [[3.0, 3.0], [2.0, -5.0], [-1.0, 0.0]] {
        let y = wedge.project(&x)?;
        println!("wedge {x:?} -> {y:?} active {:?}", wedge.active_set(&y)?);
    }

    let ball = square.chebyshev_center(None)?;
    println!("chebyshev centre {:?} radius {}", ball.center, ball.radius);
    Ok(())
}
