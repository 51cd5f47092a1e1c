//! Chain powers against the heat semigroup on single eigenfunctions.

use ballwalk::brownian::clt_error;
use ballwalk::geometry::Manifold;
use std::f64::consts::PI;

fn main() -> ballwalk::Result<()> {
    let circle = Manifold::flat_torus(vec![2.0 * PI])?;
    let sphere = Manifold::sphere2();
    for h in [0.1, 0.05, 0.025] {
        let a = clt_error(&circle, h, 1.0, 1)?;
        let b = clt_error(&sphere, h, 0.5, 1)?;
        println!("h = {h:<6} circle err {:.3e}  sphere err {:.3e}", a.error, b.error);
    }
    Ok(())
}
