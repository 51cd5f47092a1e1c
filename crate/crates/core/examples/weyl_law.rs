//! Counting rescaled eigenvalues below τ on the flat 2-torus against the
//! phase-space volume.

use ballwalk::geometry::Manifold;
use ballwalk::geometry::flat::FlatTorus;
use ballwalk::spectral::{torus_spectrum_exact, weyl_constant, weyl_table};
use std::f64::consts::PI;

fn main() -> ballwalk::Result<()> {
    let torus = FlatTorus::new(vec![2.0 * PI; 2])?;
    let m = Manifold::flat_torus(vec![2.0 * PI; 2])?;
    let taus = [1.0, 4.0, 16.0, 64.0];
    for h in [0.1, 0.05] {
        let report = torus_spectrum_exact(&torus, h, 80.0 / (h * h))?;
        let rows = weyl_table(&report, &m, &taus, 0.1)?;
        for r in &rows {
            println!("h = {h:<5} tau = {:>4}: count {:>6}  phase volume {:>10.2}", r.tau, r.count, r.phase_volume);
        }
        println!("h = {h}: constant {:.3}", weyl_constant(&rows));
    }
    Ok(())
}
