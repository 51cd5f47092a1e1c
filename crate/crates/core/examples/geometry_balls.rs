//! Ball volumes against the Euclidean value and the curvature correction,
//! with the Metropolis holding probability, on S² and a torus of revolution.

use ballwalk::geometry::{Manifold, Point};
use ballwalk::kernels::holding_probability;
use ballwalk::specfun::unit_ball_volume;
use std::f64::consts::PI;

fn main() -> ballwalk::Result<()> {
    let sphere = Manifold::sphere2();
    let torus = Manifold::revolution_torus(2.0, 1.0)?;
    let cases = [
        (&sphere, Point([0.0, 0.0, 1.0]), "sphere pole"),
        (&torus, Point([0.0, 0.0, 0.0]), "torus outer equator"),
        (&torus, Point([PI / 2.0, 0.0, 0.0]), "torus top circle"),
        (&torus, Point([PI, 0.0, 0.0]), "torus inner equator"),
    ];
    for h in [0.2, 0.1] {
        let flat = unit_ball_volume(2) * h * h;
        for (m, x, label) in cases {
            let vol = m.ball_volume(x, h)?;
            let expansion = flat * (1.0 - m.scalar_curvature(x) * h * h / 24.0);
            println!(
                "h = {h:<4} {label:<20} |B|/πh² = {:.8}  curvature fit err = {:.1e}  holding = {:.3e}",
                vol / flat,
                (vol - expansion).abs() / flat,
                holding_probability(m, h, x)?
            );
        }
    }
    Ok(())
}
