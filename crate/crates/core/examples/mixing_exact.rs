//! Exact total-variation decay of the circle ball walk from a point mass,
//! and the fitted rate against λ₁/6.

use ballwalk::geometry::Manifold;
use ballwalk::kernels::KernelKind;
use ballwalk::montecarlo::{fit_mixing_rate, tv_exact_curve, FitWindow};
use ballwalk::spectral::{assemble_operator, Basis};
use std::f64::consts::PI;

fn main() -> ballwalk::Result<()> {
    let m = Manifold::flat_torus(vec![2.0 * PI])?;
    let h = 0.1;
    let op = assemble_operator(&m, h, KernelKind::BallWalk, Basis::Cells { n: 512 })?;
    let curve = tv_exact_curve(&op, &[0], 6000)?;
    for p in curve.points.iter().step_by(1000) {
        println!("n = {:>5}: tv = {:.6e}", p.n, p.tv);
    }
    let fit = fit_mixing_rate(&curve, h, 1.0 / 6.0, FitWindow::default())?;
    println!("rate {:.5} vs {:.5} ({:.2}% off)", fit.rate, fit.target, 100.0 * fit.relative_gap);
    Ok(())
}
