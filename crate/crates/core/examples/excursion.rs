//! Probability that the chain is farther than ε from its start after δ/h²
//! steps, against ε²/δ.

use ballwalk::geometry::{Manifold, Point};
use ballwalk::kernels::{KernelKind, WalkConfig, Walker};
use ballwalk::montecarlo::{excursion_probability, fit_excursion};
use ballwalk::rng::Substreams;
use std::f64::consts::PI;

fn main() -> ballwalk::Result<()> {
    let m = Manifold::flat_torus(vec![2.0 * PI; 2])?;
    let walker = Walker::new(&m, WalkConfig::new(&m, 0.05, 0, KernelKind::BallWalk)?)?;
    let streams = Substreams::new(11);
    let eps = 0.5;
    let mut estimates = Vec::new();
    for (i, ratio) in [0.5, 1.0, 2.0, 3.0].into_iter().enumerate() {
        let e = excursion_probability(&walker, Point([0.0; 3]), eps, eps * eps / ratio, 40_000, &streams.child(&i.to_string()))?;
        println!("eps²/delta = {ratio}: p = {:.4e} ± {:.1e}", e.probability, e.half_width);
        estimates.push(e);
    }
    let fit = fit_excursion(&estimates)?;
    println!("log p slope {:.3}, R² {:.4}", fit.slope, fit.r_squared);
    Ok(())
}
