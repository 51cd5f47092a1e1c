//! Two-time joint law of rescaled circle paths against the heat kernel,
//! then the modulus-of-continuity statistic for the same paths.

use ballwalk::brownian::{fdd_compare, modulus_statistics, simulate_paths, HeatKernel, DEFAULT_T_MIN};
use ballwalk::geometry::{Manifold, Point};
use ballwalk::kernels::{KernelKind, WalkConfig, Walker};
use ballwalk::montecarlo::Partition;
use ballwalk::rng::Substreams;
use std::f64::consts::PI;

fn main() -> ballwalk::Result<()> {
    let m = Manifold::flat_torus(vec![2.0 * PI])?;
    let walker = Walker::new(&m, WalkConfig::new(&m, 0.1, 0, KernelKind::Metropolis)?)?;
    let paths = simulate_paths(&walker, Point([0.0; 3]), &[0.25, 0.5], 20_000, true, &Substreams::new(5))?;
    let heat = HeatKernel::new(&m, DEFAULT_T_MIN)?;
    let report = fdd_compare(&paths, &m, &heat, Partition::FlatGrid { cells: 4 }, 24)?;
    println!("{} cells, chi-square p = {:.3}, discrepancy {:.2e}", report.cells, report.chi_square.p_value, report.discrepancy);
    for e in modulus_statistics(&paths, &m, 0.5, &[0.01, 0.05, 0.1], 0.5)? {
        println!("delta {:<5}: fraction {:.4}", e.delta, e.fraction);
    }
    Ok(())
}
