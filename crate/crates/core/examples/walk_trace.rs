//! A short ball-walk trajectory on S² and the fraction of held steps for
//! the Metropolis chain on a torus of revolution.

use ballwalk::geometry::{Manifold, Point};
use ballwalk::kernels::{KernelKind, WalkConfig};
use ballwalk::montecarlo::run_chain;
use ballwalk::rng::Substreams;
use std::f64::consts::PI;

fn main() -> ballwalk::Result<()> {
    let streams = Substreams::new(1);
    let sphere = Manifold::sphere2();
    let cfg = WalkConfig::new(&sphere, 0.3, 1, KernelKind::BallWalk)?;
    let trace = run_chain(&sphere, cfg, Point([0.0, 0.0, 1.0]), 10, &mut streams.stream(0))?;
    for (i, p) in trace.states.iter().enumerate() {
        println!("step {i:>2}: ({:+.5}, {:+.5}, {:+.5})", p.0[0], p.0[1], p.0[2]);
    }

    let torus = Manifold::revolution_torus(2.0, 1.0)?;
    let cfg = WalkConfig::new(&torus, 0.2, 1, KernelKind::Metropolis)?;
    let trace = run_chain(&torus, cfg, Point([PI, 0.0, 0.0]), 20_000, &mut streams.stream(1))?;
    let held = trace.held.iter().filter(|&&b| b).count();
    println!("metropolis on the torus: held {held} of {} steps", trace.held.len());
    Ok(())
}
