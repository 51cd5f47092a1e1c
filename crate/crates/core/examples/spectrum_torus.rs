//! The flat-circle spectrum: exact Fourier symbols, a Nyström grid, and the
//! rescaled eigenvalues τ_k = (1 − μ_k)/h² approaching λ_k/6.

use ballwalk::geometry::Manifold;
use ballwalk::geometry::flat::FlatTorus;
use ballwalk::kernels::KernelKind;
use ballwalk::spectral::{assemble_operator, eigen_decompose, torus_spectrum_exact, Basis};
use std::f64::consts::PI;

fn main() -> ballwalk::Result<()> {
    let circle = FlatTorus::new(vec![2.0 * PI])?;
    let m = Manifold::flat_torus(vec![2.0 * PI])?;
    for h in [0.2, 0.1, 0.05] {
        let exact = torus_spectrum_exact(&circle, h, 30.0)?;
        let op = assemble_operator(&m, h, KernelKind::BallWalk, Basis::Grid { n: 256 })?;
        let grid = eigen_decompose(&[op], false)?;
        println!("h = {h}");
        for k in [1, 3, 5] {
            println!(
                "  k = {k}: mu exact {:.15}  grid {:.15}  tau {:.6}  lambda/6 {:.6}",
                exact.mu[k], grid.mu[k], exact.tau[k], exact.lambda_ref[k] / 6.0
            );
        }
    }
    Ok(())
}
