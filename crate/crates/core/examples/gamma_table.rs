//! Γ_d(s) for d = 1, 2, 3 against direct quadrature, and the floor inf Γ_d.

use ballwalk::specfun::{gamma_d, gamma_floor, gamma_quadrature_oracle};

fn main() -> ballwalk::Result<()> {
    println!("{:>3} {:>10} {:>22} {:>10}", "d", "s", "gamma", "|diff|");
    for d in 1..=3 {
        for s in [1e-3, 0.5, 3.0, 25.0, 400.0] {
            let g = gamma_d(d, s)?;
            let oracle = gamma_quadrature_oracle(d, s)?;
            println!("{d:>3} {s:>10} {g:>22.16} {:>10.1e}", (g - oracle).abs());
        }
        println!("    floor for d = {d}: {:?}", gamma_floor(d)?);
    }
    Ok(())
}
