//! Zonal eigenvalues of the ball walk on S²: τ_l against l(l+1)/8.

use ballwalk::spectral::sphere_zonal_eigenvalues;

fn main() -> ballwalk::Result<()> {
    for h in [0.2, 0.1, 0.05] {
        let mu = sphere_zonal_eigenvalues(h, 4)?;
        print!("h = {h:<5}");
        for (l, m) in mu.iter().enumerate().skip(1) {
            let tau = (1.0 - m) / (h * h);
            let target = (l * (l + 1)) as f64 / 8.0;
            print!("  l={l}: {tau:.5} ({target})");
        }
        println!();
    }
    Ok(())
}
