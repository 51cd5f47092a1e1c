//! Resolvent differences on the flat circle shrink like h².

use ballwalk::geometry::flat::FlatTorus;
use ballwalk::spectral::{resolvent_gap_torus, ResolventRegion};
use std::f64::consts::PI;

fn main() -> ballwalk::Result<()> {
    let circle = FlatTorus::new(vec![2.0 * PI])?;
    let z = (-1.0, 0.0);
    let mut previous: Option<f64> = None;
    for h in [0.2, 0.1, 0.05, 0.025] {
        let gap = resolvent_gap_torus(&circle, h, z, ResolventRegion::default())?;
        let ratio = previous.map(|p| p / gap.value).unwrap_or(f64::NAN);
        println!("h = {h:<6} gap {:.6e}  ratio to previous {ratio:.3}", gap.value);
        previous = Some(gap.value);
    }
    Ok(())
}
