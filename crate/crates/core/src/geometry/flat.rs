//! Flat tori `ℝ^d / ∏ L_i ℤ`, d = 1..3.

use super::{Level, Point};
use crate::error::{invalid, Error, Result};
use crate::rng::Stream;
use crate::specfun::unit_ball_volume;
use rand::Rng;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct FlatTorus {
    lengths: Vec<f64>,
}

/// Wrap a coordinate difference into `[-L/2, L/2)`.
pub fn wrap_delta(delta: f64, length: f64) -> f64 {
    let w = (delta + 0.5 * length).rem_euclid(length) - 0.5 * length;
    if w >= 0.5 * length {
        w - length
    } else {
        w
    }
}

impl FlatTorus {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 3 {
            return Err(Error::DimensionUnsupported(lengths.len()));
        }
        if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(invalid("lengths", "side lengths must be positive and finite"));
        }
        Ok(Self { lengths })
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn injectivity_bound(&self) -> f64 {
        0.5 * self.lengths.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn normalize(&self, p: Point) -> Point {
        let mut c = [0.0; 3];
        for (i, &l) in self.lengths.iter().enumerate() {
            let v = p.0[i].rem_euclid(l);
            c[i] = if v >= l { 0.0 } else { v };
        }
        Point(c)
    }

    pub fn delta(&self, x: Point, y: Point) -> [f64; 3] {
        let mut d = [0.0; 3];
        for (i, &l) in self.lengths.iter().enumerate() {
            d[i] = wrap_delta(y.0[i] - x.0[i], l);
        }
        d
    }

    pub fn distance(&self, x: Point, y: Point) -> f64 {
        self.delta(x, y).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn translate(&self, x: Point, v: [f64; 3]) -> Point {
        let mut c = x.0;
        for i in 0..self.dim() {
            c[i] += v[i];
        }
        self.normalize(Point(c))
    }

    pub fn ball_volume(&self, h: f64) -> f64 {
        unit_ball_volume(self.dim()) * h.powi(self.dim() as i32)
    }

    /// Uniform displacement in the Euclidean ball of radius `h`.
    pub fn sample_displacement(&self, rng: &mut Stream, h: f64) -> [f64; 3] {
        match self.dim() {
            1 => [h * (2.0 * rng.gen::<f64>() - 1.0), 0.0, 0.0],
            2 => {
                let rad = h * rng.gen::<f64>().sqrt();
                let (s, c) = (2.0 * PI * rng.gen::<f64>()).sin_cos();
                [rad * c, rad * s, 0.0]
            }
            _ => {
                let rad = h * rng.gen::<f64>().cbrt();
                let z = 2.0 * rng.gen::<f64>() - 1.0;
                let (s, c) = (2.0 * PI * rng.gen::<f64>()).sin_cos();
                let q = (1.0 - z * z).max(0.0).sqrt();
                [rad * q * c, rad * q * s, rad * z]
            }
        }
    }

    pub fn uniform_point(&self, rng: &mut Stream) -> Point {
        let mut c = [0.0; 3];
        for (i, &l) in self.lengths.iter().enumerate() {
            c[i] = l * rng.gen::<f64>();
        }
        Point(c)
    }

    fn wavevector_sq(&self, k: &[i64; 3]) -> f64 {
        self.lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| (2.0 * PI * k[i] as f64 / l).powi(2))
            .sum()
    }

    /// Lattice vectors with `λ ≤ cap`, one representative of each `±k` pair
    /// (plus `k = 0`), sorted by `λ` then lexicographically.
    fn half_lattice(&self, cap: f64) -> Vec<([i64; 3], f64)> {
        let d = self.dim();
        let bound: Vec<i64> = (0..3)
            .map(|i| {
                if i < d {
                    (cap.sqrt() * self.lengths[i] / (2.0 * PI)).floor() as i64 + 1
                } else {
                    0
                }
            })
            .collect();
        let mut out = Vec::new();
        for a in -bound[0]..=bound[0] {
            for b in -bound[1]..=bound[1] {
                for c in -bound[2]..=bound[2] {
                    let k = [a, b, c];
                    let first = k.iter().find(|&&v| v != 0);
                    if matches!(first, Some(&v) if v < 0) {
                        continue;
                    }
                    let lam = self.wavevector_sq(&k);
                    if lam <= cap * (1.0 + 1e-12) {
                        out.push((k, lam));
                    }
                }
            }
        }
        out.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
        out
    }

    /// Real Fourier modes in spectral order: the constant, then `cos`, `sin`
    /// for each half-lattice vector. Enough modes to cover `count` entries,
    /// completing the last eigenvalue level.
    pub fn modes(&self, count: usize) -> Vec<FourierMode> {
        let mut cap = (2.0 * PI / self.lengths.iter().cloned().fold(0.0, f64::max)).powi(2);
        loop {
            let half = self.half_lattice(cap);
            let total: usize = half.iter().map(|(k, _)| if k == &[0, 0, 0] { 1 } else { 2 }).sum();
            if total > count || cap > 1e12 {
                let mut modes = Vec::new();
                for (k, lam) in half {
                    if k == [0, 0, 0] {
                        modes.push(FourierMode { k, lambda: lam, sine: false });
                    } else {
                        modes.push(FourierMode { k, lambda: lam, sine: false });
                        modes.push(FourierMode { k, lambda: lam, sine: true });
                    }
                }
                // Keep whole levels up to the one containing entry `count - 1`.
                let last = modes[count.min(modes.len()) - 1].lambda;
                modes.retain(|m| m.lambda <= last * (1.0 + 1e-12) + 1e-300);
                return modes;
            }
            cap *= 2.0;
        }
    }

    /// All real Fourier modes with `λ ≤ cap`, in spectral order.
    pub fn modes_up_to(&self, cap: f64) -> Vec<FourierMode> {
        let mut modes = Vec::new();
        for (k, lam) in self.half_lattice(cap) {
            modes.push(FourierMode { k, lambda: lam, sine: false });
            if k != [0, 0, 0] {
                modes.push(FourierMode { k, lambda: lam, sine: true });
            }
        }
        modes
    }

    pub fn reference_spectrum(&self, count: usize) -> Vec<Level> {
        group_levels(self.modes(count).iter().map(|m| m.lambda))
    }

    pub fn eigenfunction(&self, mode: &FourierMode, x: Point) -> f64 {
        let vol = self.volume();
        if mode.k == [0, 0, 0] {
            return 1.0 / vol.sqrt();
        }
        let phase: f64 = (0..self.dim())
            .map(|i| 2.0 * PI * mode.k[i] as f64 * x.0[i] / self.lengths[i])
            .sum();
        let amp = (2.0 / vol).sqrt();
        if mode.sine {
            amp * phase.sin()
        } else {
            amp * phase.cos()
        }
    }
}

/// A real Fourier eigenfunction of the flat Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierMode {
    pub k: [i64; 3],
    pub lambda: f64,
    pub sine: bool,
}

/// Group an ascending list of eigenvalues into levels with multiplicities.
pub fn group_levels(values: impl Iterator<Item = f64>) -> Vec<Level> {
    let mut out: Vec<Level> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some(last) if (v - last.lambda).abs() <= 1e-9 * v.abs().max(1.0) => last.multiplicity += 1,
            _ => out.push(Level { lambda: v, multiplicity: 1 }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_distance() {
        let t = FlatTorus::new(vec![2.0 * PI]).unwrap();
        let d = t.distance(Point([0.1, 0.0, 0.0]), Point([6.2, 0.0, 0.0]));
        assert!((d - (2.0 * PI - 6.1)).abs() < 1e-12);
    }

    #[test]
    fn unit_circle_spectrum() {
        let t = FlatTorus::new(vec![2.0 * PI]).unwrap();
        let lv = t.reference_spectrum(6);
        let flat: Vec<f64> = lv.iter().flat_map(|l| std::iter::repeat(l.lambda).take(l.multiplicity)).collect();
        assert_eq!(&flat[..6], &[0.0, 1.0, 1.0, 4.0, 4.0, 9.0]);
    }

    #[test]
    fn square_torus_multiplicities() {
        let t = FlatTorus::new(vec![2.0 * PI, 2.0 * PI]).unwrap();
        let lv = t.reference_spectrum(20);
        assert_eq!(lv[0].multiplicity, 1);
        assert_eq!((lv[1].lambda, lv[1].multiplicity), (1.0, 4));
        assert_eq!((lv[2].lambda, lv[2].multiplicity), (2.0, 4));
        assert_eq!((lv[3].lambda, lv[3].multiplicity), (4.0, 4));
        assert_eq!((lv[4].lambda, lv[4].multiplicity), (5.0, 8));
    }
}
