//! Laplace spectrum of the torus of revolution by separation of variables.
//!
//! For `f(θ) e^{imφ}` the eigenproblem is
//! `−(ρ f')' + (r² m²/ρ) f = λ r² ρ f` on the circle. It is discretized by
//! central differences on `n` equispaced nodes and split into even and odd
//! halves, each a symmetric tridiagonal problem.

use super::revolution::RevolutionTorus;
use super::Level;
use crate::error::{Error, Result};
use crate::linalg::{tridiagonal_eigenvector, tridiagonal_lowest};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

/// Symmetric tridiagonal half problem together with the diagonal scaling
/// that maps its eigenvectors back to nodal values.
struct HalfProblem {
    diag: Vec<f64>,
    off: Vec<f64>,
    /// Node indices `j` (θ_j = 2πj/n) of the unknowns.
    nodes: Vec<usize>,
    /// `f_j = g_j · unscale_j`.
    unscale: Vec<f64>,
}

fn half_problem(t: &RevolutionTorus, m: usize, parity: Parity, n: usize) -> HalfProblem {
    assert!(n % 2 == 0 && n >= 8);
    let dt = 2.0 * PI / n as f64;
    let r = t.minor();
    let m2 = (m * m) as f64;
    let rho = |th: f64| t.rho(th);
    let half = n / 2;
    let nodes: Vec<usize> = match parity {
        Parity::Even => (0..=half).collect(),
        Parity::Odd => (1..half).collect(),
    };
    let k = nodes.len();
    let mut diag = vec![0.0; k];
    let mut off = vec![0.0; k.saturating_sub(1)];
    let mut unscale = vec![0.0; k];
    for (i, &j) in nodes.iter().enumerate() {
        let th = j as f64 * dt;
        let rp = rho(th + 0.5 * dt);
        let rm = rho(th - 0.5 * dt);
        let a_jj = (rp + rm) / (dt * dt) + r * r * m2 / rho(th);
        let w = r * r * rho(th);
        // Endpoint rows of the even problem carry half weight so the
        // reflected couplings stay symmetric.
        let d = if parity == Parity::Even && (j == 0 || j == half) { 0.5 } else { 1.0 };
        diag[i] = a_jj / w;
        unscale[i] = 1.0 / (d * w).sqrt();
        if i + 1 < k {
            // Coupling between j and j+1 is −ρ_{j+½}/Δ²; after the
            // half-weight fold it is unchanged for both rows.
            let dn = if parity == Parity::Even && (j + 1 == half) { 0.5 } else { 1.0 };
            let wn = r * r * rho(th + dt);
            off[i] = -rp / (dt * dt) / ((d * w) * (dn * wn)).sqrt();
        }
    }
    // Rescale the diagonal for the half-weight rows: (D A)_jj / (D W)_j = A_jj / W_j.
    HalfProblem { diag, off, nodes, unscale }
}

/// Lowest `k` eigenvalues of one `(m, parity)` problem at resolution `n`.
pub fn eigenvalues(t: &RevolutionTorus, m: usize, parity: Parity, n: usize, k: usize) -> Vec<f64> {
    let p = half_problem(t, m, parity, n);
    tridiagonal_lowest(&p.diag, &p.off, k)
}

/// Eigenvalues below `cap` for one `(m, parity)` problem.
fn count_below(t: &RevolutionTorus, m: usize, parity: Parity, n: usize, cap: f64) -> usize {
    let p = half_problem(t, m, parity, n);
    tridiagonal_lowest(&p.diag, &p.off, p.diag.len())
        .iter()
        .take_while(|&&v| v <= cap)
        .count()
}

/// Two-level Richardson extrapolation over resolutions `n, 2n, 4n`
/// (second-order scheme, so errors `O(n⁻²)` and `O(n⁻⁴)` are removed).
pub fn richardson_eigenvalues(t: &RevolutionTorus, m: usize, parity: Parity, n: usize, k: usize) -> Vec<f64> {
    let a = eigenvalues(t, m, parity, n, k);
    let b = eigenvalues(t, m, parity, 2 * n, k);
    let c = eigenvalues(t, m, parity, 4 * n, k);
    (0..k.min(a.len()))
        .map(|i| {
            let ab = (4.0 * b[i] - a[i]) / 3.0;
            let bc = (4.0 * c[i] - b[i]) / 3.0;
            (16.0 * bc - ab) / 15.0
        })
        .collect()
}

/// One separated eigenmode `f(θ)·{1, cos mφ, sin mφ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatedMode {
    pub m: usize,
    pub parity: Parity,
    /// Position within its `(m, parity)` problem, from 0.
    pub index: usize,
    pub lambda: f64,
}

impl SeparatedMode {
    pub fn multiplicity(&self) -> usize {
        if self.m == 0 {
            1
        } else {
            2
        }
    }
}

/// The separated spectrum, ascending, with at least `count` eigenvalues
/// counted with multiplicity (the last level is completed).
pub fn separated_spectrum(t: &RevolutionTorus, count: usize, n: usize) -> Result<Vec<SeparatedMode>> {
    // Weyl: N(λ) ≈ Vol·λ/(4π).
    let mut cap = (8.0 * PI * count as f64 / t.volume()).max(1.0);
    let limit = n / 8;
    loop {
        let mut modes = Vec::new();
        let mut m = 0usize;
        loop {
            // m²/(R+r)² bounds every eigenvalue with this azimuthal number.
            let floor = (m * m) as f64 / (t.major() + t.minor()).powi(2);
            if floor > cap {
                break;
            }
            for parity in [Parity::Even, Parity::Odd] {
                let k = count_below(t, m, parity, n, cap * 1.05);
                if k > limit {
                    return Err(Error::Resolution { required: 8 * k, actual: n });
                }
                if k == 0 {
                    continue;
                }
                for (index, lambda) in richardson_eigenvalues(t, m, parity, n, k).into_iter().enumerate() {
                    modes.push(SeparatedMode { m, parity, index, lambda });
                }
            }
            m += 1;
        }
        modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.m.cmp(&b.m)).then(a.parity.cmp(&b.parity)));
        let mut total = 0;
        let mut cut = None;
        for (i, md) in modes.iter().enumerate() {
            total += md.multiplicity();
            if total >= count {
                cut = Some(i);
                break;
            }
        }
        if let Some(i) = cut {
            // Keep modes strictly within cap so no level below is missing.
            if modes[i].lambda <= cap {
                let last = modes[i].lambda;
                modes.retain(|md| md.lambda <= last * (1.0 + 1e-9) + 1e-12);
                return Ok(modes);
            }
        }
        cap *= 2.0;
    }
}

pub fn reference_levels(t: &RevolutionTorus, count: usize, n: usize) -> Result<Vec<Level>> {
    let modes = separated_spectrum(t, count, n)?;
    let mut out: Vec<Level> = Vec::new();
    for md in modes {
        match out.last_mut() {
            Some(l) if (md.lambda - l.lambda).abs() <= 1e-9 * md.lambda.max(1.0) => l.multiplicity += md.multiplicity(),
            _ => out.push(Level { lambda: md.lambda, multiplicity: md.multiplicity() }),
        }
    }
    Ok(out)
}

/// Nodal values of a separated mode's `θ` profile on the full circle,
/// normalized so that `∫ f² r ρ dθ = 1`. Combines resolutions `n` and `2n`
/// by Richardson extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub values: Vec<f64>,
}

fn profile_at(t: &RevolutionTorus, mode: &SeparatedMode, n: usize) -> Vec<f64> {
    let p = half_problem(t, mode.m, mode.parity, n);
    let lam = tridiagonal_lowest(&p.diag, &p.off, mode.index + 1)[mode.index];
    let g = tridiagonal_eigenvector(&p.diag, &p.off, lam);
    let mut full = vec![0.0; n];
    for (i, &j) in p.nodes.iter().enumerate() {
        let v = g[i] * p.unscale[i];
        full[j] = v;
        if j != 0 && j != n / 2 {
            full[n - j] = if mode.parity == Parity::Even { v } else { -v };
        }
    }
    normalize_profile(t, &mut full);
    // Fix the sign by the first clearly nonzero node.
    let pivot = full.iter().cloned().find(|v| v.abs() > 1e-3).unwrap_or(1.0);
    if pivot < 0.0 {
        full.iter_mut().for_each(|v| *v = -*v);
    }
    full
}

fn normalize_profile(t: &RevolutionTorus, f: &mut [f64]) {
    let n = f.len();
    let dt = 2.0 * PI / n as f64;
    let norm2: f64 = f
        .iter()
        .enumerate()
        .map(|(j, v)| v * v * t.minor() * t.rho(j as f64 * dt) * dt)
        .sum();
    let s = norm2.sqrt();
    f.iter_mut().for_each(|v| *v /= s);
}

impl Profile {
    pub fn new(t: &RevolutionTorus, mode: &SeparatedMode, n: usize) -> Self {
        let coarse = profile_at(t, mode, n);
        let fine = profile_at(t, mode, 2 * n);
        let mut values: Vec<f64> = (0..n).map(|j| (4.0 * fine[2 * j] - coarse[j]) / 3.0).collect();
        normalize_profile(t, &mut values);
        Self { values }
    }

    /// Periodic four-point Lagrange interpolation.
    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.values.len();
        let x = theta.rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
        let i = x.floor() as i64;
        let u = x - i as f64;
        let at = |k: i64| self.values[k.rem_euclid(n as i64) as usize];
        let (fm, f0, f1, f2) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        -u * (u - 1.0) * (u - 2.0) / 6.0 * fm + (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0 * f0
            - (u + 1.0) * u * (u - 2.0) / 2.0 * f1
            + (u + 1.0) * u * (u - 1.0) / 6.0 * f2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mode_is_constant() {
        let t = RevolutionTorus::new(2.0, 1.0).unwrap();
        let v = richardson_eigenvalues(&t, 0, Parity::Even, 64, 1);
        assert!(v[0].abs() < 1e-12);
    }

    #[test]
    fn thin_torus_approaches_product_spectrum() {
        // As r/R → 0 the torus is nearly flat with sides 2πR and 2πr.
        let t = RevolutionTorus::new(100.0, 1.0).unwrap();
        let v = richardson_eigenvalues(&t, 0, Parity::Odd, 128, 1);
        assert!((v[0] - 1.0).abs() < 2e-2, "{}", v[0]);
        let w = richardson_eigenvalues(&t, 1, Parity::Even, 128, 1);
        assert!((w[0] - 1e-4).abs() < 1e-6, "{}", w[0]);
    }

    #[test]
    fn profile_interpolates_and_is_normalized() {
        let t = RevolutionTorus::new(2.0, 1.0).unwrap();
        let mode = SeparatedMode { m: 1, parity: Parity::Odd, index: 0, lambda: 0.0 };
        let p = Profile::new(&t, &mode, 256);
        let gl = crate::quad::GaussLegendre::new(200);
        let norm: f64 = gl.integrate(0.0, 2.0 * PI, |th| p.eval(th).powi(2) * t.minor() * t.rho(th));
        assert!((norm - 1.0).abs() < 1e-8, "{norm}");
    }
}
