//! Spectra of the discretized walk operators and the checks built on them:
//! eigenvalue rates, Weyl counting, resolvent gaps and eigenvector sup-norms.

pub mod assemble;

pub use assemble::{assemble_azimuthal, assemble_operator, azimuthal_difference, Basis, KernelOperator, PeriodicCardinal};

use crate::error::{invalid, Error, Result};
use crate::geometry::flat::FlatTorus;
use crate::geometry::sturm::separated_spectrum;
use crate::geometry::{expand_levels, Manifold, STURM_RESOLUTION};
use crate::kernels::KernelKind;
use crate::linalg::{householder_ql_eigen, jacobi_eigen, SymEigen};
use crate::quad::GaussLegendre;
use crate::specfun::{gamma_d, gamma_sup_bound, phi_h, super_level_set, unit_ball_volume};
use crate::stats::{linear_fit, LinearFit};
use serde::Serialize;
use std::f64::consts::PI;

/// Largest dense block handled by cyclic Jacobi; bigger blocks use
/// Householder tridiagonalization with implicit QL.
pub const JACOBI_MAX: usize = 640;

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub manifold: String,
    pub d: usize,
    pub h: f64,
    pub kind: Option<KernelKind>,
    pub basis: String,
    /// Eigenvalues, descending, repeated by multiplicity.
    pub mu: Vec<f64>,
    /// `(1 − μ_k)/h²`.
    pub tau: Vec<f64>,
    /// Laplace eigenvalues, ascending, repeated by multiplicity.
    pub lambda_ref: Vec<f64>,
    /// `|τ_k − λ_k/(2(d+2))|` for the indices both lists cover.
    pub gap: Vec<f64>,
    /// Every eigenvalue `≥ complete_above` is present in `mu`.
    pub complete_above: f64,
    /// Largest entry of `|S − Sᵀ|` before symmetrization (0 when exact).
    pub asymmetry: f64,
    /// `‖e_k‖_∞` of L²-normalized eigenfunctions, aligned with `mu`.
    pub sup_norms: Option<Vec<f64>>,
}

impl SpectrumReport {
    pub fn new(
        manifold: &Manifold,
        h: f64,
        kind: Option<KernelKind>,
        basis: impl Into<String>,
        mut pairs: Vec<(f64, Option<f64>)>,
        lambda_ref: Vec<f64>,
        complete_above: f64,
        asymmetry: f64,
    ) -> Self {
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let d = manifold.dim();
        let mu: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let tau: Vec<f64> = mu.iter().map(|m| (1.0 - m) / (h * h)).collect();
        let rate = 2.0 * (d as f64 + 2.0);
        let gap = tau.iter().zip(&lambda_ref).map(|(t, l)| (t - l / rate).abs()).collect();
        let sup_norms = pairs.iter().map(|p| p.1).collect::<Option<Vec<f64>>>();
        Self {
            manifold: manifold.name().to_string(),
            d,
            h,
            kind,
            basis: basis.into(),
            mu,
            tau,
            lambda_ref,
            gap,
            complete_above,
            asymmetry,
            sup_norms,
        }
    }

    /// Smallest eigenvalue present.
    pub fn floor(&self) -> f64 {
        self.mu.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `T_h = Γ_d(−h²Δ)` on a flat torus: `μ = Γ_d(h²λ)` for every Fourier
/// mode with `λ ≤ lambda_max`.
pub fn torus_spectrum_exact(torus: &FlatTorus, h: f64, lambda_max: f64) -> Result<SpectrumReport> {
    if !(h > 0.0) {
        return Err(invalid("h", "must be positive"));
    }
    let d = torus.dim();
    let modes = torus.modes_up_to(lambda_max);
    let mut pairs = Vec::with_capacity(modes.len());
    for m in &modes {
        pairs.push((gamma_d(d, h * h * m.lambda)?, Some(1.0 / torus.volume().sqrt() * if m.k == [0, 0, 0] { 1.0 } else { 2f64.sqrt() })));
    }
    // Modes beyond the cutoff have |μ| ≤ sup_{s > h²λ_max} |Γ_d(s)|.
    let next = h * h * lambda_max.max(1e-300);
    let complete_above = gamma_sup_bound(d, next)?;
    let lambda_ref = modes.iter().map(|m| m.lambda).collect();
    Ok(SpectrumReport::new(
        &Manifold::FlatTorus(torus.clone()),
        h,
        None,
        "fourier-exact",
        pairs,
        lambda_ref,
        complete_above,
        0.0,
    ))
}

/// `μ_l(h) = (2π/|B(h)|)∫₀^h P_l(cos s) sin s ds` (128-node Gauss–Legendre),
/// each with multiplicity `2l + 1`.
pub fn sphere_zonal_eigenvalues(h: f64, l_max: usize) -> Result<Vec<f64>> {
    if !(h > 0.0 && h <= PI / 4.0 + 1e-15) {
        return Err(invalid("h", "zonal spectrum needs 0 < h ≤ π/4"));
    }
    let gl = GaussLegendre::new(128);
    let cap = crate::geometry::sphere::cap_area(h);
    let mut mu = vec![0.0; l_max + 1];
    for (s, w) in gl.on(0.0, h) {
        let p = crate::geometry::harmonics::legendre_table(l_max, s.cos());
        for l in 0..=l_max {
            mu[l] += w * p[l] * s.sin();
        }
    }
    mu.iter_mut().for_each(|v| *v *= 2.0 * PI / cap);
    // Check against the same integral on a refined rule.
    let gl2 = GaussLegendre::new(192);
    let check = 2.0 * PI / cap * gl2.integrate(0.0, h, |s| crate::geometry::harmonics::legendre(l_max, s.cos()) * s.sin());
    let err = (check - mu[l_max]).abs();
    if err > 1e-12 {
        return Err(Error::ToleranceNotMet { tolerance: 1e-12, achieved: err });
    }
    Ok(mu)
}

pub fn sphere_spectrum_zonal(h: f64, l_max: usize) -> Result<SpectrumReport> {
    let mu = sphere_zonal_eigenvalues(h, l_max)?;
    let mut pairs = Vec::new();
    let mut lambda_ref = Vec::new();
    for (l, &m) in mu.iter().enumerate() {
        // ‖P_l‖_∞ for the L²-normalized zonal harmonic.
        let sup = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
        for _ in 0..(2 * l + 1) {
            pairs.push((m, Some(sup)));
            lambda_ref.push((l * (l + 1)) as f64);
        }
    }
    Ok(SpectrumReport::new(&Manifold::Sphere2, h, None, "zonal-exact", pairs, lambda_ref, f64::INFINITY, 0.0))
}

/// Symmetric eigensolve of one operator block.
pub fn symmetric_eigen(op: &KernelOperator, want_vectors: bool) -> Result<SymEigen> {
    let n = op.matrix.rows;
    if n > 4096 {
        return Err(Error::Resource(format!("block of size {n} exceeds 4096")));
    }
    if n <= JACOBI_MAX {
        jacobi_eigen(&op.matrix, want_vectors)
    } else {
        householder_ql_eigen(&op.matrix, want_vectors)
    }
}

/// Full eigen-decomposition of one operator (or several azimuthal blocks,
/// merged with multiplicity 2 for `m > 0`).
pub fn eigen_decompose(ops: &[KernelOperator], want_vectors: bool) -> Result<SpectrumReport> {
    let first = ops.first().ok_or_else(|| invalid("ops", "no operator blocks"))?;
    let mut pairs = Vec::new();
    let mut asym: f64 = 0.0;
    for op in ops {
        asym = asym.max(op.asymmetry);
        let eig = symmetric_eigen(op, want_vectors)?;
        let mult = op.multiplicity();
        for k in 0..eig.values.len() {
            let sup = eig.vectors.as_ref().map(|v| op.sup_norm(v, k));
            for _ in 0..mult {
                pairs.push((eig.values[k], sup));
            }
        }
    }
    let count = pairs.len();
    let lambda_ref = block_reference(ops, count)?;
    Ok(SpectrumReport::new(
        &first.manifold,
        first.h,
        Some(first.kind),
        first.basis.label(),
        pairs,
        lambda_ref,
        f64::NEG_INFINITY,
        asym,
    ))
}

/// Laplace eigenvalues of the modes the blocks can represent, ascending.
fn block_reference(ops: &[KernelOperator], count: usize) -> Result<Vec<f64>> {
    let first = &ops[0];
    match (&first.manifold, first.basis) {
        (Manifold::Sphere2, Basis::Zonal { n }) => Ok((0..n).map(|l| (l * (l + 1)) as f64).collect()),
        (Manifold::RevolutionTorus(t), Basis::Azimuthal { .. }) => {
            let present: Vec<usize> = ops
                .iter()
                .filter_map(|op| match op.basis {
                    Basis::Azimuthal { m, .. } => Some(m),
                    _ => None,
                })
                .collect();
            let modes = separated_spectrum(t, count.min(120), STURM_RESOLUTION)?;
            let mut out = Vec::new();
            for mode in modes.iter().filter(|md| present.contains(&md.m)) {
                out.extend(std::iter::repeat(mode.lambda).take(mode.multiplicity()));
            }
            Ok(out)
        }
        (m, _) => Ok(expand_levels(&m.reference_spectrum(count.min(400))?)),
    }
}

/// `#{k : μ_k ∈ [1 − τh², 1]}` with multiplicity.
pub fn weyl_count(report: &SpectrumReport, tau: f64, delta: f64) -> Result<usize> {
    let h2 = report.h * report.h;
    if !(tau >= 0.0) || tau > (1.0 - delta) / h2 {
        return Err(Error::Range { what: "tau", detail: format!("τ = {tau} outside [0, (1−δ)h⁻²] with δ = {delta}") });
    }
    let lo = 1.0 - tau * h2;
    if lo < report.complete_above {
        return Err(Error::Range {
            what: "tau",
            detail: format!("threshold {lo} is below the completeness bound {}", report.complete_above),
        });
    }
    Ok(report.mu.iter().filter(|&&m| m >= lo - 1e-12 * lo.abs().max(1.0)).count())
}

/// `(2πh)^{−d} Vol(M) c_d Σ (s⁺^{d/2} − s⁻^{d/2})` over the intervals of
/// `{Γ_d ≥ 1 − τh²}`.
pub fn weyl_phase_volume(m: &Manifold, h: f64, tau: f64, delta: f64) -> Result<f64> {
    let h2 = h * h;
    if !(tau >= 0.0) || tau > (1.0 - delta) / h2 {
        return Err(Error::Range { what: "tau", detail: format!("τ = {tau} outside [0, (1−δ)h⁻²]") });
    }
    let d = m.dim();
    let set = super_level_set(d, 1.0 - tau * h2)?;
    Ok(m.volume() * unit_ball_volume(d) * set.power_measure(d as f64 / 2.0) / (2.0 * PI * h).powi(d as i32))
}

/// Geometric τ grid `1, 2, 4, …` up to `(1 − δ)h⁻²`.
pub fn tau_grid(h: f64, delta: f64) -> Vec<f64> {
    let top = (1.0 - delta) / (h * h);
    std::iter::successors(Some(1.0), |t| Some(t * 2.0)).take_while(|&t| t <= top).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylRow {
    pub tau: f64,
    pub count: usize,
    pub phase_volume: f64,
    /// `|count − phase_volume| / (1 + τ)^{(d−1)/2}`.
    pub scaled_error: f64,
}

pub fn weyl_table(report: &SpectrumReport, m: &Manifold, taus: &[f64], delta: f64) -> Result<Vec<WeylRow>> {
    taus.iter()
        .map(|&tau| {
            let count = weyl_count(report, tau, delta)?;
            let phase_volume = weyl_phase_volume(m, report.h, tau, delta)?;
            let scaled_error = (count as f64 - phase_volume).abs() / (1.0 + tau).powf((report.d as f64 - 1.0) / 2.0);
            Ok(WeylRow { tau, count, phase_volume, scaled_error })
        })
        .collect()
}

/// Largest scaled Weyl error over `taus`: the empirical constant `C(h)`.
pub fn weyl_constant(rows: &[WeylRow]) -> f64 {
    rows.iter().map(|r| r.scaled_error).fold(0.0, f64::max)
}

/// Region constants for the resolvent comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventRegion {
    pub epsilon: f64,
    pub cone_start: f64,
}

impl Default for ResolventRegion {
    fn default() -> Self {
        Self { epsilon: 0.5, cone_start: 50.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventGap {
    pub value: f64,
    /// Sup over the modes evaluated.
    pub sup_modes: f64,
    /// Bound for all modes beyond the cutoff.
    pub tail_bound: f64,
    pub modes: usize,
}

/// `sup_j |1/(z − Φ_h(h²λ_j)) − 1/(z − λ_j)|` on a flat torus: modes up to
/// `λ ≤ (100/h)²` explicitly, the rest bounded through
/// `|Γ_d| ≤ sup_{s ≥ 10⁴} |Γ_d(s)|`.
pub fn resolvent_gap_torus(torus: &FlatTorus, h: f64, z: (f64, f64), region: ResolventRegion) -> Result<ResolventGap> {
    let d = torus.dim();
    let (zr, zi) = z;
    let forbidden = |reason: String| Error::ForbiddenRegion { re: zr, im: zi, reason };
    if zr >= region.cone_start && zi.abs() <= region.epsilon * zr {
        return Err(forbidden(format!("inside the cone Re z ≥ {}, |Im z| ≤ ε Re z", region.cone_start)));
    }
    let s_max = 1e4;
    let cap = s_max / (h * h);
    let modes = torus.modes_up_to(cap);
    // Distance to the Laplace spectrum; the lattice is finite below cap, and
    // beyond it |z − λ| ≥ cap − |z|.
    let zabs = (zr * zr + zi * zi).sqrt();
    let nearest = modes
        .iter()
        .map(|m| ((zr - m.lambda).powi(2) + zi * zi).sqrt())
        .fold(cap - zabs, f64::min);
    if nearest < region.epsilon {
        return Err(forbidden(format!("within ε = {} of the Laplace spectrum", region.epsilon)));
    }
    let inv = |x: f64| {
        let (a, b) = (zr - x, zi);
        let n = a * a + b * b;
        (a / n, -b / n)
    };
    let mut sup: f64 = 0.0;
    for m in &modes {
        let phi = phi_h(d, h, h * h * m.lambda)?;
        let (a, b) = inv(phi);
        let (c, e) = inv(m.lambda);
        sup = sup.max(((a - c).powi(2) + (b - e).powi(2)).sqrt());
    }
    let gamma_tail = gamma_sup_bound(d, s_max)?;
    let phi_min = 2.0 * (d as f64 + 2.0) * (1.0 - gamma_tail) / (h * h);
    let tail = 1.0 / (phi_min - zabs) + 1.0 / (cap - zabs);
    Ok(ResolventGap { value: sup.max(tail), sup_modes: sup, tail_bound: tail, modes: modes.len() })
}

/// Log-log fit of `‖e_k‖_∞` against `1 + τ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupNormGrowth {
    pub exponent: f64,
    pub bound: f64,
    pub points: usize,
    pub fit: LinearFit,
}

pub fn supnorm_growth(report: &SpectrumReport, max_points: usize) -> Result<SupNormGrowth> {
    let sups = report
        .sup_norms
        .as_ref()
        .ok_or_else(|| Error::InsufficientData("report carries no eigenvectors".into()))?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (k, (&t, &s)) in report.tau.iter().zip(sups).enumerate().take(max_points) {
        if k == 0 || s <= 0.0 {
            continue;
        }
        x.push((1.0 + t.max(0.0)).ln());
        y.push(s.ln());
    }
    if x.len() < 10 {
        return Err(Error::InsufficientData(format!("{} usable eigenpairs, need 10", x.len())));
    }
    let fit = linear_fit(&x, &y)?;
    Ok(SupNormGrowth { exponent: fit.slope, bound: report.d as f64 / 4.0, points: x.len(), fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_circle_first_mode() {
        let t = FlatTorus::new(vec![2.0 * PI]).unwrap();
        let r = torus_spectrum_exact(&t, 0.1, 200.0).unwrap();
        assert_eq!(r.mu[0], 1.0);
        assert!((r.mu[1] - 0.1f64.sin() / 0.1).abs() < 1e-15);
        assert!((r.tau[1] - 0.16658335317).abs() < 1e-9);
    }

    #[test]
    fn zonal_l0_is_one() {
        let mu = sphere_zonal_eigenvalues(0.3, 5).unwrap();
        assert!((mu[0] - 1.0).abs() < 1e-14);
        // l = 1 closed form (1 + cos h)/2.
        assert!((mu[1] - 0.5 * (1.0 + 0.3f64.cos())).abs() < 1e-14);
    }
}
