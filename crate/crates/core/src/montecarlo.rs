//! Chain simulation, total-variation decay and excursion probabilities.
//!
//! Total variation is `sup_A |p(A) − q(A)| = ½ Σ |p − q|` throughout; the
//! factor 2 relating it to `‖M_hⁿ − Π₀‖_{L∞→L∞}` is kept explicit.

use crate::error::{invalid, Error, Result};
use crate::geometry::flat::wrap_delta;
use crate::geometry::revolution::wrap_angle;
use crate::geometry::{Manifold, Point};
use crate::kernels::{stationary_density, KernelKind, WalkConfig, Walker};
use crate::quad::GaussLegendre;
use crate::rng::{Stream, Substreams};
use crate::spectral::KernelOperator;
use crate::stats::{binomial_half_width, linear_fit, zero_count_upper_bound, LinearFit};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

pub const TV_CONVENTION: &str = "tv = sup_A |P(A) - pi(A)| = (1/2) sum |p - pi|";

#[derive(Debug, Clone, Serialize)]
pub struct ChainTrace {
    pub manifold: String,
    pub config: WalkConfig,
    pub start: Point,
    /// Every `thin`-th state, starting with `start`.
    pub states: Vec<Point>,
    /// Held flags for every step (not thinned).
    pub held: Vec<bool>,
    pub thin: usize,
}

/// Run `n` steps from `x0` with exact ball volumes.
pub fn run_chain(m: &Manifold, cfg: WalkConfig, x0: Point, n: usize, rng: &mut Stream) -> Result<ChainTrace> {
    run_chain_with(&Walker::new(m, cfg)?, x0, n, 1, rng)
}

pub fn run_chain_with(walker: &Walker, x0: Point, n: usize, thin: usize, rng: &mut Stream) -> Result<ChainTrace> {
    if thin == 0 {
        return Err(invalid("thin", "must be at least 1"));
    }
    let mut states = vec![x0];
    let mut held = Vec::with_capacity(n);
    let mut x = x0;
    for k in 1..=n {
        let out = walker.step(x, rng)?;
        x = out.next;
        held.push(out.held);
        if k % thin == 0 {
            states.push(x);
        }
    }
    Ok(ChainTrace {
        manifold: walker.manifold.name().to_string(),
        config: walker.config,
        start: x0,
        states,
        held,
        thin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TvMethod {
    ExactMatrixPower,
    BinnedEmpirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvPoint {
    pub n: usize,
    pub tv: f64,
    /// Binomial-style half-width for empirical curves; `None` when exact.
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TvCurve {
    pub method: TvMethod,
    pub convention: &'static str,
    pub points: Vec<TvPoint>,
    /// Expected TV of a perfectly mixed sample over the partition; a floor
    /// below which empirical values are noise. Zero for exact curves.
    pub noise_floor: f64,
}

/// `½ Σ_c |p_c − π_c|` after optional grouping of nodes into cells.
fn grouped_tv(p: &[f64], pi: &[f64], groups: Option<&[usize]>, cells: usize) -> f64 {
    match groups {
        None => 0.5 * p.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum::<f64>(),
        Some(g) => {
            let mut diff = vec![0.0; cells];
            for (i, &c) in g.iter().enumerate() {
                diff[c] += p[i] - pi[i];
            }
            0.5 * diff.iter().map(|d| d.abs()).sum::<f64>()
        }
    }
}

/// Exact TV curve by iterating the row distribution of the discretized
/// operator (holding atoms included): `tv(n) = max_{x0 ∈ starts} ½ Σ |Pⁿ(x0, ·) − π|`.
/// Records every step `0..=n_max`. Zero entries are skipped, so banded
/// operators (cell bases) cost `O(bandwidth)` per node and step.
pub fn tv_exact_curve(op: &KernelOperator, starts: &[usize], n_max: usize) -> Result<TvCurve> {
    tv_exact_curve_grouped(op, starts, n_max, None)
}

/// As [`tv_exact_curve`], with nodes pooled into partition cells `groups`.
pub fn tv_exact_curve_grouped(op: &KernelOperator, starts: &[usize], n_max: usize, groups: Option<&[usize]>) -> Result<TvCurve> {
    let n = op.raw.rows;
    if n > 4096 {
        return Err(Error::Resource(format!("operator dimension {n} exceeds 4096")));
    }
    if starts.is_empty() || starts.iter().any(|&s| s >= n) {
        return Err(invalid("starts", "need at least one valid start row"));
    }
    let cells = groups.map(|g| g.iter().max().map_or(0, |&c| c + 1)).unwrap_or(n);
    let total: f64 = op.weights.iter().zip(&op.density).map(|(w, d)| w * d).sum();
    let pi: Vec<f64> = op.weights.iter().zip(&op.density).map(|(w, d)| w * d / total).collect();
    // Column-sparse transpose for p ← p·A.
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, &a) in op.raw.row(i).iter().enumerate() {
            if a != 0.0 {
                cols[j].push((i, a));
            }
        }
    }
    let curves: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&s| {
            let mut p = vec![0.0; n];
            p[s] = 1.0;
            let mut out = Vec::with_capacity(n_max + 1);
            out.push(grouped_tv(&p, &pi, groups, cells));
            let mut next = vec![0.0; n];
            for _ in 0..n_max {
                for (j, col) in cols.iter().enumerate() {
                    next[j] = col.iter().map(|&(i, a)| p[i] * a).sum();
                }
                std::mem::swap(&mut p, &mut next);
                out.push(grouped_tv(&p, &pi, groups, cells));
            }
            out
        })
        .collect();
    let points = (0..=n_max)
        .map(|k| TvPoint { n: k, tv: curves.iter().map(|c| c[k]).fold(0.0, f64::max), half_width: None })
        .collect();
    Ok(TvCurve { method: TvMethod::ExactMatrixPower, convention: TV_CONVENTION, points, noise_floor: 0.0 })
}

/// A fixed finite partition of the manifold, with cells centered on `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "layout")]
pub enum Partition {
    /// `cells` equal slabs per flat axis.
    FlatGrid { cells: usize },
    /// Equal-area `z` bands times `φ` sectors on S².
    SphereGrid { bands: usize, sectors: usize },
    /// `θ` bands times `φ` sectors on a torus of revolution.
    RevolutionGrid { bands: usize, sectors: usize },
}

impl Partition {
    pub fn count(&self, m: &Manifold) -> usize {
        match *self {
            Partition::FlatGrid { cells } => cells.pow(m.dim() as u32),
            Partition::SphereGrid { bands, sectors } | Partition::RevolutionGrid { bands, sectors } => bands * sectors,
        }
    }

    fn check(&self, m: &Manifold) -> Result<()> {
        let ok = matches!(
            (self, m),
            (Partition::FlatGrid { .. }, Manifold::FlatTorus(_))
                | (Partition::SphereGrid { .. }, Manifold::Sphere2)
                | (Partition::RevolutionGrid { .. }, Manifold::RevolutionTorus(_))
        );
        if !ok || self.count(m) < 2 {
            return Err(invalid("partition", format!("{self:?} does not fit {}", m.name())));
        }
        Ok(())
    }

    /// Cell index of `x`.
    pub fn cell(&self, m: &Manifold, center: Point, x: Point) -> usize {
        let slot = |offset: f64, n: usize| ((offset + 0.5).floor() as i64).rem_euclid(n as i64) as usize;
        match (*self, m) {
            (Partition::FlatGrid { cells }, Manifold::FlatTorus(t)) => {
                let mut idx = 0;
                for (a, &len) in t.lengths().iter().enumerate() {
                    let u = wrap_delta(x.0[a] - center.0[a], len) / len * cells as f64;
                    idx = idx * cells + slot(u, cells);
                }
                idx
            }
            (Partition::SphereGrid { bands, sectors }, _) => {
                let z = x.0[2].clamp(-1.0, 1.0);
                let band = (((z + 1.0) / 2.0 * bands as f64) as usize).min(bands - 1);
                let phi = x.0[1].atan2(x.0[0]) - center.0[1].atan2(center.0[0]);
                band * sectors + slot(wrap_angle(phi) / (2.0 * PI) * sectors as f64, sectors)
            }
            (Partition::RevolutionGrid { bands, sectors }, _) => {
                let b = slot(wrap_angle(x.0[0] - center.0[0]) / (2.0 * PI) * bands as f64, bands);
                let s = slot(wrap_angle(x.0[1] - center.0[1]) / (2.0 * PI) * sectors as f64, sectors);
                b * sectors + s
            }
            _ => 0,
        }
    }

    /// Gauss–Legendre rule (`q` nodes per axis) for `∫_cell f dvol`.
    pub fn cell_quadrature(&self, m: &Manifold, center: Point, cell: usize, q: usize) -> Vec<(Point, f64)> {
        let gl = GaussLegendre::new(q);
        let mut out = Vec::new();
        match (*self, m) {
            (Partition::FlatGrid { cells }, Manifold::FlatTorus(t)) => {
                let d = t.dim();
                let lens = t.lengths();
                let mut idx = vec![0usize; d];
                let mut rest = cell;
                for a in (0..d).rev() {
                    idx[a] = rest % cells;
                    rest /= cells;
                }
                let axes: Vec<Vec<(f64, f64)>> = (0..d)
                    .map(|a| {
                        let w = lens[a] / cells as f64;
                        let lo = center.0[a] + (idx[a] as f64 - 0.5) * w;
                        gl.on(lo, lo + w).map(|(x, wt)| (x.rem_euclid(lens[a]), wt)).collect()
                    })
                    .collect();
                let total: usize = q.pow(d as u32);
                for k in 0..total {
                    let mut p = [0.0; 3];
                    let mut wt = 1.0;
                    let mut r = k;
                    for a in 0..d {
                        let (x, w) = axes[a][r % q];
                        r /= q;
                        p[a] = x;
                        wt *= w;
                    }
                    out.push((Point(p), wt));
                }
            }
            (Partition::SphereGrid { bands, sectors }, Manifold::Sphere2) => {
                let (b, s) = (cell / sectors, cell % sectors);
                let z0 = -1.0 + 2.0 * b as f64 / bands as f64;
                let width = 2.0 * PI / sectors as f64;
                let phi0 = center.0[1].atan2(center.0[0]) + (s as f64 - 0.5) * width;
                for (z, wz) in gl.on(z0, z0 + 2.0 / bands as f64) {
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    for (phi, wp) in gl.on(phi0, phi0 + width) {
                        out.push((Point([rho * phi.cos(), rho * phi.sin(), z]), wz * wp));
                    }
                }
            }
            (Partition::RevolutionGrid { bands, sectors }, Manifold::RevolutionTorus(t)) => {
                let (b, s) = (cell / sectors, cell % sectors);
                let (bw, sw) = (2.0 * PI / bands as f64, 2.0 * PI / sectors as f64);
                let th0 = center.0[0] + (b as f64 - 0.5) * bw;
                let phi0 = center.0[1] + (s as f64 - 0.5) * sw;
                for (th, wt) in gl.on(th0, th0 + bw) {
                    for (phi, wp) in gl.on(phi0, phi0 + sw) {
                        out.push((Point([wrap_angle(th), wrap_angle(phi), 0.0]), wt * wp * t.minor() * t.rho(th)));
                    }
                }
            }
            _ => {}
        }
        out
    }

    /// Stationary probability of each cell.
    pub fn probabilities(&self, m: &Manifold, h: f64, kind: KernelKind, center: Point) -> Result<Vec<f64>> {
        self.check(m)?;
        let n = self.count(m);
        match (*self, m) {
            (Partition::RevolutionGrid { bands, sectors }, Manifold::RevolutionTorus(t)) => {
                let sd = stationary_density(m, h, kind)?;
                let gl = GaussLegendre::new(24);
                let width = 2.0 * PI / bands as f64;
                let mut out = Vec::with_capacity(n);
                for b in 0..bands {
                    let lo = center.0[0] + (b as f64 - 0.5) * width;
                    let mut mass = 0.0;
                    for (th, w) in gl.on(lo, lo + width) {
                        mass += w * sd.eval(Point([wrap_angle(th), 0.0, 0.0]))? * t.minor() * t.rho(th);
                    }
                    let per = mass * 2.0 * PI / sectors as f64;
                    out.extend(std::iter::repeat(per).take(sectors));
                }
                Ok(out)
            }
            // Homogeneous manifolds: both stationary laws are uniform and all cells have equal volume.
            _ => Ok(vec![1.0 / n as f64; n]),
        }
    }
}

/// Empirical TV over `partition` from `trials` independent chains started at
/// `x0`, recorded at the step counts `ns`. A lower bound on the true TV up
/// to sampling noise. Chain `i` uses stream `i` of `streams`, so results do
/// not depend on the number of workers.
pub fn tv_empirical(
    walker: &Walker,
    x0: Point,
    ns: &[usize],
    trials: usize,
    partition: Partition,
    streams: &Substreams,
) -> Result<TvCurve> {
    if trials < 10_000 {
        return Err(Error::InsufficientData(format!("{trials} trials, need at least 10000")));
    }
    let m = walker.manifold;
    let probs = partition.probabilities(m, walker.config.h, walker.config.kind, x0)?;
    let cells = probs.len();
    let mut ns_sorted = ns.to_vec();
    ns_sorted.sort_unstable();
    ns_sorted.dedup();
    let n_max = *ns_sorted.last().ok_or_else(|| invalid("ns", "empty step list"))?;
    let counts = (0..trials)
        .into_par_iter()
        .try_fold(
            || vec![0u64; ns_sorted.len() * cells],
            |mut acc, trial| -> Result<Vec<u64>> {
                let mut rng = streams.stream(trial as u64);
                let mut x = x0;
                let mut next_idx = 0;
                for step in 0..=n_max {
                    if step > 0 {
                        x = walker.step(x, &mut rng)?.next;
                    }
                    if ns_sorted[next_idx] == step {
                        acc[next_idx * cells + partition.cell(m, x0, x)] += 1;
                        next_idx += 1;
                        if next_idx == ns_sorted.len() {
                            break;
                        }
                    }
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u64; ns_sorted.len() * cells],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    let t = trials as f64;
    let points = ns_sorted
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let row = &counts[k * cells..(k + 1) * cells];
            let tv = 0.5 * row.iter().zip(&probs).map(|(&c, p)| (c as f64 / t - p).abs()).sum::<f64>();
            // Each |p̂_c − p_c| has standard error √(p_c(1−p_c)/T); sum half-widths at 2σ.
            let hw = 0.5 * probs.iter().map(|&p| binomial_half_width(p, trials as u64, 2.0)).sum::<f64>();
            TvPoint { n, tv, half_width: Some(hw) }
        })
        .collect();
    // E|p̂ − p| ≈ √(2p(1−p)/(πT)) for a mixed sample.
    let noise_floor = 0.5 * probs.iter().map(|&p| (2.0 * p * (1.0 - p) / (PI * t)).sqrt()).sum::<f64>();
    Ok(TvCurve { method: TvMethod::BinnedEmpirical, convention: TV_CONVENTION, points, noise_floor })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self { lo: 1e-6, hi: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingReport {
    pub h: f64,
    /// Fitted `γ̂` in `tv ≈ Â e^{−γ̂ n h²}`.
    pub rate: f64,
    pub prefactor: f64,
    /// `λ₁ / (2(d+2))`.
    pub target: f64,
    pub relative_gap: f64,
    pub fit: LinearFit,
    pub points: usize,
    pub window: FitWindow,
    /// `min_n tv(n) / (½ e^{−γ̂ n h²})` over the window; `≥ 1` means the
    /// lower bound of the sandwich holds with `γ̂′ = γ̂`.
    pub lower_bound_margin: f64,
}

/// Least-squares fit of `log tv` against `n h²` over the window.
pub fn fit_mixing_rate(curve: &TvCurve, h: f64, target: f64, window: FitWindow) -> Result<MixingReport> {
    let pts: Vec<&TvPoint> = curve.points.iter().filter(|p| p.tv >= window.lo && p.tv <= window.hi).collect();
    if pts.len() < 10 {
        return Err(Error::FitFailed(format!("{} points in the fit window, need 10", pts.len())));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.n as f64 * h * h).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.tv.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    if fit.slope >= 0.0 {
        return Err(Error::FitFailed(format!("TV does not decay (slope {})", fit.slope)));
    }
    let rate = -fit.slope;
    let lower_bound_margin = pts
        .iter()
        .map(|p| p.tv / (0.5 * (-rate * p.n as f64 * h * h).exp()))
        .fold(f64::INFINITY, f64::min);
    Ok(MixingReport {
        h,
        rate,
        prefactor: fit.intercept.exp(),
        target,
        relative_gap: (rate - target).abs() / target,
        fit,
        points: pts.len(),
        window,
        lower_bound_margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcursionEstimate {
    pub epsilon: f64,
    pub delta: f64,
    pub steps: usize,
    pub trials: usize,
    pub exceedances: u64,
    pub probability: f64,
    pub half_width: f64,
    /// One-sided 95% Clopper–Pearson bound when nothing was observed.
    pub upper_bound: Option<f64>,
}

/// Default `c₀` in the precondition `δ ≤ c₀ ε²`.
pub const EXCURSION_C0: f64 = 2.5;

/// `P(d_g(Xⁿ, x0) > ε)` with `n = ⌊δ/h²⌋`.
pub fn excursion_probability(
    walker: &Walker,
    x0: Point,
    epsilon: f64,
    delta: f64,
    trials: usize,
    streams: &Substreams,
) -> Result<ExcursionEstimate> {
    let m = walker.manifold;
    let h = walker.config.h;
    if !(epsilon > 0.0) || epsilon > m.injectivity_bound() {
        return Err(invalid("epsilon", "must lie in (0, injectivity bound]"));
    }
    if !(delta > 0.0) || delta > EXCURSION_C0 * epsilon * epsilon {
        return Err(invalid("delta", format!("need 0 < δ ≤ {EXCURSION_C0}·ε²")));
    }
    if trials == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    // Guard against 3/0.1² landing just below an integer.
    let steps = (delta / (h * h) * (1.0 + 1e-12)).floor() as usize;
    let mut out = ExcursionEstimate {
        epsilon,
        delta,
        steps,
        trials,
        exceedances: 0,
        probability: 0.0,
        half_width: 0.0,
        upper_bound: None,
    };
    if epsilon >= steps as f64 * h {
        // Finite speed: d(Xⁿ, x0) ≤ n h.
        return Ok(out);
    }
    let exceed: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<u64> {
            let mut rng = streams.stream(trial as u64);
            let mut x = x0;
            for _ in 0..steps {
                x = walker.step(x, &mut rng)?.next;
            }
            let (d, _) = m.distance_with_bound(x0, x).or_else(|_| Ok::<_, Error>((f64::INFINITY, 0.0)))?;
            debug_assert!(d <= steps as f64 * h + 1e-9 || !d.is_finite());
            Ok(u64::from(d > epsilon))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let p = exceed as f64 / trials as f64;
    out.exceedances = exceed;
    out.probability = p;
    out.half_width = binomial_half_width(p, trials as u64, 1.96);
    if exceed == 0 {
        out.upper_bound = Some(zero_count_upper_bound(trials as u64, 0.05));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcursionFit {
    /// Slope of `log P` against `ε²/δ` (the exponent `−a`).
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    /// `max(ε²/δ) / min(ε²/δ)` over the fitted points.
    pub span: f64,
}

pub fn fit_excursion(estimates: &[ExcursionEstimate]) -> Result<ExcursionFit> {
    let pts: Vec<&ExcursionEstimate> = estimates.iter().filter(|e| e.exceedances > 0).collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} estimates with exceedances, need 3", pts.len())));
    }
    let x: Vec<f64> = pts.iter().map(|e| e.epsilon * e.epsilon / e.delta).collect();
    let y: Vec<f64> = pts.iter().map(|e| e.probability.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    let (lo, hi) = x.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(ExcursionFit { slope: fit.slope, intercept: fit.intercept, r_squared: fit.r_squared, points: pts.len(), span: hi / lo })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_exponential_rate() {
        let h = 0.1;
        let points = (0..200)
            .map(|n| TvPoint { n, tv: (-0.2 * n as f64 * h * h).exp() * 0.4, half_width: None })
            .collect();
        let curve = TvCurve { method: TvMethod::ExactMatrixPower, convention: TV_CONVENTION, points, noise_floor: 0.0 };
        let r = fit_mixing_rate(&curve, h, 0.2, FitWindow::default()).unwrap();
        assert!((r.rate - 0.2).abs() < 1e-10);
        assert!((r.prefactor - 0.4).abs() < 1e-10);
    }

    #[test]
    fn flat_partition_centers_cells() {
        let m = Manifold::flat_torus(vec![1.0]).unwrap();
        let p = Partition::FlatGrid { cells: 4 };
        let c = Point([0.1, 0.0, 0.0]);
        assert_eq!(p.cell(&m, c, c), 0);
        assert_eq!(p.cell(&m, c, Point([0.3, 0.0, 0.0])), 1);
        assert_eq!(p.cell(&m, c, Point([0.95, 0.0, 0.0])), 3);
    }
}
