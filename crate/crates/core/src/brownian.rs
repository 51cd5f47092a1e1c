//! The Brownian-limit harness: rescaled chain paths, heat kernels, the
//! semigroup comparison and finite-dimensional distributions.

use crate::error::{invalid, Error, Result};
use crate::geometry::harmonics::{legendre_table, sphere_index};
use crate::geometry::{Eigenfunction, Manifold, Point};
use crate::kernels::{KernelKind, Walker};
use crate::montecarlo::{ChainTrace, Partition};
use crate::rng::Substreams;
use crate::specfun::gamma_d;
use crate::spectral::{assemble_azimuthal, sphere_zonal_eigenvalues};
use crate::stats::{chi_square, ChiSquare};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Terms with `e^{−tλ/2}` below this are dropped from spectral sums.
pub const HEAT_TERM_FLOOR: f64 = 1e-14;
pub const DEFAULT_T_MIN: f64 = 0.05;

/// `⌊(d+2)t/h²⌋`. The quotient is nudged up by a relative `1e−12` first,
/// so that `t = 1, h = 0.1` gives 300 even though `0.1²` rounds above `0.01`.
pub fn n_steps(t: f64, h: f64, d: usize) -> Result<usize> {
    if !(t > 0.0 && h > 0.0) {
        return Err(invalid("t, h", "must be positive"));
    }
    Ok(((d as f64 + 2.0) * t / (h * h) * (1.0 + 1e-12)).floor() as usize)
}

/// Chain time step `h²/(d+2)`.
pub fn time_step(h: f64, d: usize) -> f64 {
    h * h / (d as f64 + 2.0)
}

/// `ω(t)` for the piecewise-geodesic path through `states` at spacing `dt`.
pub fn embed_states(m: &Manifold, states: &[Point], dt: f64, times: &[f64]) -> Result<Vec<Point>> {
    let horizon = (states.len() - 1) as f64 * dt;
    times
        .iter()
        .map(|&t| {
            if !(t >= 0.0) || t > horizon * (1.0 + 1e-12) {
                return Err(Error::Range { what: "time", detail: format!("t = {t} outside [0, {horizon}]") });
            }
            let s = t / dt;
            let j = ((s * (1.0 + 1e-12)).floor() as usize).min(states.len() - 1);
            let frac = (s - j as f64).max(0.0);
            if j + 1 >= states.len() || frac < 1e-12 {
                Ok(states[j])
            } else {
                m.geodesic_point(states[j], states[j + 1], frac)
            }
        })
        .collect()
}

/// [`embed_states`] for an unthinned chain trace.
pub fn embed_path(m: &Manifold, trace: &ChainTrace, times: &[f64]) -> Result<Vec<Point>> {
    if trace.thin != 1 {
        return Err(invalid("trace", "path embedding needs every chain state"));
    }
    embed_states(m, &trace.states, time_step(trace.config.h, m.dim()), times)
}

#[derive(Debug, Clone, Serialize)]
pub struct PathEnsemble {
    pub manifold: String,
    pub h: f64,
    pub dt: f64,
    pub start: Point,
    pub times: Vec<f64>,
    /// `samples[i][k] = ω_i(times[k])`.
    pub samples: Vec<Vec<Point>>,
    /// Full grid states, kept when requested (for the modulus statistic).
    #[serde(skip)]
    pub grid: Option<Vec<Vec<Point>>>,
    pub seed: u64,
}

/// `count` independent rescaled paths from `x0`; path `i` uses stream `i`.
pub fn simulate_paths(
    walker: &Walker,
    x0: Point,
    times: &[f64],
    count: usize,
    keep_grid: bool,
    streams: &Substreams,
) -> Result<PathEnsemble> {
    let m = walker.manifold;
    let h = walker.config.h;
    let dt = time_step(h, m.dim());
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let steps = (t_max / dt * (1.0 - 1e-12)).ceil() as usize;
    let runs: Vec<Result<(Vec<Point>, Option<Vec<Point>>)>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(i as u64);
            let mut states = Vec::with_capacity(steps + 1);
            let mut x = x0;
            states.push(x);
            for _ in 0..steps {
                x = walker.step(x, &mut rng)?.next;
                states.push(x);
            }
            let pts = embed_states(m, &states, dt, times)?;
            Ok((pts, keep_grid.then_some(states)))
        })
        .collect();
    let mut samples = Vec::with_capacity(count);
    let mut grid = keep_grid.then(Vec::new);
    for r in runs {
        let (p, g) = r?;
        samples.push(p);
        if let (Some(all), Some(g)) = (grid.as_mut(), g) {
            all.push(g);
        }
    }
    Ok(PathEnsemble {
        manifold: m.name().to_string(),
        h,
        dt,
        start: x0,
        times: times.to_vec(),
        samples,
        grid,
        seed: streams.seed(),
    })
}

#[derive(Debug, Clone)]
enum HeatTerms {
    Flat(crate::geometry::flat::FlatTorus, Vec<crate::geometry::flat::FourierMode>),
    Sphere(usize),
    Separated(Vec<Eigenfunction>),
}

/// The kernel of `e^{tΔ/2}` as a truncated spectral sum, valid for `t ≥ t_min`.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    manifold: Manifold,
    pub t_min: f64,
    /// Largest eigenvalue kept.
    pub cutoff: f64,
    terms: HeatTerms,
}

impl HeatKernel {
    pub fn new(m: &Manifold, t_min: f64) -> Result<Self> {
        if !(t_min > 0.0) {
            return Err(invalid("t_min", "must be positive"));
        }
        let cutoff = -2.0 * HEAT_TERM_FLOOR.ln() / t_min;
        let terms = match m {
            Manifold::FlatTorus(t) => HeatTerms::Flat(t.clone(), t.modes_up_to(cutoff)),
            Manifold::Sphere2 => HeatTerms::Sphere(((0.25 + cutoff).sqrt() - 0.5).floor() as usize),
            Manifold::RevolutionTorus(t) => {
                let count = (t.volume() * cutoff / (4.0 * PI)).ceil() as usize + 1;
                let basis = m.eigenfunction_basis(count).map_err(|e| match e {
                    Error::Resolution { .. } => Error::Truncation { t: t_min, t_min, required: count },
                    other => other,
                })?;
                HeatTerms::Separated(basis.into_iter().filter(|f| f.lambda() <= cutoff).collect())
            }
        };
        Ok(Self { manifold: m.clone(), t_min, cutoff, terms })
    }

    fn check(&self, t: f64) -> Result<()> {
        if t < self.t_min * (1.0 - 1e-12) {
            let required = match &self.terms {
                HeatTerms::Sphere(_) => ((0.25 - 2.0 * HEAT_TERM_FLOOR.ln() / t).sqrt() - 0.5).ceil() as usize,
                _ => (self.manifold.volume() * (-2.0 * HEAT_TERM_FLOOR.ln() / t) / (4.0 * PI)).ceil() as usize,
            };
            return Err(Error::Truncation { t, t_min: self.t_min, required });
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, x: Point, y: Point) -> Result<f64> {
        self.check(t)?;
        Ok(match &self.terms {
            HeatTerms::Flat(torus, modes) => modes
                .iter()
                .map(|md| (-t * md.lambda / 2.0).exp() * torus.eigenfunction(md, x) * torus.eigenfunction(md, y))
                .sum(),
            HeatTerms::Sphere(l_max) => {
                let c = crate::geometry::sphere::dot(x.0, y.0).clamp(-1.0, 1.0);
                legendre_table(*l_max, c)
                    .iter()
                    .enumerate()
                    .map(|(l, p)| (2 * l + 1) as f64 / (4.0 * PI) * (-t * (l * (l + 1)) as f64 / 2.0).exp() * p)
                    .sum()
            }
            HeatTerms::Separated(fs) => fs.iter().map(|f| (-t * f.lambda() / 2.0).exp() * f.eval(x) * f.eval(y)).sum(),
        })
    }

    /// Bound on the dropped part of the diagonal sum, from Weyl growth
    /// `dN ≈ Vol·c_d·(d/2)λ^{d/2−1}/(2π)^d dλ` and average `|e|² = 1/Vol`.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let d = self.manifold.dim() as f64;
        let c = crate::specfun::unit_ball_volume(self.manifold.dim()) * d / 2.0 / (2.0 * PI).powf(d);
        let lam = self.cutoff.max(1.0);
        c * lam.powf(d / 2.0 - 1.0).max(1.0) * (2.0 / t) * (-t * lam / 2.0).exp() * 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltError {
    pub h: f64,
    pub t: f64,
    pub index: usize,
    pub steps: usize,
    pub lambda: f64,
    /// `e^{−tλ/2}`.
    pub semigroup: f64,
    /// Effective chain multiplier on the eigenfunction.
    pub chain: f64,
    /// `‖e^{tΔ/2}e_j − M_h^{n(t,h)} e_j‖_∞`.
    pub error: f64,
}

/// Sup-norm of an eigenfunction over a dense grid.
fn eigenfunction_sup(m: &Manifold, f: &Eigenfunction) -> f64 {
    let mut best = 0.0f64;
    match m {
        Manifold::FlatTorus(t) => {
            let n: usize = if t.dim() == 1 { 4096 } else { 256 };
            let lens = t.lengths();
            let total = n.pow(t.dim() as u32);
            for k in 0..total {
                let mut p = [0.0; 3];
                let mut r = k;
                for (a, &l) in lens.iter().enumerate() {
                    p[a] = (r % n) as f64 * l / n as f64;
                    r /= n;
                }
                best = best.max(f.eval(Point(p)).abs());
            }
        }
        Manifold::Sphere2 => {
            for i in 0..=200 {
                let z = -1.0 + 2.0 * i as f64 / 200.0;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                for j in 0..400 {
                    let phi = 2.0 * PI * j as f64 / 400.0;
                    best = best.max(f.eval(Point([rho * phi.cos(), rho * phi.sin(), z])).abs());
                }
            }
        }
        Manifold::RevolutionTorus(_) => {
            for i in 0..512 {
                for j in 0..64 {
                    let p = Point([2.0 * PI * i as f64 / 512.0, 2.0 * PI * j as f64 / 64.0, 0.0]);
                    best = best.max(f.eval(p).abs());
                }
            }
        }
    }
    best
}

/// Azimuthal grid used for the chain term on a torus of revolution.
pub const CLT_THETA_NODES: usize = 128;

/// Compare the chain after `n(t,h)` Metropolis steps with the heat semigroup
/// on eigenfunction `j`. Flat tori and S² use exact eigenvalues; the torus
/// of revolution uses powers of the discretized operator block.
pub fn clt_error(m: &Manifold, h: f64, t: f64, j: usize) -> Result<CltError> {
    let d = m.dim();
    let steps = n_steps(t, h, d)?;
    let f = m.eigenfunction(j)?;
    let lambda = f.lambda();
    let semigroup = (-t * lambda / 2.0).exp();
    let (chain, error) = match m {
        Manifold::FlatTorus(_) | Manifold::Sphere2 => {
            let mu = match m {
                Manifold::Sphere2 => sphere_zonal_eigenvalues(h, sphere_index(j).0)?[sphere_index(j).0],
                _ => gamma_d(d, h * h * lambda)?,
            };
            let chain = mu.powi(steps as i32);
            (chain, (chain - semigroup).abs() * eigenfunction_sup(m, &f))
        }
        Manifold::RevolutionTorus(_) => {
            let Eigenfunction::Separated { mode, profile, .. } = &f else { unreachable!() };
            let op = assemble_azimuthal(m, h, KernelKind::Metropolis, CLT_THETA_NODES, &[mode.m])?.remove(0);
            let g: Vec<f64> = op.nodes.iter().map(|p| profile.eval(p.0[0])).collect();
            let mut v = g.clone();
            for _ in 0..steps {
                v = op.raw.matvec(&v);
            }
            let scale = if mode.m == 0 { (2.0 * PI).sqrt() } else { PI.sqrt() };
            let err = v.iter().zip(&g).map(|(a, b)| (a - semigroup * b).abs()).fold(0.0, f64::max) / scale;
            let num: f64 = v.iter().zip(&g).zip(&op.weights).map(|((a, b), w)| a * b * w).sum();
            let den: f64 = g.iter().zip(&op.weights).map(|(b, w)| b * b * w).sum();
            (num / den, err)
        }
    };
    Ok(CltError { h, t, index: j, steps, lambda, semigroup, chain, error })
}

/// The same comparison for a trigonometric polynomial `Σ c_k e_k` on a
/// flat torus (coefficients in spectral order), sup over a 4096-point grid.
pub fn clt_error_polynomial(m: &Manifold, h: f64, t: f64, coeffs: &[f64]) -> Result<f64> {
    let Manifold::FlatTorus(torus) = m else {
        return Err(Error::Unsupported("trigonometric test functions live on flat tori".into()));
    };
    let d = torus.dim();
    let steps = n_steps(t, h, d)?;
    let modes = torus.modes(coeffs.len());
    let diffs: Vec<f64> = modes
        .iter()
        .zip(coeffs)
        .map(|(md, c)| Ok(c * (gamma_d(d, h * h * md.lambda)?.powi(steps as i32) - (-t * md.lambda / 2.0).exp())))
        .collect::<Result<_>>()?;
    let n = 4096;
    let mut best = 0.0f64;
    for i in 0..n {
        let x = Point([i as f64 * torus.lengths()[0] / n as f64, 0.0, 0.0]);
        let v: f64 = modes.iter().zip(&diffs).map(|(md, c)| c * torus.eigenfunction(md, x)).sum();
        best = best.max(v.abs());
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct FddReport {
    pub trials: usize,
    pub times: Vec<f64>,
    pub cells: usize,
    pub expected: Vec<f64>,
    pub observed: Vec<u64>,
    pub chi_square: ChiSquare,
    /// `max_c |p̂_c − p_c|`.
    pub max_discrepancy: f64,
    /// `½ Σ_c |p̂_c − p_c|`.
    pub discrepancy: f64,
}

/// Bin `(ω(t₁), …)` jointly over `partition` and compare with Wiener-measure
/// cell masses `∫…∫ p_{t₁}(x₀,x₁) p_{t₂−t₁}(x₁,x₂)…` by product quadrature.
pub fn fdd_compare(ens: &PathEnsemble, m: &Manifold, heat: &HeatKernel, partition: Partition, quad_nodes: usize) -> Result<FddReport> {
    let trials = ens.samples.len();
    if trials < 10_000 {
        return Err(Error::InsufficientData(format!("{trials} paths, need at least 10000")));
    }
    let k = ens.times.len();
    if !(1..=2).contains(&k) {
        return Err(invalid("times", "one or two observation times"));
    }
    let base = partition.count(m);
    let cells = base.pow(k as u32);
    let center = ens.start;
    let mut observed = vec![0u64; cells];
    for path in &ens.samples {
        let idx = path.iter().fold(0, |acc, &p| acc * base + partition.cell(m, center, p));
        observed[idx] += 1;
    }
    let rules: Vec<Vec<(Point, f64)>> = (0..base).map(|c| partition.cell_quadrature(m, center, c, quad_nodes)).collect();
    let t1 = ens.times[0];
    // First-time densities at every node.
    let first: Vec<Vec<f64>> = rules
        .iter()
        .map(|r| r.iter().map(|&(p, _)| heat.eval(t1, center, p)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let expected: Vec<f64> = if k == 1 {
        rules.iter().zip(&first).map(|(r, f)| r.iter().zip(f).map(|((_, w), v)| w * v).sum()).collect()
    } else {
        let dt = ens.times[1] - t1;
        (0..cells)
            .into_par_iter()
            .map(|c| {
                let (a, b) = (c / base, c % base);
                let mut total = 0.0;
                for ((p, wp), fp) in rules[a].iter().zip(&first[a]) {
                    for (q, wq) in &rules[b] {
                        total += wp * wq * fp * heat.eval(dt, *p, *q)?;
                    }
                }
                Ok(total)
            })
            .collect::<Result<_>>()?
    };
    let mass: f64 = expected.iter().sum();
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::ToleranceNotMet { tolerance: 1e-6, achieved: (mass - 1.0).abs() });
    }
    let probs: Vec<f64> = expected.iter().map(|p| p / mass).collect();
    let chi = chi_square(&observed, &probs)?;
    let n = trials as f64;
    let diffs: Vec<f64> = observed.iter().zip(&probs).map(|(&o, p)| (o as f64 / n - p).abs()).collect();
    Ok(FddReport {
        trials,
        times: ens.times.clone(),
        cells,
        expected: probs,
        observed,
        chi_square: chi,
        max_discrepancy: diffs.iter().cloned().fold(0.0, f64::max),
        discrepancy: 0.5 * diffs.iter().sum::<f64>(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusEstimate {
    pub horizon: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub paths: usize,
    pub fraction: f64,
    /// True when finite speed alone rules out any exceedance.
    pub exact_zero: bool,
}

/// Fraction of paths with `max_{|s−t|≤δ, s,t≤T} d(ω(s), ω(t)) > ε`, on grid times.
pub fn modulus_statistic(ens: &PathEnsemble, m: &Manifold, horizon: f64, delta: f64, epsilon: f64) -> Result<ModulusEstimate> {
    Ok(modulus_statistics(ens, m, horizon, &[delta], epsilon)?.remove(0))
}

/// [`modulus_statistic`] for several window lengths in one pass over the paths.
pub fn modulus_statistics(
    ens: &PathEnsemble,
    m: &Manifold,
    horizon: f64,
    deltas: &[f64],
    epsilon: f64,
) -> Result<Vec<ModulusEstimate>> {
    let grid = ens.grid.as_ref().ok_or_else(|| invalid("ensemble", "grid states were not kept"))?;
    let last = (horizon / ens.dt * (1.0 + 1e-12)).floor() as usize;
    if grid.iter().any(|g| g.len() <= last) {
        return Err(Error::Range { what: "horizon", detail: format!("T = {horizon} beyond the simulated paths") });
    }
    let windows: Vec<usize> = deltas.iter().map(|&d| (d / ens.dt * (1.0 + 1e-12)).floor() as usize).collect();
    // Finite speed rules a window out entirely.
    let live = |w: usize| epsilon <= 2.0 * w as f64 * ens.h;
    let widest = windows.iter().copied().filter(|&w| live(w)).max().unwrap_or(0);
    let lags: Vec<usize> = grid.par_iter().map(|g| first_exceedance_lag(m, g, last, widest, ens.h, epsilon)).collect();
    Ok(deltas
        .iter()
        .zip(&windows)
        .map(|(&delta, &w)| {
            let mut out = ModulusEstimate { horizon, delta, epsilon, paths: grid.len(), fraction: 0.0, exact_zero: !live(w) };
            if live(w) {
                out.fraction = lags.iter().filter(|&&l| l <= w).count() as f64 / grid.len() as f64;
            }
            out
        })
        .collect())
}

/// Smallest `j − i ≤ widest` with `d(g[i], g[j]) > ε` and `j ≤ last`, or
/// `usize::MAX`. Consecutive states are at most `step` apart, so most pairs
/// are settled by the triangle inequality or cheap bounds before any
/// geodesic solve.
fn first_exceedance_lag(m: &Manifold, g: &[Point], last: usize, widest: usize, step: f64, epsilon: f64) -> usize {
    let mut best = widest + 1;
    for i in 0..last {
        // Last pair from i with a distance known not to exceed ε.
        let mut anchor: Option<(usize, f64)> = None;
        for j in i + 1..=(i + best - 1).min(last) {
            let mut hi = (j - i) as f64 * step;
            if let Some((k, dk)) = anchor {
                hi = hi.min(dk + (j - k) as f64 * step);
            }
            if hi <= epsilon {
                continue;
            }
            let (lo, hi) = m.distance_bounds(g[i], g[j], epsilon);
            let d = if hi <= epsilon {
                hi
            } else if lo > epsilon {
                lo
            } else {
                m.distance(g[i], g[j]).unwrap_or(f64::INFINITY)
            };
            if d > epsilon {
                best = j - i;
                break;
            }
            anchor = Some((j, d));
        }
    }
    if best > widest {
        usize::MAX
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_counts() {
        assert_eq!(n_steps(1.0, 0.1, 1).unwrap(), 300);
        assert_eq!(n_steps(0.5, 0.05, 2).unwrap(), 800);
        assert_eq!(n_steps(0.25, 0.05, 1).unwrap(), 300);
    }
}
