//! The ball-walk kernel `T_h`, its Metropolis correction `M_h`, holding
//! probabilities and stationary densities.

use crate::error::Result;
use crate::geometry::revolution::BallVolumeTable;
use crate::geometry::{Manifold, Point};
use crate::quad::GaussLegendre;
use crate::rng::Stream;
use crate::specfun::unit_ball_volume;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Radial × angular nodes for ball integrals.
pub const BALL_RADIAL: usize = 32;
pub const BALL_ANGULAR: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[serde(alias = "ball")]
    BallWalk,
    Metropolis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub h: f64,
    pub seed: u64,
    pub kind: KernelKind,
}

impl WalkConfig {
    pub fn new(m: &Manifold, h: f64, seed: u64, kind: KernelKind) -> Result<Self> {
        m.check_radius(h)?;
        Ok(Self { h, seed, kind })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: Point,
    pub held: bool,
    pub proposal: Point,
}

/// Where `|B(·, h)|` comes from during Metropolis acceptance.
#[derive(Debug, Clone)]
pub enum VolumeSource {
    Exact,
    Table(BallVolumeTable),
}

/// A stepper for one manifold and configuration.
#[derive(Debug, Clone)]
pub struct Walker<'a> {
    pub manifold: &'a Manifold,
    pub config: WalkConfig,
    volumes: VolumeSource,
}

impl<'a> Walker<'a> {
    /// Exact ball volumes in the acceptance test.
    pub fn new(manifold: &'a Manifold, config: WalkConfig) -> Result<Self> {
        manifold.check_radius(config.h)?;
        Ok(Self { manifold, config, volumes: VolumeSource::Exact })
    }

    /// Ball volumes from a validated interpolation table (torus of
    /// revolution only; other manifolds are homogeneous).
    pub fn with_table(manifold: &'a Manifold, config: WalkConfig, tolerance: f64) -> Result<Self> {
        manifold.check_radius(config.h)?;
        let volumes = match manifold {
            Manifold::RevolutionTorus(t) => VolumeSource::Table(BallVolumeTable::new(t, config.h, tolerance)?),
            _ => VolumeSource::Exact,
        };
        Ok(Self { manifold, config, volumes })
    }

    pub fn ball_volume(&self, x: Point) -> Result<f64> {
        match &self.volumes {
            VolumeSource::Table(t) => Ok(t.eval(x.0[0])),
            VolumeSource::Exact => self.manifold.ball_volume(x, self.config.h),
        }
    }

    pub fn step(&self, x: Point, rng: &mut Stream) -> Result<StepOutcome> {
        let y = self.manifold.sample_ball(rng, x, self.config.h)?;
        match self.config.kind {
            KernelKind::BallWalk => Ok(StepOutcome { next: y, held: false, proposal: y }),
            KernelKind::Metropolis => {
                // The uniform draw is consumed on every step, so streams stay
                // aligned whether or not the manifold is homogeneous.
                let u: f64 = rng.gen();
                if self.manifold.is_homogeneous() {
                    return Ok(StepOutcome { next: y, held: false, proposal: y });
                }
                let ratio = self.ball_volume(x)? / self.ball_volume(y)?;
                if u < ratio {
                    Ok(StepOutcome { next: y, held: false, proposal: y })
                } else {
                    Ok(StepOutcome { next: x, held: true, proposal: y })
                }
            }
        }
    }
}

pub fn ball_walk_step(m: &Manifold, cfg: &WalkConfig, x: Point, rng: &mut Stream) -> Result<StepOutcome> {
    Walker::new(m, WalkConfig { kind: KernelKind::BallWalk, ..*cfg })?.step(x, rng)
}

pub fn metropolis_step(m: &Manifold, cfg: &WalkConfig, x: Point, rng: &mut Stream) -> Result<StepOutcome> {
    Walker::new(m, WalkConfig { kind: KernelKind::Metropolis, ..*cfg })?.step(x, rng)
}

/// Density of the continuous part of the kernel w.r.t. the Riemannian
/// volume: `1/|B(x,h)|` for the ball walk, `min(1/|B(x,h)|, 1/|B(y,h)|)`
/// for Metropolis, zero outside the ball.
pub fn kernel_density(m: &Manifold, h: f64, x: Point, y: Point, kind: KernelKind) -> Result<f64> {
    let d = m.distance(x, y)?;
    if d > h {
        return Ok(0.0);
    }
    let vx = m.ball_volume(x, h)?;
    Ok(match kind {
        KernelKind::BallWalk => 1.0 / vx,
        KernelKind::Metropolis => {
            let vy = m.ball_volume(y, h)?;
            (1.0 / vx).min(1.0 / vy)
        }
    })
}

/// `m_h(x) = ∫_{B(x,h)} max(0, 1/|B(x,h)| − 1/|B(y,h)|) dy`, integrated
/// directly (no `1 − ∫` cancellation) with the radial rule split on the
/// locus `|B(y,h)| = |B(x,h)|`.
pub fn holding_probability(m: &Manifold, h: f64, x: Point) -> Result<f64> {
    m.check_radius(h)?;
    if m.is_homogeneous() {
        return Ok(0.0);
    }
    let vx = m.ball_volume(x, h)?;
    let vol = |p: Point| m.ball_volume(p, h).expect("radius checked");
    let nodes = m.ball_quadrature_split(x, h, BALL_RADIAL, BALL_ANGULAR, Some(|p: Point| vol(p) - vx))?;
    Ok(nodes.iter().map(|n| n.weight * (1.0 / vx - 1.0 / vol(n.point)).max(0.0)).sum())
}

/// `∫ K(x, y) dy` by ball quadrature; equals `1 − m_h(x)` for Metropolis
/// and 1 for the ball walk.
pub fn kernel_mass(m: &Manifold, h: f64, x: Point, kind: KernelKind) -> Result<f64> {
    let vx = m.ball_volume(x, h)?;
    let vol = |p: Point| m.ball_volume(p, h).expect("radius checked");
    let split = (kind == KernelKind::Metropolis && !m.is_homogeneous()).then_some(|p: Point| vol(p) - vx);
    let nodes = m.ball_quadrature_split(x, h, BALL_RADIAL, BALL_ANGULAR, split)?;
    Ok(nodes
        .iter()
        .map(|n| {
            n.weight
                * match kind {
                    KernelKind::BallWalk => 1.0 / vx,
                    KernelKind::Metropolis => (1.0 / vx).min(1.0 / vol(n.point)),
                }
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StationaryKind {
    /// `dν_h ∝ |B(x,h)| dx`, stationary for the ball walk.
    NuH,
    /// Normalized Riemannian volume, stationary for Metropolis.
    UniformMu,
}

/// A stationary probability density w.r.t. the Riemannian volume.
#[derive(Debug, Clone)]
pub struct StationaryDensity {
    pub kind: StationaryKind,
    pub h: f64,
    /// `Z_h = ∫ |B(x,h)|/(c_d h^d) dx` (equals `Vol(M)` for `UniformMu`).
    pub normalizer: f64,
    manifold: Manifold,
}

impl StationaryDensity {
    pub fn eval(&self, x: Point) -> Result<f64> {
        match self.kind {
            StationaryKind::UniformMu => Ok(1.0 / self.manifold.volume()),
            StationaryKind::NuH => {
                let d = self.manifold.dim();
                let b = self.manifold.ball_volume(x, self.h)?;
                Ok(b / (self.normalizer * unit_ball_volume(d) * self.h.powi(d as i32)))
            }
        }
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }
}

pub fn stationary_density(m: &Manifold, h: f64, kind: KernelKind) -> Result<StationaryDensity> {
    m.check_radius(h)?;
    let (skind, normalizer) = match kind {
        KernelKind::Metropolis => (StationaryKind::UniformMu, m.volume()),
        KernelKind::BallWalk => (StationaryKind::NuH, nu_normalizer(m, h)?),
    };
    Ok(StationaryDensity { kind: skind, h, normalizer, manifold: m.clone() })
}

/// `Z_h`. On the torus of revolution the integrand depends on `θ` only and
/// is periodic, so the trapezoid rule in `θ` converges spectrally.
fn nu_normalizer(m: &Manifold, h: f64) -> Result<f64> {
    let d = m.dim();
    let scale = unit_ball_volume(d) * h.powi(d as i32);
    match m {
        Manifold::RevolutionTorus(t) => {
            let n = 64;
            let mut total = 0.0;
            for j in 0..n {
                let th = 2.0 * PI * j as f64 / n as f64;
                total += t.ball_volume_at(th, h) * t.minor() * t.rho(th);
            }
            Ok(total * (2.0 * PI / n as f64) * 2.0 * PI / scale)
        }
        _ => Ok(m.ball_volume(Point([0.0, 0.0, 1.0]), h)? / scale * m.volume()),
    }
}

/// `∫ density dvol` by quadrature (for normalization checks).
pub fn integrate_density(sd: &StationaryDensity) -> Result<f64> {
    match sd.manifold() {
        Manifold::RevolutionTorus(t) => {
            let gl = GaussLegendre::new(48);
            let mut total = 0.0;
            for (th, w) in gl.on(0.0, 2.0 * PI) {
                total += w * sd.eval(Point([th, 0.0, 0.0]))? * t.minor() * t.rho(th) * 2.0 * PI;
            }
            Ok(total)
        }
        m => Ok(sd.eval(m.normalize(Point([0.0, 0.0, 1.0])))? * m.volume()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Substreams;

    #[test]
    fn homogeneous_metropolis_equals_ball_walk() {
        let m = Manifold::sphere2();
        let cfg = WalkConfig::new(&m, 0.2, 1, KernelKind::Metropolis).unwrap();
        let subs = Substreams::new(1);
        let (mut a, mut b) = (subs.stream(0), subs.stream(0));
        let x = Point([0.0, 0.0, 1.0]);
        let s1 = metropolis_step(&m, &cfg, x, &mut a).unwrap();
        let s2 = ball_walk_step(&m, &cfg, x, &mut b).unwrap();
        assert_eq!(s1.next, s2.next);
        assert!(!s1.held);
        assert_eq!(holding_probability(&m, 0.2, x).unwrap(), 0.0);
    }

    #[test]
    fn flat_density_inside_ball() {
        let m = Manifold::flat_torus(vec![1.0, 1.0]).unwrap();
        let x = Point([0.5, 0.5, 0.0]);
        let d = kernel_density(&m, 0.1, x, Point([0.55, 0.5, 0.0]), KernelKind::BallWalk).unwrap();
        assert!((d - 1.0 / (PI * 0.01)).abs() < 1e-9);
        assert_eq!(kernel_density(&m, 0.1, x, Point([0.7, 0.5, 0.0]), KernelKind::BallWalk).unwrap(), 0.0);
    }
}
