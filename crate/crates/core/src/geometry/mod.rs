//! Compact Riemannian manifolds: flat tori, the unit sphere and a torus of
//! revolution.
//!
//! Points are stored as three numbers. On a flat torus they are the
//! coordinates in `[0, L_i)` (unused slots are zero); on S² they are a unit
//! vector in ℝ³; on the torus of revolution they are `(θ, φ, 0)`.

pub mod flat;
pub mod harmonics;
pub mod revolution;
pub mod sphere;
pub mod sturm;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::rng::Stream;
use flat::{FlatTorus, FourierMode};
use revolution::RevolutionTorus;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use sturm::{Profile, SeparatedMode};

/// Resolution of the Sturm–Liouville reference solve.
pub const STURM_RESOLUTION: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point(pub [f64; 3]);

/// Tangent vector at `base`. `components` are chart components (flat torus,
/// torus of revolution `(v_θ, v_φ)`) or an ambient vector (S²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    pub base: Point,
    pub components: [f64; 3],
    pub norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureData {
    pub scalar: f64,
    /// Gauss curvature `S/2` on surfaces.
    pub gauss: Option<f64>,
}

/// A Laplace eigenvalue with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub lambda: f64,
    pub multiplicity: usize,
}

/// Expand levels into eigenvalues repeated by multiplicity.
pub fn expand_levels(levels: &[Level]) -> Vec<f64> {
    levels
        .iter()
        .flat_map(|l| std::iter::repeat(l.lambda).take(l.multiplicity))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Manifold {
    FlatTorus(FlatTorus),
    Sphere2,
    RevolutionTorus(RevolutionTorus),
}

/// A quadrature node in a geodesic ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallNode {
    pub point: Point,
    pub weight: f64,
    pub radius: f64,
}

/// An orthonormal Laplace eigenfunction.
#[derive(Debug, Clone)]
pub enum Eigenfunction {
    Fourier(FlatTorus, FourierMode),
    Spherical { l: usize, m: i64 },
    Separated { mode: SeparatedMode, sine: bool, profile: Profile },
}

impl Eigenfunction {
    pub fn lambda(&self) -> f64 {
        match self {
            Eigenfunction::Fourier(_, m) => m.lambda,
            Eigenfunction::Spherical { l, .. } => (l * (l + 1)) as f64,
            Eigenfunction::Separated { mode, .. } => mode.lambda,
        }
    }

    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Eigenfunction::Fourier(t, mode) => t.eigenfunction(mode, x),
            Eigenfunction::Spherical { l, m } => harmonics::real_spherical_harmonic(*l, *m, x.0),
            Eigenfunction::Separated { mode, sine, profile } => {
                let f = profile.eval(x.0[0]);
                if mode.m == 0 {
                    f / (2.0 * PI).sqrt()
                } else if *sine {
                    f * (mode.m as f64 * x.0[1]).sin() / PI.sqrt()
                } else {
                    f * (mode.m as f64 * x.0[1]).cos() / PI.sqrt()
                }
            }
        }
    }
}

impl Manifold {
    pub fn flat_torus(lengths: Vec<f64>) -> Result<Self> {
        Ok(Manifold::FlatTorus(FlatTorus::new(lengths)?))
    }

    pub fn sphere2() -> Self {
        Manifold::Sphere2
    }

    pub fn revolution_torus(major: f64, minor: f64) -> Result<Self> {
        Ok(Manifold::RevolutionTorus(RevolutionTorus::new(major, minor)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Manifold::FlatTorus(_) => "flat_torus",
            Manifold::Sphere2 => "sphere2",
            Manifold::RevolutionTorus(_) => "revolution_torus",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Manifold::FlatTorus(t) => t.dim(),
            _ => 2,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Manifold::FlatTorus(t) => t.volume(),
            Manifold::Sphere2 => 4.0 * PI,
            Manifold::RevolutionTorus(t) => t.volume(),
        }
    }

    pub fn injectivity_bound(&self) -> f64 {
        match self {
            Manifold::FlatTorus(t) => t.injectivity_bound(),
            Manifold::Sphere2 => PI,
            Manifold::RevolutionTorus(t) => t.injectivity_bound(),
        }
    }

    /// Largest distance that `distance` will compute.
    pub fn trusted_range(&self) -> f64 {
        match self {
            Manifold::RevolutionTorus(t) => 2.0 * t.injectivity_bound(),
            _ => f64::INFINITY,
        }
    }

    /// Whether `|B(x, h)|` is independent of `x`.
    pub fn is_homogeneous(&self) -> bool {
        !matches!(self, Manifold::RevolutionTorus(_))
    }

    pub fn check_radius(&self, h: f64) -> Result<()> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(crate::error::invalid("h", "must be positive"));
        }
        let bound = self.injectivity_bound();
        if h > bound {
            return Err(Error::InjectivityRadius { length: h, bound });
        }
        Ok(())
    }

    pub fn normalize(&self, p: Point) -> Point {
        match self {
            Manifold::FlatTorus(t) => t.normalize(p),
            Manifold::Sphere2 => sphere::normalize(p),
            Manifold::RevolutionTorus(t) => t.normalize(p),
        }
    }

    /// Geodesic distance with an error bound (zero where exact).
    pub fn distance_with_bound(&self, x: Point, y: Point) -> Result<(f64, f64)> {
        match self {
            Manifold::FlatTorus(t) => Ok((t.distance(x, y), 0.0)),
            Manifold::Sphere2 => Ok((sphere::distance(x, y), 0.0)),
            Manifold::RevolutionTorus(t) => {
                let (v, bound) = t.log_with_bound(x, y, self.trusted_range())?;
                Ok((t.metric_norm(x.0[0], v), bound))
            }
        }
    }

    /// Cheap bracket for `d(x, y)` without a geodesic solve: `d ≤ hi`
    /// always, and `d ≥ lo` whenever `d ≤ reach`. So `lo > reach` proves
    /// `d > reach`. Exact on the flat torus and the sphere.
    pub fn distance_bounds(&self, x: Point, y: Point, reach: f64) -> (f64, f64) {
        match self {
            Manifold::FlatTorus(t) => {
                let d = t.distance(x, y);
                (d, d)
            }
            Manifold::Sphere2 => {
                let d = sphere::distance(x, y);
                (d, d)
            }
            Manifold::RevolutionTorus(t) => t.distance_bounds(x, y, reach),
        }
    }

    pub fn distance(&self, x: Point, y: Point) -> Result<f64> {
        self.distance_with_bound(x, y).map(|(d, _)| d)
    }

    pub fn tangent(&self, base: Point, components: [f64; 3]) -> Tangent {
        let norm = match self {
            Manifold::FlatTorus(t) => components[..t.dim()].iter().map(|c| c * c).sum::<f64>().sqrt(),
            Manifold::Sphere2 => sphere::norm(components),
            Manifold::RevolutionTorus(t) => t.metric_norm(base.0[0], [components[0], components[1]]),
        };
        Tangent { base, components, norm }
    }

    pub fn exp_map(&self, v: &Tangent) -> Result<Point> {
        let bound = self.injectivity_bound();
        if v.norm > bound {
            return Err(Error::InjectivityRadius { length: v.norm, bound });
        }
        Ok(match self {
            Manifold::FlatTorus(t) => t.translate(v.base, v.components),
            Manifold::Sphere2 => sphere::exp(v.base, sphere::project(v.base.0, v.components)),
            Manifold::RevolutionTorus(t) => t.exp(v.base, [v.components[0], v.components[1]]),
        })
    }

    /// Initial velocity of the minimizing geodesic from `x` to `y`.
    pub fn log_map(&self, x: Point, y: Point) -> Result<Tangent> {
        let c = match self {
            Manifold::FlatTorus(t) => t.delta(x, y),
            Manifold::Sphere2 => sphere::log(x, y),
            Manifold::RevolutionTorus(t) => {
                let (v, _) = t.log_with_bound(x, y, self.trusted_range())?;
                [v[0], v[1], 0.0]
            }
        };
        Ok(self.tangent(x, c))
    }

    /// Point at fraction `frac ∈ [0, 1]` along the minimizing geodesic.
    pub fn geodesic_point(&self, x: Point, y: Point, frac: f64) -> Result<Point> {
        if frac <= 0.0 {
            return Ok(x);
        }
        if frac >= 1.0 {
            return Ok(y);
        }
        let v = self.log_map(x, y)?;
        let c = v.components.map(|c| c * frac);
        Ok(match self {
            Manifold::FlatTorus(t) => t.translate(x, c),
            Manifold::Sphere2 => sphere::exp(x, c),
            Manifold::RevolutionTorus(t) => t.exp(x, [c[0], c[1]]),
        })
    }

    pub fn ball_volume(&self, x: Point, h: f64) -> Result<f64> {
        self.check_radius(h)?;
        Ok(match self {
            Manifold::FlatTorus(t) => t.ball_volume(h),
            Manifold::Sphere2 => sphere::cap_area(h),
            Manifold::RevolutionTorus(t) => t.ball_volume_at(x.0[0], h),
        })
    }

    /// Uniform point of `B(x, h)` w.r.t. the Riemannian volume.
    pub fn sample_ball(&self, rng: &mut Stream, x: Point, h: f64) -> Result<Point> {
        self.check_radius(h)?;
        match self {
            Manifold::FlatTorus(t) => Ok(t.translate(x, t.sample_displacement(rng, h))),
            Manifold::Sphere2 => Ok(sphere::sample_cap(rng, x, h)),
            Manifold::RevolutionTorus(t) => t.sample_ball(rng, x, h),
        }
    }

    /// Point distributed by the normalized Riemannian volume.
    pub fn uniform_point(&self, rng: &mut Stream) -> Point {
        match self {
            Manifold::FlatTorus(t) => t.uniform_point(rng),
            Manifold::Sphere2 => sphere::uniform_point(rng),
            Manifold::RevolutionTorus(t) => t.uniform_point(rng),
        }
    }

    pub fn curvature(&self, x: Point) -> CurvatureData {
        match self {
            Manifold::FlatTorus(t) => CurvatureData {
                scalar: 0.0,
                gauss: (t.dim() == 2).then_some(0.0),
            },
            Manifold::Sphere2 => CurvatureData { scalar: 2.0, gauss: Some(1.0) },
            Manifold::RevolutionTorus(t) => {
                let k = t.gauss_curvature(x.0[0]);
                CurvatureData { scalar: 2.0 * k, gauss: Some(k) }
            }
        }
    }

    pub fn scalar_curvature(&self, x: Point) -> f64 {
        self.curvature(x).scalar
    }

    /// Lowest Laplace levels covering at least `count` eigenvalues.
    pub fn reference_spectrum(&self, count: usize) -> Result<Vec<Level>> {
        if count == 0 {
            return Err(crate::error::invalid("count", "must be at least 1"));
        }
        match self {
            Manifold::FlatTorus(t) => Ok(t.reference_spectrum(count)),
            Manifold::Sphere2 => {
                let mut out = Vec::new();
                let mut total = 0;
                let mut l = 0;
                while total < count {
                    out.push(Level { lambda: (l * (l + 1)) as f64, multiplicity: 2 * l + 1 });
                    total += 2 * l + 1;
                    l += 1;
                }
                Ok(out)
            }
            Manifold::RevolutionTorus(t) => sturm::reference_levels(t, count, STURM_RESOLUTION),
        }
    }

    /// The first `count` orthonormal eigenfunctions in spectral order
    /// (the last level may be completed beyond `count`).
    pub fn eigenfunction_basis(&self, count: usize) -> Result<Vec<Eigenfunction>> {
        Ok(match self {
            Manifold::FlatTorus(t) => t.modes(count).into_iter().map(|m| Eigenfunction::Fourier(t.clone(), m)).collect(),
            Manifold::Sphere2 => {
                let mut out = Vec::new();
                let mut l = 0usize;
                while out.len() < count {
                    for m in -(l as i64)..=(l as i64) {
                        out.push(Eigenfunction::Spherical { l, m });
                    }
                    l += 1;
                }
                out
            }
            Manifold::RevolutionTorus(t) => {
                let modes = sturm::separated_spectrum(t, count, STURM_RESOLUTION)?;
                let mut out = Vec::new();
                for mode in modes {
                    let profile = Profile::new(t, &mode, 2 * STURM_RESOLUTION);
                    if mode.m == 0 {
                        out.push(Eigenfunction::Separated { mode, sine: false, profile });
                    } else {
                        out.push(Eigenfunction::Separated { mode, sine: false, profile: profile.clone() });
                        out.push(Eigenfunction::Separated { mode, sine: true, profile });
                    }
                }
                out
            }
        })
    }

    /// The eigenfunction with flat index `k`.
    pub fn eigenfunction(&self, k: usize) -> Result<Eigenfunction> {
        let mut basis = self.eigenfunction_basis(k + 1)?;
        if k >= basis.len() {
            return Err(Error::IndexOutOfRange { index: k, available: basis.len() });
        }
        Ok(basis.swap_remove(k))
    }

    /// Quadrature rule for `∫_{B(x,h)} f dvol`: Gauss–Legendre in the
    /// geodesic radius, trapezoid in the direction angle.
    pub fn ball_quadrature(&self, x: Point, h: f64, radial: usize, angular: usize) -> Result<Vec<BallNode>> {
        self.ball_quadrature_split(x, h, radial, angular, None::<fn(Point) -> f64>)
    }

    /// As [`ball_quadrature`](Self::ball_quadrature), but on curved surfaces
    /// the radial interval of each ray is split where `split` changes sign,
    /// so integrands with a kink along that locus keep full accuracy.
    pub fn ball_quadrature_split<F: Fn(Point) -> f64>(
        &self,
        x: Point,
        h: f64,
        radial: usize,
        angular: usize,
        split: Option<F>,
    ) -> Result<Vec<BallNode>> {
        self.check_radius(h)?;
        let gl = GaussLegendre::new(radial);
        let mut out = Vec::with_capacity(radial * angular);
        match self {
            Manifold::FlatTorus(t) => match t.dim() {
                1 => {
                    for (s, w) in gl.on(-h, h) {
                        out.push(BallNode { point: t.translate(x, [s, 0.0, 0.0]), weight: w, radius: s.abs() });
                    }
                }
                2 => {
                    for k in 0..angular {
                        let (sa, ca) = (2.0 * PI * k as f64 / angular as f64).sin_cos();
                        for (s, w) in gl.on(0.0, h) {
                            out.push(BallNode {
                                point: t.translate(x, [s * ca, s * sa, 0.0]),
                                weight: w * s * 2.0 * PI / angular as f64,
                                radius: s,
                            });
                        }
                    }
                }
                _ => {
                    let glz = GaussLegendre::new(angular.div_ceil(2).max(2));
                    for k in 0..angular {
                        let (sa, ca) = (2.0 * PI * k as f64 / angular as f64).sin_cos();
                        for (z, wz) in glz.on(-1.0, 1.0) {
                            let q = (1.0 - z * z).sqrt();
                            for (s, w) in gl.on(0.0, h) {
                                out.push(BallNode {
                                    point: t.translate(x, [s * q * ca, s * q * sa, s * z]),
                                    weight: w * s * s * wz * 2.0 * PI / angular as f64,
                                    radius: s,
                                });
                            }
                        }
                    }
                }
            },
            Manifold::Sphere2 => {
                let e = sphere::frame(x.0);
                for k in 0..angular {
                    let alpha = 2.0 * PI * k as f64 / angular as f64;
                    for (s, w) in gl.on(0.0, h) {
                        out.push(BallNode {
                            point: sphere::polar_point(x, e, s, alpha),
                            weight: w * s.sin() * 2.0 * PI / angular as f64,
                            radius: s,
                        });
                    }
                }
            }
            Manifold::RevolutionTorus(t) => {
                let wa = 2.0 * PI / angular as f64;
                for k in 0..angular {
                    let alpha = 2.0 * PI * k as f64 / angular as f64;
                    let start = t.ray(x, alpha);
                    let breaks = match &split {
                        Some(f) => ray_breaks(t, start, h, f),
                        None => vec![],
                    };
                    let mut edges = vec![0.0];
                    edges.extend(breaks);
                    edges.push(h);
                    let mut state = start;
                    let mut pos = 0.0;
                    for seg in edges.windows(2) {
                        for (s, w) in gl.on(seg[0], seg[1]) {
                            state = t.advance(state, s - pos);
                            pos = s;
                            out.push(BallNode {
                                point: Point([revolution::wrap_angle(state.theta), revolution::wrap_angle(state.phi), 0.0]),
                                weight: w * state.jacobi * wa,
                                radius: s,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Radii in `(0, h)` where `f` changes sign along a ray, by a 32-point scan
/// and bisection to `1e-13`.
fn ray_breaks<F: Fn(Point) -> f64>(t: &RevolutionTorus, start: revolution::Ray, h: f64, f: &F) -> Vec<f64> {
    const SCAN: usize = 32;
    let ds = h / SCAN as f64;
    let at = |r: &revolution::Ray| f(Point([r.theta, r.phi, 0.0]));
    let mut out = Vec::new();
    let mut prev = t.advance(start, 0.25 * ds);
    let mut prev_s = 0.25 * ds;
    let mut prev_v = at(&prev);
    let mut k = 1;
    while k <= SCAN {
        let s = if k == SCAN { h * (1.0 - 1e-12) } else { k as f64 * ds };
        let cur = t.advance(prev, s - prev_s);
        let cur_v = at(&cur);
        if prev_v * cur_v < 0.0 {
            let (mut a, mut b) = (0.0, s - prev_s);
            let mut fa = prev_v;
            while b - a > 1e-13 {
                let mid = 0.5 * (a + b);
                let fm = at(&t.advance(prev, mid));
                if fa * fm <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            out.push(prev_s + 0.5 * (a + b));
        }
        prev = cur;
        prev_s = s;
        prev_v = cur_v;
        k += 1;
    }
    out
}
