//! Torus of revolution with metric `r² dθ² + (R + r cos θ)² dφ²`.
//!
//! `θ` is the angle around the tube (θ = 0 on the outer equator) and `φ`
//! the angle around the axis of symmetry.

use super::Point;
use crate::error::{invalid, Error, Result};
use crate::rng::Stream;
use rand::Rng;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;
/// Longest RK4 step along a geodesic.
pub const MAX_STEP: f64 = 1.0 / 128.0;
/// Fewest RK4 steps used for a full exponential-map evaluation.
pub const MIN_STEPS: usize = 8;
const POLAR_ANGLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevolutionTorus {
    major: f64,
    minor: f64,
}

/// State along a unit-speed geodesic ray: position, velocity, the Jacobi
/// field `J` of the polar area element and its running integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub theta: f64,
    pub phi: f64,
    pub dtheta: f64,
    pub dphi: f64,
    pub jacobi: f64,
    pub djacobi: f64,
    pub area: f64,
}

pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TWO_PI);
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

/// Angle difference in `[-π, π)`.
pub fn angle_delta(a: f64) -> f64 {
    super::flat::wrap_delta(a, TWO_PI)
}

/// Extremes of `cos` over the interval between `a` and `b`.
fn cos_range(a: f64, b: f64) -> (f64, f64) {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let contains = |c: f64| ((a - c) / (2.0 * PI)).ceil() * 2.0 * PI + c <= b;
    let (ca, cb) = (a.cos(), b.cos());
    let lo = if contains(PI) { -1.0 } else { ca.min(cb) };
    let hi = if contains(0.0) { 1.0 } else { ca.max(cb) };
    (lo, hi)
}

pub fn steps_for(length: f64) -> usize {
    ((length.abs() / MAX_STEP).ceil() as usize).max(1)
}

impl RevolutionTorus {
    pub fn new(major: f64, minor: f64) -> Result<Self> {
        if !(minor > 0.0 && minor.is_finite()) {
            return Err(invalid("r", "minor radius must be positive"));
        }
        if !(major > minor && major.is_finite()) {
            return Err(invalid("R", "major radius must exceed the minor radius"));
        }
        Ok(Self { major, minor })
    }

    pub fn major(&self) -> f64 {
        self.major
    }

    pub fn minor(&self) -> f64 {
        self.minor
    }

    pub fn rho(&self, theta: f64) -> f64 {
        self.major + self.minor * theta.cos()
    }

    pub fn volume(&self) -> f64 {
        4.0 * PI * PI * self.major * self.minor
    }

    pub fn injectivity_bound(&self) -> f64 {
        self.minor * (1.0f64).min((self.major - self.minor) / self.major)
    }

    pub fn gauss_curvature(&self, theta: f64) -> f64 {
        let c = theta.cos();
        c / (self.minor * (self.major + self.minor * c))
    }

    /// `κ` with `K ≥ −κ²` everywhere.
    pub fn curvature_floor_rate(&self) -> f64 {
        1.0 / (self.minor * (self.major - self.minor)).sqrt()
    }

    pub fn normalize(&self, p: Point) -> Point {
        Point([wrap_angle(p.0[0]), wrap_angle(p.0[1]), 0.0])
    }

    pub fn embed(&self, p: Point) -> [f64; 3] {
        let rho = self.rho(p.0[0]);
        let (sp, cp) = p.0[1].sin_cos();
        [rho * cp, rho * sp, self.minor * p.0[0].sin()]
    }

    /// See [`Manifold::distance_bounds`](super::Manifold::distance_bounds).
    /// The upper bound is the length of the coordinate segment under its
    /// widest circle; a path no longer than `reach` stays within `reach / r`
    /// in θ, and the narrowest circle there gives the lower bound.
    pub fn distance_bounds(&self, x: Point, y: Point, reach: f64) -> (f64, f64) {
        let (r, big) = (self.minor, self.major);
        let dth = angle_delta(y.0[0] - x.0[0]);
        let dph = angle_delta(y.0[1] - x.0[1]);
        let (_, seg_max) = cos_range(x.0[0], x.0[0] + dth);
        let band = reach / r;
        let (band_min, _) = cos_range(x.0[0] - band, x.0[0] + band);
        let (a, b) = (self.embed(x), self.embed(y));
        let chord = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        let lo = (r * dth).hypot((big + r * band_min) * dph).max(chord);
        let hi = (r * dth).hypot((big + r * seg_max) * dph);
        (lo, hi)
    }

    pub fn metric_norm(&self, theta: f64, v: [f64; 2]) -> f64 {
        let rho = self.rho(theta);
        (self.minor * self.minor * v[0] * v[0] + rho * rho * v[1] * v[1]).sqrt()
    }

    /// Unit-speed ray leaving `(θ, φ)` at angle `α` from `∂_θ` in the
    /// orthonormal frame `(∂_θ/r, ∂_φ/ρ)`.
    pub fn ray(&self, x: Point, alpha: f64) -> Ray {
        let (sa, ca) = alpha.sin_cos();
        Ray {
            theta: x.0[0],
            phi: x.0[1],
            dtheta: ca / self.minor,
            dphi: sa / self.rho(x.0[0]),
            jacobi: 0.0,
            djacobi: 1.0,
            area: 0.0,
        }
    }

    fn deriv(&self, y: &[f64; 7]) -> [f64; 7] {
        let (st, ct) = y[0].sin_cos();
        let rho = self.major + self.minor * ct;
        let k = ct / (self.minor * rho);
        [
            y[2],
            y[3],
            -rho * st * y[3] * y[3] / self.minor,
            2.0 * self.minor * st * y[2] * y[3] / rho,
            y[5],
            -k * y[4],
            y[4],
        ]
    }

    /// Advance `ray` by arc length `length` in `steps` RK4 steps.
    pub fn advance_steps(&self, ray: Ray, length: f64, steps: usize) -> Ray {
        let mut y = [ray.theta, ray.phi, ray.dtheta, ray.dphi, ray.jacobi, ray.djacobi, ray.area];
        let ds = length / steps as f64;
        for _ in 0..steps {
            let k1 = self.deriv(&y);
            let mut t = [0.0; 7];
            for i in 0..7 {
                t[i] = y[i] + 0.5 * ds * k1[i];
            }
            let k2 = self.deriv(&t);
            for i in 0..7 {
                t[i] = y[i] + 0.5 * ds * k2[i];
            }
            let k3 = self.deriv(&t);
            for i in 0..7 {
                t[i] = y[i] + ds * k3[i];
            }
            let k4 = self.deriv(&t);
            for i in 0..7 {
                y[i] += ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        Ray {
            theta: y[0],
            phi: y[1],
            dtheta: y[2],
            dphi: y[3],
            jacobi: y[4],
            djacobi: y[5],
            area: y[6],
        }
    }

    pub fn advance(&self, ray: Ray, length: f64) -> Ray {
        self.advance_steps(ray, length, steps_for(length))
    }

    /// Endpoint of the geodesic with initial coordinate velocity `v`,
    /// with an explicit step count.
    pub fn exp_steps(&self, x: Point, v: [f64; 2], steps: usize) -> Point {
        let len = self.metric_norm(x.0[0], v);
        if len == 0.0 {
            return self.normalize(x);
        }
        let start = Ray {
            theta: x.0[0],
            phi: x.0[1],
            dtheta: v[0] / len,
            dphi: v[1] / len,
            jacobi: 0.0,
            djacobi: 1.0,
            area: 0.0,
        };
        let end = self.advance_steps(start, len, steps);
        Point([wrap_angle(end.theta), wrap_angle(end.phi), 0.0])
    }

    pub fn exp(&self, x: Point, v: [f64; 2]) -> Point {
        let len = self.metric_norm(x.0[0], v);
        self.exp_steps(x, v, steps_for(len).max(MIN_STEPS))
    }

    /// Coordinate-difference estimate of `d(x, y)` with the metric frozen at
    /// the midpoint latitude.
    pub fn midpoint_estimate(&self, x: Point, y: Point) -> f64 {
        let dt = angle_delta(y.0[0] - x.0[0]);
        let dp = angle_delta(y.0[1] - x.0[1]);
        self.metric_norm(x.0[0] + 0.5 * dt, [dt, dp])
    }

    /// Initial velocity of the short geodesic from `x` to `y` (Newton
    /// shooting on the exponential map), with a bound on the endpoint miss.
    pub fn log_with_bound(&self, x: Point, y: Point, trusted: f64) -> Result<([f64; 2], f64)> {
        let est = self.midpoint_estimate(x, y);
        if est > trusted {
            return Err(Error::DistanceOutOfRange { distance: est, limit: trusted });
        }
        if est == 0.0 {
            return Ok(([0.0, 0.0], 0.0));
        }
        let mut v = [angle_delta(y.0[0] - x.0[0]), angle_delta(y.0[1] - x.0[1])];
        let miss = |v: [f64; 2]| {
            let p = self.exp(x, v);
            [angle_delta(p.0[0] - y.0[0]), angle_delta(p.0[1] - y.0[1])]
        };
        let mut res = miss(v);
        let mut res_norm = self.metric_norm(y.0[0], res);
        for _ in 0..50 {
            if res_norm < 1e-14 {
                break;
            }
            let scale = (v[0].abs() + v[1].abs()).max(1e-6);
            let delta = 1e-6 * scale;
            let mut jac = [[0.0; 2]; 2];
            for c in 0..2 {
                let mut vp = v;
                let mut vm = v;
                vp[c] += delta;
                vm[c] -= delta;
                let (fp, fm) = (miss(vp), miss(vm));
                jac[0][c] = (fp[0] - fm[0]) / (2.0 * delta);
                jac[1][c] = (fp[1] - fm[1]) / (2.0 * delta);
            }
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det.abs() < 1e-300 {
                break;
            }
            let step = [
                (jac[1][1] * res[0] - jac[0][1] * res[1]) / det,
                (-jac[1][0] * res[0] + jac[0][0] * res[1]) / det,
            ];
            let cand = [v[0] - step[0], v[1] - step[1]];
            let cres = miss(cand);
            let cnorm = self.metric_norm(y.0[0], cres);
            if cnorm >= res_norm && res_norm < 1e-12 {
                break;
            }
            v = cand;
            res = cres;
            res_norm = cnorm;
        }
        if res_norm > 1e-9 {
            return Err(Error::ToleranceNotMet { tolerance: 1e-9, achieved: res_norm });
        }
        // Integration error: compare against a run with twice the steps.
        let len = self.metric_norm(x.0[0], v);
        let n = steps_for(len).max(MIN_STEPS);
        let p1 = self.exp_steps(x, v, n);
        let p2 = self.exp_steps(x, v, 2 * n);
        let integ = self.metric_norm(
            y.0[0],
            [angle_delta(p1.0[0] - p2.0[0]), angle_delta(p1.0[1] - p2.0[1])],
        );
        Ok((v, res_norm + integ))
    }

    /// `|B(x, h)|` by polar integration of the Jacobi field; depends on `θ`
    /// only.
    pub fn ball_volume_at(&self, theta: f64, h: f64) -> f64 {
        let x = Point([theta, 0.0, 0.0]);
        let steps = steps_for(h).max(16);
        // Rays at α and −α have the same area by the reflection φ ↦ −φ.
        let n = POLAR_ANGLES;
        let mut total = 0.0;
        for k in 0..=n / 2 {
            let alpha = TWO_PI * k as f64 / n as f64;
            let w = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
            total += w * self.advance_steps(self.ray(x, alpha), h, steps).area;
        }
        total * TWO_PI / n as f64
    }

    /// Uniform point of `B(x, h)` by tangent-disc proposals accepted with
    /// probability `J(s)/(s·M)`, `M = sinh(κh)/(κh)` the comparison bound.
    pub fn sample_ball(&self, rng: &mut Stream, x: Point, h: f64) -> Result<Point> {
        let kappa = self.curvature_floor_rate();
        let kh = kappa * h;
        let envelope = kh.sinh() / kh;
        for _ in 0..10_000 {
            let s = h * rng.gen::<f64>().sqrt();
            let alpha = TWO_PI * rng.gen::<f64>();
            let u: f64 = rng.gen();
            if s == 0.0 {
                return Ok(self.normalize(x));
            }
            let end = self.advance_steps(self.ray(x, alpha), s, steps_for(s).max(MIN_STEPS));
            let ratio = end.jacobi / (s * envelope);
            if ratio > 1.0 + 1e-9 {
                return Err(Error::SamplerInternal(format!(
                    "Jacobi field {:.3e} exceeds the comparison envelope at s = {s}",
                    end.jacobi
                )));
            }
            if u < ratio {
                return Ok(Point([wrap_angle(end.theta), wrap_angle(end.phi), 0.0]));
            }
        }
        Err(Error::SamplerInternal("rejection loop exceeded 10000 proposals".into()))
    }

    /// Uniform point w.r.t. the area form: `φ` uniform, `θ` with density
    /// `∝ R + r cos θ` by rejection.
    pub fn uniform_point(&self, rng: &mut Stream) -> Point {
        loop {
            let theta = TWO_PI * rng.gen::<f64>();
            let u: f64 = rng.gen();
            if u * (self.major + self.minor) <= self.rho(theta) {
                return Point([theta, TWO_PI * rng.gen::<f64>(), 0.0]);
            }
        }
    }

    /// Area of the coordinate cell `[θ₀, θ₁] × [φ₀, φ₁]`.
    pub fn cell_area(&self, t0: f64, t1: f64, p0: f64, p1: f64) -> f64 {
        (p1 - p0) * self.minor * (self.major * (t1 - t0) + self.minor * (t1.sin() - t0.sin()))
    }
}

/// `θ ↦ |B((θ, ·), h)|` for one fixed `h`, as a cosine series fitted to
/// exact polar-integration values and validated at interleaved points.
#[derive(Debug, Clone, PartialEq)]
pub struct BallVolumeTable {
    pub h: f64,
    coeffs: Vec<f64>,
    pub max_rel_error: f64,
}

impl BallVolumeTable {
    pub fn new(torus: &RevolutionTorus, h: f64, tolerance: f64) -> Result<Self> {
        let mut n = 16;
        loop {
            let values: Vec<f64> = (0..=n).map(|j| torus.ball_volume_at(PI * j as f64 / n as f64, h)).collect();
            let coeffs = dct1(&values);
            let table = Self { h, coeffs, max_rel_error: 0.0 };
            let mut worst: f64 = 0.0;
            for j in 0..n {
                let th = PI * (j as f64 + 0.5) / n as f64;
                let exact = torus.ball_volume_at(th, h);
                worst = worst.max(((table.eval(th) - exact) / exact).abs());
            }
            if worst <= tolerance {
                return Ok(Self { max_rel_error: worst, ..table });
            }
            if n >= 512 {
                return Err(Error::ToleranceNotMet { tolerance, achieved: worst });
            }
            n *= 2;
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        // Clenshaw for Σ c_k T_k(cos θ).
        let x = theta.cos();
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs[1..].iter().rev() {
            let b0 = c + 2.0 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + x * b1 - b2
    }
}

/// Cosine coefficients of the even trigonometric interpolant through
/// samples at `θ_j = jπ/n`, `j = 0..=n`.
fn dct1(values: &[f64]) -> Vec<f64> {
    let n = values.len() - 1;
    (0..=n)
        .map(|k| {
            let mut s = 0.0;
            for (j, &v) in values.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                s += w * v * (PI * (k * j) as f64 / n as f64).cos();
            }
            let c = 2.0 * s / n as f64;
            if k == 0 || k == n {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> RevolutionTorus {
        RevolutionTorus::new(2.0, 1.0).unwrap()
    }

    #[test]
    fn cosine_extremes_on_intervals() {
        assert_eq!(cos_range(0.1, 0.2), (0.2f64.cos(), 0.1f64.cos()));
        assert_eq!(cos_range(3.0, 3.5).0, -1.0);
        assert_eq!(cos_range(6.0, 6.5).1, 1.0);
        assert_eq!(cos_range(-0.5, -0.1), cos_range(-0.1, -0.5));
        assert_eq!(cos_range(-3.5, -3.0).0, -1.0);
        assert_eq!(cos_range(0.0, 7.0), (-1.0, 1.0));
    }

    #[test]
    fn curvature_outer_equator() {
        assert!((2.0 * torus().gauss_curvature(0.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exp_converges_under_refinement() {
        let t = torus();
        let x = Point([0.7, 1.0, 0.0]);
        for v in [[0.1, 0.02], [-0.05, 0.04], [0.3, -0.1]] {
            let n = steps_for(t.metric_norm(0.7, v)).max(MIN_STEPS);
            let a = t.exp_steps(x, v, n);
            let b = t.exp_steps(x, v, 8 * n);
            let err = t.metric_norm(a.0[0], [angle_delta(a.0[0] - b.0[0]), angle_delta(a.0[1] - b.0[1])]);
            assert!(err < 1e-10, "{err}");
        }
    }

    #[test]
    fn small_ball_is_nearly_euclidean() {
        let t = torus();
        for th in [0.0, 1.0, PI] {
            let h = 0.05;
            let v = t.ball_volume_at(th, h);
            let expected = PI * h * h * (1.0 - t.gauss_curvature(th) * h * h / 12.0);
            assert!(((v - expected) / expected).abs() < 1e-7);
        }
    }

    #[test]
    fn volume_table_validates() {
        let t = torus();
        let tab = BallVolumeTable::new(&t, 0.1, 1e-10).unwrap();
        assert!(tab.max_rel_error <= 1e-10);
        let th = 2.345;
        assert!((tab.eval(th) / t.ball_volume_at(th, 0.1) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cell_areas_sum_to_volume() {
        let t = torus();
        assert!((t.cell_area(0.0, TWO_PI, 0.0, TWO_PI) - t.volume()).abs() < 1e-12);
    }
}
