//! The unit sphere S² ⊂ ℝ³.

use super::Point;
use crate::rng::Stream;
use rand::Rng;
use std::f64::consts::PI;

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(p: Point) -> Point {
    let n = norm(p.0);
    Point([p.0[0] / n, p.0[1] / n, p.0[2] / n])
}

pub fn distance(x: Point, y: Point) -> f64 {
    norm(cross(x.0, y.0)).atan2(dot(x.0, y.0))
}

/// Orthonormal tangent frame at `x`.
pub fn frame(x: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let a = if x[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot(a, x);
    let e1 = [a[0] - d * x[0], a[1] - d * x[1], a[2] - d * x[2]];
    let n1 = norm(e1);
    let e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    (e1, cross(x, e1))
}

/// Project an ambient vector onto the tangent plane at `x`.
pub fn project(x: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    let d = dot(x, v);
    [v[0] - d * x[0], v[1] - d * x[1], v[2] - d * x[2]]
}

/// Great-circle exponential map; `v` tangent at `x`.
pub fn exp(x: Point, v: [f64; 3]) -> Point {
    let t = norm(v);
    if t == 0.0 {
        return x;
    }
    let (s, c) = t.sin_cos();
    normalize(Point([
        c * x.0[0] + s * v[0] / t,
        c * x.0[1] + s * v[1] / t,
        c * x.0[2] + s * v[2] / t,
    ]))
}

/// Tangent vector at `x` pointing to `y` with length `d(x, y)`.
pub fn log(x: Point, y: Point) -> [f64; 3] {
    let u = project(x.0, y.0);
    let n = norm(u);
    if n == 0.0 {
        return [0.0; 3];
    }
    let d = distance(x, y);
    [u[0] * d / n, u[1] * d / n, u[2] * d / n]
}

/// Point at geodesic distance `rho` from `x` in direction angle `alpha`.
pub fn polar_point(x: Point, e: ([f64; 3], [f64; 3]), rho: f64, alpha: f64) -> Point {
    let (sa, ca) = alpha.sin_cos();
    let v = [
        ca * e.0[0] + sa * e.1[0],
        ca * e.0[1] + sa * e.1[1],
        ca * e.0[2] + sa * e.1[2],
    ];
    let (s, c) = rho.sin_cos();
    normalize(Point([
        c * x.0[0] + s * v[0],
        c * x.0[1] + s * v[1],
        c * x.0[2] + s * v[2],
    ]))
}

pub fn cap_area(h: f64) -> f64 {
    4.0 * PI * (0.5 * h).sin().powi(2)
}

/// Uniform point in the cap of radius `h` around `x`: `1 − cos ρ` uniform.
pub fn sample_cap(rng: &mut Stream, x: Point, h: f64) -> Point {
    let top = 2.0 * (0.5 * h).sin().powi(2);
    let u = top * rng.gen::<f64>();
    let rho = 2.0 * (0.5 * u).sqrt().min(1.0).asin();
    let alpha = 2.0 * PI * rng.gen::<f64>();
    polar_point(x, frame(x.0), rho, alpha)
}

pub fn uniform_point(rng: &mut Stream) -> Point {
    let z = 2.0 * rng.gen::<f64>() - 1.0;
    let (s, c) = (2.0 * PI * rng.gen::<f64>()).sin_cos();
    let q = (1.0 - z * z).max(0.0).sqrt();
    Point([q * c, q * s, z])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_circle() {
        let n = Point([0.0, 0.0, 1.0]);
        let p = exp(n, [PI / 2.0, 0.0, 0.0]);
        assert!(p.0[2].abs() < 1e-15 && (p.0[0] - 1.0).abs() < 1e-15);
        let th: f64 = 0.7;
        assert!((distance(n, Point([th.sin(), 0.0, th.cos()])) - th).abs() < 1e-15);
    }

    #[test]
    fn log_inverts_exp() {
        let x = normalize(Point([0.3, -0.5, 0.8]));
        let (e1, e2) = frame(x.0);
        let v = [0.2 * e1[0] - 0.1 * e2[0], 0.2 * e1[1] - 0.1 * e2[1], 0.2 * e1[2] - 0.1 * e2[2]];
        let w = log(x, exp(x, v));
        for i in 0..3 {
            assert!((w[i] - v[i]).abs() < 1e-14);
        }
    }
}
