//! The normalized Fourier transform of the unit-ball indicator and the
//! quantities derived from it.
//!
//! `gamma_d(d, s)` is `(1/c_d) ∫_{|y|≤1} cos(y·ξ) dy` written as a function of
//! `s = |ξ|²`. It is the exact symbol of the ball-averaging operator on a
//! flat torus, and its level sets drive the eigenvalue counting in
//! [`crate::spectral::weyl`].

use crate::error::{invalid, Error, Result};
use crate::quad;
use std::f64::consts::PI;

/// Radius below which the power series is used for every dimension.
const SERIES_RADIUS: f64 = 1.0;
/// Radius below which `2 J1(r) / r` is summed as a power series.
const J1_SERIES_RADIUS: f64 = 12.0;
/// Radial scan step for level sets and suprema.
const SCAN_STEP_R: f64 = 0.0025;
/// Landau's bound `|J_ν(x)| ≤ c x^{-1/3}`, uniform in `ν > 0`. (The
/// smaller constant 0.6749 belongs to the `ν^{-1/3}` bound.)
const LANDAU_C: f64 = 0.785_746_9;

/// One evaluation of the symbol, kept for tabulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEval {
    pub d: usize,
    pub s: f64,
    pub value: f64,
}

impl GammaEval {
    pub fn new(d: usize, s: f64) -> Result<Self> {
        Ok(Self {
            d,
            s,
            value: gamma_d(d, s)?,
        })
    }
}

fn check_dim(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::DimensionUnsupported(d))
    }
}

/// Power series `Σ_k (-s/4)^k Γ(d/2+1) / (k! Γ(k+d/2+1))`.
fn gamma_series(d: usize, s: f64) -> f64 {
    let nu1 = d as f64 / 2.0 + 1.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..200 {
        let kf = k as f64;
        term *= -s / 4.0 / ((kf + 1.0) * (kf + nu1));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Hankel asymptotic expansion of `J_1(r)` for large `r`.
fn bessel_j1_asymptotic(r: f64) -> f64 {
    let mu = 4.0;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let kf = k as f64;
            a *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * r);
        }
        if a.abs() > last {
            break;
        }
        last = a.abs();
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = r - 0.75 * PI;
    (2.0 / (PI * r)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `Γ_d(s)` from its closed radial form.
///
/// d = 1: `sin r / r`; d = 2: `2 J1(r) / r`; d = 3: `3 (sin r − r cos r) / r³`,
/// with `r = √s`. Near the origin all three use the power series.
pub fn gamma_d(d: usize, s: f64) -> Result<f64> {
    check_dim(d)?;
    if !(s >= 0.0) || !s.is_finite() {
        return Err(invalid("s", format!("must be finite and nonnegative, got {s}")));
    }
    let r = s.sqrt();
    if r < SERIES_RADIUS {
        return Ok(gamma_series(d, s));
    }
    Ok(match d {
        1 => r.sin() / r,
        2 => {
            if r < J1_SERIES_RADIUS {
                gamma_series(2, s)
            } else {
                2.0 * bessel_j1_asymptotic(r) / r
            }
        }
        _ => 3.0 * (r.sin() - r * r.cos()) / (r * r * r),
    })
}

/// Radius-squared evaluation that skips validation; `d` must be 1..=3.
pub(crate) fn gamma_unchecked(d: usize, s: f64) -> f64 {
    gamma_d(d, s).expect("validated dimension")
}

/// Volume of the unit ball in `R^d`, `π^{d/2} / Γ(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Direct quadrature of `(1/c_d) ∫_{|y|≤1} cos(y·ξ) dy`.
///
/// Slicing the ball perpendicular to `ξ` and substituting `y = sin θ` gives
/// `(c_{d-1}/c_d) ∫_{-π/2}^{π/2} cos^d θ cos(r sin θ) dθ`, a smooth integrand
/// handled by adaptive Gauss–Kronrod. Works for any `d ≥ 1`.
pub fn gamma_quadrature_oracle(d: usize, s: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::DimensionUnsupported(0));
    }
    if !(s >= 0.0) {
        return Err(invalid("s", "must be nonnegative"));
    }
    let r = s.sqrt();
    let ratio = unit_ball_volume(d - 1) / unit_ball_volume(d);
    let integral = quad::adaptive(
        |t| t.cos().powi(d as i32) * (r * t.sin()).cos(),
        -0.5 * PI,
        0.5 * PI,
        1e-13,
    )?;
    Ok(ratio * integral)
}

/// `Φ_h(s) = 2(d+2)(1 − Γ_d(s)) / h²`.
pub fn phi_h(d: usize, h: f64, s: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid("h", format!("must be positive, got {h}")));
    }
    let g = gamma_d(d, s)?;
    Ok(2.0 * (d as f64 + 2.0) * (1.0 - g) / (h * h))
}

/// Upper bound on `|Γ_d(r²)|` valid for every `r > 0`; decreasing in `r`.
fn envelope(d: usize, r: f64) -> f64 {
    match d {
        1 => 1.0 / r,
        2 => 2.0 * LANDAU_C * r.powf(-4.0 / 3.0),
        _ => 3.0 * (1.0 + r) / (r * r * r),
    }
}

/// `{s ≥ 0 : Γ_d(s) ≥ c}` as sorted disjoint closed intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperLevelSet {
    pub d: usize,
    pub threshold: f64,
    pub intervals: Vec<(f64, f64)>,
    /// For `c ≤ 0` the set is unbounded; the scan stops at this `s`.
    pub truncated_at: Option<f64>,
}

impl SuperLevelSet {
    pub fn contains(&self, s: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= s && s <= b)
            || self.truncated_at.is_some_and(|t| s > t && gamma_unchecked(self.d, s) >= self.threshold)
    }

    /// `Σ (s⁺^{p} − s⁻^{p})` over the intervals.
    pub fn power_measure(&self, p: f64) -> f64 {
        self.intervals.iter().map(|&(a, b)| b.powf(p) - a.powf(p)).sum()
    }
}

fn bisect_s(d: usize, c: f64, mut lo: f64, mut hi: f64) -> f64 {
    // Invariant: sign(Γ(lo) − c) != sign(Γ(hi) − c).
    let f_lo = gamma_unchecked(d, lo) - c;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
        let f_mid = gamma_unchecked(d, mid) - c;
        if (f_mid >= 0.0) == (f_lo >= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Super-level set of `Γ_d` at threshold `c ∈ (−1, 1]`.
pub fn super_level_set(d: usize, c: f64) -> Result<SuperLevelSet> {
    check_dim(d)?;
    if c > 1.0 {
        return Err(Error::EmptyLevelSet(c));
    }
    if !(c > -1.0) {
        return Err(invalid("c", format!("threshold must exceed -1, got {c}")));
    }
    if c == 1.0 {
        return Ok(SuperLevelSet {
            d,
            threshold: c,
            intervals: vec![(0.0, 0.0)],
            truncated_at: None,
        });
    }
    let (r_max, truncated) = if c > 0.0 {
        // Smallest r beyond which the envelope stays below c.
        let mut r = 1.0;
        while envelope(d, r) >= c {
            r *= 1.25;
        }
        (r, false)
    } else {
        (100.0, true)
    };
    let mut intervals = Vec::new();
    let mut start = 0.0;
    let mut inside = true;
    let steps = (r_max / SCAN_STEP_R).ceil() as usize;
    let mut s_prev = 0.0;
    for i in 1..=steps {
        let r = i as f64 * SCAN_STEP_R;
        let s = r * r;
        let above = gamma_unchecked(d, s) >= c;
        if above != inside {
            let root = bisect_s(d, c, s_prev, s);
            if inside {
                intervals.push((start, root));
            } else {
                start = root;
            }
            inside = above;
        }
        s_prev = s;
    }
    let s_end = r_max * r_max;
    if inside {
        intervals.push((start, s_end));
    }
    Ok(SuperLevelSet {
        d,
        threshold: c,
        intervals,
        truncated_at: truncated.then_some(s_end),
    })
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..100 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    f(0.5 * (a + b)).max(f1).max(f2)
}

/// `sup_{s ≥ s_min} |Γ_d(s)|`, located by a radial scan with golden-section
/// refinement of each local maximum. Strictly below 1 for `s_min > 0`.
pub fn gamma_sup_bound(d: usize, s_min: f64) -> Result<f64> {
    check_dim(d)?;
    if !(s_min > 0.0) {
        return Err(invalid("s_min", "must be positive"));
    }
    let r0 = s_min.sqrt();
    let abs_g = |r: f64| gamma_unchecked(d, r * r).abs();
    let mut best = abs_g(r0);
    let mut r = r0;
    let mut prev = best;
    let mut rising = false;
    while envelope(d, r) > best {
        let next_r = r + SCAN_STEP_R;
        let v = abs_g(next_r);
        if v < prev && rising {
            best = best.max(golden_max(abs_g, (r - SCAN_STEP_R).max(r0), next_r));
        }
        rising = v > prev;
        prev = v;
        r = next_r;
    }
    let below_one = f64::from_bits(1f64.to_bits() - 1);
    Ok(best.min(below_one))
}

/// The floor `γ₀ = −min_s Γ_d(s)`, measured rather than assumed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFloor {
    pub d: usize,
    pub gamma0: f64,
    pub s_at: f64,
}

pub fn gamma_floor(d: usize) -> Result<GammaFloor> {
    check_dim(d)?;
    // The global minimum sits on the first negative lobe (r < 2π for d ≤ 3).
    let neg = |r: f64| -gamma_unchecked(d, r * r);
    let mut best_r = 0.0;
    let mut best = f64::NEG_INFINITY;
    let mut r = 0.0;
    while r < 4.0 * PI {
        let v = neg(r);
        if v > best {
            best = v;
            best_r = r;
        }
        r += SCAN_STEP_R;
    }
    let lo = (best_r - SCAN_STEP_R).max(0.0);
    let hi = best_r + SCAN_STEP_R;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if neg(m1) < neg(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let r_star = 0.5 * (a + b);
    Ok(GammaFloor {
        d,
        gamma0: neg(r_star),
        s_at: r_star * r_star,
    })
}

/// `inf_{s>0} 2(d+2)(1 − Γ_d(s)) / min(s, 1)`: the constant `c₁` with
/// `Φ_h(h²λ) ≥ c₁ min(λ, h⁻²)` for every `h` and `λ`.
pub fn phi_lower_constant(d: usize) -> Result<f64> {
    check_dim(d)?;
    let k = 2.0 * (d as f64 + 2.0);
    // For s ≥ s_tail, 1 − Γ ≥ 1 − sup|Γ| on the tail.
    let s_tail = 1.0e4;
    let tail = k * (1.0 - gamma_sup_bound(d, s_tail)?);
    let mut best = tail;
    let n = 200_000;
    let log_lo = (1e-8f64).ln();
    let log_hi = s_tail.ln();
    for i in 0..=n {
        let s = (log_lo + (log_hi - log_lo) * i as f64 / n as f64).exp();
        let v = k * (1.0 - gamma_unchecked(d, s)) / s.min(1.0);
        best = best.min(v);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_at_zero() {
        for d in 1..=3 {
            assert_eq!(gamma_d(d, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn first_zero_in_one_dimension() {
        assert!(gamma_d(1, PI * PI).unwrap().abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(gamma_d(4, 1.0), Err(Error::DimensionUnsupported(4)));
        assert!(matches!(gamma_d(1, -1.0), Err(Error::InvalidParameter { .. })));
        assert!(matches!(phi_h(1, 0.0, 1.0), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        for d in [1, 3] {
            let s = SERIES_RADIUS * SERIES_RADIUS;
            let r = SERIES_RADIUS;
            let closed = if d == 1 {
                r.sin() / r
            } else {
                3.0 * (r.sin() - r * r.cos()) / r.powi(3)
            };
            assert!((gamma_series(d, s) - closed).abs() < 1e-15);
        }
        let r = J1_SERIES_RADIUS;
        let diff = gamma_series(2, r * r) - 2.0 * bessel_j1_asymptotic(r) / r;
        assert!(diff.abs() < 1e-11, "{diff}");
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_h(1, 0.1, 0.0).unwrap(), 0.0);
        let v = phi_h(1, 0.1, 0.01).unwrap();
        let expect = 6.0 * (1.0 - 0.1f64.sin() / 0.1) / 0.01;
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 0.99950).abs() < 5e-6);
        let h = 0.05;
        let v2 = phi_h(2, h, h * h * 2.0).unwrap();
        assert!((v2 - 2.0).abs() < 2.0 * h * h);
    }

    #[test]
    fn level_set_examples() {
        let one = super_level_set(1, 1.0).unwrap();
        assert_eq!(one.intervals, vec![(0.0, 0.0)]);
        let zero = super_level_set(1, 0.0).unwrap();
        assert!(zero.intervals[0].0 == 0.0);
        assert!((zero.intervals[0].1 - PI * PI).abs() < 1e-8);
        assert!(zero.truncated_at.is_some());
        let half = super_level_set(2, 0.5).unwrap();
        assert_eq!(half.intervals.len(), 1);
        let s0 = half.intervals[0].1;
        assert!((gamma_d(2, s0).unwrap() - 0.5).abs() < 1e-10);
        assert!(matches!(super_level_set(1, 1.5), Err(Error::EmptyLevelSet(_))));
        assert!(matches!(super_level_set(1, -1.0), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn sup_bound_examples() {
        let v = gamma_sup_bound(1, PI * PI / 4.0).unwrap();
        assert!((v - 2.0 / PI).abs() < 1e-12);
        assert!(gamma_sup_bound(1, 1e-30).unwrap() < 1.0);
        assert!(gamma_sup_bound(2, 50.0).unwrap() < 0.3);
    }

    #[test]
    fn floor_is_strictly_above_minus_one() {
        for d in 1..=3 {
            let f = gamma_floor(d).unwrap();
            assert!(f.gamma0 > 0.0 && f.gamma0 < 1.0);
        }
        // sin r / r attains its minimum where tan r = r, r ≈ 4.4934.
        let f1 = gamma_floor(1).unwrap();
        assert!((f1.s_at.sqrt() - 4.493_409_457_909_064).abs() < 1e-6);
    }

    #[test]
    fn phi_lower_constant_is_positive() {
        for d in 1..=3 {
            let c1 = phi_lower_constant(d).unwrap();
            assert!(c1 > 0.0 && c1 <= 1.0 + 1e-9, "d={d} c1={c1}");
        }
    }
}
