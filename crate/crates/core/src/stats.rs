//! Small statistical helpers used by the experiments.

use crate::error::{Error, Result};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residual_rms: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InsufficientData(format!("linear fit needs ≥ 2 paired points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitFailed("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, r_squared, residual_rms: (ss_res / nf).sqrt() })
}

/// Pearson chi-square goodness of fit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Chi-square of integer `counts` against cell probabilities `probs`.
pub fn chi_square(counts: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    if counts.len() != probs.len() || counts.len() < 2 {
        return Err(Error::InsufficientData("chi-square needs ≥ 2 matching cells".into()));
    }
    let total: u64 = counts.iter().sum();
    let psum: f64 = probs.iter().sum();
    let mut stat = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        let e = total as f64 * p / psum;
        if e <= 0.0 {
            return Err(Error::InsufficientData("a cell has zero expected count".into()));
        }
        stat += (c as f64 - e).powi(2) / e;
    }
    let dof = counts.len() - 1;
    Ok(ChiSquare { statistic: stat, dof, p_value: chi_square_sf(stat, dof) })
}

pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    (1.0 - dist.cdf(statistic)).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KolmogorovSmirnov {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KolmogorovSmirnov {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let lam = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    KolmogorovSmirnov { statistic: d, p_value: kolmogorov_sf(lam) }
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sided upper confidence bound for a proportion with zero successes in
/// `n` trials: `1 − α^{1/n}`.
pub fn zero_count_upper_bound(n: u64, alpha: f64) -> f64 {
    1.0 - alpha.powf(1.0 / n as f64)
}

/// Normal-approximation half-width `z·√(p(1−p)/n)`.
pub fn binomial_half_width(p: f64, n: u64, z: f64) -> f64 {
    z * (p * (1.0 - p) / n as f64).sqrt()
}

pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 - 0.2 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 0.2).abs() < 1e-14 && (f.intercept - 1.5).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn chi_square_reference_value() {
        // P(χ²₂ > x) = e^{−x/2}.
        assert!((chi_square_sf(3.0, 2) - (-1.5f64).exp()).abs() < 1e-12);
        let c = chi_square(&[50, 50], &[0.5, 0.5]).unwrap();
        assert_eq!(c.statistic, 0.0);
    }

    #[test]
    fn kolmogorov_tail() {
        // Standard table value: P(K > 1.358) ≈ 0.05.
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn zero_count_bound() {
        let b = zero_count_upper_bound(1000, 0.05);
        assert!((b - (1.0 - 0.05f64.powf(1e-3))).abs() < 1e-15 && b < 3.1e-3);
    }
}
