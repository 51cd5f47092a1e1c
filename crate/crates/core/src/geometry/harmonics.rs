//! Legendre polynomials and real spherical harmonics.

use std::f64::consts::PI;

/// `P_l(x)` by the three-term recurrence.
pub fn legendre(l: usize, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=l {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// `P_0(x), …, P_{l_max}(x)`.
pub fn legendre_table(l_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(l_max + 1);
    out.push(1.0);
    if l_max >= 1 {
        out.push(x);
    }
    for k in 2..=l_max {
        let kf = k as f64;
        let p = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
        out.push(p);
    }
    out
}

/// Orthonormal associated Legendre factor `N_lm P_l^m(x)` for `m ≥ 0`,
/// normalized so that `∫_{S²} (p_lm(cos θ))² dΩ / (2π) = 1`.
fn normalized_assoc_legendre(l: usize, m: usize, x: f64) -> f64 {
    let sx = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for k in 1..=m {
        let kf = k as f64;
        pmm *= ((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * sx;
    }
    if l == m {
        return pmm;
    }
    let mf = m as f64;
    let mut p_prev = pmm;
    let mut p = x * (2.0 * mf + 3.0).sqrt() * pmm;
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let next = a * (x * p - b * p_prev);
        p_prev = p;
        p = next;
    }
    p
}

/// Real orthonormal spherical harmonic `Y_{l,m}` at the unit vector `u`.
pub fn real_spherical_harmonic(l: usize, m: i64, u: [f64; 3]) -> f64 {
    let z = u[2].clamp(-1.0, 1.0);
    let phi = u[1].atan2(u[0]);
    let am = m.unsigned_abs() as usize;
    assert!(am <= l, "|m| must not exceed l");
    let p = normalized_assoc_legendre(l, am, z);
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => p,
        std::cmp::Ordering::Greater => std::f64::consts::SQRT_2 * p * (am as f64 * phi).cos(),
        std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * p * (am as f64 * phi).sin(),
    }
}

/// `(l, m)` for the flat index `k = l² + l + m`.
pub fn sphere_index(k: usize) -> (usize, i64) {
    let l = (k as f64).sqrt().floor() as usize;
    let l = if (l + 1) * (l + 1) <= k { l + 1 } else { l };
    let l = if l * l > k { l - 1 } else { l };
    (l, k as i64 - (l * l + l) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_values() {
        assert_eq!(legendre(0, 0.3), 1.0);
        assert!((legendre(2, 0.5) - (-0.125)).abs() < 1e-15);
        assert!((legendre(3, 1.0) - 1.0).abs() < 1e-15);
        let t = legendre_table(5, 0.7);
        for (l, v) in t.iter().enumerate() {
            assert!((v - legendre(l, 0.7)).abs() < 1e-15);
        }
    }

    #[test]
    fn index_roundtrip() {
        let mut k = 0;
        for l in 0..10usize {
            for m in -(l as i64)..=(l as i64) {
                assert_eq!(sphere_index(k), (l, m));
                k += 1;
            }
        }
    }

    #[test]
    fn low_degree_closed_forms() {
        let u = [0.3, -0.4, (1.0f64 - 0.25).sqrt()];
        let c = (3.0 / (4.0 * PI)).sqrt();
        assert!((real_spherical_harmonic(1, 0, u) - c * u[2]).abs() < 1e-14);
        assert!((real_spherical_harmonic(1, 1, u) - c * u[0]).abs() < 1e-14);
        assert!((real_spherical_harmonic(1, -1, u) - c * u[1]).abs() < 1e-14);
    }
}
