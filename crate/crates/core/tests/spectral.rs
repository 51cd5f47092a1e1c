use ballwalk::geometry::Manifold;
use ballwalk::kernels::KernelKind;
use ballwalk::linalg::{jacobi_eigen, Mat};
use ballwalk::spectral::*;
use ballwalk::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn circle() -> Manifold {
    Manifold::flat_torus(vec![2.0 * PI]).unwrap()
}

fn circle_torus() -> ballwalk::geometry::flat::FlatTorus {
    ballwalk::geometry::flat::FlatTorus::new(vec![2.0 * PI]).unwrap()
}

// Independent oracle: Fourier transform of the interval indicator.
fn sinc_symbol(h: f64, k: f64) -> f64 {
    if k == 0.0 {
        1.0
    } else {
        (h * k).sin() / (h * k)
    }
}

#[test]
fn grid_operator_reproduces_circle_spectrum() {
    let op = assemble_operator(&circle(), 0.1, KernelKind::BallWalk, Basis::Grid { n: 512 }).unwrap();
    assert!(op.markov_defect < 1e-6);
    assert!(op.matrix.asymmetry() < 1e-12);
    let r = eigen_decompose(&[op], false).unwrap();
    assert!((r.mu[0] - 1.0).abs() < 1e-8);
    for k in 1..=10 {
        let exact = sinc_symbol(0.1, k as f64);
        for idx in [2 * k - 1, 2 * k] {
            assert!((r.mu[idx] - exact).abs() < 1e-6, "k={k}: {} vs {exact}", r.mu[idx]);
        }
    }
}

#[test]
fn cell_operator_is_markov_and_needs_resolution() {
    let op = assemble_operator(&circle(), 0.1, KernelKind::BallWalk, Basis::Cells { n: 512 }).unwrap();
    for i in 0..op.raw.rows {
        assert!((op.raw.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let r = eigen_decompose(&[op], false).unwrap();
    assert!((r.mu[0] - 1.0).abs() < 1e-10);
    // Piecewise-constant smoothing only perturbs low modes at second order.
    assert!((r.mu[1] - sinc_symbol(0.1, 1.0)).abs() < 1e-4);
    match assemble_operator(&circle(), 0.1, KernelKind::BallWalk, Basis::Cells { n: 256 }) {
        Err(Error::Resolution { required, actual }) => assert!(required > 256 && actual == 256),
        other => panic!("expected resolution error, got {other:?}"),
    }
}

#[test]
fn two_by_two_eigenvalues() {
    let a = Mat::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 1.0 });
    let mut v = jacobi_eigen(&a, false).unwrap().values;
    v.sort_by(f64::total_cmp);
    assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 3.0).abs() < 1e-14);
}

#[test]
fn exact_torus_examples() {
    let r = torus_spectrum_exact(&circle_torus(), 0.1, 4000.0).unwrap();
    assert_eq!(r.mu[0], 1.0);
    assert!((r.mu[1] - 0.998_334_17).abs() < 1e-8);
    assert!((r.tau[1] - 0.166_583_3).abs() < 1e-6);
    // Simplicity margin ≈ h²λ₁/6.
    assert!(((r.mu[0] - r.mu[1]) / (0.01 / 6.0) - 1.0).abs() < 1e-2);
    let floor = r.floor();
    assert!(floor > -0.25 && floor < 0.0);
}

#[test]
fn flat_rate_is_second_order() {
    let t = circle_torus();
    let gaps: Vec<Vec<f64>> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| torus_spectrum_exact(&t, h, 20.0).unwrap().gap[1..=3].to_vec())
        .collect();
    for k in 0..3 {
        for w in gaps.windows(2) {
            let ratio = w[0][k] / w[1][k];
            assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
        }
    }
}

#[test]
fn sphere_zonal_matches_closed_form_and_grid() {
    for h in [0.05, 0.1, 0.3] {
        let mu = sphere_zonal_eigenvalues(h, 12).unwrap();
        assert!((mu[0] - 1.0).abs() < 1e-14);
        assert!((mu[1] - 0.5 * (1.0 + f64::cos(h))).abs() < 1e-14);
        assert!(mu.iter().all(|&m| m <= 1.0 + 1e-14 && m > -0.5));
    }
    let r = sphere_spectrum_zonal(0.1, 6).unwrap();
    assert_eq!(r.mu.len(), 49);
    assert!((r.tau[1] - 0.25).abs() < 0.01 * 0.25 * 4.0);
    // Grid eigensolve of the rotation-invariant block.
    let op = assemble_operator(&Manifold::sphere2(), 0.1, KernelKind::BallWalk, Basis::Zonal { n: 24 }).unwrap();
    assert!(op.markov_defect < 1e-6);
    let g = eigen_decompose(&[op], false).unwrap();
    let exact = sphere_zonal_eigenvalues(0.1, 8).unwrap();
    for l in 0..8 {
        assert!((g.mu[l] - exact[l]).abs() < 1e-10, "l={l}");
    }
    assert_eq!(g.lambda_ref[2], 6.0);
}

#[test]
fn sphere_rate_is_second_order() {
    let gaps: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| sphere_spectrum_zonal(h, 2).unwrap().gap[1])
        .collect();
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }
    assert!(sphere_zonal_eigenvalues(1.0, 2).is_err());
}

#[test]
fn weyl_count_examples() {
    let t = circle_torus();
    let h = 0.05;
    let r = torus_spectrum_exact(&t, h, 4e4).unwrap();
    assert_eq!(weyl_count(&r, 0.0, 0.1).unwrap(), 1);
    let tau = 10.0;
    let brute = (-2000i64..=2000).filter(|&k| sinc_symbol(h, k as f64) >= 1.0 - tau * h * h).count();
    assert_eq!(weyl_count(&r, tau, 0.1).unwrap(), brute);
    assert!(matches!(weyl_count(&r, 0.95 / (h * h), 0.1), Err(Error::Range { .. })));
    let m = circle();
    assert_eq!(weyl_phase_volume(&m, h, 0.0, 0.1).unwrap(), 0.0);
    let pv = weyl_phase_volume(&m, h, tau, 0.1).unwrap();
    assert!((pv - brute as f64).abs() <= 2.0);
    // Small τ: the phase volume counts Laplace modes below 6τ.
    let small = weyl_phase_volume(&m, h, 1.5, 0.1).unwrap();
    assert!((small - 2.0 * 9f64.sqrt()).abs() < 0.05, "{small}");
}

#[test]
fn weyl_constant_is_stable_in_two_dimensions() {
    let t = ballwalk::geometry::flat::FlatTorus::new(vec![2.0 * PI, 2.0 * PI]).unwrap();
    let m = Manifold::FlatTorus(t.clone());
    let taus: Vec<f64> = (0..=6).map(|p| 2f64.powi(p)).collect();
    let c: Vec<f64> = [0.1, 0.05]
        .iter()
        .map(|&h| {
            let r = torus_spectrum_exact(&t, h, 64.0 * 6.0 / (h * h) * 4.0).unwrap();
            weyl_constant(&weyl_table(&r, &m, &taus, 0.1).unwrap())
        })
        .collect();
    let ratio = c[1] / c[0];
    assert!((0.5..=1.5).contains(&ratio), "{c:?}");
}

#[test]
fn resolvent_gap_scales_quadratically() {
    let t = circle_torus();
    let region = ResolventRegion { epsilon: 0.25, ..Default::default() };
    for z in [(-1.0, 0.0), (-0.25, 0.0), (0.5, 0.0), (2.5, 0.0), (0.5, 2.0)] {
        let g: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| resolvent_gap_torus(&t, h, z, region).unwrap().value)
            .collect();
        for w in g.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.0..=5.0).contains(&ratio), "z={z:?} ratio {ratio}");
        }
    }
    // Brute-force oracle at z = −1 over the first modes.
    let h = 0.1;
    let phi = |k: f64| 6.0 * (1.0 - sinc_symbol(h, k)) / (h * h);
    let brute = (1..2000)
        .map(|k| {
            let k = k as f64;
            (1.0 / (-1.0 - phi(k)) - 1.0 / (-1.0 - k * k)).abs()
        })
        .fold(0.0, f64::max);
    let gap = resolvent_gap_torus(&t, h, (-1.0, 0.0), region).unwrap();
    assert!((gap.sup_modes - brute).abs() < 1e-12 * brute.max(1.0));
    assert!(gap.tail_bound < gap.sup_modes);
}

#[test]
fn resolvent_region_is_enforced() {
    let t = circle_torus();
    let default = ResolventRegion::default();
    assert!(matches!(resolvent_gap_torus(&t, 0.1, (1.2, 0.0), default), Err(Error::ForbiddenRegion { .. })));
    assert!(matches!(resolvent_gap_torus(&t, 0.1, (100.5, 1.0), default), Err(Error::ForbiddenRegion { .. })));
    assert!(resolvent_gap_torus(&t, 0.1, (-1.0, 0.0), default).is_ok());
}

#[test]
fn sup_norm_growth_examples() {
    let op = assemble_operator(&circle(), 0.2, KernelKind::BallWalk, Basis::Grid { n: 128 }).unwrap();
    let r = eigen_decompose(&[op], true).unwrap();
    let flat = supnorm_growth(&r, 40).unwrap();
    assert!(flat.exponent.abs() < 0.05, "{}", flat.exponent);
    let sphere = supnorm_growth(&sphere_spectrum_zonal(0.1, 10).unwrap(), 100).unwrap();
    assert!(sphere.exponent <= sphere.bound + 0.1);
    let exact = torus_spectrum_exact(&circle_torus(), 0.1, 4.0).unwrap();
    assert!(matches!(supnorm_growth(&exact, 100), Err(Error::InsufficientData(_))));
}

#[test]
fn revolution_metropolis_blocks() {
    let m = Manifold::revolution_torus(2.0, 1.0).unwrap();
    let ops = assemble_azimuthal(&m, 0.1, KernelKind::Metropolis, 64, &[0, 1, 2]).unwrap();
    for op in &ops {
        assert!(op.matrix.asymmetry() < 1e-12);
        assert!(op.markov_defect < 1e-6);
        assert!(op.atoms.iter().all(|&a| (0.0..1e-3).contains(&a)));
    }
    let r = eigen_decompose(&ops, true).unwrap();
    assert!((r.mu[0] - 1.0).abs() < 1e-8);
    assert!(r.mu[0] - r.mu[1] > 1e-4);
    assert!(r.floor() > -0.5);
    // λ₁ on the (2, 1) torus, from the separated reference.
    assert!((r.lambda_ref[1] - 0.2494).abs() < 1e-3);
    assert!(r.gap[1] < 1e-4);
    let growth = supnorm_growth(&r, 60).unwrap();
    assert!(growth.exponent <= 0.6, "{}", growth.exponent);
    let walk = assemble_azimuthal(&m, 0.1, KernelKind::BallWalk, 64, &[0]).unwrap();
    let w = eigen_decompose(&walk, false).unwrap();
    assert!((w.mu[0] - 1.0).abs() < 1e-8);
}

#[test]
fn metropolis_difference_is_cubic() {
    let m = Manifold::revolution_torus(2.0, 1.0).unwrap();
    let norms: Vec<f64> = [(0.2, 64), (0.1, 128)]
        .iter()
        .map(|&(h, n)| {
            let d = azimuthal_difference(&m, h, n, &[0, 1]).unwrap();
            d.iter().map(|b| ballwalk::linalg::spectral_norm(b).unwrap()).fold(0.0, f64::max)
        })
        .collect();
    let slope = (norms[0] / norms[1]).log2();
    assert!((slope - 3.0).abs() < 0.3, "{slope}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cardinals_partition_unity(x in 0.0f64..5.0, half in 2usize..40) {
        let c = PeriodicCardinal::new(2 * half, 5.0);
        prop_assert!((c.eval(x).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weyl_count_is_monotone(h in 0.05f64..0.3, a in 0.0f64..8.0, b in 0.0f64..8.0) {
        let r = torus_spectrum_exact(&circle_torus(), h, 200.0 / (h * h)).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(weyl_count(&r, lo, 0.1).unwrap() <= weyl_count(&r, hi, 0.1).unwrap());
    }

    #[test]
    fn exact_spectrum_stays_in_band(h in 0.01f64..1.0) {
        let r = torus_spectrum_exact(&circle_torus(), h, 100.0 / (h * h)).unwrap();
        prop_assert!(r.mu.iter().all(|&m| m <= 1.0 && m > -0.22));
    }
}
