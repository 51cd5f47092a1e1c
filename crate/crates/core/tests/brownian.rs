use ballwalk::brownian::*;
use ballwalk::geometry::{Manifold, Point};
use ballwalk::kernels::{KernelKind, WalkConfig, Walker};
use ballwalk::montecarlo::{run_chain, Partition};
use ballwalk::quad::GaussLegendre;
use ballwalk::rng::Substreams;
use ballwalk::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn circle() -> Manifold {
    Manifold::flat_torus(vec![2.0 * PI]).unwrap()
}

fn walker(m: &Manifold, h: f64) -> Walker<'_> {
    Walker::new(m, WalkConfig::new(m, h, 0, KernelKind::Metropolis).unwrap()).unwrap()
}

#[test]
fn step_count_examples() {
    assert_eq!(n_steps(1.0, 0.1, 1).unwrap(), 300);
    assert_eq!(n_steps(0.5, 0.05, 2).unwrap(), 800);
    assert!(n_steps(0.0, 0.1, 1).is_err());
}

#[test]
fn embedding_anchors_and_interpolates() {
    let m = circle();
    let h = 0.1;
    let cfg = WalkConfig::new(&m, h, 4, KernelKind::Metropolis).unwrap();
    let trace = run_chain(&m, cfg, Point([6.2, 0.0, 0.0]), 200, &mut Substreams::new(4).stream(0)).unwrap();
    let dt = time_step(h, 1);
    let grid: Vec<f64> = (0..=200).map(|j| j as f64 * dt).collect();
    let anchored = embed_path(&m, &trace, &grid).unwrap();
    assert_eq!(anchored, trace.states);
    for j in 0..200 {
        let (a, b) = (trace.states[j], trace.states[j + 1]);
        let mid = embed_path(&m, &trace, &[(j as f64 + 0.5) * dt]).unwrap()[0];
        let step = ballwalk::geometry::flat::wrap_delta(b.0[0] - a.0[0], 2.0 * PI);
        let euclid = (a.0[0] + 0.5 * step).rem_euclid(2.0 * PI);
        assert!(m.distance(mid, Point([euclid, 0.0, 0.0])).unwrap() < 1e-12);
        let quarter = embed_path(&m, &trace, &[(j as f64 + 0.25) * dt]).unwrap()[0];
        let speed = m.distance(a, quarter).unwrap() / (0.25 * dt);
        assert!(speed <= 3.0 / h + 1e-9);
    }
    assert!(matches!(embed_path(&m, &trace, &[201.0 * dt]), Err(Error::Range { .. })));
}

#[test]
fn embedding_on_curved_surfaces_stays_on_geodesics() {
    let m = Manifold::revolution_torus(2.0, 1.0).unwrap();
    let cfg = WalkConfig::new(&m, 0.2, 8, KernelKind::Metropolis).unwrap();
    let trace = run_chain(&m, cfg, Point([0.5, 1.0, 0.0]), 20, &mut Substreams::new(8).stream(0)).unwrap();
    let dt = time_step(0.2, 2);
    for j in 0..20 {
        let (a, b) = (trace.states[j], trace.states[j + 1]);
        let p = embed_path(&m, &trace, &[(j as f64 + 0.3) * dt]).unwrap()[0];
        let total = m.distance(a, b).unwrap();
        if total > 1e-9 {
            assert!((m.distance(a, p).unwrap() - 0.3 * total).abs() < 1e-6);
            assert!((m.distance(p, b).unwrap() - 0.7 * total).abs() < 1e-6);
        }
    }
}

fn sphere_integral(f: impl Fn(Point) -> f64) -> f64 {
    let gl = GaussLegendre::new(64);
    let mut total = 0.0;
    for (z, wz) in gl.on(-1.0, 1.0) {
        let rho = (1.0 - z * z).sqrt();
        for j in 0..128 {
            let phi = 2.0 * PI * j as f64 / 128.0;
            total += wz * 2.0 * PI / 128.0 * f(Point([rho * phi.cos(), rho * phi.sin(), z]));
        }
    }
    total
}

#[test]
fn heat_kernel_normalization_and_limits() {
    let m = circle();
    let hk = HeatKernel::new(&m, DEFAULT_T_MIN).unwrap();
    let x = Point([1.0, 0.0, 0.0]);
    for t in [0.05, 0.25, 1.0] {
        let gl = GaussLegendre::new(200);
        let total = gl.integrate(0.0, 2.0 * PI, |y| hk.eval(t, x, Point([y, 0.0, 0.0])).unwrap());
        assert!((total - 1.0).abs() < 1e-8, "t={t}: {total}");
    }
    // Periodized Gaussian oracle.
    let t = 0.3;
    let gauss: f64 = (-20..=20)
        .map(|k| {
            let u = 0.7 + 2.0 * PI * k as f64;
            (-u * u / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
        })
        .sum();
    assert!((hk.eval(t, x, Point([1.7, 0.0, 0.0])).unwrap() - gauss).abs() < 1e-12);
    assert!((hk.eval(60.0, x, Point([4.0, 0.0, 0.0])).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-12);
    assert!(matches!(hk.eval(0.01, x, x), Err(Error::Truncation { .. })));
    assert!(hk.tail_bound(0.05) < 1e-10);

    let s = Manifold::sphere2();
    let hs = HeatKernel::new(&s, DEFAULT_T_MIN).unwrap();
    let north = Point([0.0, 0.0, 1.0]);
    for t in [0.1, 0.5] {
        let total = sphere_integral(|y| hs.eval(t, north, y).unwrap());
        assert!((total - 1.0).abs() < 1e-8, "t={t}: {total}");
    }
    assert!((hs.eval(60.0, north, Point([1.0, 0.0, 0.0])).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-12);
}

#[test]
fn heat_kernel_semigroup_identity() {
    let m = circle();
    let hk = HeatKernel::new(&m, DEFAULT_T_MIN).unwrap();
    let (x, y) = (Point([0.3, 0.0, 0.0]), Point([2.0, 0.0, 0.0]));
    let gl = GaussLegendre::new(200);
    let conv = gl.integrate(0.0, 2.0 * PI, |z| {
        let z = Point([z, 0.0, 0.0]);
        hk.eval(0.2, x, z).unwrap() * hk.eval(0.3, z, y).unwrap()
    });
    assert!((conv - hk.eval(0.5, x, y).unwrap()).abs() < 1e-6);

    let s = Manifold::sphere2();
    let hs = HeatKernel::new(&s, DEFAULT_T_MIN).unwrap();
    let (a, b) = (Point([0.0, 0.0, 1.0]), Point([0.6, 0.0, 0.8]));
    let conv = sphere_integral(|z| hs.eval(0.2, a, z).unwrap() * hs.eval(0.3, z, b).unwrap());
    assert!((conv - hs.eval(0.5, a, b).unwrap()).abs() < 1e-6);
}

#[test]
fn revolution_heat_kernel_is_normalized() {
    let m = Manifold::revolution_torus(2.0, 1.0).unwrap();
    let hk = HeatKernel::new(&m, 0.5).unwrap();
    let x = Point([0.4, 1.0, 0.0]);
    let (nt, np) = (96, 48);
    let mut total = 0.0;
    let mut lowest = f64::INFINITY;
    for i in 0..nt {
        let th = 2.0 * PI * i as f64 / nt as f64;
        for j in 0..np {
            let v = hk.eval(1.0, x, Point([th, 2.0 * PI * j as f64 / np as f64, 0.0])).unwrap();
            lowest = lowest.min(v);
            total += v * (2.0 + th.cos()) * (2.0 * PI / nt as f64) * (2.0 * PI / np as f64);
        }
    }
    // Profiles carry a ~1e-7 interpolation error, far above 1e-8.
    assert!((total - 1.0).abs() < 1e-6, "{total}");
    assert!(lowest > -1e-6);
}

#[test]
fn clt_examples() {
    let m = circle();
    assert_eq!(clt_error(&m, 0.1, 1.0, 0).unwrap().error, 0.0);
    let errs: Vec<f64> = [0.1, 0.05, 0.025, 0.01].iter().map(|&h| clt_error(&m, h, 1.0, 1).unwrap().error).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]));
    assert!(errs[3] <= 1e-3);
    let c = clt_error(&m, 0.01, 1.0, 1).unwrap();
    assert!((c.chain - (-0.5f64).exp()).abs() < 1e-5);
    // Time scaling: Γ₁(h²λ)^{⌊3t/h²⌋} → e^{−tλ/2} for λ = 1, 4, 9.
    for (j, lam) in [(1, 1.0), (3, 4.0), (5, 9.0)] {
        let c = clt_error(&m, 0.01, 1.0, j).unwrap();
        assert_eq!(c.lambda, lam);
        assert!((c.chain / c.semigroup - 1.0).abs() < 1e-3);
    }
    let s = Manifold::sphere2();
    let se: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&h| clt_error(&s, h, 0.5, 1).unwrap().error).collect();
    assert!(se.windows(2).all(|w| w[1] < w[0]));
    let coeffs = [0.0, 1.0, 0.0, 0.0, 0.5, 0.25];
    let p1 = clt_error_polynomial(&m, 0.1, 1.0, &coeffs).unwrap();
    let p2 = clt_error_polynomial(&m, 0.05, 1.0, &coeffs).unwrap();
    assert!(p2 < p1 && p1 > 0.0);
}

#[test]
fn clt_on_torus_of_revolution_improves_with_h() {
    let m = Manifold::revolution_torus(2.0, 1.0).unwrap();
    let a = clt_error(&m, 0.1, 0.5, 1).unwrap();
    let b = clt_error(&m, 0.05, 0.5, 1).unwrap();
    assert!(b.error < a.error, "{} {}", a.error, b.error);
}

#[test]
fn fdd_marginal_is_uniform_at_large_time() {
    let m = circle();
    let w = walker(&m, 0.3);
    let ens = simulate_paths(&w, Point([0.0; 3]), &[30.0], 20_000, false, &Substreams::new(12)).unwrap();
    let hk = HeatKernel::new(&m, DEFAULT_T_MIN).unwrap();
    let rep = fdd_compare(&ens, &m, &hk, Partition::FlatGrid { cells: 8 }, 16).unwrap();
    for (&o, &p) in rep.observed.iter().zip(&rep.expected) {
        assert!((p - 0.125).abs() < 1e-6);
        let sigma = (p * (1.0 - p) / 20_000.0).sqrt();
        assert!((o as f64 / 20_000.0 - p).abs() < 3.5 * sigma);
    }
    let small = simulate_paths(&w, Point([0.0; 3]), &[1.0], 100, false, &Substreams::new(12)).unwrap();
    assert!(matches!(fdd_compare(&small, &m, &hk, Partition::FlatGrid { cells: 4 }, 8), Err(Error::InsufficientData(_))));
}

#[test]
fn fdd_two_times_passes_chi_square() {
    let m = circle();
    let w = walker(&m, 0.1);
    let ens = simulate_paths(&w, Point([0.0; 3]), &[0.25, 0.5], 20_000, false, &Substreams::new(13)).unwrap();
    let hk = HeatKernel::new(&m, DEFAULT_T_MIN).unwrap();
    let rep = fdd_compare(&ens, &m, &hk, Partition::FlatGrid { cells: 4 }, 24).unwrap();
    assert_eq!(rep.cells, 16);
    assert!(rep.chi_square.p_value > 1e-3, "{:?}", rep.chi_square);
}

#[test]
fn modulus_statistic_trends() {
    let m = circle();
    let w = walker(&m, 0.1);
    let ens = simulate_paths(&w, Point([0.0; 3]), &[1.0], 2_000, true, &Substreams::new(14)).unwrap();
    let eps = 0.5;
    let fr: Vec<f64> = [0.2, 0.05, 0.01]
        .iter()
        .map(|&d| modulus_statistic(&ens, &m, 1.0, d, eps).unwrap().fraction)
        .collect();
    assert!(fr[0] > fr[1] && fr[1] > fr[2], "{fr:?}");
    let short = modulus_statistic(&ens, &m, 0.25, 0.1, eps).unwrap().fraction;
    let long = modulus_statistic(&ens, &m, 1.0, 0.1, eps).unwrap().fraction;
    assert!(long > short);
    // A window of 3 steps covers at most 0.3, so ε = 0.61 > 2·3·h cannot be exceeded.
    let z = modulus_statistic(&ens, &m, 1.0, 3.0 * ens.dt, 0.61).unwrap();
    assert!(z.exact_zero && z.fraction == 0.0);
    assert!(modulus_statistic(&ens, &m, 2.0, 0.1, eps).is_err());
}

#[test]
fn modulus_matches_an_exhaustive_scan() {
    let m = Manifold::revolution_torus(2.0, 1.0).unwrap();
    let w = walker(&m, 0.1);
    let ens = simulate_paths(&w, Point([PI, 0.0, 0.0]), &[0.5], 30, true, &Substreams::new(3)).unwrap();
    let (horizon, eps) = (0.5, 0.35);
    let deltas = [0.01, 0.02, 0.05, 0.1];
    let fast = modulus_statistics(&ens, &m, horizon, &deltas, eps).unwrap();
    let last = (horizon / ens.dt * (1.0 + 1e-12)).floor() as usize;
    for (e, &delta) in fast.iter().zip(&deltas) {
        let window = (delta / ens.dt * (1.0 + 1e-12)).floor() as usize;
        let hits = ens
            .grid
            .as_ref()
            .unwrap()
            .iter()
            .filter(|g| (0..=last).any(|i| (i + 1..=(i + window).min(last)).any(|j| m.distance(g[i], g[j]).unwrap() > eps)))
            .count();
        assert_eq!(e.fraction, hits as f64 / 30.0, "delta {delta}");
    }
    assert!(fast[3].fraction > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_count_brackets_time(t in 0.01f64..5.0, h in 0.005f64..0.5, d in 1usize..4) {
        let n = n_steps(t, h, d).unwrap() as f64;
        let target = (d as f64 + 2.0) * t;
        prop_assert!(n * h * h <= target * (1.0 + 1e-11));
        prop_assert!((n + 1.0) * h * h > target);
    }
}
