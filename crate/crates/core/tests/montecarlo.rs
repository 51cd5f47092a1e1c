use ballwalk::geometry::{Manifold, Point};
use ballwalk::kernels::{KernelKind, WalkConfig, Walker};
use ballwalk::montecarlo::*;
use ballwalk::rng::Substreams;
use ballwalk::spectral::{assemble_operator, Basis};
use ballwalk::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn circle() -> Manifold {
    Manifold::flat_torus(vec![2.0 * PI]).unwrap()
}

fn walker(m: &Manifold, h: f64, seed: u64) -> Walker<'_> {
    Walker::new(m, WalkConfig::new(m, h, seed, KernelKind::Metropolis).unwrap()).unwrap()
}

#[test]
fn chains_are_deterministic_and_finite_speed() {
    let m = circle();
    let cfg = WalkConfig::new(&m, 0.1, 5, KernelKind::Metropolis).unwrap();
    let x0 = Point([1.0, 0.0, 0.0]);
    let empty = run_chain(&m, cfg, x0, 0, &mut Substreams::new(5).stream(0)).unwrap();
    assert_eq!(empty.states, vec![x0]);
    let a = run_chain(&m, cfg, x0, 500, &mut Substreams::new(5).stream(0)).unwrap();
    let b = run_chain(&m, cfg, x0, 500, &mut Substreams::new(5).stream(0)).unwrap();
    assert_eq!(a.states, b.states);
    for w in a.states.windows(2) {
        assert!(m.distance(w[0], w[1]).unwrap() <= 0.1 + 1e-12);
    }
    let thinned = run_chain_with(&walker(&m, 0.1, 5), x0, 500, 10, &mut Substreams::new(5).stream(0)).unwrap();
    assert_eq!(thinned.states.len(), 51);
    assert_eq!(thinned.states[50], a.states[500]);
}

#[test]
fn sphere_time_average_of_degree_one_harmonic_vanishes() {
    let m = Manifold::sphere2();
    let w = walker(&m, 0.5, 3);
    let trace = run_chain_with(&w, Point([0.0, 0.0, 1.0]), 200_000, 1, &mut Substreams::new(3).stream(0)).unwrap();
    // Batch means absorb autocorrelation.
    let z: Vec<f64> = trace.states[20_000..].iter().map(|p| p.0[2]).collect();
    let batches: Vec<f64> = z.chunks(9_000).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let (mean, se) = ballwalk::stats::mean_and_std_error(&batches);
    assert!(mean.abs() < 3.0 * se + 1e-3, "mean {mean} se {se}");
}

#[test]
fn exact_curve_basics() {
    let op = assemble_operator(&circle(), 0.1, KernelKind::Metropolis, Basis::Cells { n: 512 }).unwrap();
    let c = tv_exact_curve(&op, &[0, 100], 6000).unwrap();
    assert!((c.points[0].tv - (1.0 - 1.0 / 512.0)).abs() < 1e-12);
    for w in c.points.windows(2) {
        assert!(w[1].tv <= w[0].tv + 1e-12);
        assert!((0.0..=1.0).contains(&w[1].tv));
    }
    assert!(c.points.last().unwrap().tv < 1e-3);
}

#[test]
fn flat_exact_mixing_rate() {
    let op = assemble_operator(&circle(), 0.05, KernelKind::Metropolis, Basis::Cells { n: 1024 }).unwrap();
    let c = tv_exact_curve(&op, &[0], 40_000).unwrap();
    let r = fit_mixing_rate(&c, 0.05, 1.0 / 6.0, FitWindow::default()).unwrap();
    assert!((0.15..=0.1833).contains(&r.rate), "{}", r.rate);
    assert!(r.relative_gap < 0.1);
    assert!(r.lower_bound_margin >= 1.0);
}

#[test]
fn empirical_matches_exact_on_the_circle() {
    let m = circle();
    let h = 0.1;
    let op = assemble_operator(&m, h, KernelKind::Metropolis, Basis::Cells { n: 1024 }).unwrap();
    let part = Partition::FlatGrid { cells: 8 };
    let x0 = Point([0.0; 3]);
    let groups: Vec<usize> = op.nodes.iter().map(|&p| part.cell(&m, x0, p)).collect();
    let ns = [0usize, 100, 200, 400, 800];
    let exact = tv_exact_curve_grouped(&op, &[0], 800, Some(&groups)).unwrap();
    let emp = tv_empirical(&walker(&m, h, 9), x0, &ns, 20_000, part, &Substreams::new(9)).unwrap();
    for p in &emp.points {
        let e = exact.points[p.n].tv;
        // Partition bias: the cell chain smooths by one cell width.
        assert!((p.tv - e).abs() <= p.half_width.unwrap() + 0.01, "n={} {} vs {e}", p.n, p.tv);
    }
    assert!(matches!(
        tv_empirical(&walker(&m, h, 9), x0, &ns, 500, part, &Substreams::new(9)),
        Err(Error::InsufficientData(_))
    ));
}

#[test]
fn empirical_tv_is_worker_independent() {
    let m = circle();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            tv_empirical(&walker(&m, 0.2, 1), Point([0.0; 3]), &[10, 40], 10_000, Partition::FlatGrid { cells: 4 }, &Substreams::new(1))
                .unwrap()
        })
    };
    let (a, b) = (run(1), run(3));
    for (p, q) in a.points.iter().zip(&b.points) {
        assert_eq!(p.tv.to_bits(), q.tv.to_bits());
    }
}

#[test]
fn non_decaying_curve_fails_to_fit() {
    let points = (0..50).map(|n| TvPoint { n, tv: 0.3, half_width: None }).collect();
    let c = TvCurve { method: TvMethod::ExactMatrixPower, convention: TV_CONVENTION, points, noise_floor: 0.0 };
    assert!(matches!(fit_mixing_rate(&c, 0.1, 0.1, FitWindow::default()), Err(Error::FitFailed(_))));
}

#[test]
fn excursion_examples() {
    let m = circle();
    let w = walker(&m, 0.05, 21);
    let x0 = Point([0.0; 3]);
    let s = Substreams::new(21);
    // 10 steps of length ≤ 0.05 cannot leave a ball of radius 0.6.
    let unreachable = excursion_probability(&w, x0, 0.6, 0.025, 1000, &s).unwrap();
    assert_eq!(unreachable.steps, 10);
    assert_eq!(unreachable.probability, 0.0);
    let short = excursion_probability(&w, x0, 0.5, 0.1, 20_000, &s.child("a")).unwrap();
    let long = excursion_probability(&w, x0, 0.5, 0.2, 20_000, &s.child("b")).unwrap();
    assert!(long.probability > short.probability + short.half_width + long.half_width);
    assert!(matches!(excursion_probability(&w, x0, 0.5, 1.0, 10, &s), Err(Error::InvalidParameter { .. })));
    let est: Vec<ExcursionEstimate> = (0..6)
        .map(|i| {
            let x = 0.4 * 10f64.powf(i as f64 / 5.0);
            excursion_probability(&w, x0, 0.5, 0.25 / x, 40_000, &s.child(&format!("sweep{i}"))).unwrap()
        })
        .collect();
    let fit = fit_excursion(&est).unwrap();
    assert!(fit.slope < 0.0 && fit.r_squared >= 0.95, "{fit:?}");
    assert!(fit.span > 9.9);
}

#[test]
fn revolution_partition_probabilities() {
    let m = Manifold::revolution_torus(2.0, 1.0).unwrap();
    let part = Partition::RevolutionGrid { bands: 2, sectors: 8 };
    let x0 = Point([0.0, 0.0, 0.0]);
    let p = part.probabilities(&m, 0.2, KernelKind::Metropolis, x0).unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    // The outer band |θ| < π/2 holds (Rπ + 2r)/(2πR) of the area.
    let outer: f64 = p[..8].iter().sum();
    assert!((outer - (2.0 * PI + 2.0) / (4.0 * PI)).abs() < 1e-10, "{outer}");
    let q = part.probabilities(&m, 0.2, KernelKind::BallWalk, x0).unwrap();
    assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    assert!(matches!(Partition::FlatGrid { cells: 4 }.probabilities(&m, 0.2, KernelKind::Metropolis, x0), Err(Error::InvalidParameter { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exact_tv_stays_in_unit_interval(h in 0.1f64..0.5, start in 0usize..512) {
        let op = assemble_operator(&circle(), h, KernelKind::BallWalk, Basis::Cells { n: 512 }).unwrap();
        let c = tv_exact_curve(&op, &[start], 50).unwrap();
        prop_assert!(c.points.iter().all(|p| (0.0..=1.0).contains(&p.tv)));
    }

    #[test]
    fn partition_cells_are_in_range(x in 0.0f64..2.0 * PI, c in 0.0f64..2.0 * PI, cells in 2usize..20) {
        let m = circle();
        let part = Partition::FlatGrid { cells };
        prop_assert!(part.cell(&m, Point([c, 0.0, 0.0]), Point([x, 0.0, 0.0])) < cells);
    }
}
