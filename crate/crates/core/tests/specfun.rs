use ballwalk::specfun::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[test]
fn closed_form_matches_quadrature_oracle() {
    for d in 1..=3 {
        for s in log_grid(1e-6, 1e4, 61) {
            let a = gamma_d(d, s).unwrap();
            let b = gamma_quadrature_oracle(d, s).unwrap();
            assert!((a - b).abs() <= 1e-8, "d={d} s={s} closed={a} oracle={b}");
        }
    }
}

#[test]
fn oracle_examples() {
    assert!((gamma_quadrature_oracle(2, 0.0).unwrap() - 1.0).abs() < 1e-13);
    assert!(gamma_quadrature_oracle(1, PI * PI).unwrap().abs() < 1e-8);
    let v = gamma_quadrature_oracle(3, 1.0).unwrap();
    assert!((v - gamma_d(3, 1.0).unwrap()).abs() < 1e-8);
}

#[test]
fn slope_at_origin() {
    for d in 1..=3 {
        let eps = 1e-6;
        let slope = (gamma_d(d, eps).unwrap() - 1.0) / eps;
        let expect = -1.0 / (2.0 * (d as f64 + 2.0));
        assert!((slope - expect).abs() < 1e-6, "d={d} slope={slope}");
    }
    let eps = 1e-7;
    let d2 = (gamma_d(2, eps).unwrap() - 1.0) / eps;
    assert!((d2 + 0.125).abs() < 1e-6);
}

#[test]
fn values_stay_within_floor_and_below_one() {
    for d in 1..=3 {
        let floor = gamma_floor(d).unwrap();
        for s in log_grid(1e-8, 1e5, 4000) {
            let g = gamma_d(d, s).unwrap();
            assert!(g < 1.0 && g >= -floor.gamma0 - 1e-12, "d={d} s={s} g={g}");
        }
    }
}

proptest! {
    #[test]
    fn level_set_membership_matches_direct_test(s in 0.0f64..400.0, c in 0.02f64..0.98, d in 1usize..=3) {
        let set = super_level_set(d, c).unwrap();
        let g = gamma_d(d, s).unwrap();
        // Points within the root tolerance of an endpoint may fall either way.
        let near_edge = set.intervals.iter().any(|&(a, b)| (s - a).abs() < 1e-7 || (s - b).abs() < 1e-7);
        if !near_edge {
            prop_assert_eq!(set.contains(s), g >= c);
        }
    }
}

#[test]
fn level_set_edges_sit_on_the_threshold() {
    // Every interval end below the scan cap is a root of Γ_d − c.
    for d in 1..=3 {
        for i in 1..200 {
            let c = i as f64 / 200.0;
            let set = super_level_set(d, c).unwrap();
            let &(_, hi) = set.intervals.last().unwrap();
            let g = gamma_d(d, hi).unwrap();
            assert!((g - c).abs() < 1e-9, "d={d} c={c} edge {hi} has Γ = {g}");
        }
    }
}

#[test]
fn level_set_intervals_are_sorted_and_disjoint() {
    for d in 1..=3 {
        for c in [0.9, 0.5, 0.1, 0.05, -0.05] {
            let set = super_level_set(d, c).unwrap();
            assert_eq!(set.intervals[0].0, 0.0);
            for w in set.intervals.windows(2) {
                assert!(w[0].1 < w[1].0);
            }
            for &(a, b) in &set.intervals {
                assert!(a <= b);
                assert!(gamma_d(d, a).unwrap() >= c - 1e-9);
                assert!(gamma_d(d, b).unwrap() >= c - 1e-9);
            }
        }
    }
}
