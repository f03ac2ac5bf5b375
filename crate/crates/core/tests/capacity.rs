use cge_core::capacity::*;
use cge_core::exponent::mean_capacity;
use cge_core::rng::stream;
use proptest::prelude::*;
use std::f64::consts::PI;

const LAPLACE_2_QUARTER_PI: f64 = 1.7773352337146478906;

#[test]
fn started_at_the_boundary() {
    let cfg = SdeConfig::default();
    let p = sample_capacity(2.0, 1e-6, &cfg, &mut stream(1, 0)).unwrap();
    assert_eq!(p.hitting_time, 0.0);
    assert_eq!(p.absorbed_at, Some(Absorbed::Zero));
    assert!(sample_capacity(2.0, 0.0, &cfg, &mut stream(1, 0)).is_err());
    assert!(sample_capacity(2.0, 2.0 * PI, &cfg, &mut stream(1, 0)).is_err());
    assert!(sample_capacity(8.0, 1.0, &cfg, &mut stream(1, 0)).is_err());
}

#[test]
fn deterministic_flow_at_kappa_zero() {
    // cos(θ/2) grows like e^t along the flow
    let cfg = SdeConfig::default();
    for theta0 in [0.1, 1.0, 2.0, 3.0, 3.5, 5.0] {
        let p = sample_capacity(0.0, theta0, &cfg, &mut stream(0, 0)).unwrap();
        let want = -(0.5 * theta0).cos().abs().ln();
        assert!((p.hitting_time - want).abs() < 1e-4, "θ0={theta0}: {} vs {want}", p.hitting_time);
        let side = if theta0 < PI { Absorbed::Zero } else { Absorbed::TwoPi };
        assert_eq!(p.absorbed_at, Some(side));
    }
    let stuck = sample_capacity(0.0, PI, &cfg, &mut stream(0, 0)).unwrap();
    assert!(stuck.capped && stuck.hitting_time == cfg.t_max);
}

#[test]
fn mean_capacity_at_the_antipode() {
    let cfg = SdeConfig::default();
    let m = mc_mean_capacity(2.0, PI, 20_000, 3, &cfg).unwrap();
    let want = mean_capacity(2.0, PI).unwrap();
    assert!((m.mean - want).abs() < 3.0 * m.stderr, "{} ± {} vs {want}", m.mean, m.stderr);
    let a = mc_mean_capacity(2.0, PI, 10_000, 4, &cfg).unwrap();
    let b = mc_mean_capacity(2.0, PI, 10_000, 5, &cfg).unwrap();
    assert!((a.mean - b.mean).abs() < 3.0 * (a.stderr.hypot(b.stderr)));
}

#[test]
fn laplace_at_lambda_zero_is_exact() {
    let l = mc_capacity_laplace(2.0, 0.0, 1.0, 100, 0, &SdeConfig::default()).unwrap();
    assert_eq!((l.estimate, l.stderr), (1.0, 0.0));
}

#[test]
fn laplace_against_the_closed_form() {
    let l = mc_capacity_laplace(2.0, 0.25, PI, 20_000, 7, &SdeConfig::default()).unwrap();
    assert!(!l.moment_divergence && l.capped_paths == 0);
    assert!((l.estimate - LAPLACE_2_QUARTER_PI).abs() < 3.0 * l.stderr, "{} ± {}", l.estimate, l.stderr);
    assert!(mc_capacity_laplace(2.0, 0.8, PI, 10, 7, &SdeConfig::default()).unwrap().moment_divergence);
}

#[test]
fn small_angle_mean_scales_quadratically() {
    let cfg = SdeConfig::default();
    let a = mc_mean_capacity(2.0, 0.1, 20_000, 11, &cfg).unwrap();
    let b = mc_mean_capacity(2.0, 0.2, 20_000, 12, &cfg).unwrap();
    for (m, theta) in [(&a, 0.1), (&b, 0.2)] {
        let want = mean_capacity(2.0, theta).unwrap();
        assert!((m.mean - want).abs() < 3.0 * m.stderr, "θ={theta}: {} ± {} vs {want}", m.mean, m.stderr);
    }
    let ratio = b.mean / a.mean;
    assert!((ratio - 4.0).abs() < 1.0, "{ratio}");
}

#[test]
fn far_side_absorption_vanishes_near_zero() {
    let cfg = SdeConfig::default();
    let frac = |theta0: f64| {
        let paths = sample_many(2.0, theta0, 4000, 21, &cfg).unwrap();
        paths.iter().filter(|p| p.absorbed_at == Some(Absorbed::TwoPi)).count() as f64 / paths.len() as f64
    };
    let f: Vec<f64> = [PI, 1.0, 0.3, 0.05].iter().map(|&t| frac(t)).collect();
    assert!((f[0] - 0.5).abs() < 0.05, "{f:?}");
    assert!(f.windows(2).all(|w| w[1] < w[0]), "{f:?}");
    assert!(f[3] < 0.01, "{f:?}");
}

#[test]
fn same_seed_same_paths() {
    let cfg = SdeConfig::default();
    let a = sample_many(3.0, 2.0, 200, 99, &cfg).unwrap();
    let b = sample_many(3.0, 2.0, 200, 99, &cfg).unwrap();
    assert_eq!(a, b);
    let c = sample_many(3.0, 2.0, 200, 100, &cfg).unwrap();
    assert_ne!(a, c);
}

#[test]
fn halving_the_step_keeps_the_mean() {
    let coarse = SdeConfig::default();
    let fine = SdeConfig { step_base: 5e-4, ..coarse };
    let a = mc_mean_capacity(2.0, 2.0, 10_000, 41, &coarse).unwrap();
    let b = mc_mean_capacity(2.0, 2.0, 10_000, 42, &fine).unwrap();
    assert!((a.mean - b.mean).abs() < 3.0 * a.stderr.hypot(b.stderr), "{} vs {}", a.mean, b.mean);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn paths_end_at_a_boundary_or_the_cap(kappa in 0.0..7.9f64, theta0 in 0.01..6.27f64, seed in 0u64..1000) {
        let cfg = SdeConfig { t_max: 5.0, ..SdeConfig::default() };
        let p = sample_capacity(kappa, theta0, &cfg, &mut stream(seed, 0)).unwrap();
        prop_assert!(p.hitting_time >= 0.0 && p.hitting_time <= cfg.t_max);
        prop_assert_eq!(p.capped, p.absorbed_at.is_none());
    }
}
