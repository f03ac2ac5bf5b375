use cge_core::exponent::*;
use cge_core::stats::linear_fit;
use cge_core::Extended;
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn lam(kappa: f64, lambda: f64) -> f64 {
    lambda_exponent(kappa, lambda).unwrap().finite().expect("finite")
}

#[test]
fn zero_at_zero() {
    for kappa in [0.0, 1.0, 2.0, 3.5, 6.0] {
        assert_eq!(lambda_exponent(kappa, 0.0).unwrap(), Extended::Finite(0.0));
    }
}

#[test]
fn frozen_values() {
    // high-precision quadrature of the defining integral
    for (kappa, lambda, want) in [
        (2.0, 0.5, 7.7385053588575424117),
        (2.0, -1.0, -3.4942551008465799343),
        (1.0, 0.3, 1.7203663859407455741),
        (3.0, 0.1, 1.4437511893756962415),
        (2.0, 0.74, 252.71555839957981161),
    ] {
        let got = lam(kappa, lambda);
        assert!(rel(got, want) < 1e-7, "Λ_{kappa}({lambda}) = {got} vs {want}");
    }
}

#[test]
fn blow_up() {
    assert!(lambda_exponent(2.0, 0.74).unwrap().is_finite());
    assert_eq!(lambda_exponent(2.0, 0.76).unwrap(), Extended::PosInfinity);
    assert_eq!(lambda_exponent(4.5, 0.01).unwrap(), Extended::PosInfinity);
    assert!(lambda_exponent(8.0, 0.1).is_err());
    // κ = 0: finite all the way up to λ < 1
    for lambda in [0.9, 0.98, 0.999] {
        assert!(lambda_exponent(0.0, lambda).unwrap().is_finite(), "{lambda}");
    }
    assert_eq!(lambda_exponent(0.0, 1.0).unwrap(), Extended::PosInfinity);
}

#[test]
fn truncation() {
    assert_eq!(lambda_truncated(2.0, 0.5, PI).unwrap(), Extended::Finite(0.0));
    assert!(rel(lambda_truncated(2.0, 0.5, 1.0).unwrap().to_f64(), 6.1406120845813913892) < 1e-7);
    assert!(rel(lambda_truncated(4.5, 0.1, 1e-3).unwrap().to_f64(), 16.165759088866312669) < 1e-6);
    let mut last = 0.0;
    for theta in [3.0, 2.0, 1.0, 0.3, 0.1, 1e-2, 1e-3, 1e-4] {
        let v = lambda_truncated(2.0, 0.5, theta).unwrap().to_f64();
        assert!(v > last);
        last = v;
    }
    assert!((lam(2.0, 0.5) - last).abs() < 1e-3);
    assert!(lambda_truncated(2.0, 0.5, 0.0).is_err());
}

#[test]
fn truncated_exponent_grows_without_bound_above_four() {
    // the integrand behaves like u^{−c−1/2} near 0, so the truncated value
    // grows like θ^{−2(c − 1/2)} with c = 3/2 − 4/κ
    let c = 1.5 - 4.0 / 4.5;
    let thetas = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let vals: Vec<f64> = thetas.iter().map(|&t| lambda_truncated(4.5, 0.1, t).unwrap().to_f64()).collect();
    assert!(vals.windows(2).all(|w| w[1] > w[0]));
    let slope = (vals[5] / vals[4]).ln() / 10f64.ln();
    assert!(rel(slope, 2.0 * (c - 0.5)) < 0.1, "{slope}");
}

#[test]
fn mean_capacity_frozen_values() {
    assert!(rel(mean_capacity(2.0, PI).unwrap(), 2.0) < 1e-8);
    assert!(rel(mean_capacity(3.0, 1.0).unwrap(), 0.82472116549419214149) < 1e-8);
    assert!(rel(mean_capacity(1.0, 2.0).unwrap(), 1.0863032171155229814) < 1e-8);
    assert!(rel(mean_capacity(0.0, 2.0).unwrap(), -(1.0f64).cos().ln()) < 1e-14);
    assert!(rel(mean_capacity(2.0, 1.0).unwrap(), mean_capacity(2.0, 2.0 * PI - 1.0).unwrap()) < 1e-12);
}

#[test]
fn mean_capacity_small_angle_scaling() {
    for (kappa, want) in [(2.0, 2.0), (3.0, 2.0 * (1.0 - (1.5 - 4.0 / 3.0)))] {
        let thetas: Vec<f64> = (0..=8).map(|k| 1e-3 * 10f64.powf(k as f64 / 8.0)).collect();
        let x: Vec<f64> = thetas.iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = thetas.iter().map(|&t| mean_capacity(kappa, t).unwrap().ln()).collect();
        let slope = linear_fit(&x, &y).slope;
        assert!(rel(slope, want) < 0.1, "κ={kappa}: {slope} vs {want}");
    }
}

#[test]
fn lambda_prime_audit() {
    assert!(rel(lambda_prime_truncated(2.0, 0.0).unwrap(), 2.0 * PI) < 1e-8);
    for kappa in [0.0, 1.0, 2.0, 3.0] {
        let lp = lambda_prime_zero(kappa).unwrap();
        assert!(lp.integral > 0.0 && lp.relative_gap < LAMBDA_PRIME_AUDIT, "κ={kappa}: {lp:?}");
    }
    assert!(lambda_prime_zero(4.5).is_err());
    assert!(rel(lambda_prime_truncated(2.0, 0.3).unwrap(), 5.683) < 1e-3);
}

#[test]
fn legendre_properties() {
    let kappa = 2.0;
    let lp = lambda_prime_zero(kappa).unwrap().integral;
    assert!(legendre(kappa, lp).unwrap().value.abs() < 1e-6);
    let mut last = f64::INFINITY;
    for k in 1..10 {
        let v = legendre(kappa, lp * k as f64 / 10.0).unwrap().value;
        assert!(v > 0.0 && v < last, "{k}: {v}");
        last = v;
    }
    assert!(rel(legendre(kappa, 50.0).unwrap().value, 17.3346) < 1e-4);
    // Fenchel–Young
    for alpha in [1.0, 3.0, 10.0, 40.0] {
        let l = legendre(kappa, alpha).unwrap().value;
        for lambda in [-2.0, -0.5, 0.1, 0.4, 0.7] {
            assert!(l >= lambda * alpha - lam(kappa, lambda) - 1e-7);
        }
    }
}

#[test]
fn legendre_approaches_its_asymptotic_slope() {
    // 1 − κ/8 − Λ*(α)/α decays like α^{−1/2}
    let gap = |a: f64| 0.75 - legendre(2.0, a).unwrap().value / a;
    let (g1, g2, g3) = (gap(200.0), gap(800.0), gap(3200.0));
    assert!(g1 > g2 && g2 > g3 && g3 > 0.0);
    assert!((g1 / g2 - 2.0).abs() < 0.2 && (g2 / g3 - 2.0).abs() < 0.1, "{g1} {g2} {g3}");
}

#[test]
fn double_conjugate() {
    let kappa = 2.0;
    for lambda in [-0.5, 0.2, 0.5] {
        let h = 1e-4;
        let alpha = (lam(kappa, lambda + h) - lam(kappa, lambda - h)) / (2.0 * h);
        let recovered = lambda * alpha - legendre(kappa, alpha).unwrap().value;
        assert!((recovered - lam(kappa, lambda)).abs() < 1e-4, "{lambda}: {recovered}");
    }
}

#[test]
fn alpha_min_properties() {
    let kappa = 2.0;
    let a = alpha_min(kappa).unwrap();
    let lp = lambda_prime_zero(kappa).unwrap().integral;
    assert!(a > 0.0 && a < lp);
    assert!((2.0 * a - legendre(kappa, a).unwrap().value).abs() < 1e-6);
    assert!(2.0 * (a / 2.0) - legendre(kappa, a / 2.0).unwrap().value < 0.0);
    assert!(2.0 * (2.0 * a) - legendre(kappa, 2.0 * a).unwrap().value > 0.0);
    assert!((alpha_min(kappa).unwrap() - a).abs() < 1e-8);
}

#[test]
fn dimension_bound() {
    let kappa = 2.0;
    let a = alpha_min(kappa).unwrap();
    let lp = lambda_prime_zero(kappa).unwrap().integral;
    let grid = [0.5 * a, a, 0.5 * (a + lp), lp, 2.0 * lp, 4.0 * lp, 8.0 * lp];
    let curve = dimension_bound_curve(kappa, a, &grid).unwrap();
    assert!(curve[0].bound.is_none());
    assert!(curve[1].bound.unwrap().abs() < 1e-6);
    assert!((curve[3].bound.unwrap() - 2.0).abs() < 1e-6);
    let beyond: Vec<f64> = curve[3..].iter().map(|p| p.bound.unwrap()).collect();
    assert!(beyond.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn table_is_convex() {
    let t = ExponentTable::build(2.0, 64).unwrap();
    assert_eq!(t.lambda_grid.len(), 64);
    assert!(t.lambda_grid.iter().all(|&l| l < 0.75));
    assert!(t.min_second_difference() >= -1e-8);
    assert_eq!(t.blowup_boundary, 0.75);
    assert!(ExponentTable::build(4.0, 8).is_err());
}

#[test]
fn campbell_identity_at_the_cutoff() {
    use cge_core::capacity::SdeConfig;
    use cge_core::rng::substream;
    use cge_core::stats::mean_stderr;
    use cge_core::subordinator::simulate_capacity;
    use rayon::prelude::*;
    let (kappa, lambda) = (2.0, 0.25);
    for (theta_cutoff, seed) in [(0.6, 31u64), (0.3, 32)] {
        let vals: Vec<f64> = (0..10_000u64)
            .into_par_iter()
            .map(|i| (lambda * simulate_capacity(kappa, theta_cutoff, 1.0, &SdeConfig::default(), &mut substream(seed, &[i])).unwrap()).exp())
            .collect();
        let m = mean_stderr(&vals);
        let want = lambda_truncated(kappa, lambda, theta_cutoff).unwrap().to_f64().exp();
        assert!((m.mean - want).abs() <= 3.0 * m.stderr, "θc={theta_cutoff}: {} ± {} vs {want}", m.mean, m.stderr);
    }
}
