use cge_core::hypergeom::*;
use cge_core::stats::linear_fit;
use cge_core::Extended;
use proptest::prelude::*;
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn laplace(kappa: f64, lambda: f64, theta: f64) -> f64 {
    capacity_laplace(&CapacityLaplaceParams::new(kappa, lambda).unwrap(), theta).unwrap().to_f64()
}

#[test]
fn series_at_zero_is_one() {
    for (a, b, c) in [(0.3, -0.7, 0.6), (2.0, 5.0, 0.5), (-1.5, 0.25, 3.0)] {
        assert_eq!(gauss_2f1(a, b, c, 0.0).unwrap(), 1.0);
    }
}

#[test]
fn log_identity() {
    let v = gauss_2f1(1.0, 1.0, 2.0, 0.5).unwrap();
    assert!(rel(v, 2.0 * 2f64.ln()) < 1e-12);
    // the defining series, summed term by term
    let series: f64 = (0..10_000).map(|n| 0.5f64.powi(n) / (n + 1) as f64).sum();
    assert!(rel(v, series) < 1e-12);
}

#[test]
fn frozen_values() {
    // high-precision reference values
    let cases = [
        ((0.3, -0.7, 0.6, 0.9), 0.6232206956412205814),
        ((1.5, -2.3, 0.2, 0.95), 0.8886445487692633866),
        ((0.25, 0.5, 1.75, 0.3), 1.0240229490555904434),
        ((2.2, 1.1, 3.7, 0.99), 5.1882036772062542070),
    ];
    for ((a, b, c, z), want) in cases {
        let got = gauss_2f1(a, b, c, z).unwrap();
        assert!(rel(got, want) < 1e-10, "{a} {b} {c} {z}: {got} vs {want}");
    }
}

#[test]
fn nonpositive_integer_c_is_rejected() {
    assert!(gauss_2f1(0.5, 0.5, 0.0, 0.3).is_err());
    assert!(gauss_2f1(0.5, 0.5, -2.0, 0.3).is_err());
    assert!(gauss_2f1(0.5, 0.5, 1.5, 1.0).is_err());
}

#[test]
fn f_and_g_boundary_values() {
    let p = CapacityLaplaceParams::new(2.0, 0.25).unwrap();
    let (f0, g0) = f_and_g(&p, 0.0).unwrap();
    assert_eq!((f0, g0), (1.0, 0.0));
    let cosine_form = (PI * 2f64.sqrt()).cos() / (-PI).cos();
    assert!(rel(f_at_one(&p), cosine_form) < 1e-10);
    assert!(rel(f_at_one(&p), 0.26625534204141548861) < 1e-10);
    assert!(rel(g_at_one(&p), 0.25559325651788892995) < 1e-10);
    let (f1, g1) = f_and_g(&p, 1.0).unwrap();
    assert!(rel(f1, f_at_one(&p)) < 1e-12 && rel(g1, g_at_one(&p)) < 1e-12);
}

#[test]
fn f1_and_g1_ranges() {
    for kappa in [0.5, 1.0, 2.0, 3.0, 5.0, 7.0] {
        let top = 1.0 - kappa / 8.0;
        for k in 1..20 {
            let p = CapacityLaplaceParams::new(kappa, top * k as f64 / 20.0).unwrap();
            if p.integer_c() {
                continue;
            }
            let (f1, g1) = (f_at_one(&p), g_at_one(&p));
            assert!(f1 < 1.0, "κ={kappa}: f(1) = {f1}");
            if kappa <= 2.0 {
                assert!(f1 >= -1.0, "κ={kappa}: f(1) = {f1}");
            }
            assert!(g1 > 0.0 && g1.is_finite(), "κ={kappa}: g(1) = {g1}");
        }
    }
}

#[test]
fn f1_below_minus_one_for_kappa_three() {
    let p = CapacityLaplaceParams::new(3.0, 0.25).unwrap();
    assert!(rel(f_at_one(&p), -1.8639534695325671417) < 1e-10);
}

#[test]
fn closed_form_against_frozen_values() {
    for (theta, want) in [(0.5, 1.0356272034026179536), (PI, 1.7773352337146478906), (4.0, 1.6257551379788634596)] {
        assert!(rel(laplace(2.0, 0.25, theta), want) < 1e-9, "θ={theta}");
    }
    assert!(rel(laplace(3.0, 0.3, 2.0), 1.9935290134794344080) < 1e-9);
}

#[test]
fn small_angles_approach_one() {
    let mut last = f64::INFINITY;
    for theta in [1e-1, 1e-2, 1e-3, 1e-4] {
        let v = laplace(2.0, 0.25, theta) - 1.0;
        assert!(v >= 0.0 && v < last);
        last = v;
    }
    assert!(last < 1e-6);
}

#[test]
fn reflection_symmetry() {
    for theta in [0.3, 1.0, 2.5, 3.0] {
        assert!(rel(laplace(2.0, 0.25, theta), laplace(2.0, 0.25, 2.0 * PI - theta)) < 1e-10);
        assert!(rel(laplace(5.0, 0.1, theta), laplace(5.0, 0.1, 2.0 * PI - theta)) < 1e-10);
    }
}

#[test]
fn divergence_is_signalled() {
    let p = CapacityLaplaceParams::new(2.0, 0.75);
    let v = p.and_then(|p| capacity_laplace(&p, 1.0));
    assert!(matches!(v, Ok(Extended::PosInfinity)) || v.is_err());
    let q = CapacityLaplaceParams::new(2.0, 0.9).and_then(|p| capacity_laplace(&p, 1.0));
    assert!(matches!(q, Ok(Extended::PosInfinity)) || q.is_err());
    assert!(capacity_laplace(&CapacityLaplaceParams::new(2.0, 0.25).unwrap(), 0.0).is_err());
}

#[test]
fn small_u_exponents() {
    assert_eq!(small_u_exponent(2.0).unwrap(), 1.0);
    assert!((small_u_exponent(6.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    assert!(small_u_exponent(8.0 / 3.0).is_err());
    for (kappa, lambda) in [(2.0, 0.25), (6.0, 0.1)] {
        let thetas: Vec<f64> = (0..=10).map(|k| 1e-3 * 10f64.powf(k as f64 / 10.0)).collect();
        let x: Vec<f64> = thetas.iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = thetas.iter().map(|&t| (laplace(kappa, lambda, t) - 1.0).ln()).collect();
        let want = 2.0 * small_u_exponent(kappa).unwrap();
        let fit = linear_fit(&x, &y);
        assert!(rel(fit.slope, want) < 0.05, "κ={kappa}: slope {} vs {want}", fit.slope);
    }
}

#[test]
fn increasing_in_lambda_and_at_least_one() {
    for kappa in [1.0, 2.0, 3.0] {
        for k in 1..40 {
            let theta = 2.0 * PI * k as f64 / 40.0;
            let mut last = 1.0;
            for j in 1..10 {
                let v = laplace(kappa, (1.0 - kappa / 8.0) * j as f64 / 10.0, theta);
                assert!(v >= last, "κ={kappa} θ={theta}");
                last = v;
            }
        }
    }
}

#[test]
fn continuous_across_integer_c() {
    for kappa in [8.0 / 3.0, 8.0 / 5.0] {
        for theta in [0.5, 2.0, PI] {
            let lo = laplace(kappa - 1e-4, 0.1, theta);
            let hi = laplace(kappa + 1e-4, 0.1, theta);
            let mid = laplace(kappa, 0.1, theta);
            assert!((lo - hi).abs() < 1e-2 && (mid - lo).abs() < 1e-2, "κ={kappa} θ={theta}: {lo} {mid} {hi}");
        }
    }
}

fn residual(a: f64, b: f64, c: f64, z: f64) -> (f64, f64) {
    let h = 1e-4;
    let f = |x: f64| gauss_2f1(a, b, c, x).unwrap();
    let (fm, f0, fp) = (f(z - h), f(z), f(z + h));
    let d1 = (fp - fm) / (2.0 * h);
    let d2 = (fp - 2.0 * f0 + fm) / (h * h);
    (-a * b * f0 + (c - (a + b + 1.0) * z) * d1 + z * (1.0 - z) * d2, f0.abs() + d1.abs() + d2.abs())
}

#[test]
fn ode_residual_example() {
    let (r, _) = residual(0.3, -0.7, 0.6, 0.5);
    assert!(r.abs() < 1e-6, "{r}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hypergeometric_ode(a in -2.0..2.0f64, b in -2.0..2.0f64, c in 0.2..3.5f64, z in 0.05..0.85f64) {
        prop_assume!((c - c.round()).abs() > 0.05);
        let (r, scale) = residual(a, b, c, z);
        prop_assert!(r.abs() < 1e-6 * (1.0 + scale), "residual {}", r);
    }
}
