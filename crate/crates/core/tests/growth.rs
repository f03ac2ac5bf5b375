use cge_core::conformal::{green_disk, ArcPolyline, DiskAutomorphism, HalfPlaneChart};
use cge_core::exponent::lambda_prime_truncated;
use cge_core::growth::*;
use cge_core::quadrature::simpson_rel;
use cge_core::rng::substream;
use cge_core::stats::{ks_one_sample, ks_two_sample, linear_fit};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn assert_sound(rec: &GrowthRecord) {
    assert_eq!(rec.koebe.violations, 0, "Koebe violations in {} checks", rec.koebe.checks);
    for tr in &rec.cr_trajectories {
        assert!(tr.windows(2).all(|w| w[1].1 >= w[0].1 && w[1].0 >= w[0].0));
        assert!(tr.iter().all(|p| p.1.is_finite()));
    }
    let n = rec.targets.len();
    for a in 0..n {
        for b in 0..n {
            assert_eq!(rec.disconnection[a][b], rec.disconnection[b][a]);
        }
    }
    assert!(rec.is_ultrametric_compatible());
    for e in &rec.events {
        let s = e.endpoints.separation();
        assert!(s >= rec.theta_cutoff - 1e-12 && s <= 2.0 * PI - rec.theta_cutoff + 1e-12);
        assert!(e.per_target_capacity.iter().all(|&(_, cap)| cap >= 0.0));
    }
}

#[test]
fn excursion_rate_examples() {
    assert!((excursion_rate(PI / 2.0).unwrap() - 2.0).abs() < 1e-14);
    assert_eq!(excursion_rate(PI).unwrap(), 0.0);
    let ratio = excursion_rate(0.1).unwrap() / excursion_rate(0.2).unwrap();
    assert!((ratio - 2.0).abs() < 0.01, "{ratio}");
    assert!(excursion_rate(5e-5).is_err());
    assert!(excursion_rate(4.0).is_err());
    for tc in [0.3, 1.0, 2.5] {
        // ordered pairs: uniform first angle, kernel 1/(4π sin²(θ/2)) in the separation
        let mass = 2.0 * PI * simpson_rel(|t| 1.0 / (4.0 * PI * (0.5 * t).sin().powi(2)), tc, 2.0 * PI - tc, 1e-12, 0.0).unwrap();
        assert!((mass / excursion_rate(tc).unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn endpoint_sampling() {
    let tc = 0.3;
    let mut rng = substream(11, &[]);
    let pairs: Vec<BoundaryPair> = (0..100_000).map(|_| sample_endpoints(tc, &mut rng).unwrap()).collect();
    let seps: Vec<f64> = pairs.iter().map(|p| p.separation()).collect();
    let firsts: Vec<f64> = pairs.iter().map(|p| p.first).collect();
    assert!(seps.iter().all(|&s| s >= tc && s <= 2.0 * PI - tc));
    let ks = ks_one_sample(&seps, |t| separation_cdf(t, tc));
    assert!(ks.p_value > 0.01, "{ks:?}");
    let ks = ks_one_sample(&firsts, |a| a / (2.0 * PI));
    assert!(ks.p_value > 0.01, "{ks:?}");
    assert!((separation_quantile(0.5, tc) - PI).abs() < 1e-14);
    let below = seps.iter().filter(|&&s| s <= PI).count() as f64 / seps.len() as f64;
    assert!((below - 0.5).abs() < 3.0 * 0.5 / (seps.len() as f64).sqrt() + 1e-3, "{below}");
    assert!(sample_endpoints(1e-5, &mut rng).is_err());
}

fn geodesic_distance(p: C, pair: &BoundaryPair) -> f64 {
    let s = pair.separation();
    if (s - PI).abs() < 1e-12 {
        let d = C::from_polar(1.0, pair.first);
        return (p.re * d.im - p.im * d.re).abs();
    }
    let mid = pair.first + 0.5 * s;
    let centre = C::from_polar(1.0 / (0.5 * s).cos(), mid);
    ((p - centre).norm() - (0.5 * s).tan().abs()).abs()
}

#[test]
fn kappa_zero_trace_is_the_geodesic() {
    let cfg = TraceConfig::default();
    let mut rng = substream(3, &[]);
    for (a, b) in [(0.0, PI), (0.4, 1.1), (2.0, 6.0), (5.0, 5.0 + 2.9)] {
        let pair = BoundaryPair::new(a, b);
        let tr = sle_trace(0.0, &pair, &cfg, &mut rng).unwrap();
        let (x, y) = pair.points();
        assert!((tr.start() - x).norm() < 1e-12 && (tr.end() - y).norm() < 1e-12);
        let mut h: f64 = 0.0;
        for w in tr.vertices().windows(2) {
            for k in 0..=20 {
                let p = w[0] + (w[1] - w[0]) * (k as f64 / 20.0);
                h = h.max(geodesic_distance(p, &pair));
            }
        }
        let geo = ArcPolyline::geodesic(pair.first, pair.first + pair.separation(), 2000).unwrap();
        for &p in geo.vertices() {
            h = h.max(tr.distance(p));
        }
        assert!(h <= 1e-2, "pair ({a}, {b}): Hausdorff {h}");
    }
}

#[test]
fn mirrored_driving_reflects_the_trace() {
    let cfg = TraceConfig { uniform_tips: 400, ..TraceConfig::default() };
    let mut rng = substream(5, &[]);
    let n = 400;
    let durations = vec![0.01; n];
    let mut w = 0.0;
    let bases: Vec<f64> = (0..n)
        .map(|_| {
            w += 0.1 * rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut rng);
            w
        })
        .collect();
    let negated: Vec<f64> = bases.iter().map(|b| -b).collect();
    for pair in [BoundaryPair::new(0.3, 2.2), BoundaryPair::new(1.0, 1.0 + PI)] {
        let tr = trace_from_driving(&pair, &bases, &durations, &cfg).unwrap();
        let mir = trace_from_driving(&pair, &negated, &durations, &cfg).unwrap();
        let (x, y) = pair.points();
        let chart = HalfPlaneChart::normalized_at(x, y, c(0.0, 0.0));
        let reflect = |z: C| chart.to_disk(-chart.to_half_plane(z).conj());
        assert_eq!(tr.vertices().len(), mir.vertices().len());
        let n = tr.vertices().len();
        for (p, q) in tr.vertices()[1..n - 1].iter().zip(&mir.vertices()[1..n - 1]) {
            assert!((reflect(*p) - *q).norm() < 1e-9, "{p} {q}");
        }
        if (pair.separation() - PI).abs() < 1e-12 {
            // reflection across the diameter through the endpoints
            let d = C::from_polar(1.0, pair.first);
            for (p, q) in tr.vertices().iter().zip(mir.vertices()) {
                assert!((d * d * p.conj() - *q).norm() < 1e-9);
            }
        }
    }
}

#[test]
fn boundary_approach_exponent() {
    // P[dist(x, γ) < r] ∝ r^{8/κ−1} for chordal SLE in H, x fixed on the boundary
    let kappa = 2.0;
    let cfg = TraceConfig::default();
    let mut rng = substream(17, &[]);
    let n = 400_000;
    let samples: Vec<f64> = (0..n).map(|_| boundary_approach(kappa, -1.0, &cfg, &mut rng).unwrap()).collect();
    let radii: Vec<f64> = (0..6).map(|k| 0.2 * 0.1f64.powf(k as f64 / 5.0)).collect();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for &r in &radii {
        let p = samples.iter().filter(|&&d| d < r).count() as f64 / n as f64;
        x.push(r.ln());
        y.push(p.ln());
    }
    let slope = linear_fit(&x, &y).slope;
    let target = 8.0 / kappa - 1.0;
    assert!((slope / target - 1.0).abs() <= 0.2, "slope {slope}");
}

#[test]
fn zero_targets_give_an_empty_record() {
    let rec = grow(&[], &GrowConfig::new(2.0, 0.3, 10.0, 1)).unwrap();
    assert!(rec.events.is_empty() && rec.cr_trajectories.is_empty() && rec.disconnection.is_empty());
}

#[test]
fn invalid_inputs_are_rejected() {
    let cfg = GrowConfig::new(2.0, 0.3, 1.0, 1);
    assert!(grow(&[c(1.0, 0.0)], &cfg).is_err());
    assert!(grow(&[c(0.1, 0.0), c(0.1, 0.0)], &cfg).is_err());
    assert!(grow(&[c(0.0, 0.0)], &GrowConfig::new(4.0, 0.3, 1.0, 1)).is_err());
    assert!(grow(&[c(0.0, 0.0)], &GrowConfig::new(2.0, 0.3, f64::INFINITY, 1)).is_err());
}

#[test]
fn kappa_zero_capacities_add_up() {
    let rec = grow(&[c(0.0, 0.0)], &GrowConfig::new(0.0, 0.5, 5.0, 7)).unwrap();
    assert_sound(&rec);
    assert!(!rec.events.is_empty());
    let tr = &rec.cr_trajectories[0];
    let total: f64 = rec.events.iter().flat_map(|e| e.per_target_capacity.iter().map(|p| p.1)).sum();
    assert!((tr.last().unwrap().1 - tr[0].1 - total).abs() < 1e-10);
    assert_eq!(tr.len(), rec.events.len() + 1);
}

#[test]
fn antipodal_disconnection_time() {
    let cfg = GrowConfig::new(2.0, 0.3, 0.0, 8);
    let lp = lambda_prime_truncated(2.0, 0.3).unwrap();
    let (z, w) = (c(0.5, 0.0), c(-0.5, 0.0));
    let st = disconnection_mc(z, w, &cfg, lp, 200).unwrap();
    let predicted = green_disk(z, w).unwrap() / lp;
    let band = 0.5;
    assert!(st.censored * 50 <= st.replicas, "{st:?}");
    eprintln!("antipodal {st:?} predicted {predicted}");
    assert!((st.mean - predicted).abs() <= 0.15 * predicted + band, "{st:?} vs {predicted}");
}

#[test]
fn disconnection_rejects_coincident_points() {
    let cfg = GrowConfig::new(2.0, 0.3, 0.0, 8);
    assert!(disconnection_mc(c(0.2, 0.1), c(0.2, 0.1), &cfg, 5.0, 10).is_err());
}

#[test]
fn disconnection_is_mobius_invariant() {
    let cfg = GrowConfig::new(2.0, 0.3, 0.0, 9);
    let lp = lambda_prime_truncated(2.0, 0.3).unwrap();
    let (z, w) = (c(0.1, 0.0), c(0.3, 0.4));
    let phi = DiskAutomorphism::new(c(0.2, -0.3), 0.7).unwrap();
    let a = disconnection_mc(z, w, &cfg, lp, 200).unwrap();
    let other = GrowConfig { seed: 99, ..cfg };
    let b = disconnection_mc(phi.apply(z), phi.apply(w), &other, lp, 200).unwrap();
    let tol = 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() <= tol, "{a:?} {b:?}");
}

#[test]
fn two_target_consistency() {
    let z = c(0.2, 0.1);
    for kappa in [0.0, 2.0, 3.5] {
        let mut cfg = GrowConfig::new(kappa, 0.3, 3.0, 21);
        cfg.koebe = false;
        cfg.follow = Follow::Target(0);
        let one = grow(&[z], &cfg).unwrap();
        let two = grow(&[z, c(-0.4, 0.3)], &cfg).unwrap();
        assert_eq!(one.resamples + two.resamples, 0);
        let t_split = two.disconnection[0][1];
        let a: Vec<_> = one.cr_trajectories[0].iter().filter(|p| p.0 < t_split).collect();
        let b: Vec<_> = two.cr_trajectories[0].iter().filter(|p| p.0 < t_split).collect();
        assert!(a.len() > 1);
        assert_eq!(a, b);
    }
}

#[test]
fn rotating_endpoints_fixes_the_normalizer_trajectory() {
    let targets = [c(0.3, -0.2), c(-0.5, 0.1), c(0.05, 0.6)];
    let cfg = GrowConfig::new(2.0, 0.3, 2.0, 31);
    let base = grow(&targets, &cfg).unwrap();
    assert_sound(&base);
    for alpha in [0.5, 1.234, 4.0] {
        let turned = grow(&targets, &GrowConfig { endpoint_rotation: alpha, ..cfg }).unwrap();
        assert_sound(&turned);
        assert_eq!(base.resamples + turned.resamples, 0);
        let (p, q) = (&base.cr_trajectories[0], &turned.cr_trajectories[0]);
        assert_eq!(p.len(), q.len());
        for (u, v) in p.iter().zip(q) {
            assert_eq!(u.0, v.0);
            assert!((u.1 - v.1).abs() < 1e-9 * (1.0 + u.1.abs()), "{u:?} {v:?}");
        }
    }
}

#[test]
fn rotation_leaves_the_law_at_the_origin_unchanged() {
    let run = |seed: u64, alpha: f64| -> Vec<f64> {
        (0..300u64)
            .map(|i| {
                let mut cfg = GrowConfig::new(2.0, 0.3, 2.0, replica_seed(seed, i));
                cfg.koebe = false;
                cfg.endpoint_rotation = alpha;
                grow(&[c(0.0, 0.0)], &cfg).unwrap().capacity_since_start(0, 2.0)
            })
            .collect()
    };
    let same = grow(&[c(0.0, 0.0)], &GrowConfig::new(2.0, 0.3, 2.0, 5)).unwrap();
    let turned = grow(&[c(0.0, 0.0)], &GrowConfig { endpoint_rotation: 2.0, ..GrowConfig::new(2.0, 0.3, 2.0, 5) }).unwrap();
    for (u, v) in same.cr_trajectories[0].iter().zip(&turned.cr_trajectories[0]) {
        assert!((u.1 - v.1).abs() < 1e-8 * (1.0 + u.1));
    }
    let ks = ks_two_sample(&run(100, 0.0), &run(200, 2.0));
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn small_excursions_rarely_separate_the_origin() {
    let kappa = 2.0;
    let cfg = TraceConfig::default();
    let (big, _) = separation_rate(kappa, 1.5, 20_000, 41, &cfg).unwrap();
    let (small, se) = separation_rate(kappa, 0.15, 100_000, 42, &cfg).unwrap();
    assert!(small > 3.0 * se, "too few hits: {small} ± {se}");
    let expected = 10f64.powf(8.0 / kappa - 2.0);
    let ratio = big / small;
    assert!(ratio >= expected / 3.0 && ratio <= expected * 3.0, "ratio {ratio}");
}

#[test]
fn shrinkage_of_the_origin_component() {
    let cfg = GrowConfig::new(2.0, 0.3, 5.0, 21);
    let mut r_grid: Vec<f64> = (0..16).map(|k| 0.9 * 0.75f64.powi(k)).collect();
    let last = *r_grid.last().unwrap();
    r_grid.extend((1..=40).map(|k| last * 0.5f64.powi(k)));
    let t_grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.5).collect();
    let tab = shrinkage_stats(&cfg, &t_grid, &r_grid, 12, 100).unwrap();
    assert!(tab.probability[0].iter().all(|&p| (p - 1.0).abs() < 1e-12));
    let k = r_grid.iter().position(|&r| r <= 0.51).unwrap();
    let column: Vec<f64> = tab.probability.iter().map(|p| p[k]).collect();
    assert!(column.windows(2).all(|w| w[1] <= w[0]), "{column:?}");
    let fit = tab.decay[k].unwrap();
    assert!(fit.slope < 0.0 && fit.r_squared > 0.9, "{fit:?}");
    let (mid, end) = (5, 10);
    let smaller = tab.outer_radius.iter().filter(|o| o[end] < o[mid]).count();
    assert!(smaller >= 95, "{smaller}/100");
}

#[test]
fn box_dimension_of_a_chord() {
    let chord = ArcPolyline::chord(0.2, 2.9, 500).unwrap();
    let bd = box_dimension([chord.vertices()], &[4, 5, 6, 7, 8]).unwrap();
    assert!(bd.estimate >= 0.9 && bd.estimate <= 1.1, "{bd:?}");
    assert!(!bd.unreliable);
    assert!(box_dimension([chord.vertices()], &[4, 5]).is_err());
    let short = ArcPolyline::chord(0.0, 0.01, 2).unwrap();
    assert!(box_dimension([short.vertices()], &[1, 2, 3]).unwrap().unreliable);
}

#[test]
fn box_dimension_kappa_zero() {
    let mut cfg = GrowConfig::new(0.0, 0.3, 1e6, 2);
    cfg.retain_traces = true;
    cfg.follow = Follow::Target(0);
    cfg.max_events = Some(500);
    let rec = grow(&[c(0.0, 0.0)], &cfg).unwrap();
    assert_sound(&rec);
    assert_eq!(rec.traces().count(), 500);
    let bd = box_dimension(rec.traces(), &[5, 6, 7, 8, 9]).unwrap();
    assert!(!bd.unreliable);
    assert!(bd.estimate >= 0.9 && bd.estimate <= 1.2, "{bd:?}");
}

#[test]
fn csv_and_svg_output() {
    let mut cfg = GrowConfig::new(2.0, 0.5, 1.0, 3);
    cfg.retain_traces = true;
    let rec = grow(&[c(0.0, 0.0), c(0.4, 0.2)], &cfg).unwrap();
    assert_sound(&rec);
    let csv = events_csv(&rec);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "component,arrival_time,first_angle,second_angle,per_target_capacity");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), rec.events.len());
    for (row, e) in rows.iter().zip(&rec.events) {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 5);
        assert_eq!(f[0].parse::<usize>().unwrap(), e.component);
        assert_eq!(f[1].parse::<f64>().unwrap(), e.arrival_time);
        assert_eq!(f[2].parse::<f64>().unwrap(), e.endpoints.first);
        for (item, &(i, cap)) in f[4].split(';').zip(&e.per_target_capacity) {
            let (id, v) = item.split_once(':').unwrap();
            assert_eq!(id.parse::<usize>().unwrap(), i);
            assert_eq!(v.parse::<f64>().unwrap(), cap);
        }
    }
    let arcs: Vec<(usize, Vec<C>)> = rec.events.iter().map(|e| (e.component, e.trace.clone().unwrap())).collect();
    for invert in [false, true] {
        let svg = render_svg(&arcs, invert, 3.0);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("viewBox=\"0 0 1000 1000\""));
        assert!(svg.matches("<polyline").count() <= arcs.len());
        assert_eq!(svg, render_svg(&arcs, invert, 3.0));
    }
}

#[test]
fn runs_are_reproducible() {
    let cfg = GrowConfig::new(2.5, 0.4, 1.5, 77);
    let targets = [c(0.0, 0.0), c(0.3, 0.3), c(-0.6, 0.0)];
    let a = grow(&targets, &cfg).unwrap();
    let b = grow(&targets, &cfg).unwrap();
    assert_eq!(events_csv(&a), events_csv(&b));
    assert_eq!(a.disconnection, b.disconnection);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn growth_invariants(
        kappa in 0.0f64..3.5,
        seed in 0u64..1000,
        pts in prop::collection::vec((0.0f64..0.85, 0.0f64..(2.0 * PI)), 2..5),
    ) {
        let targets: Vec<C> = pts.iter().map(|&(r, a)| C::from_polar(r, a)).collect();
        prop_assume!(targets.iter().enumerate().all(|(i, z)| targets[..i].iter().all(|w| (z - w).norm() > 1e-3)));
        let rec = grow(&targets, &GrowConfig::new(kappa, 0.5, 1.0, seed)).unwrap();
        assert_sound(&rec);
        for node in &rec.component_history {
            prop_assert!(!node.targets.is_empty());
            if let Some(p) = node.parent {
                let parent = &rec.component_history[p];
                prop_assert!(p < node.id && parent.born <= node.born);
                prop_assert!(node.targets.iter().all(|t| parent.targets.contains(t)));
                for &a in &node.targets {
                    for &b in &parent.targets {
                        if !node.targets.contains(&b) {
                            prop_assert!(rec.disconnection[a][b] <= node.born);
                        }
                    }
                }
            }
        }
    }
}
