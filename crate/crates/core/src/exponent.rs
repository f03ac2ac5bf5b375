//! Laplace exponent Λ_κ of the accumulated capacity, its derivative at 0,
//! the Legendre transform Λ*_κ and α_min.

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::hypergeom::{small_u_exponent, CapacityLaplace, CapacityLaplaceParams};
use crate::quadrature::{left_power, log_scale, simpson_rel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const REL_TOL: f64 = 1e-10;
const ABS_TOL: f64 = 1e-15;
const SPLIT_U: f64 = 0.25;
/// Richardson step for the finite-difference estimate of Λ′(0).
pub const RICHARDSON_H: f64 = 1e-3;
/// Maximum relative gap tolerated between the two Λ′(0) estimators.
pub const LAMBDA_PRIME_AUDIT: f64 = 0.02;
const LEGENDRE_LAMBDA_CAP: f64 = -64.0;

fn check_kappa(kappa: f64) -> Result<()> {
    if !(0.0..8.0).contains(&kappa) {
        return Err(Error::Parameter(format!("κ = {kappa} outside [0, 8)")));
    }
    Ok(())
}

/// u-exponent of F(u) − 1 near 0, with the κ = 8/3 log case treated as 1.
fn left_exponent(kappa: f64) -> f64 {
    if kappa == 0.0 {
        1.0
    } else {
        small_u_exponent(kappa).unwrap_or(1.0)
    }
}

fn integrand(lt: &CapacityLaplace, u: f64) -> f64 {
    match lt.minus_one(u) {
        Ok(Extended::Finite(v)) if v == 0.0 || u == 0.0 => 0.0,
        Ok(v) => 0.5 * (u * (1.0 - u)).powf(-1.5) * v.to_f64(),
        Err(_) => f64::NAN,
    }
}

fn integrate_range(lt: &CapacityLaplace, u_lo: f64) -> Result<f64> {
    let kappa = lt.params.kappa;
    let lam = lt.params.lambda;
    let f = |u: f64| integrand(lt, u);
    let mut total = 0.0;
    let right_start = u_lo.max(SPLIT_U);
    if u_lo < SPLIT_U {
        total += if u_lo == 0.0 {
            left_power(f, 0.0, SPLIT_U, left_exponent(kappa) - 1.5, REL_TOL, ABS_TOL)?
        } else {
            log_scale(f, u_lo, SPLIT_U, REL_TOL, ABS_TOL)?
        };
    }
    if right_start < 0.5 {
        total += if kappa == 0.0 && lam > 0.0 {
            // F = (1 − 2u)^{−λ}; integrate in v = 1/2 − u to keep 1 − 2u exact
            let g = |v: f64| {
                if v <= 0.0 {
                    return 0.0;
                }
                let u = 0.5 - v;
                0.5 * (u * (1.0 - u)).powf(-1.5) * (-lam * (2.0 * v).ln()).exp_m1()
            };
            left_power(g, 0.0, 0.5 - right_start, -lam, REL_TOL, ABS_TOL)?
        } else {
            simpson_rel(f, right_start, 0.5, REL_TOL, ABS_TOL)?
        };
    }
    Ok(total)
}

/// Λ_κ(λ) = ½∫₀^{1/2} u^{−3/2}(1−u)^{−3/2}(E[exp(λ cap)] − 1) du.
pub fn lambda_exponent(kappa: f64, lambda: f64) -> Result<Extended> {
    check_kappa(kappa)?;
    if lambda == 0.0 {
        return Ok(Extended::Finite(0.0));
    }
    if kappa >= 4.0 {
        return Ok(if lambda > 0.0 { Extended::PosInfinity } else { Extended::NegInfinity });
    }
    let lt = CapacityLaplace::new(CapacityLaplaceParams::new(kappa, lambda)?)?;
    if lt.is_divergent() {
        return Ok(Extended::PosInfinity);
    }
    Ok(Extended::Finite(integrate_range(&lt, 0.0)?))
}

/// The same integral restricted to u ≥ sin²(θ_cutoff/4).
pub fn lambda_truncated(kappa: f64, lambda: f64, theta_cutoff: f64) -> Result<Extended> {
    check_kappa(kappa)?;
    if !(theta_cutoff > 0.0 && theta_cutoff <= PI) {
        return Err(Error::Parameter(format!("θ_cutoff = {theta_cutoff} outside (0, π]")));
    }
    if lambda == 0.0 {
        return Ok(Extended::Finite(0.0));
    }
    let u_lo = crate::hypergeom::angle_to_u(theta_cutoff);
    if u_lo >= 0.5 {
        return Ok(Extended::Finite(0.0));
    }
    let lt = CapacityLaplace::new(CapacityLaplaceParams::new(kappa, lambda)?)?;
    if lt.is_divergent() {
        return Ok(Extended::PosInfinity);
    }
    Ok(Extended::Finite(integrate_range(&lt, u_lo)?))
}

/// p(φ) = M′(φ) for the mean absorption time M of the θ-SDE.
fn mean_capacity_slope(kappa: f64, phi: f64) -> Result<f64> {
    if phi >= PI {
        return Ok(0.0);
    }
    let beta = 2.0 - 8.0 / kappa;
    let s0 = (0.5 * phi).sin();
    let f = |psi: f64| ((0.5 * psi).sin() / s0).powf(beta);
    Ok(2.0 / kappa * simpson_rel(f, phi, PI, 1e-11, 1e-300)?)
}

fn slope_exponent(kappa: f64) -> f64 {
    (8.0 / kappa - 2.0).min(1.0)
}

/// E[cap(γ^θ)] for chordal SLE_κ at boundary separation θ, from the
/// boundary-value problem of the θ-SDE generator.
pub fn mean_capacity(kappa: f64, theta: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(0.0..=2.0 * PI).contains(&theta) {
        return Err(Error::Domain(format!("θ = {theta} outside [0, 2π]")));
    }
    let theta = if theta > PI { 2.0 * PI - theta } else { theta };
    if theta == 0.0 {
        return Ok(0.0);
    }
    if kappa == 0.0 {
        return Ok(-(0.5 * theta).cos().ln());
    }
    left_power(
        |phi| mean_capacity_slope(kappa, phi).unwrap_or(f64::NAN),
        0.0,
        theta,
        slope_exponent(kappa),
        1e-10,
        1e-300,
    )
}

/// ∫_{θc}^{π} E[cap(γ^θ)] / sin²(θ/2) dθ; θc = 0 gives Λ′_κ(0).
pub fn lambda_prime_truncated(kappa: f64, theta_cutoff: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if kappa >= 4.0 {
        return Err(Error::Parameter(format!("Λ′ is infinite for κ = {kappa} ≥ 4")));
    }
    if !(0.0..=PI).contains(&theta_cutoff) {
        return Err(Error::Parameter(format!("θ_cutoff = {theta_cutoff} outside [0, π]")));
    }
    if theta_cutoff >= PI {
        return Ok(0.0);
    }
    if kappa == 0.0 {
        let head = if theta_cutoff > 0.0 {
            2.0 / (0.5 * theta_cutoff).tan() * mean_capacity(0.0, theta_cutoff)?
        } else {
            0.0
        };
        return Ok(head + PI - theta_cutoff);
    }
    // after integrating by parts: ∫ p(φ)·2cot(max(φ, θc)/2) dφ
    let body = |phi: f64| 2.0 / (0.5 * phi).tan() * mean_capacity_slope(kappa, phi).unwrap_or(f64::NAN);
    if theta_cutoff == 0.0 {
        return left_power(body, 0.0, PI, slope_exponent(kappa) - 1.0, 1e-10, 1e-300);
    }
    let head = 2.0 / (0.5 * theta_cutoff).tan() * mean_capacity(kappa, theta_cutoff)?;
    Ok(head + simpson_rel(body, theta_cutoff, PI, 1e-10, 1e-300)?)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LambdaPrime {
    /// Mean-capacity integral.
    pub integral: f64,
    /// Richardson one-sided difference 2D(h) − D(2h), D(h) = Λ(h)/h.
    pub finite_difference: f64,
    pub relative_gap: f64,
}

pub fn lambda_prime_richardson(kappa: f64, h: f64) -> Result<f64> {
    let l1 = lambda_exponent(kappa, h)?
        .finite()
        .ok_or_else(|| Error::Numeric("Λ(h) diverged".into()))?;
    let l2 = lambda_exponent(kappa, 2.0 * h)?
        .finite()
        .ok_or_else(|| Error::Numeric("Λ(2h) diverged".into()))?;
    Ok(2.0 * l1 / h - l2 / (2.0 * h))
}

/// Λ′_κ(0) by two independent routes, failing if they disagree by more than 2%.
pub fn lambda_prime_zero(kappa: f64) -> Result<LambdaPrime> {
    let integral = lambda_prime_truncated(kappa, 0.0)?;
    let finite_difference = lambda_prime_richardson(kappa, RICHARDSON_H)?;
    let relative_gap = (integral - finite_difference).abs() / integral.abs();
    if !(integral > 0.0 && integral.is_finite()) || relative_gap > LAMBDA_PRIME_AUDIT {
        return Err(Error::Numeric(format!(
            "Λ′(0) audit failed for κ={kappa}: integral {integral}, difference {finite_difference}"
        )));
    }
    Ok(LambdaPrime { integral, finite_difference, relative_gap })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LegendrePoint {
    pub alpha: f64,
    pub value: f64,
    pub lambda_star: f64,
}

fn finite_lambda(kappa: f64, lambda: f64) -> f64 {
    match lambda_exponent(kappa, lambda) {
        Ok(v) => v.to_f64(),
        Err(_) => f64::NAN,
    }
}

/// Λ*_κ(α) = sup_λ (λα − Λ_κ(λ)) by golden-section search.
pub fn legendre(kappa: f64, alpha: f64) -> Result<LegendrePoint> {
    check_kappa(kappa)?;
    if kappa >= 4.0 {
        return Err(Error::Parameter(format!("Λ is not finite for κ = {kappa} ≥ 4")));
    }
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("α = {alpha} must be positive")));
    }
    let obj = |l: f64| {
        let v = l * alpha - finite_lambda(kappa, l);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let blowup = 1.0 - kappa / 8.0;
    let hi = blowup - 1e-9;
    let mut lo = -1.0;
    while lo > LEGENDRE_LAMBDA_CAP && obj(lo) >= obj(0.5 * lo) {
        lo *= 2.0;
    }
    let lo = lo.max(LEGENDRE_LAMBDA_CAP);
    let (lambda_star, value) = golden_max(obj, lo, hi, 1e-8);
    if !value.is_finite() {
        return Err(Error::Numeric(format!("Legendre search failed at κ={kappa}, α={alpha}")));
    }
    Ok(LegendrePoint { alpha, value, lambda_star })
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// The unique α with 2α = Λ*_κ(α), by bisection to 1e−8.
pub fn alpha_min(kappa: f64) -> Result<f64> {
    let lp = lambda_prime_zero(kappa)?.integral;
    alpha_min_with(kappa, lp)
}

pub fn alpha_min_with(kappa: f64, lambda_prime: f64) -> Result<f64> {
    let h = |a: f64| -> Result<f64> { Ok(2.0 * a - legendre(kappa, a)?.value) };
    let mut hi = lambda_prime;
    let mut lo = 0.5 * lambda_prime;
    let mut tries = 0;
    while h(lo)? >= 0.0 {
        hi = lo;
        lo *= 0.5;
        tries += 1;
        if tries > 30 {
            return Err(Error::Numeric("α_min bracketing failed".into()));
        }
    }
    if h(hi)? <= 0.0 {
        return Err(Error::Numeric("α_min bracketing failed at the upper end".into()));
    }
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if h(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundPoint {
    pub alpha: f64,
    pub legendre: Option<f64>,
    /// 2 − Λ*(α)/α clamped at 0; `None` marks the empty set (α < α_min).
    pub bound: Option<f64>,
}

pub fn dimension_bound_curve(kappa: f64, alpha_min: f64, alpha_grid: &[f64]) -> Result<Vec<BoundPoint>> {
    alpha_grid
        .par_iter()
        .map(|&alpha| {
            if alpha < alpha_min {
                return Ok(BoundPoint { alpha, legendre: None, bound: None });
            }
            let l = legendre(kappa, alpha)?.value;
            Ok(BoundPoint { alpha, legendre: Some(l), bound: Some((2.0 - l / alpha).max(0.0)) })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentTable {
    pub kappa: f64,
    pub lambda_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub lambda_prime_zero: LambdaPrime,
    pub blowup_boundary: f64,
}

pub fn chebyshev_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n)
        .map(|k| 0.5 * (lo + hi) + 0.5 * (hi - lo) * (PI * (2 * k + 1) as f64 / (2 * n) as f64).cos())
        .collect();
    g.sort_by(f64::total_cmp);
    g
}

impl ExponentTable {
    pub fn build(kappa: f64, points: usize) -> Result<Self> {
        if !(0.0..4.0).contains(&kappa) {
            return Err(Error::Parameter(format!("κ = {kappa} outside [0, 4)")));
        }
        let b = 1.0 - kappa / 8.0;
        let lambda_grid = chebyshev_grid(-0.2 * b, 0.98 * b, points);
        let values = lambda_grid
            .par_iter()
            .map(|&l| {
                lambda_exponent(kappa, l)?
                    .finite()
                    .ok_or_else(|| Error::Numeric(format!("Λ({l}) diverged inside the grid")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(ExponentTable { kappa, lambda_grid, values, lambda_prime_zero: lambda_prime_zero(kappa)?, blowup_boundary: b })
    }

    /// Smallest second divided difference along the grid.
    pub fn min_second_difference(&self) -> f64 {
        let x = &self.lambda_grid;
        let y = &self.values;
        (1..x.len() - 1)
            .map(|i| {
                let d1 = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
                let d2 = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
                2.0 * (d2 - d1) / (x[i + 1] - x[i - 1])
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Λ*(α) on a grid plus α_min.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LegendreCurve {
    pub kappa: f64,
    pub points: Vec<LegendrePoint>,
    pub alpha_min: f64,
}

impl LegendreCurve {
    pub fn build(kappa: f64, alpha_grid: &[f64], lambda_prime: f64) -> Result<Self> {
        let points = alpha_grid.par_iter().map(|&a| legendre(kappa, a)).collect::<Result<Vec<_>>>()?;
        Ok(LegendreCurve { kappa, points, alpha_min: alpha_min_with(kappa, lambda_prime)? })
    }
}
