//! Capacity of a chordal SLE_κ excursion sampled as the absorption time of
//! dθ = √κ dB + ((κ−4)/2)·cot(θ/2) dt on (0, 2π).

use crate::error::{Error, Result};
use crate::rng::{stream, Rng};
use crate::stats::{mean_stderr, MeanEstimate};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Absorbed {
    Zero,
    TwoPi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub step_base: f64,
    pub abs_tol: f64,
    pub t_max: f64,
}

impl Default for SdeConfig {
    fn default() -> Self {
        SdeConfig { step_base: 1e-3, abs_tol: 1e-5, t_max: 50.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaPath {
    pub kappa: f64,
    pub theta0: f64,
    pub step_base: f64,
    pub absorbed_at: Option<Absorbed>,
    /// Capacity in nats; equals `t_max` when the path was capped.
    pub hitting_time: f64,
    pub capped: bool,
    pub steps: u64,
}

fn drift(kappa: f64, theta: f64) -> f64 {
    0.5 * (kappa - 4.0) / (0.5 * theta).tan()
}

fn step_size(kappa: f64, theta: f64, base: f64) -> f64 {
    let s = (0.5 * theta).sin();
    base.min(0.1 * s * s / kappa.max(1.0))
}

fn absorbed(theta: f64, tol: f64) -> Option<Absorbed> {
    if theta <= tol {
        Some(Absorbed::Zero)
    } else if theta >= 2.0 * PI - tol {
        Some(Absorbed::TwoPi)
    } else {
        None
    }
}

fn rk4(theta: f64, dt: f64) -> f64 {
    let f = |x: f64| drift(0.0, x.clamp(1e-300, 2.0 * PI - 1e-15));
    let k1 = f(theta);
    let k2 = f(theta + 0.5 * dt * k1);
    let k3 = f(theta + 0.5 * dt * k2);
    let k4 = f(theta + dt * k3);
    theta + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

pub fn sample_capacity(kappa: f64, theta0: f64, cfg: &SdeConfig, rng: &mut Rng) -> Result<ThetaPath> {
    if !(0.0..8.0).contains(&kappa) {
        return Err(Error::Parameter(format!("κ = {kappa} outside [0, 8)")));
    }
    if !(theta0 > 0.0 && theta0 < 2.0 * PI) {
        return Err(Error::Domain(format!("θ0 = {theta0} outside (0, 2π)")));
    }
    let mut path = ThetaPath {
        kappa,
        theta0,
        step_base: cfg.step_base,
        absorbed_at: absorbed(theta0, cfg.abs_tol),
        hitting_time: 0.0,
        capped: false,
        steps: 0,
    };
    if path.absorbed_at.is_some() {
        return Ok(path);
    }
    let sk = kappa.sqrt();
    let mut theta = theta0;
    let mut t = 0.0;
    loop {
        let dt = step_size(kappa, theta, cfg.step_base).min(cfg.t_max - t);
        theta = if kappa == 0.0 {
            rk4(theta, dt)
        } else {
            let z: f64 = rng.sample(StandardNormal);
            theta + sk * dt.sqrt() * z + drift(kappa, theta) * dt
        };
        t += dt;
        path.steps += 1;
        if let Some(a) = absorbed(theta, cfg.abs_tol) {
            path.absorbed_at = Some(a);
            path.hitting_time = t;
            return Ok(path);
        }
        if t >= cfg.t_max {
            path.capped = true;
            path.hitting_time = cfg.t_max;
            return Ok(path);
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McLaplace {
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
    /// λ at or beyond 1 − κ/8: the target moment is infinite.
    pub moment_divergence: bool,
    pub capped_paths: usize,
}

/// Hitting times of `n` independent paths; path i uses stream i of `seed`.
pub fn sample_many(kappa: f64, theta0: f64, n: usize, seed: u64, cfg: &SdeConfig) -> Result<Vec<ThetaPath>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample_capacity(kappa, theta0, cfg, &mut stream(seed, i)))
        .collect()
}

pub fn mc_capacity_laplace(
    kappa: f64,
    lambda: f64,
    theta0: f64,
    n: usize,
    seed: u64,
    cfg: &SdeConfig,
) -> Result<McLaplace> {
    let moment_divergence = lambda >= 1.0 - kappa / 8.0;
    if lambda == 0.0 {
        return Ok(McLaplace { estimate: 1.0, stderr: 0.0, n, moment_divergence, capped_paths: 0 });
    }
    let paths = sample_many(kappa, theta0, n, seed, cfg)?;
    let capped_paths = paths.iter().filter(|p| p.capped).count();
    let values: Vec<f64> = paths.iter().map(|p| (lambda * p.hitting_time).exp()).collect();
    let MeanEstimate { mean, stderr, .. } = mean_stderr(&values);
    Ok(McLaplace { estimate: mean, stderr, n, moment_divergence, capped_paths })
}

pub fn mc_mean_capacity(kappa: f64, theta0: f64, n: usize, seed: u64, cfg: &SdeConfig) -> Result<MeanEstimate> {
    let paths = sample_many(kappa, theta0, n, seed, cfg)?;
    let t: Vec<f64> = paths.iter().map(|p| p.hitting_time).collect();
    Ok(mean_stderr(&t))
}
