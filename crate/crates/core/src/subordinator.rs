//! Finite-activity subordinators X(t) = d·t + Σ_{s≤t} Δ_s: simulation,
//! first passage and overshoot statistics.

use crate::capacity::{sample_capacity, SdeConfig};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::growth::{excursion_rate, sample_endpoints};
use crate::rng::{substream, Rng};
use crate::stats::mean_stderr;
use rand::Rng as _;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Normalized law of a jump above the floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum JumpLaw {
    /// Every jump has this size.
    Atom(f64),
    /// j_min + Exp(beta): the restriction of c·e^{−βx}dx to (j_min, ∞).
    Exponential { beta: f64 },
    /// Uniform resampling of recorded jump sizes.
    Empirical(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevySpec {
    pub drift: f64,
    /// Π((j_min, ∞)).
    pub rate: f64,
    pub jumps: JumpLaw,
    pub j_min: f64,
    /// Mass of Π below j_min that was dropped.
    pub dropped_rate: f64,
    /// ∫_{x ≤ j_min} x Π(dx), the drift lost with it.
    pub dropped_mean: f64,
}

/// Default jump floor.
pub const J_MIN: f64 = 1e-8;

impl LevySpec {
    pub fn new(drift: f64, rate: f64, jumps: JumpLaw) -> Result<Self> {
        if !(drift >= 0.0 && drift.is_finite()) {
            return Err(Error::Parameter(format!("drift {drift} must be finite and ≥ 0")));
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::Parameter(format!("jump rate {rate} must be finite and ≥ 0")));
        }
        match &jumps {
            JumpLaw::Atom(a) if !(*a > 0.0 && a.is_finite()) => {
                return Err(Error::Parameter(format!("atom {a} must be positive")));
            }
            JumpLaw::Exponential { beta } if !(*beta > 0.0 && beta.is_finite()) => {
                return Err(Error::Parameter(format!("β = {beta} must be positive")));
            }
            JumpLaw::Empirical(v) if rate > 0.0 && v.is_empty() => {
                return Err(Error::Parameter("empirical jump law without samples".into()));
            }
            _ => {}
        }
        Ok(LevySpec { drift, rate, jumps, j_min: 0.0, dropped_rate: 0.0, dropped_mean: 0.0 })
    }

    pub fn pure_drift(drift: f64) -> Result<Self> {
        Self::new(drift, 0.0, JumpLaw::Atom(1.0))
    }

    /// Π(dx) = c·e^{−βx}dx restricted to (j_min, ∞).
    pub fn exponential(drift: f64, c: f64, beta: f64, j_min: f64) -> Result<Self> {
        if !(c > 0.0 && j_min >= 0.0) {
            return Err(Error::Parameter("need c > 0 and j_min ≥ 0".into()));
        }
        let mut s = Self::new(drift, c / beta * (-beta * j_min).exp(), JumpLaw::Exponential { beta })?;
        s.j_min = j_min;
        s.dropped_rate = c / beta * (-(-beta * j_min).exp_m1());
        // ∫_0^j x c e^{−βx} dx
        s.dropped_mean = c / (beta * beta) * (1.0 - (1.0 + beta * j_min) * (-beta * j_min).exp());
        Ok(s)
    }

    /// Jumps resampled from `samples` at total rate `rate`; samples at or
    /// below `j_min` are dropped and booked as deficit.
    pub fn empirical(drift: f64, rate: f64, samples: &[f64], j_min: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Parameter("no jump samples".into()));
        }
        let n = samples.len() as f64;
        let kept: Vec<f64> = samples.iter().copied().filter(|&x| x > j_min).collect();
        let low: Vec<f64> = samples.iter().copied().filter(|&x| x <= j_min).collect();
        let mut s = Self::new(drift, rate * kept.len() as f64 / n, JumpLaw::Empirical(kept))?;
        s.j_min = j_min;
        s.dropped_rate = rate * low.len() as f64 / n;
        s.dropped_mean = rate * low.iter().sum::<f64>() / n;
        Ok(s)
    }

    pub fn sample_jump(&self, rng: &mut Rng) -> f64 {
        match &self.jumps {
            JumpLaw::Atom(a) => *a,
            JumpLaw::Exponential { beta } => self.j_min + Exp::new(*beta).unwrap().sample(rng),
            JumpLaw::Empirical(v) => v[rng.random_range(0..v.len())],
        }
    }

    /// Π((x, ∞)) for x ≥ j_min.
    pub fn tail(&self, x: f64) -> f64 {
        match &self.jumps {
            JumpLaw::Atom(a) => {
                if x < *a {
                    self.rate
                } else {
                    0.0
                }
            }
            JumpLaw::Exponential { beta } => self.rate * (-beta * (x - self.j_min).max(0.0)).exp(),
            JumpLaw::Empirical(v) => self.rate * v.iter().filter(|&&s| s > x).count() as f64 / v.len() as f64,
        }
    }

    /// E[e^{−λJ}] for one jump, λ ≥ 0.
    fn jump_laplace(&self, lambda: f64) -> f64 {
        match &self.jumps {
            JumpLaw::Atom(a) => (-lambda * a).exp(),
            JumpLaw::Exponential { beta } => (-lambda * self.j_min).exp() * beta / (beta + lambda),
            JumpLaw::Empirical(v) => v.iter().map(|&s| (-lambda * s).exp()).sum::<f64>() / v.len() as f64,
        }
    }

    /// Φ(λ) = dλ + ∫(1 − e^{−λx})Π(dx), so that E[e^{−λX(t)}] = e^{−tΦ(λ)}.
    pub fn laplace_exponent(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("λ = {lambda} must be ≥ 0")));
        }
        if self.rate == 0.0 {
            return Ok(self.drift * lambda);
        }
        Ok(self.drift * lambda + self.rate * (1.0 - self.jump_laplace(lambda)))
    }

    /// log E[e^{λX(1)}] = dλ + ∫(e^{λx} − 1)Π(dx); +∞ when the integral diverges.
    pub fn cumulant(&self, lambda: f64) -> Result<Extended> {
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("λ = {lambda} must be ≥ 0")));
        }
        if self.rate == 0.0 {
            return Ok(Extended::Finite(self.drift * lambda));
        }
        let mgf = match &self.jumps {
            JumpLaw::Atom(a) => (lambda * a).exp(),
            JumpLaw::Exponential { beta } => {
                if lambda >= *beta {
                    return Ok(Extended::PosInfinity);
                }
                (lambda * self.j_min).exp() * beta / (beta - lambda)
            }
            JumpLaw::Empirical(v) => v.iter().map(|&s| (lambda * s).exp()).sum::<f64>() / v.len() as f64,
        };
        Ok(Extended::Finite(self.drift * lambda + self.rate * (mgf - 1.0)))
    }

    /// E[X(1)] = d + ∫xΠ(dx).
    pub fn mean(&self) -> f64 {
        let jump_mean = match &self.jumps {
            JumpLaw::Atom(a) => *a,
            JumpLaw::Exponential { beta } => self.j_min + 1.0 / beta,
            JumpLaw::Empirical(v) => v.iter().sum::<f64>() / v.len().max(1) as f64,
        };
        self.drift + if self.rate > 0.0 { self.rate * jump_mean } else { 0.0 }
    }

    /// ∫x²Π(dx).
    pub fn second_moment(&self) -> f64 {
        if self.rate == 0.0 {
            return 0.0;
        }
        let m2 = match &self.jumps {
            JumpLaw::Atom(a) => a * a,
            JumpLaw::Exponential { beta } => {
                let j = self.j_min;
                j * j + 2.0 * j / beta + 2.0 / (beta * beta)
            }
            JumpLaw::Empirical(v) => v.iter().map(|s| s * s).sum::<f64>() / v.len() as f64,
        };
        self.rate * m2
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSummary {
    pub t: f64,
    pub value: f64,
    /// (time, size), in time order.
    pub jumps: Vec<(f64, f64)>,
}

impl PathSummary {
    /// X(s) for 0 ≤ s ≤ t (right-continuous).
    pub fn value_at(&self, drift: f64, s: f64) -> f64 {
        drift * s + self.jumps.iter().take_while(|j| j.0 <= s).map(|j| j.1).sum::<f64>()
    }
}

pub fn simulate(spec: &LevySpec, t: f64, rng: &mut Rng) -> Result<PathSummary> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t = {t} must be finite and ≥ 0")));
    }
    let mut jumps = Vec::new();
    if spec.rate > 0.0 && t > 0.0 {
        let n = Poisson::new(spec.rate * t).map_err(|e| Error::Parameter(e.to_string()))?.sample(rng) as usize;
        let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * t).collect();
        times.sort_by(|a, b| a.total_cmp(b));
        jumps = times.into_iter().map(|s| (s, spec.sample_jump(rng))).collect();
    }
    let value = spec.drift * t + jumps.iter().map(|j| j.1).sum::<f64>();
    Ok(PathSummary { t, value, jumps })
}

/// (L_x, G_x = X(L_x−), D_x = X(L_x)) for L_x = inf{t : X(t) > x}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageRecord {
    pub x: f64,
    pub time: f64,
    pub before: f64,
    pub after: f64,
}

impl PassageRecord {
    pub fn overshoot(&self) -> f64 {
        self.after - self.x
    }

    pub fn undershoot(&self) -> f64 {
        self.x - self.before
    }
}

pub fn first_passage(spec: &LevySpec, x: f64, rng: &mut Rng) -> Result<PassageRecord> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("level {x} must be finite and ≥ 0")));
    }
    if spec.drift == 0.0 && spec.rate == 0.0 {
        return Err(Error::Parameter("a zero subordinator never passes a level".into()));
    }
    let wait = if spec.rate > 0.0 { Some(Exp::new(spec.rate).map_err(|e| Error::Parameter(e.to_string()))?) } else { None };
    let (mut t, mut v) = (0.0, 0.0);
    loop {
        let tau = wait.as_ref().map_or(f64::INFINITY, |w| w.sample(rng));
        if spec.drift > 0.0 && v + spec.drift * tau > x {
            // continuous crossing
            return Ok(PassageRecord { x, time: t + (x - v) / spec.drift, before: x, after: x });
        }
        t += tau;
        v += spec.drift * tau;
        let before = v;
        v += spec.sample_jump(rng);
        if v > x {
            return Ok(PassageRecord { x, time: t, before, after: v });
        }
    }
}

/// Passage of a nondecreasing right-continuous step trajectory (t, value)
/// above `x`; `None` when it never exceeds x.
pub fn passage_of_steps(steps: &[(f64, f64)], x: f64) -> Option<PassageRecord> {
    let k = steps.iter().position(|s| s.1 > x)?;
    let before = if k == 0 { steps[0].1 } else { steps[k - 1].1 };
    Some(PassageRecord { x, time: steps[k].0, before, after: steps[k].1 })
}

/// n independent passages above x, replica i on stream (seed, i).
pub fn passages(spec: &LevySpec, x: f64, n: usize, seed: u64) -> Result<Vec<PassageRecord>> {
    (0..n as u64).into_par_iter().map(|i| first_passage(spec, x, &mut substream(seed, &[i]))).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OvershootTable {
    pub x_grid: Vec<f64>,
    pub y_grid: Vec<f64>,
    pub n: usize,
    /// tail[i][j] = empirical P[D_x − x ≥ y] for x_grid[i], y_grid[j].
    pub tail: Vec<Vec<f64>>,
    /// max over the grid of tail·e^{λ₀y}, from all n passages.
    pub c_star: f64,
    /// The same constant from the first n/2 passages.
    pub c_star_half: f64,
}

impl OvershootTable {
    /// C* is finite and within a factor 2 of its half-sample value.
    pub fn stable(&self) -> bool {
        if self.c_star == 0.0 && self.c_star_half == 0.0 {
            return true;
        }
        self.c_star.is_finite() && self.c_star_half > 0.0 && (self.c_star / self.c_star_half).ln().abs() <= 2f64.ln()
    }
}

pub fn overshoot_tail(
    spec: &LevySpec,
    lambda0: f64,
    x_grid: &[f64],
    y_grid: &[f64],
    n: usize,
    seed: u64,
) -> Result<OvershootTable> {
    if !(lambda0 > 0.0) {
        return Err(Error::Parameter(format!("λ₀ = {lambda0} must be positive")));
    }
    if !spec.cumulant(lambda0)?.is_finite() {
        return Err(Error::Parameter(format!("∫(e^(λ₀x) − 1)Π(dx) diverges at λ₀ = {lambda0}")));
    }
    if n < 2 {
        return Err(Error::Parameter("need at least 2 passages".into()));
    }
    let mut tail = Vec::with_capacity(x_grid.len());
    let (mut c_star, mut c_star_half) = (0.0f64, 0.0f64);
    for (i, &x) in x_grid.iter().enumerate() {
        let recs = passages(spec, x, n, crate::rng::mix(&[seed, i as u64]))?;
        let over: Vec<f64> = recs.iter().map(|r| r.overshoot()).collect();
        let frac = |v: &[f64], y: f64| v.iter().filter(|&&o| o >= y).count() as f64 / v.len() as f64;
        let row: Vec<f64> = y_grid.iter().map(|&y| frac(&over, y)).collect();
        for (j, &y) in y_grid.iter().enumerate() {
            c_star = c_star.max(row[j] * (lambda0 * y).exp());
            c_star_half = c_star_half.max(frac(&over[..n / 2], y) * (lambda0 * y).exp());
        }
        tail.push(row);
    }
    Ok(OvershootTable { x_grid: x_grid.to_vec(), y_grid: y_grid.to_vec(), n, tail, c_star, c_star_half })
}

/// Monte Carlo E[e^{λX(t)}] over n replicas: (mean, stderr).
pub fn mgf_mc(spec: &LevySpec, lambda: f64, t: f64, n: usize, seed: u64) -> Result<(f64, f64)> {
    let vals: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| simulate(spec, t, &mut substream(seed, &[i])).map(|p| (lambda * p.value).exp()))
        .collect::<Result<_>>()?;
    let m = mean_stderr(&vals);
    Ok((m.mean, m.stderr))
}

/// One CSV row per passage record.
pub fn passages_csv(records: &[PassageRecord]) -> String {
    let mut s = String::from("x,time,before,after\n");
    for r in records {
        s.push_str(&format!("{:.17e},{:.17e},{:.17e},{:.17e}\n", r.x, r.time, r.before, r.after));
    }
    s
}

/// Jumps of the accumulated capacity seen from the origin: each is the
/// capacity of an excursion whose endpoint separation is drawn from the
/// cutoff excursion measure, arriving at the total cutoff rate.
pub fn capacity_subordinator(kappa: f64, theta_cutoff: f64, samples: usize, seed: u64, sde: &SdeConfig) -> Result<LevySpec> {
    let rate = excursion_rate(theta_cutoff)?;
    let jumps: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, &[i]);
            let pair = sample_endpoints(theta_cutoff, &mut rng)?;
            Ok(sample_capacity(kappa, pair.separation(), sde, &mut rng)?.hitting_time)
        })
        .collect::<Result<_>>()?;
    LevySpec::empirical(0.0, rate, &jumps, J_MIN)
}

/// X(t) for the accumulated capacity with every jump drawn afresh: a
/// Poisson number of excursions, each with sampled endpoints and a sampled
/// capacity.
pub fn simulate_capacity(kappa: f64, theta_cutoff: f64, t: f64, sde: &SdeConfig, rng: &mut Rng) -> Result<f64> {
    let rate = excursion_rate(theta_cutoff)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t = {t} must be finite and ≥ 0")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let n = Poisson::new(rate * t).map_err(|e| Error::Parameter(e.to_string()))?.sample(rng) as usize;
    let mut total = 0.0;
    for _ in 0..n {
        let pair = sample_endpoints(theta_cutoff, rng)?;
        total += sample_capacity(kappa, pair.separation(), sde, rng)?.hitting_time;
    }
    Ok(total)
}
