//! The CGE_κ engine at finite cutoff: a Poisson stream of SLE_κ excursions
//! attached by iterated normalized conformal maps, tracked at finitely many
//! targets.
//!
//! Each live component keeps a disk chart in which its normalizing target
//! sits at 0. An event samples a boundary pair, maps the chart to H with the
//! pair at (0, ∞), runs a discretized chordal Loewner chain (piecewise
//! constant driving, vertical-slit steps), closes the curve with the vertical
//! ray above the final tip and maps each side back to the disk.

use crate::conformal::{
    invert_all, koebe_check, segment_distance, separates, ArcPolyline, DiskAutomorphism, Elementary, HalfPlaneChart, MapChain, Side,
    C64,
};
use crate::error::{Error, Result};
use crate::rng::{mix, substream, Rng};
use crate::stats::{linear_fit, mean_stderr, LinearFit};
use rand::Rng as _;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::f64::consts::PI;

/// Smallest accepted cutoff angle.
pub const MIN_CUTOFF: f64 = 1e-4;
/// Targets whose image gets this close to the circle are split off.
pub const SWALLOW_TOL: f64 = 1e-6;
/// Event attempts before a component gives up.
const MAX_ATTEMPTS: usize = 64;
/// Loewner steps before an excursion is abandoned.
const MAX_STEPS: usize = 200_000;
/// Relative round-off tolerated in −log CR before a decrease is an error.
const MONOTONE_TOL: f64 = 1e-8;
/// Partition disagreements closer than this to the polyline are left to the map.
const PARTITION_MARGIN: f64 = 1e-3;

/// Endpoint angles of one excursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPair {
    pub first: f64,
    pub second: f64,
}

impl BoundaryPair {
    pub fn new(first: f64, second: f64) -> Self {
        BoundaryPair { first: first.rem_euclid(2.0 * PI), second: second.rem_euclid(2.0 * PI) }
    }

    /// Counterclockwise angle from `first` to `second`, in [0, 2π).
    pub fn separation(&self) -> f64 {
        (self.second - self.first).rem_euclid(2.0 * PI)
    }

    pub fn points(&self) -> (C64, C64) {
        (C64::from_polar(1.0, self.first), C64::from_polar(1.0, self.second))
    }

    pub fn rotated(&self, by: f64) -> Self {
        Self::new(self.first + by, self.second + by)
    }
}

fn check_cutoff(theta_cutoff: f64) -> Result<()> {
    if !(MIN_CUTOFF..=PI).contains(&theta_cutoff) {
        return Err(Error::Parameter(format!("θ_cutoff = {theta_cutoff} outside [{MIN_CUTOFF}, π]")));
    }
    Ok(())
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(0.0..4.0).contains(&kappa) {
        return Err(Error::Parameter(format!("κ = {kappa} outside [0, 4): the growth process does not exist")));
    }
    Ok(())
}

fn cot_half(theta: f64) -> f64 {
    if theta == PI {
        0.0
    } else {
        1.0 / (0.5 * theta).tan()
    }
}

/// μ-mass per unit time of pairs with separation ≥ θ_cutoff: 2·cot(θ_cutoff/2).
pub fn excursion_rate(theta_cutoff: f64) -> Result<f64> {
    check_cutoff(theta_cutoff)?;
    Ok(2.0 * cot_half(theta_cutoff))
}

/// CDF of the separation on [θc, 2π − θc] under density ∝ 1/sin²(θ/2).
pub fn separation_cdf(theta: f64, theta_cutoff: f64) -> f64 {
    if theta <= theta_cutoff {
        return 0.0;
    }
    if theta >= 2.0 * PI - theta_cutoff {
        return 1.0;
    }
    let k = cot_half(theta_cutoff);
    if k == 0.0 {
        return if theta >= PI { 1.0 } else { 0.0 };
    }
    (k - cot_half(theta)) / (2.0 * k)
}

pub fn separation_quantile(p: f64, theta_cutoff: f64) -> f64 {
    let k = cot_half(theta_cutoff) * (1.0 - 2.0 * p);
    2.0 * 1f64.atan2(k)
}

pub fn sample_endpoints(theta_cutoff: f64, rng: &mut Rng) -> Result<BoundaryPair> {
    check_cutoff(theta_cutoff)?;
    let first = rng.random::<f64>() * 2.0 * PI;
    let sep = separation_quantile(rng.random::<f64>(), theta_cutoff);
    Ok(BoundaryPair::new(first, first + sep))
}

/// Step control and truncation of one excursion's Loewner chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Half-plane capacity before the closing ray is considered.
    pub cap_max: f64,
    pub min_step: f64,
    /// Step as a fraction of the elapsed capacity.
    pub growth: f64,
    /// Step ≤ (resolution · distance from tip to the focus)².
    pub resolution: f64,
    /// The ray closes once the focus is within this angle of the real axis, seen from the tip.
    pub settle_angle: f64,
    pub cap_hard: f64,
    pub ray_points: usize,
    /// Tips kept uniformly along a sampled polyline.
    pub uniform_tips: usize,
    /// Steps that lower some tracked log conformal radius by more than this
    /// are always kept, with their neighbours.
    pub detail_drop: f64,
    pub max_tips: usize,
    /// Segments longer than this multiple of their distance to a tracked
    /// point are subdivided.
    pub refine: f64,
    /// Subdivisions allowed per polyline.
    pub max_refine: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            cap_max: 6.0,
            min_step: 1e-3,
            growth: 0.04,
            resolution: 0.1,
            settle_angle: 0.02,
            cap_hard: 1e4,
            ray_points: 24,
            uniform_tips: 64,
            detail_drop: 1e-3,
            max_tips: 4096,
            refine: 0.1,
            max_refine: 20_000,
        }
    }
}

/// A discretized Loewner chain as a list of elementary maps: vertical-slit
/// steps, interleaved with affine renormalizations when a focus is tracked.
#[derive(Debug, Clone, Default)]
pub struct LoewnerRun {
    pub elements: Vec<Elementary>,
    /// Positions of the slit steps in `elements`.
    pub slits: Vec<usize>,
    /// Image of the final tip, in the last frame.
    pub tip: f64,
    /// Half-plane capacity in original units.
    pub capacity: f64,
    /// Length of one unit of the last frame, in original units.
    pub frame_scale: f64,
    /// Per slit, whether it moved close to a tracked point.
    pub detailed: Vec<bool>,
    /// Per slit, whether the next slit roots off it (a driving jump of at
    /// least its own width), leaving a gap in the tip polyline.
    pub jumps: Vec<bool>,
}

impl LoewnerRun {
    /// Piecewise-constant driving: slit k has base W_k and duration dt_k.
    pub fn from_driving(bases: &[f64], durations: &[f64]) -> Self {
        let elements: Vec<Elementary> =
            bases.iter().zip(durations).map(|(&base, &dt)| Elementary::Slit { base, dt }).collect();
        LoewnerRun {
            slits: (0..elements.len()).collect(),
            elements,
            tip: *bases.last().unwrap_or(&0.0),
            capacity: durations.iter().sum(),
            frame_scale: 1.0,
            detailed: Vec::new(),
            jumps: bases
                .windows(2)
                .zip(durations)
                .map(|(b, &dt)| (b[1] - b[0]).abs() >= 2.0 * dt.sqrt())
                .chain(std::iter::once(false))
                .collect(),
        }
    }

    pub fn steps(&self) -> usize {
        self.slits.len()
    }

    /// Steps whose tips enter a sampled polyline, in order; always ends with the last step.
    pub fn tip_indices(&self, cfg: &TraceConfig) -> Vec<usize> {
        let n = self.slits.len();
        if n == 0 {
            return Vec::new();
        }
        let mut keep = vec![false; n];
        let u = cfg.uniform_tips.max(2).min(n);
        for j in 0..u {
            keep[((j + 1) * n) / u - 1] = true;
        }
        for (k, &d) in self.detailed.iter().enumerate() {
            if d {
                for i in k.saturating_sub(1)..(k + 2).min(n) {
                    keep[i] = true;
                }
            }
        }
        let idx: Vec<usize> = (0..n).filter(|&k| keep[k]).collect();
        if idx.len() <= cfg.max_tips.max(2) {
            return idx;
        }
        let m = cfg.max_tips.max(2);
        (0..m).map(|j| idx[((j + 1) * idx.len()) / m - 1]).collect()
    }

    fn eval(&self, chart: &HalfPlaneChart, pair: &BoundaryPair, node: Node) -> C64 {
        let els = &self.elements;
        match node {
            Node::Start => pair.points().0,
            Node::End => pair.points().1,
            Node::Slit(k, f) => {
                let pos = self.slits[k];
                match els[pos] {
                    Elementary::Slit { base, dt } => chart.to_disk(invert_all(&els[..pos], C64::new(base, 2.0 * dt.sqrt() * f))),
                    _ => unreachable!("slit index points at a non-slit element"),
                }
            }
            Node::Ray(s) => chart.to_disk(invert_all(els, C64::new(self.tip, s))),
        }
    }

    /// A curve parameter strictly between two neighbours, if one exists.
    fn midpoint(&self, a: Node, b: Node) -> Option<Node> {
        match (a, b) {
            (Node::Start, Node::Slit(k, _)) if k > 0 => Some(Node::Slit(k / 2, 1.0)),
            (Node::Start, Node::Slit(0, f)) if f > 1e-9 => Some(Node::Slit(0, 0.5 * f)),
            (Node::Slit(k1, _), Node::Slit(k2, _)) if k2 > k1 + 1 => Some(Node::Slit((k1 + k2) / 2, 1.0)),
            (Node::Slit(k1, f1), Node::Slit(k2, f2)) => {
                let lo = if k1 == k2 { f1 } else { 0.0 };
                (f2 - lo > 1e-9).then_some(Node::Slit(k2, 0.5 * (lo + f2)))
            }
            (Node::Start | Node::Slit(..), Node::Ray(s)) if s > 1e-200 => Some(Node::Ray(0.5 * s)),
            (Node::Ray(s1), Node::Ray(s2)) if s2 > s1 * (1.0 + 1e-9) => Some(Node::Ray((s1 * s2).sqrt())),
            (Node::Ray(s), Node::End) if s < 1e200 => Some(Node::Ray(4.0 * s)),
            _ => None,
        }
    }

    fn gap(&self, a: Node, b: Node) -> bool {
        match (a, b) {
            (Node::Slit(k1, _), Node::Slit(k2, _)) if k2 > k1 => self.jumps[k1..k2].iter().any(|&j| j),
            _ => false,
        }
    }

    /// The excursion as a disk polyline: selected tips and the closing ray,
    /// refined wherever a segment is long compared to its distance from one
    /// of `marks`.
    pub fn disk_curve(
        &self,
        chart: &HalfPlaneChart,
        pair: &BoundaryPair,
        cfg: &TraceConfig,
        marks: &[C64],
    ) -> Result<CurveSample> {
        let mut nodes = vec![Node::Start];
        let mut last_height = 1e-3;
        for k in self.tip_indices(cfg) {
            nodes.push(Node::Slit(k, 1.0));
            if let Elementary::Slit { dt, .. } = self.elements[self.slits[k]] {
                last_height = 2.0 * dt.sqrt();
            }
        }
        let hi = (1e6 * last_height).max(1e3 * self.capacity.sqrt() / self.frame_scale);
        let m = cfg.ray_points.max(2);
        let ratio = (hi / last_height).powf(1.0 / (m - 1) as f64);
        nodes.extend((0..m).map(|j| Node::Ray(last_height * ratio.powi(j as i32))));
        nodes.push(Node::End);
        let mut pts: Vec<(Node, C64)> = nodes.into_iter().map(|n| (n, self.eval(chart, pair, n))).collect();
        let mut budget = cfg.max_refine;
        while budget > 0 && !marks.is_empty() {
            let mut out = Vec::with_capacity(pts.len() * 2);
            let mut inserted = 0;
            for i in 0..pts.len() {
                out.push(pts[i]);
                if i + 1 == pts.len() || budget == 0 {
                    continue;
                }
                let ((na, a), (nb, b)) = (pts[i], pts[i + 1]);
                let len = (b - a).norm();
                if len < 1e-13 {
                    continue;
                }
                let near = marks.iter().map(|&z| segment_distance(z, a, b)).fold(f64::INFINITY, f64::min);
                if len > cfg.refine * near {
                    if let Some(mid) = self.midpoint(na, nb) {
                        out.push((mid, self.eval(chart, pair, mid)));
                        inserted += 1;
                        budget -= 1;
                    }
                }
            }
            pts = out;
            if inserted == 0 {
                break;
            }
        }
        let (x, y) = pair.points();
        let mut v = vec![x];
        let mut gaps = Vec::new();
        let mut open = false;
        for w in pts.windows(2) {
            open |= self.gap(w[0].0, w[1].0);
            let z = w[1].1;
            let last = w[1].0 == Node::End;
            if last || (z.norm() < 1.0 - 1e-13 && (z - *v.last().unwrap()).norm() > 1e-15) {
                if last && (y - *v.last().unwrap()).norm() == 0.0 {
                    break;
                }
                v.push(if last { y } else { z });
                gaps.push(open);
                open = false;
            }
        }
        Ok(CurveSample { polyline: ArcPolyline::new(v)?, gaps })
    }
}

/// A sampled excursion: the tip polyline plus, per segment, whether it
/// bridges a gap of the discrete hull rather than following it.
#[derive(Debug, Clone)]
pub struct CurveSample {
    pub polyline: ArcPolyline,
    pub gaps: Vec<bool>,
}

impl CurveSample {
    /// Distance to the sampled hull: bridging segments count by their endpoints only.
    pub fn hull_distance(&self, p: C64) -> f64 {
        let v = self.polyline.vertices();
        let mut d = v.iter().map(|&z| (z - p).norm()).fold(f64::INFINITY, f64::min);
        for (w, &g) in v.windows(2).zip(&self.gaps) {
            if !g {
                d = d.min(segment_distance(p, w[0], w[1]));
            }
        }
        d
    }
}

/// A point of the discretized curve: the base of the run, a fraction of a
/// slit's height, a height on the closing ray, or the far endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Start,
    Slit(usize, f64),
    Ray(f64),
    End,
}

/// Runs the chain while pushing `points` (with log-derivatives) through it.
/// Step control and the stopping rule look only at `points[focus]`; after
/// each step the frame is recentred at the driving point and rescaled so the
/// focus sits at unit distance.
pub fn run_loewner(
    kappa: f64,
    cfg: &TraceConfig,
    points: &mut [C64],
    logd: &mut [f64],
    focus: Option<usize>,
    rng: &mut Rng,
) -> Result<LoewnerRun> {
    let mut run = LoewnerRun { frame_scale: 1.0, ..Default::default() };
    if kappa == 0.0 {
        // constant driving: the curve is the vertical ray above 0
        return Ok(run);
    }
    let sk = kappa.sqrt();
    let log_cr = |p: &[C64], l: &[f64]| -> Vec<f64> { p.iter().zip(l).map(|(q, d)| q.im.ln() - d).collect() };
    let mut cr = log_cr(points, logd);
    let push = |e: Elementary, run: &mut LoewnerRun, points: &mut [C64], logd: &mut [f64]| {
        for (p, l) in points.iter_mut().zip(logd.iter_mut()) {
            let (np, d) = e.apply(*p);
            *p = np;
            *l += d.re;
        }
        run.elements.push(e);
    };
    let mut t = 0.0;
    loop {
        let s = run.frame_scale;
        let mut dt_orig = cfg.min_step.max(cfg.growth * t);
        if let Some(f) = focus {
            dt_orig = dt_orig.min((cfg.resolution * points[f].norm() * s).powi(2));
        }
        let dt = dt_orig / (s * s);
        run.slits.push(run.elements.len());
        push(Elementary::Slit { base: 0.0, dt }, &mut run, points, logd);
        let now = log_cr(points, logd);
        run.detailed.push(cr.iter().zip(&now).any(|(a, b)| a - b > cfg.detail_drop));
        cr = now;
        t += dt_orig;
        let settled = match focus {
            Some(f) => {
                let a = points[f].arg();
                a.min(PI - a) <= cfg.settle_angle
            }
            None => true,
        };
        if (t >= cfg.cap_max && settled) || t >= cfg.cap_hard {
            break;
        }
        if run.slits.len() >= MAX_STEPS {
            return Err(Error::Numeric("Loewner chain exceeded the step budget".into()));
        }
        let z: f64 = rng.sample(StandardNormal);
        let shift = sk * dt.sqrt() * z;
        run.jumps.push(shift.abs() >= 2.0 * dt.sqrt());
        let factor = match focus {
            Some(f) => 1.0 / (points[f] - shift).norm(),
            None => 1.0,
        };
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Numeric("degenerate frame".into()));
        }
        push(Elementary::Affine { shift, factor }, &mut run, points, logd);
        run.frame_scale /= factor;
        if !points.iter().all(|p| p.re.is_finite() && p.im.is_finite()) {
            return Err(Error::Numeric("target image overflowed".into()));
        }
    }
    run.jumps.push(false);
    run.tip = 0.0;
    run.capacity = t;
    Ok(run)
}

/// A chordal SLE_κ excursion between the pair, as a disk polyline.
pub fn sle_trace(kappa: f64, pair: &BoundaryPair, cfg: &TraceConfig, rng: &mut Rng) -> Result<ArcPolyline> {
    check_kappa(kappa)?;
    let (x, y) = pair.points();
    if pair.separation() == 0.0 {
        return Err(Error::Geometry("coincident endpoints".into()));
    }
    let chart = HalfPlaneChart::normalized_at(x, y, C64::new(0.0, 0.0));
    let mut focus = [chart.to_half_plane(C64::new(0.0, 0.0))];
    let run = run_loewner(kappa, cfg, &mut focus, &mut [0.0], Some(0), rng)?;
    Ok(run.disk_curve(&chart, pair, cfg, &[C64::new(0.0, 0.0)])?.polyline)
}

/// The same construction from an explicit driving sequence (bases, durations).
pub fn trace_from_driving(pair: &BoundaryPair, bases: &[f64], durations: &[f64], cfg: &TraceConfig) -> Result<ArcPolyline> {
    let (x, y) = pair.points();
    let chart = HalfPlaneChart::normalized_at(x, y, C64::new(0.0, 0.0));
    let run = LoewnerRun::from_driving(bases, durations);
    Ok(run.disk_curve(&chart, pair, cfg, &[])?.polyline)
}

/// Which components a run keeps simulating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Follow {
    All,
    /// Only the component containing this target index.
    Target(usize),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowConfig {
    pub kappa: f64,
    pub theta_cutoff: f64,
    pub t_max: f64,
    pub seed: u64,
    pub trace: TraceConfig,
    /// Check the Koebe sandwich for every target at every event.
    pub koebe: bool,
    /// Keep every excursion as a polyline in original coordinates.
    pub retain_traces: bool,
    pub follow: Follow,
    /// Stop a component once it holds a single target.
    pub stop_when_isolated: bool,
    pub max_events: Option<usize>,
    /// Added to both sampled endpoint angles.
    pub endpoint_rotation: f64,
}

impl GrowConfig {
    pub fn new(kappa: f64, theta_cutoff: f64, t_max: f64, seed: u64) -> Self {
        GrowConfig {
            kappa,
            theta_cutoff,
            t_max,
            seed,
            trace: TraceConfig::default(),
            koebe: true,
            retain_traces: false,
            follow: Follow::All,
            stop_when_isolated: false,
            max_events: None,
            endpoint_rotation: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExcursionEvent {
    pub component: usize,
    pub arrival_time: f64,
    /// Endpoint angles in the component's chart at the event.
    pub endpoints: BoundaryPair,
    /// The excursion in original coordinates, when retained. Its endpoints
    /// lie on ∂U or on earlier excursions.
    pub trace: Option<Vec<C64>>,
    /// (target index, increment of −log CR).
    pub per_target_capacity: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub born: f64,
    pub targets: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct KoebeStats {
    pub checks: u64,
    pub violations: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub kappa: f64,
    pub theta_cutoff: f64,
    pub t_max: f64,
    pub seed: u64,
    pub targets: Vec<C64>,
    /// Per target, (t, −log CR(z; D_t^z)) at t = 0 and after every event that touched it.
    pub cr_trajectories: Vec<Vec<(f64, f64)>>,
    /// T(z, w); +∞ when not separated by the end of the run.
    pub disconnection: Vec<Vec<f64>>,
    pub events: Vec<ExcursionEvent>,
    pub component_history: Vec<ComponentNode>,
    pub resamples: u64,
    pub attempts: u64,
    pub koebe: KoebeStats,
    /// Targets split off by the swallowing rule.
    pub swallowed: u64,
}

impl GrowthRecord {
    pub fn resample_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.resamples as f64 / self.attempts as f64
        }
    }

    /// More than 1% of excursions were resampled.
    pub fn flagged(&self) -> bool {
        self.resample_rate() > 0.01
    }

    /// −log CR(z_i; D_t) (right-continuous step function).
    pub fn minus_log_cr(&self, i: usize, t: f64) -> f64 {
        let tr = &self.cr_trajectories[i];
        let k = tr.partition_point(|p| p.0 <= t);
        tr[k.max(1) - 1].1
    }

    /// Capacity accumulated at z_i since time 0.
    pub fn capacity_since_start(&self, i: usize, t: f64) -> f64 {
        self.minus_log_cr(i, t) - self.cr_trajectories[i][0].1
    }

    pub fn traces(&self) -> impl Iterator<Item = &[C64]> {
        self.events.iter().filter_map(|e| e.trace.as_deref())
    }

    /// T(z,w) ≥ min(T(z,v), T(v,w)) for all triples.
    pub fn is_ultrametric_compatible(&self) -> bool {
        let n = self.targets.len();
        let d = &self.disconnection;
        (0..n).all(|a| {
            (0..n).all(|b| (0..n).all(|c| a == b || d[a][b] >= d[a][c].min(d[c][b])))
        })
    }
}

struct Component {
    id: usize,
    time: f64,
    /// Target indices; position 0 is the normalizer.
    members: Vec<usize>,
    images: Vec<C64>,
    logd: Vec<f64>,
    chain: MapChain,
    rng: Rng,
}

struct Group {
    swallowed: bool,
    members: Vec<usize>,
    images: Vec<C64>,
    logd: Vec<f64>,
    tail: Vec<Elementary>,
}

struct Outcome {
    pair: BoundaryPair,
    common: Vec<Elementary>,
    groups: Vec<Group>,
    trace: Option<CurveSample>,
    koebe: KoebeStats,
}

fn excursion(comp: &Component, cfg: &GrowConfig, want_trace: bool, rng: &mut Rng) -> Result<Outcome> {
    let pair = sample_endpoints(cfg.theta_cutoff, rng)?.rotated(cfg.endpoint_rotation);
    let (x, y) = pair.points();
    let chart = HalfPlaneChart::normalized_at(x, y, C64::new(0.0, 0.0));
    let to_h = Elementary::DiskToHalfPlane(chart);
    let n = comp.members.len();
    let mut q = Vec::with_capacity(n);
    let mut ld = Vec::with_capacity(n);
    for (&w, &l) in comp.images.iter().zip(&comp.logd) {
        let (p, d) = to_h.apply(w);
        q.push(p);
        ld.push(l + d.re);
    }
    let run = run_loewner(cfg.kappa, &cfg.trace, &mut q, &mut ld, Some(0), rng)?;
    let mut sides = Vec::with_capacity(n);
    for p in &q {
        let d = *p - run.tip;
        if !(d.im > 0.0) || d.re.abs() <= 1e-9 * d.norm() {
            return Err(Error::Ambiguity("target on the excursion".into()));
        }
        sides.push(if d.re > 0.0 { Side::Right } else { Side::Left });
    }
    let trace = if want_trace { Some(run.disk_curve(&chart, &pair, &cfg.trace, &comp.images)?) } else { None };
    if let Some(tr) = &trace {
        for j in 0..n {
            let dist = tr.hull_distance(comp.images[j]);
            if dist <= 1e-9 {
                return Err(Error::Ambiguity("target within tolerance of the trace".into()));
            }
            let line = &tr.polyline;
            if j > 0 && line.distance(comp.images[j]) > PARTITION_MARGIN && line.distance(comp.images[0]) > PARTITION_MARGIN {
                let split = separates(line, comp.images[0], comp.images[j])?;
                if split != (sides[j] != sides[0]) {
                    return Err(Error::Ambiguity("partition disagrees with the polyline".into()));
                }
            }
        }
    }
    let mut common = vec![to_h];
    common.extend(run.elements.iter().cloned());
    let mut groups = Vec::new();
    for side in [sides[0], if sides[0] == Side::Left { Side::Right } else { Side::Left }] {
        let idx: Vec<usize> = (0..n).filter(|&j| sides[j] == side).collect();
        if idx.is_empty() {
            continue;
        }
        let unfold = Elementary::Unfold { base: run.tip, side };
        let unfolded: Vec<(C64, f64)> = idx
            .iter()
            .map(|&j| {
                let (p, d) = unfold.apply(q[j]);
                (p, ld[j] + d.re)
            })
            .collect();
        // normalizer: position 0 if present (it is first in idx), else lowest target index
        let lead = (0..idx.len()).min_by_key(|&k| if idx[k] == 0 { 0 } else { comp.members[idx[k]] + 1 }).unwrap();
        let cayley = Elementary::HalfPlaneToDisk { point: unfolded[lead].0, rotation: 0.0 };
        let mut order: Vec<usize> = (0..idx.len()).collect();
        order.swap(0, lead);
        let mut kept = Group { swallowed: false, members: Vec::new(), images: Vec::new(), logd: Vec::new(), tail: vec![unfold, cayley] };
        let mut swallowed: Vec<(usize, C64, f64)> = Vec::new();
        for &k in &order {
            let (w, d) = cayley.apply(unfolded[k].0);
            let l = unfolded[k].1 + d.re;
            if k != lead && w.norm() >= 1.0 - SWALLOW_TOL {
                swallowed.push((comp.members[idx[k]], unfolded[k].0, unfolded[k].1));
            } else {
                kept.members.push(comp.members[idx[k]]);
                kept.images.push(if k == lead { C64::new(0.0, 0.0) } else { w });
                kept.logd.push(l);
            }
        }
        groups.push(kept);
        // targets at the circle cannot be resolved from one another: one component each
        swallowed.sort_by_key(|s| s.0);
        for (m, z, l) in swallowed {
            groups.push(Group {
                swallowed: true,
                members: vec![m],
                images: vec![C64::new(0.0, 0.0)],
                logd: vec![l - (2.0 * z.im).ln()],
                tail: vec![unfold, Elementary::HalfPlaneToDisk { point: z, rotation: 0.0 }],
            });
        }
    }
    let mut koebe = KoebeStats::default();
    if cfg.koebe {
        if let Some(tr) = &trace {
            for g in &groups {
                for (k, &m) in g.members.iter().enumerate() {
                    let j = comp.members.iter().position(|&c| c == m).unwrap();
                    let w0 = comp.images[j];
                    let inrad = tr.hull_distance(w0).min(1.0 - w0.norm());
                    let cr = (1.0 - g.images[k].norm_sqr()) * (comp.logd[j] - g.logd[k]).exp();
                    koebe.checks += 1;
                    if !koebe_check(inrad, cr) {
                        koebe.violations += 1;
                    }
                }
            }
        }
    }
    Ok(Outcome { pair, common, groups, trace, koebe })
}

fn minus_log_cr(image: C64, logd: f64) -> f64 {
    logd - (1.0 - image.norm_sqr()).ln()
}

/// Runs the growth process targeted at `targets`.
pub fn grow(targets: &[C64], cfg: &GrowConfig) -> Result<GrowthRecord> {
    check_kappa(cfg.kappa)?;
    check_cutoff(cfg.theta_cutoff)?;
    if !(cfg.t_max >= 0.0 && cfg.t_max.is_finite()) {
        return Err(Error::Parameter(format!("t_max = {} must be finite and ≥ 0", cfg.t_max)));
    }
    for (i, z) in targets.iter().enumerate() {
        if !(z.norm() < 1.0) {
            return Err(Error::Domain(format!("target {i} = {z} is not inside the unit disk")));
        }
        if targets[..i].contains(z) {
            return Err(Error::Domain(format!("target {i} repeats an earlier target")));
        }
    }
    let n = targets.len();
    let mut rec = GrowthRecord {
        kappa: cfg.kappa,
        theta_cutoff: cfg.theta_cutoff,
        t_max: cfg.t_max,
        seed: cfg.seed,
        targets: targets.to_vec(),
        cr_trajectories: vec![Vec::new(); n],
        disconnection: vec![vec![f64::INFINITY; n]; n],
        events: Vec::new(),
        component_history: Vec::new(),
        resamples: 0,
        attempts: 0,
        koebe: KoebeStats::default(),
        swallowed: 0,
    };
    if n == 0 {
        return Ok(rec);
    }
    for i in 0..n {
        rec.disconnection[i][i] = 0.0;
    }
    let rate = excursion_rate(cfg.theta_cutoff)?;
    let a0 = DiskAutomorphism { center_preimage: targets[0], rotation: 0.0 };
    let mut first = Component {
        id: 0,
        time: 0.0,
        members: (0..n).collect(),
        images: targets.iter().map(|&z| a0.apply(z)).collect(),
        logd: targets.iter().map(|&z| a0.derivative(z).norm().ln()).collect(),
        chain: MapChain::identity(&[]).extend(vec![Elementary::Automorphism(a0)]),
        rng: substream(cfg.seed, &[0]),
    };
    first.images[0] = C64::new(0.0, 0.0);
    for j in 0..n {
        rec.cr_trajectories[j].push((0.0, minus_log_cr(first.images[j], first.logd[j])));
    }
    rec.component_history.push(ComponentNode { id: 0, parent: None, born: 0.0, targets: (0..n).collect() });
    let mut next_id = 1;
    let mut stack = vec![first];
    let want_trace = cfg.koebe || cfg.retain_traces;
    let exp = Exp::new(rate.max(f64::MIN_POSITIVE)).map_err(|e| Error::Parameter(e.to_string()))?;
    while let Some(mut comp) = stack.pop() {
        if let Follow::Target(t) = cfg.follow {
            if !comp.members.contains(&t) {
                continue;
            }
        }
        loop {
            if cfg.stop_when_isolated && comp.members.len() <= 1 {
                break;
            }
            if cfg.max_events.is_some_and(|m| rec.events.len() >= m) || rate == 0.0 {
                break;
            }
            let wait: f64 = exp.sample(&mut comp.rng);
            if comp.time + wait > cfg.t_max {
                break;
            }
            comp.time += wait;
            let mut outcome = None;
            let mut last_err = None;
            for _ in 0..MAX_ATTEMPTS {
                rec.attempts += 1;
                let mut rng = comp.rng.clone();
                match excursion(&comp, cfg, want_trace, &mut rng) {
                    Ok(o) => {
                        comp.rng = rng;
                        outcome = Some(o);
                        break;
                    }
                    Err(e @ (Error::Ambiguity(_) | Error::Geometry(_) | Error::Numeric(_))) => {
                        rec.resamples += 1;
                        comp.rng = rng;
                        last_err = Some(e);
                    }
                    Err(e) => return Err(e),
                }
            }
            let o = outcome.ok_or_else(|| {
                Error::Numeric(format!(
                    "excursion resampling did not terminate in component {} ({} targets): {}",
                    comp.id,
                    comp.members.len(),
                    last_err.map(|e| e.to_string()).unwrap_or_default()
                ))
            })?;
            rec.koebe.checks += o.koebe.checks;
            rec.koebe.violations += o.koebe.violations;
            let t = comp.time;
            let trace = if cfg.retain_traces {
                o.trace.as_ref().map(|tr| tr.polyline.vertices().iter().map(|&z| comp.chain.invert(z)).collect())
            } else {
                None
            };
            let mut caps = Vec::new();
            for g in &o.groups {
                for (k, &m) in g.members.iter().enumerate() {
                    let before = *rec.cr_trajectories[m].last().map(|p| &p.1).unwrap();
                    let mut after = minus_log_cr(g.images[k], g.logd[k]);
                    if after < before {
                        if before - after > MONOTONE_TOL * (1.0 + before.abs()) {
                            return Err(Error::Consistency(format!(
                                "−log CR of target {m} decreased from {before} to {after} at t = {t}"
                            )));
                        }
                        // round-off of a vanishing increment
                        after = before;
                    }
                    caps.push((m, after - before));
                    rec.cr_trajectories[m].push((t, after));
                }
            }
            caps.sort_by_key(|c| c.0);
            for (a, ga) in o.groups.iter().enumerate() {
                for gb in &o.groups[a + 1..] {
                    for &u in &ga.members {
                        for &v in &gb.members {
                            rec.disconnection[u][v] = t;
                            rec.disconnection[v][u] = t;
                        }
                    }
                }
            }
            rec.events.push(ExcursionEvent {
                component: comp.id,
                arrival_time: t,
                endpoints: o.pair,
                trace,
                per_target_capacity: caps,
            });
            let common = if cfg.retain_traces { Some(comp.chain.extend(o.common.clone())) } else { None };
            let mut groups = o.groups.into_iter();
            let main = groups.next().unwrap();
            for g in groups {
                if g.swallowed {
                    rec.swallowed += g.members.len() as u64;
                }
                let chain = match &common {
                    Some(c) => c.extend(g.tail.clone()),
                    None => MapChain::identity(&[]),
                };
                rec.component_history.push(ComponentNode {
                    id: next_id,
                    parent: Some(comp.id),
                    born: t,
                    targets: g.members.clone(),
                });
                stack.push(Component {
                    id: next_id,
                    time: t,
                    members: g.members,
                    images: g.images,
                    logd: g.logd,
                    chain,
                    rng: substream(cfg.seed, &[next_id as u64]),
                });
                next_id += 1;
            }
            if let Some(c) = &common {
                comp.chain = c.extend(main.tail.clone());
            }
            comp.members = main.members;
            comp.images = main.images;
            comp.logd = main.logd;
        }
    }
    Ok(rec)
}

/// Statistics of T(z, w) over replicas.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DisconnectionStats {
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
    /// Replicas still connected at the hard horizon (counted at the horizon).
    pub censored: usize,
    pub horizon: f64,
}

/// Seed of replica `i` under root seed `seed`.
pub fn replica_seed(seed: u64, i: u64) -> u64 {
    mix(&[seed, i])
}

/// Replicated growth runs targeted at {z, w}, stopped at disconnection or at
/// the hard horizon 10·max(G_U(z,w), 1)/Λ′ (Λ′ supplied by the caller).
pub fn disconnection_mc(
    z: C64,
    w: C64,
    cfg: &GrowConfig,
    lambda_prime: f64,
    replicas: usize,
) -> Result<DisconnectionStats> {
    if z == w {
        return Err(Error::Domain("z = w: disconnection time undefined".into()));
    }
    let g = crate::conformal::green_disk(z, w)?;
    let horizon = 10.0 * g.max(1.0) / lambda_prime;
    let times = disconnection_times(&[z, w], 0, cfg, horizon, replicas)?;
    let censored = times.iter().filter(|v| v[0].is_infinite()).count();
    let vals: Vec<f64> = times.iter().map(|v| v[0].min(horizon)).collect();
    let m = mean_stderr(&vals);
    Ok(DisconnectionStats { mean: m.mean, stderr: m.stderr, replicas, censored, horizon })
}

/// Per replica, T(targets[anchor], targets[j]) for every j ≠ anchor (in order).
pub fn disconnection_times(
    targets: &[C64],
    anchor: usize,
    cfg: &GrowConfig,
    horizon: f64,
    replicas: usize,
) -> Result<Vec<Vec<f64>>> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut c = *cfg;
            c.seed = replica_seed(cfg.seed, i);
            c.t_max = horizon;
            c.follow = Follow::Target(anchor);
            c.stop_when_isolated = true;
            let rec = grow(targets, &c)?;
            Ok((0..targets.len()).filter(|&j| j != anchor).map(|j| rec.disconnection[anchor][j]).collect())
        })
        .collect()
}

/// Empirical P[D_t^0 ⊄ B(0, r)], estimated by rings of targets: a ring
/// point belongs to D_t^0 exactly while it is still connected to 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShrinkageTable {
    pub t_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    /// probability[i][k] for t_grid[i], r_grid[k].
    pub probability: Vec<Vec<f64>>,
    /// Per replica and t, the largest ring radius still connected to 0 (0 if none).
    pub outer_radius: Vec<Vec<f64>>,
    /// Per r, least-squares fit of log P against t over entries below `PLATEAU`
    /// seen in at least `MIN_SUPPORT` replicas.
    pub decay: Vec<Option<LinearFit>>,
}

const MIN_SUPPORT: f64 = 5.0;
const PLATEAU: f64 = 0.95;

pub fn ring_targets(r_grid: &[f64], ring_points: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0)];
    for (k, &r) in r_grid.iter().enumerate() {
        for j in 0..ring_points {
            // stagger rings so no two share an angle
            let a = 2.0 * PI * (j as f64 + 0.5 * (k % 2) as f64) / ring_points as f64;
            v.push(C64::from_polar(r, a));
        }
    }
    v
}

pub fn shrinkage_stats(
    cfg: &GrowConfig,
    t_grid: &[f64],
    r_grid: &[f64],
    ring_points: usize,
    replicas: usize,
) -> Result<ShrinkageTable> {
    if r_grid.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::Parameter("ring radii must lie in (0, 1)".into()));
    }
    let targets = ring_targets(r_grid, ring_points);
    let t_end = t_grid.iter().cloned().fold(0.0, f64::max);
    let per: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut c = *cfg;
            c.seed = replica_seed(cfg.seed, i);
            c.t_max = t_end;
            c.follow = Follow::Target(0);
            c.koebe = false;
            c.stop_when_isolated = true;
            let rec = grow(&targets, &c)?;
            Ok(rec.disconnection[0].clone())
        })
        .collect::<Result<_>>()?;
    let radius_of = |j: usize| targets[j].norm();
    let mut probability = vec![vec![0.0; r_grid.len()]; t_grid.len()];
    let mut outer_radius = vec![vec![0.0; t_grid.len()]; replicas];
    for (rep, dis) in per.iter().enumerate() {
        for (i, &t) in t_grid.iter().enumerate() {
            let alive = |j: usize| dis[j] > t;
            for (k, _) in r_grid.iter().enumerate() {
                let lo = 1 + k * ring_points;
                if (lo..lo + ring_points).any(alive) {
                    probability[i][k] += 1.0 / replicas as f64;
                }
            }
            outer_radius[rep][i] = (1..targets.len()).filter(|&j| alive(j)).map(radius_of).fold(0.0, f64::max);
        }
    }
    let decay = (0..r_grid.len())
        .map(|k| {
            let pts: Vec<(f64, f64)> = t_grid
                .iter()
                .zip(&probability)
                .filter(|(_, p)| p[k] < PLATEAU && p[k] * replicas as f64 >= MIN_SUPPORT - 1e-9)
                .map(|(&t, p)| (t, p[k].ln()))
                .collect();
            if pts.len() < 3 {
                None
            } else {
                let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                Some(linear_fit(&x, &y))
            }
        })
        .collect();
    Ok(ShrinkageTable { t_grid: t_grid.to_vec(), r_grid: r_grid.to_vec(), probability, outer_radius, decay })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxDimension {
    pub estimate: f64,
    pub fit: LinearFit,
    /// (box side ε, occupied boxes).
    pub counts: Vec<(f64, usize)>,
    /// Fewer than 100 boxes at the finest scale.
    pub unreliable: bool,
}

/// Box-counting dimension of a union of polylines over dyadic boxes of
/// side 2/2^k, k ∈ `levels`, covering [−1, 1]².
pub fn box_dimension<'a, I>(arcs: I, levels: &[u32]) -> Result<BoxDimension>
where
    I: IntoIterator<Item = &'a [C64]>,
{
    if levels.len() < 3 {
        return Err(Error::Parameter("at least 3 dyadic scales are needed".into()));
    }
    let finest = *levels.iter().max().unwrap();
    let cells = 1u64 << finest;
    let h = 2.0 / cells as f64;
    let mut fine: HashSet<(u64, u64)> = HashSet::new();
    let clamp = |v: f64| (((v + 1.0) / h).floor().max(0.0) as u64).min(cells - 1);
    for arc in arcs {
        for seg in arc.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let m = ((b - a).norm() / (0.25 * h)).ceil().max(1.0) as usize;
            for s in 0..=m {
                let p = a + (b - a) * (s as f64 / m as f64);
                fine.insert((clamp(p.re), clamp(p.im)));
            }
        }
    }
    let mut counts = Vec::new();
    for &l in levels {
        let shift = finest - l;
        let coarse: HashSet<(u64, u64)> = fine.iter().map(|&(i, j)| (i >> shift, j >> shift)).collect();
        counts.push((2.0 / (1u64 << l) as f64, coarse.len()));
    }
    let x: Vec<f64> = counts.iter().map(|c| (1.0 / c.0).ln()).collect();
    let y: Vec<f64> = counts.iter().map(|c| (c.1 as f64).ln()).collect();
    let fit = linear_fit(&x, &y);
    Ok(BoxDimension { estimate: fit.slope, fit, counts, unreliable: fine.len() < 100 })
}

/// Koebe proxy (O − g(x))/g′(x) for dist(x, γ) of a chordal SLE_κ from 0 to
/// ∞ in H and a boundary point x < 0; O is the image of the left side of the
/// curve's base. Tracked exactly through the vertical-slit steps.
pub fn boundary_approach(kappa: f64, x: f64, cfg: &TraceConfig, rng: &mut Rng) -> Result<f64> {
    check_kappa(kappa)?;
    if !(x < 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x = {x} must be a negative real")));
    }
    let sk = kappa.sqrt();
    // gap = O − g(x) is carried directly so it keeps relative precision
    let (mut gx, mut gap, mut w, mut logd, mut t) = (x, -x, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..MAX_STEPS {
        let dt = cfg.min_step.max(cfg.growth * t).min((cfg.resolution * (w - gx)).powi(2));
        let ux = gx - w;
        let uo = ux + gap;
        let sx = (ux * ux + 4.0 * dt).sqrt();
        let h = 2.0 * dt.sqrt();
        gap = if uo < 0.0 {
            // both left of the base: u ↦ −√(u² + 4dt)
            let so = (uo * uo + 4.0 * dt).sqrt();
            -gap * (uo + ux) / (so + sx)
        } else {
            // the slit roots right of O: the new leftmost hull point is its left foot
            ux * ux / (sx + h)
        };
        logd += ux.abs().ln() - sx.ln();
        gx = w - sx;
        t += dt;
        if t >= cfg.cap_max && gap < 1e-2 * (w - gx) {
            return Ok(gap / logd.exp());
        }
        let z: f64 = rng.sample(StandardNormal);
        w += sk * dt.sqrt() * z;
    }
    Err(Error::Numeric("boundary approach did not settle".into()))
}

/// Probability that the excursion between 1 and e^{iθ} separates the origin
/// from the complementary arc, i.e. leaves 0 on the side of the arc from 1
/// counterclockwise to e^{iθ}.
pub fn separates_origin(kappa: f64, theta: f64, cfg: &TraceConfig, rng: &mut Rng) -> Result<bool> {
    check_kappa(kappa)?;
    let pair = BoundaryPair::new(0.0, theta);
    let (x, y) = pair.points();
    let chart = HalfPlaneChart::normalized_at(x, y, C64::new(0.0, 0.0));
    let arc_mid = chart.to_half_plane(C64::from_polar(1.0, 0.5 * theta)).re;
    let mut q = [chart.to_half_plane(C64::new(0.0, 0.0))];
    let run = run_loewner(kappa, cfg, &mut q, &mut [0.0], Some(0), rng)?;
    Ok(((q[0].re - run.tip) > 0.0) == (arc_mid > 0.0))
}

/// Rate per unit time of excursions with separation in [ε, 2ε] that separate
/// the origin from the longer boundary arc.
pub fn separation_rate(kappa: f64, eps: f64, samples: usize, seed: u64, cfg: &TraceConfig) -> Result<(f64, f64)> {
    check_cutoff(eps)?;
    if 2.0 * eps > PI {
        return Err(Error::Parameter("2ε must not exceed π".into()));
    }
    let mass = 2.0 * (cot_half(eps) - cot_half(2.0 * eps));
    let hits: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, &[i]);
            let (k1, k2) = (cot_half(eps), cot_half(2.0 * eps));
            let k = k1 - rng.random::<f64>() * (k1 - k2);
            let theta = 2.0 * 1f64.atan2(k);
            Ok(if separates_origin(kappa, theta, cfg, &mut rng)? { 1.0 } else { 0.0 })
        })
        .collect::<Result<_>>()?;
    let m = mean_stderr(&hits);
    Ok((mass * m.mean, mass * m.stderr))
}

/// One CSV row per event: component, arrival time, endpoint angles, then
/// `target:increment` pairs separated by ';'.
pub fn events_csv(record: &GrowthRecord) -> String {
    let mut s = String::from("component,arrival_time,first_angle,second_angle,per_target_capacity\n");
    for e in &record.events {
        let caps: Vec<String> = e.per_target_capacity.iter().map(|(i, c)| format!("{i}:{c:.17e}")).collect();
        s.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{}\n",
            e.component,
            e.arrival_time,
            e.endpoints.first,
            e.endpoints.second,
            caps.join(";")
        ));
    }
    s
}

/// SVG of polylines on a 1000×1000 canvas; `invert` applies z ↦ 1/z̄ and
/// frames the image of the unit disk's exterior up to radius `extent`.
pub fn render_svg(arcs: &[(usize, Vec<C64>)], invert: bool, extent: f64) -> String {
    const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];
    let half = if invert { extent.max(1.0) } else { 1.0 };
    let to_px = |z: C64| (500.0 + 480.0 * z.re / half, 500.0 - 480.0 * z.im / half);
    let mut s = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1000 1000\" width=\"1000\" height=\"1000\">\n<rect width=\"1000\" height=\"1000\" fill=\"white\"/>\n",
    );
    s.push_str(&format!(
        "<circle cx=\"500\" cy=\"500\" r=\"{:.3}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n",
        480.0 / half
    ));
    for (comp, arc) in arcs {
        let pts: Vec<String> = arc
            .iter()
            .map(|&z| if invert && z.norm() > 0.0 { 1.0 / z.conj() } else { z })
            .filter(|z| z.norm() <= 2.0 * half)
            .map(|z| {
                let (x, y) = to_px(z);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        if pts.len() >= 2 {
            s.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"0.6\" points=\"{}\"/>\n",
                PALETTE[comp % PALETTE.len()],
                pts.join(" ")
            ));
        }
    }
    s.push_str("</svg>\n");
    s
}
