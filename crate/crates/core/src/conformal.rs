//! Conformal primitives of the unit disk U and the upper half-plane H:
//! Möbius automorphisms, Green function, boundary Poisson kernel, Koebe
//! bounds, arc separation and zipper-type removal maps.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);
/// On-curve / on-circle tolerance.
pub const AMBIGUITY_TOL: f64 = 1e-9;
/// Pairs of endpoints closer than this (in angle) produce the identity map.
pub const DEGENERATE_ANGLE: f64 = 1e-6;

fn check_interior(z: C64, name: &str) -> Result<()> {
    if !(z.norm() < 1.0) {
        return Err(Error::Domain(format!("{name} = {z} is not inside the unit disk")));
    }
    Ok(())
}

/// z ↦ e^{iρ}(z − a)/(1 − āz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskAutomorphism {
    pub center_preimage: C64,
    pub rotation: f64,
}

impl DiskAutomorphism {
    pub fn new(center_preimage: C64, rotation: f64) -> Result<Self> {
        check_interior(center_preimage, "center_preimage")?;
        Ok(DiskAutomorphism { center_preimage, rotation: rotation.rem_euclid(2.0 * PI) })
    }

    pub fn identity() -> Self {
        DiskAutomorphism { center_preimage: C64::new(0.0, 0.0), rotation: 0.0 }
    }

    pub fn apply(&self, z: C64) -> C64 {
        let a = self.center_preimage;
        C64::from_polar(1.0, self.rotation) * (z - a) / (1.0 - a.conj() * z)
    }

    pub fn derivative(&self, z: C64) -> C64 {
        let a = self.center_preimage;
        let d = 1.0 - a.conj() * z;
        C64::from_polar(1.0, self.rotation) * (1.0 - a.norm_sqr()) / (d * d)
    }

    pub fn invert(&self, w: C64) -> C64 {
        let a = self.center_preimage;
        let v = w * C64::from_polar(1.0, -self.rotation);
        (v + a) / (1.0 + a.conj() * v)
    }

    pub fn inverse(&self) -> Self {
        DiskAutomorphism {
            center_preimage: -self.center_preimage * C64::from_polar(1.0, self.rotation),
            rotation: (-self.rotation).rem_euclid(2.0 * PI),
        }
    }

    /// self ∘ other
    pub fn compose(&self, other: &DiskAutomorphism) -> Self {
        let a = other.invert(self.center_preimage);
        let der = self.derivative(other.apply(a)) * other.derivative(a);
        DiskAutomorphism { center_preimage: a, rotation: (der * (1.0 - a.norm_sqr())).arg().rem_euclid(2.0 * PI) }
    }
}

/// G_U(z, w) = log|(1 − z̄w)/(z − w)|.
pub fn green_disk(z: C64, w: C64) -> Result<f64> {
    check_interior(z, "z")?;
    check_interior(w, "w")?;
    if z == w {
        return Err(Error::Domain("Green function is infinite at coincident points".into()));
    }
    Ok(((1.0 - z.conj() * w).norm() / (z - w).norm()).ln())
}

/// H_U between boundary points at angular separation θ: 1/(4π sin²(θ/2)).
pub fn boundary_poisson(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 2.0 * PI) {
        return Err(Error::Domain(format!("θ = {theta} outside (0, 2π)")));
    }
    let s = (0.5 * theta).sin();
    Ok(1.0 / (4.0 * PI * s * s))
}

/// H_U(x, y) = 1/(π|x − y|²) for boundary points x ≠ y.
pub fn boundary_poisson_points(x: C64, y: C64) -> Result<f64> {
    let d = (x - y).norm_sqr();
    if d == 0.0 {
        return Err(Error::Domain("boundary Poisson kernel diverges at coincident points".into()));
    }
    Ok(1.0 / (PI * d))
}

/// inrad ≤ CR ≤ 4·inrad with 1e−9 relative slack.
pub fn koebe_check(inradius: f64, conformal_radius: f64) -> bool {
    let slack = 1e-9 * conformal_radius.max(inradius);
    inradius <= conformal_radius + slack && conformal_radius <= 4.0 * inradius + slack
}

/// A polyline crossing the disk between two boundary points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcPolyline {
    vertices: Vec<C64>,
}

impl ArcPolyline {
    pub fn new(vertices: Vec<C64>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Geometry("an arc needs at least 2 vertices".into()));
        }
        let n = vertices.len();
        for (k, v) in vertices.iter().enumerate() {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Geometry(format!("vertex {k} is not finite")));
            }
            let r = v.norm();
            if k == 0 || k == n - 1 {
                if (r - 1.0).abs() > AMBIGUITY_TOL {
                    return Err(Error::Geometry(format!("endpoint {k} has modulus {r}")));
                }
            } else if r >= 1.0 {
                return Err(Error::Geometry(format!("interior vertex {k} has modulus {r}")));
            }
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Geometry("consecutive vertices coincide".into()));
        }
        Ok(ArcPolyline { vertices })
    }

    pub fn vertices(&self) -> &[C64] {
        &self.vertices
    }

    pub fn start(&self) -> C64 {
        self.vertices[0]
    }

    pub fn end(&self) -> C64 {
        self.vertices[self.vertices.len() - 1]
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        ArcPolyline { vertices: v }
    }

    /// Euclidean distance from `p` to the polyline.
    pub fn distance(&self, p: C64) -> f64 {
        self.vertices.windows(2).map(|w| segment_distance(p, w[0], w[1])).fold(f64::INFINITY, f64::min)
    }

    /// Sampled straight chord between two boundary angles.
    pub fn chord(alpha: f64, beta: f64, n: usize) -> Result<Self> {
        let a = C64::from_polar(1.0, alpha);
        let b = C64::from_polar(1.0, beta);
        let n = n.max(2);
        Self::new((0..n).map(|k| a + (b - a) * (k as f64 / (n - 1) as f64)).collect())
    }

    /// Hyperbolic geodesic between two boundary angles.
    pub fn geodesic(alpha: f64, beta: f64, n: usize) -> Result<Self> {
        let (x, y) = (C64::from_polar(1.0, alpha), C64::from_polar(1.0, beta));
        let chart = HalfPlaneChart::new(x, y, 1.0);
        let n = n.max(2);
        let mut v = vec![x];
        for k in 1..n - 1 {
            // geometric spacing along the imaginary axis of the chart
            let s = (k as f64 / (n - 1) as f64 - 0.5) * 16.0;
            v.push(chart.to_disk(I * s.exp()));
        }
        v.push(y);
        Self::new(v)
    }
}

pub fn segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn orient(a: C64, b: C64, c: C64) -> f64 {
    cross(b - a, c - a)
}

/// Whether `p` and `q` lie in different components of U minus the arc.
pub fn separates(arc: &ArcPolyline, p: C64, q: C64) -> Result<bool> {
    check_interior(p, "p")?;
    check_interior(q, "q")?;
    if arc.distance(p) <= AMBIGUITY_TOL || arc.distance(q) <= AMBIGUITY_TOL {
        return Err(Error::Ambiguity("point within tolerance of the arc".into()));
    }
    // The segment pq stays inside the disk, so it meets the closed curve
    // (arc + boundary arc) only along the arc; count crossings with a
    // half-open rule at vertices.
    let mut crossings = 0usize;
    for w in arc.vertices().windows(2) {
        let (a, b) = (w[0], w[1]);
        let oa = orient(p, q, a) > 0.0;
        let ob = orient(p, q, b) > 0.0;
        if oa == ob {
            continue;
        }
        let op = orient(a, b, p);
        let oq = orient(a, b, q);
        if (op > 0.0) != (oq > 0.0) && op != 0.0 && oq != 0.0 {
            crossings += 1;
        }
    }
    Ok(crossings % 2 == 1)
}

/// Which component of the complement of an arc from x to y, seen in the
/// half-plane chart where the arc runs from 0 to ∞.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// U → H with x ↦ 0 and y ↦ ∞: z ↦ (i(y+z)/(y−z) − shift)/scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneChart {
    pub y: C64,
    pub shift: f64,
    pub scale: f64,
}

impl HalfPlaneChart {
    /// `reference` is an interior point whose image gets unit modulus
    /// (scale 1 is used when it is `None`).
    pub fn new(x: C64, y: C64, scale: f64) -> Self {
        let theta = (y.arg() - x.arg()).rem_euclid(2.0 * PI);
        let shift = 1.0 / (0.5 * theta).tan();
        HalfPlaneChart { y, shift, scale }
    }

    pub fn normalized_at(x: C64, y: C64, reference: C64) -> Self {
        let mut c = Self::new(x, y, 1.0);
        let r = (c.cayley(reference) - c.shift).norm();
        c.scale = if r > 0.0 { r } else { 1.0 };
        c
    }

    fn cayley(&self, z: C64) -> C64 {
        I * (self.y + z) / (self.y - z)
    }

    pub fn to_half_plane(&self, z: C64) -> C64 {
        (self.cayley(z) - self.shift) / self.scale
    }

    pub fn to_disk(&self, w: C64) -> C64 {
        let c = w * self.scale + self.shift;
        self.y * (c - I) / (c + I)
    }
}

/// An elementary conformal map with closed-form derivative and inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Elementary {
    /// U → U.
    Automorphism(DiskAutomorphism),
    /// U → H.
    DiskToHalfPlane(HalfPlaneChart),
    /// H minus the vertical slit [base, base + 2i√dt] → H, tip ↦ base.
    Slit { base: f64, dt: f64 },
    /// H → H Möbius fixing 0 and sending `pole` to ∞: z ↦ z/(1 − z/pole).
    FixZero { pole: f64 },
    /// z ↦ factor·z, factor > 0.
    Scale { factor: f64 },
    /// z ↦ factor·(z − shift), factor > 0.
    Affine { shift: f64, factor: f64 },
    /// Quadrant at `base` → H: z ↦ ±(z − base)².
    Unfold { base: f64, side: Side },
    /// H → U sending `point` to 0: z ↦ e^{iρ}(z − p)/(z − p̄).
    HalfPlaneToDisk { point: C64, rotation: f64 },
}

fn slit_root(z: C64, dt: f64) -> C64 {
    // √(z² + 4dt) with the branch asymptotic to z, analytic off the slit
    if z == C64::new(0.0, 0.0) {
        return C64::new(0.0, 2.0 * dt.sqrt());
    }
    z * (1.0 + 4.0 * dt / (z * z)).sqrt()
}

fn slit_root_inverse(w: C64, dt: f64) -> C64 {
    let w = C64::new(w.re, w.im.max(0.0));
    if w.im == 0.0 {
        let x = w.re;
        let r2 = x * x - 4.0 * dt;
        return if r2 <= 0.0 {
            C64::new(0.0, (-r2).sqrt())
        } else {
            C64::new(x.signum() * r2.sqrt(), 0.0)
        };
    }
    let z = w * (1.0 - 4.0 * dt / (w * w)).sqrt();
    if z.im < 0.0 {
        -z
    } else {
        z
    }
}

impl Elementary {
    /// Image and complex log-derivative ln f′(z).
    pub fn apply(&self, z: C64) -> (C64, C64) {
        match *self {
            Elementary::Automorphism(a) => (a.apply(z), a.derivative(z).ln()),
            Elementary::DiskToHalfPlane(c) => {
                let d = c.y - z;
                (c.to_half_plane(z), (2.0 * I * c.y / (d * d * c.scale)).ln())
            }
            Elementary::Slit { base, dt } => {
                let u = z - base;
                let r = slit_root(u, dt);
                (base + r, -(0.5) * (1.0 + 4.0 * dt / (u * u)).ln())
            }
            Elementary::FixZero { pole } => {
                let d = 1.0 - z / pole;
                (z / d, -2.0 * d.ln())
            }
            Elementary::Scale { factor } => (z * factor, C64::new(factor.ln(), 0.0)),
            Elementary::Affine { shift, factor } => ((z - shift) * factor, C64::new(factor.ln(), 0.0)),
            Elementary::Unfold { base, side } => {
                let u = z - base;
                let s = match side {
                    Side::Right => 1.0,
                    Side::Left => -1.0,
                };
                (s * u * u, (2.0 * s * u).ln())
            }
            Elementary::HalfPlaneToDisk { point, rotation } => {
                let e = C64::from_polar(1.0, rotation);
                let d = z - point.conj();
                (e * (z - point) / d, (e * 2.0 * I * point.im).ln() - 2.0 * d.ln())
            }
        }
    }

    pub fn invert(&self, w: C64) -> C64 {
        match *self {
            Elementary::Automorphism(a) => a.invert(w),
            Elementary::DiskToHalfPlane(c) => c.to_disk(w),
            Elementary::Slit { base, dt } => base + slit_root_inverse(w - base, dt),
            Elementary::FixZero { pole } => w / (1.0 + w / pole),
            Elementary::Scale { factor } => w / factor,
            Elementary::Affine { shift, factor } => w / factor + shift,
            Elementary::Unfold { base, side } => match side {
                Side::Right => base + w.sqrt(),
                Side::Left => base + I * w.sqrt(),
            },
            Elementary::HalfPlaneToDisk { point, rotation } => {
                let v = w * C64::from_polar(1.0, -rotation);
                (point - v * point.conj()) / (1.0 - v)
            }
        }
    }
}

pub fn apply_all(elements: &[Elementary], z: C64) -> (C64, C64) {
    let mut w = z;
    let mut dlog = C64::new(0.0, 0.0);
    for e in elements {
        let (nw, d) = e.apply(w);
        w = nw;
        dlog += d;
    }
    (w, dlog)
}

pub fn invert_all(elements: &[Elementary], w: C64) -> C64 {
    elements.iter().rev().fold(w, |acc, e| e.invert(acc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub id: usize,
    pub image: C64,
    /// Accumulated log|derivative| in nats.
    pub log_derivative: f64,
}

/// A persistent composition of elementary maps; extending shares the prefix.
#[derive(Debug, Clone, Default)]
pub struct MapChain {
    segments: Vec<Arc<Vec<Elementary>>>,
    pub marked: Vec<MarkedPoint>,
}

impl MapChain {
    pub fn identity(points: &[(usize, C64)]) -> Self {
        MapChain {
            segments: Vec::new(),
            marked: points.iter().map(|&(id, z)| MarkedPoint { id, image: z, log_derivative: 0.0 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn segments(&self) -> &[Arc<Vec<Elementary>>] {
        &self.segments
    }

    pub fn elements(&self) -> impl Iterator<Item = &Elementary> {
        self.segments.iter().flat_map(|s| s.iter())
    }

    pub fn apply(&self, z: C64) -> (C64, f64) {
        let mut w = z;
        let mut acc = 0.0;
        for s in &self.segments {
            let (nw, d) = apply_all(s, w);
            w = nw;
            acc += d.re;
        }
        (w, acc)
    }

    pub fn invert(&self, w: C64) -> C64 {
        self.segments.iter().rev().fold(w, |acc, s| invert_all(s, acc))
    }

    /// New chain with one more segment; marked points are pushed through it.
    pub fn extend(&self, segment: Vec<Elementary>) -> MapChain {
        let marked = self
            .marked
            .iter()
            .map(|m| {
                let (w, d) = apply_all(&segment, m.image);
                MarkedPoint { id: m.id, image: w, log_derivative: m.log_derivative + d.re }
            })
            .collect();
        let mut segments = self.segments.clone();
        segments.push(Arc::new(segment));
        MapChain { segments, marked }
    }

    pub fn marked_point(&self, id: usize) -> Option<&MarkedPoint> {
        self.marked.iter().find(|m| m.id == id)
    }
}

/// H → U map sending `tau` to 0 with the total derivative made real
/// positive, given the complex log-derivative accumulated so far.
pub fn normalizing_cayley(tau: C64, dlog_so_far: C64) -> Elementary {
    let base = Elementary::HalfPlaneToDisk { point: tau, rotation: 0.0 };
    let arg = (dlog_so_far + base.apply(tau).1).im;
    Elementary::HalfPlaneToDisk { point: tau, rotation: (-arg).rem_euclid(2.0 * PI) }
}

#[derive(Debug, Clone)]
pub struct RemovalMap {
    /// Chain with the target as marked point 0.
    pub chain: MapChain,
    pub side: Side,
    /// log|f′(target)|, the capacity increment seen from the target.
    pub log_derivative: f64,
    /// Vertices that fell out of H while zipping and were skipped.
    pub grazing_vertices: usize,
}

fn self_intersects(v: &[C64]) -> bool {
    let n = v.len();
    for i in 0..n.saturating_sub(1) {
        for j in i + 2..n - 1 {
            let (a, b, c, d) = (v[i], v[i + 1], v[j], v[j + 1]);
            let o1 = orient(a, b, c);
            let o2 = orient(a, b, d);
            let o3 = orient(c, d, a);
            let o4 = orient(c, d, b);
            if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
                return true;
            }
        }
    }
    false
}

/// Conformal map of the component of U∖arc containing `target` onto U with
/// target ↦ 0 and positive derivative (geodesic zipper on the polyline).
pub fn removal_map(arc: &ArcPolyline, target: C64) -> Result<RemovalMap> {
    check_interior(target, "target")?;
    let x = arc.start();
    let y = arc.end();
    let sep = (y.arg() - x.arg()).rem_euclid(2.0 * PI);
    if sep.min(2.0 * PI - sep) < DEGENERATE_ANGLE {
        return Ok(RemovalMap {
            chain: MapChain::identity(&[(0, target)]),
            side: Side::Right,
            log_derivative: 0.0,
            grazing_vertices: 0,
        });
    }
    if arc.distance(target) <= AMBIGUITY_TOL {
        return Err(Error::Ambiguity("target lies on the arc".into()));
    }
    let v = arc.vertices();
    if self_intersects(v) {
        return Err(Error::Geometry("arc polyline intersects itself".into()));
    }
    let chart = HalfPlaneChart::normalized_at(x, y, target);
    let mut elements = vec![Elementary::DiskToHalfPlane(chart)];
    // images of the remaining interior vertices and of ∞ (the endpoint y)
    let mut pts: Vec<C64> = v[1..v.len() - 1].iter().map(|&z| chart.to_half_plane(z)).collect();
    let mut xi: Option<f64> = None;
    let mut grazing = 0;
    for k in 0..pts.len() {
        let zeta = pts[k];
        if !(zeta.im > 0.0 && zeta.re.is_finite() && zeta.im.is_finite()) {
            // an arc meeting the circle at a shallow angle runs below the
            // geodesic pieces; such vertices are skipped
            grazing += 1;
            continue;
        }
        let mut step: Vec<Elementary> = Vec::with_capacity(2);
        let vertical = zeta.re.abs() <= 1e-15 * zeta.norm();
        let top = if vertical {
            zeta.im
        } else {
            let pole = zeta.norm_sqr() / zeta.re;
            step.push(Elementary::FixZero { pole });
            let l = zeta / (1.0 - zeta / pole);
            l.im
        };
        step.push(Elementary::Slit { base: 0.0, dt: 0.25 * top * top });
        // rescale so the next vertex has unit modulus
        if let Some(next) = pts.get(k + 1) {
            let m = apply_all(&step, *next).0.norm();
            if m.is_finite() && m > 0.0 {
                step.push(Elementary::Scale { factor: 1.0 / m });
            }
        }
        for p in pts.iter_mut().skip(k + 1) {
            *p = apply_all(&step, *p).0;
        }
        xi = match (xi, vertical) {
            (None, true) => None,
            (None, false) => {
                let pole = zeta.norm_sqr() / zeta.re;
                Some(apply_all(&step[1..], C64::new(-pole, 0.0)).0.re)
            }
            (Some(r), _) => Some(apply_all(&step, C64::new(r, 0.0)).0.re),
        };
        elements.extend(step);
    }
    if let Some(r) = xi {
        elements.push(Elementary::FixZero { pole: r });
    }
    let (tau, dlog) = apply_all(&elements, target);
    if tau.re.abs() <= AMBIGUITY_TOL * tau.norm() {
        return Err(Error::Ambiguity("target on the closing ray".into()));
    }
    let side = if tau.re > 0.0 { Side::Right } else { Side::Left };
    let unfold = Elementary::Unfold { base: 0.0, side };
    let (sq, dlog2) = unfold.apply(tau);
    elements.push(unfold);
    elements.push(normalizing_cayley(sq, dlog + dlog2));
    let chain = MapChain::identity(&[(0, target)]).extend(elements);
    let log_derivative = chain.marked[0].log_derivative;
    Ok(RemovalMap { chain, side, log_derivative, grazing_vertices: grazing })
}

/// `removal_map` that insists on the caller's side.
pub fn removal_map_on_side(arc: &ArcPolyline, target: C64, side: Side) -> Result<RemovalMap> {
    let r = removal_map(arc, target)?;
    if r.side != side {
        return Err(Error::Separation(format!("target is on the {:?} side, not {:?}", r.side, side)));
    }
    Ok(r)
}
