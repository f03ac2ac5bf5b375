//! Random field on the fragmentation tree of disconnection times.
//!
//! Every tree node carries an independent compensated compound-Poisson
//! increment over the time it persists; a leaf's value is the sum along its
//! root path, so two leaves share increments up to their meet-time.

use crate::conformal::DiskAutomorphism;
use crate::error::{Error, Result};
use crate::growth::{grow, replica_seed, GrowConfig, GrowthRecord};
use crate::rng::{substream, Rng};
use crate::stats::{linear_fit, mean_stderr, LinearFit, MeanEstimate};
use crate::subordinator::{JumpLaw, LevySpec};
use num_complex::Complex64 as C64;
use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeNode {
    pub born: f64,
    /// Split time; +∞ for leaves and for groups never separated.
    pub died: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub leaves: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FragmentationTree {
    pub points: Vec<C64>,
    pub horizon: f64,
    /// Parents precede children.
    pub nodes: Vec<TreeNode>,
    pub leaf_node: Vec<usize>,
}

impl FragmentationTree {
    /// Tree whose leaf meet-times are the entries of `matrix`.
    pub fn from_matrix(points: &[C64], matrix: &[Vec<f64>], horizon: f64) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Parameter("a tree needs at least one leaf".into()));
        }
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::Parameter("disconnection matrix shape does not match the targets".into()));
        }
        if !(horizon >= 0.0) {
            return Err(Error::Parameter(format!("horizon {horizon} must be ≥ 0")));
        }
        for a in 0..n {
            for b in 0..a {
                if matrix[a][b] != matrix[b][a] || matrix[a][b].is_nan() || matrix[a][b] < 0.0 {
                    return Err(Error::Consistency(format!("entry ({a}, {b}) is not a valid symmetric time")));
                }
            }
        }
        let mut tree = FragmentationTree { points: points.to_vec(), horizon, nodes: Vec::new(), leaf_node: vec![0; n] };
        let mut stack: Vec<(Vec<usize>, f64, Option<usize>)> = vec![((0..n).collect(), 0.0, None)];
        while let Some((set, born, parent)) = stack.pop() {
            let id = tree.nodes.len();
            if let Some(p) = parent {
                tree.nodes[p].children.push(id);
            }
            if set.len() == 1 {
                tree.leaf_node[set[0]] = id;
                tree.nodes.push(TreeNode { born, died: f64::INFINITY, parent, children: Vec::new(), leaves: set });
                continue;
            }
            let mut split = f64::INFINITY;
            for (k, &a) in set.iter().enumerate() {
                for &b in &set[..k] {
                    split = split.min(matrix[a][b]);
                }
            }
            if split < born {
                return Err(Error::Consistency(format!("split at {split} precedes birth at {born}")));
            }
            // classes of the relation T > split
            let mut class: Vec<usize> = (0..set.len()).collect();
            for k in 0..set.len() {
                for l in 0..k {
                    if split < f64::INFINITY && matrix[set[k]][set[l]] > split {
                        let (ck, cl) = (class[k], class[l]);
                        class.iter_mut().filter(|c| **c == ck).for_each(|c| *c = cl);
                    }
                }
            }
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut seen: Vec<usize> = Vec::new();
            for k in 0..set.len() {
                match seen.iter().position(|&c| c == class[k]) {
                    Some(g) => groups[g].push(set[k]),
                    None => {
                        seen.push(class[k]);
                        groups.push(vec![set[k]]);
                    }
                }
            }
            if split == f64::INFINITY {
                groups = set.iter().map(|&i| vec![i]).collect();
            } else {
                for g in &groups {
                    for (k, &a) in g.iter().enumerate() {
                        if g[..k].iter().any(|&b| matrix[a][b] <= split) {
                            return Err(Error::Consistency("disconnection times are not ultrametric-compatible".into()));
                        }
                    }
                }
            }
            tree.nodes.push(TreeNode { born, died: split, parent, children: Vec::new(), leaves: set });
            for g in groups.into_iter().rev() {
                stack.push((g, split, Some(id)));
            }
        }
        Ok(tree)
    }

    fn ancestors(&self, leaf: usize) -> Vec<usize> {
        let mut v = vec![self.leaf_node[leaf]];
        while let Some(p) = self.nodes[*v.last().unwrap()].parent {
            v.push(p);
        }
        v
    }

    /// Death time of the lowest common ancestor of two distinct leaves.
    pub fn meet_time(&self, i: usize, j: usize) -> f64 {
        let up = self.ancestors(i);
        let mut k = self.leaf_node[j];
        loop {
            if up.contains(&k) {
                return self.nodes[k].died;
            }
            k = self.nodes[k].parent.expect("leaves share the root");
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn build_tree(record: &GrowthRecord) -> Result<FragmentationTree> {
    if record.targets.len() < 2 {
        return Err(Error::Parameter("a fragmentation tree needs at least 2 targets".into()));
    }
    FragmentationTree::from_matrix(&record.targets, &record.disconnection, record.t_max)
}

/// Finite-rate jump measure ν rescaled to unit second moment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightSpec {
    pub nu: LevySpec,
    pub scale: f64,
    /// m̄ = ∫x ν(dx) after rescaling.
    pub mean: f64,
}

impl WeightSpec {
    pub fn new(nu: LevySpec) -> Result<Self> {
        if nu.drift != 0.0 || nu.rate <= 0.0 {
            return Err(Error::Parameter("ν must be a pure-jump measure with positive finite mass".into()));
        }
        let m2 = nu.second_moment();
        if !(m2 > 0.0 && m2.is_finite()) {
            return Err(Error::Parameter("ν needs a finite positive second moment".into()));
        }
        let scale = 1.0 / m2.sqrt();
        let mean = scale * nu.mean();
        Ok(WeightSpec { nu, scale, mean })
    }

    /// ν = δ₁.
    pub fn unit_atom() -> Self {
        Self::new(LevySpec::new(0.0, 1.0, JumpLaw::Atom(1.0)).unwrap()).unwrap()
    }

    pub fn rate(&self) -> f64 {
        self.nu.rate
    }

    pub fn second_moment(&self) -> f64 {
        self.scale * self.scale * self.nu.second_moment()
    }

    fn jump(&self, rng: &mut Rng) -> f64 {
        self.scale * self.nu.sample_jump(rng)
    }
}

/// Leaf values h_s for every s in `times` (rows) from one realization.
pub fn sample_field_path(tree: &FragmentationTree, w: &WeightSpec, times: &[f64], rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    if let Some(&t) = times.iter().find(|&&t| !(t >= 0.0 && t <= tree.horizon)) {
        return Err(Error::Domain(format!("t = {t} outside [0, {}]", tree.horizon)));
    }
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    let mut vals = vec![vec![0.0; tree.nodes.len()]; times.len()];
    for (id, node) in tree.nodes.iter().enumerate() {
        let lo = node.born;
        let span = (node.died.min(t_end) - lo).max(0.0);
        if span == 0.0 {
            continue;
        }
        let count = Poisson::new(w.rate() * span).map_err(|e| Error::Parameter(e.to_string()))?.sample(rng) as usize;
        let jumps: Vec<(f64, f64)> = (0..count).map(|_| (lo + (1.0 - rng.random::<f64>()) * span, w.jump(rng))).collect();
        for (k, &s) in times.iter().enumerate() {
            let sum: f64 = jumps.iter().filter(|j| j.0 <= s).map(|j| j.1).sum();
            vals[k][id] = sum - w.mean * (s - lo).clamp(0.0, span);
        }
    }
    Ok(vals
        .into_iter()
        .map(|v| {
            let mut acc = vec![0.0; tree.nodes.len()];
            for (id, node) in tree.nodes.iter().enumerate() {
                acc[id] = node.parent.map_or(0.0, |p| acc[p]) + v[id];
            }
            tree.leaf_node.iter().map(|&l| acc[l]).collect()
        })
        .collect())
}

pub fn sample_field(tree: &FragmentationTree, w: &WeightSpec, t: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    Ok(sample_field_path(tree, w, &[t], rng)?.pop().unwrap())
}

/// Cell centres of a side×side lattice over [−r, r]² kept inside |z| ≤ r.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldGrid {
    pub side: usize,
    pub radius: f64,
    pub points: Vec<C64>,
    /// (column, row from the top) of each point.
    pub pixels: Vec<(usize, usize)>,
    pub cell_area: f64,
}

impl FieldGrid {
    pub fn new(side: usize, radius: f64) -> Result<Self> {
        if side == 0 || !(radius > 0.0 && radius < 1.0) {
            return Err(Error::Parameter("grid needs side ≥ 1 and radius in (0, 1)".into()));
        }
        let h = 2.0 * radius / side as f64;
        let mut points = Vec::new();
        let mut pixels = Vec::new();
        for row in 0..side {
            for col in 0..side {
                let z = C64::new(-radius + (col as f64 + 0.5) * h, radius - (row as f64 + 0.5) * h);
                if z.norm() <= radius {
                    points.push(z);
                    pixels.push((col, row));
                }
            }
        }
        Ok(FieldGrid { side, radius, points, pixels, cell_area: h * h })
    }
}

impl Default for FieldGrid {
    fn default() -> Self {
        FieldGrid::new(32, 0.9).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    Zero,
    /// exp(−1/(1 − |z−c|²/r²)) on |z − c| < r.
    Bump { center: C64, radius: f64 },
    /// z ↦ f(φ(z))·|φ′(z)|² for the bump f.
    Pulled { center: C64, radius: f64, map: DiskAutomorphism },
}

fn bump(z: C64, center: C64, radius: f64) -> f64 {
    let q = (z - center).norm_sqr() / (radius * radius);
    if q < 1.0 {
        (-1.0 / (1.0 - q)).exp()
    } else {
        0.0
    }
}

impl TestFunction {
    pub fn eval(&self, z: C64) -> f64 {
        match *self {
            TestFunction::Zero => 0.0,
            TestFunction::Bump { center, radius } => bump(z, center, radius),
            TestFunction::Pulled { center, radius, map } => bump(map.apply(z), center, radius) * map.derivative(z).norm_sqr(),
        }
    }

    /// Points on the boundary of the support.
    fn support_boundary(&self) -> Vec<C64> {
        let circle = |c: C64, r: f64| (0..256).map(move |k| c + C64::from_polar(r, 2.0 * PI * k as f64 / 256.0));
        match *self {
            TestFunction::Zero => Vec::new(),
            TestFunction::Bump { center, radius } => circle(center, radius).collect(),
            TestFunction::Pulled { center, radius, map } => circle(center, radius).map(|w| map.invert(w)).collect(),
        }
    }
}

/// Σ h(zᵢ) f(zᵢ) · cell area.
pub fn test_function_pairing(grid: &FieldGrid, h: &[f64], f: &TestFunction) -> Result<f64> {
    if h.len() != grid.points.len() {
        return Err(Error::Parameter("field does not match the grid".into()));
    }
    if let Some(z) = f.support_boundary().into_iter().find(|z| z.norm() > grid.radius) {
        return Err(Error::Coverage(format!("support reaches {z} outside |z| ≤ {}", grid.radius)));
    }
    Ok(grid.points.iter().zip(h).map(|(&z, &v)| v * f.eval(z)).sum::<f64>() * grid.cell_area)
}

/// Empirical Cov(h_t(z), h_t(w)) against Ê[T(z,w) ∧ t], one fresh growth
/// run and one field sample per replica.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceCheck {
    pub covariance: f64,
    pub covariance_stderr: f64,
    pub meet: MeanEstimate,
    pub replicas: usize,
}

impl CovarianceCheck {
    pub fn combined_stderr(&self) -> f64 {
        self.covariance_stderr.hypot(self.meet.stderr)
    }

    pub fn z_score(&self) -> f64 {
        (self.covariance - self.meet.mean) / self.combined_stderr()
    }
}

pub fn two_leaf_covariance(cfg: &GrowConfig, z: C64, w: C64, weights: &WeightSpec, replicas: usize) -> Result<CovarianceCheck> {
    if replicas < 2 {
        return Err(Error::Parameter("need at least 2 replicas".into()));
    }
    let t = cfg.t_max;
    let rows: Vec<(f64, f64, f64)> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let c = GrowConfig { seed: replica_seed(cfg.seed, i), koebe: false, ..*cfg };
            let tree = build_tree(&grow(&[z, w], &c)?)?;
            let h = sample_field(&tree, weights, t, &mut substream(c.seed, &[1]))?;
            Ok((h[0], h[1], tree.meet_time(0, 1).min(t)))
        })
        .collect::<Result<_>>()?;
    let n = replicas as f64;
    let (mz, mw) = (rows.iter().map(|r| r.0).sum::<f64>() / n, rows.iter().map(|r| r.1).sum::<f64>() / n);
    let products: Vec<f64> = rows.iter().map(|r| (r.0 - mz) * (r.1 - mw)).collect();
    let p = mean_stderr(&products);
    let meet = mean_stderr(&rows.iter().map(|r| r.2).collect::<Vec<_>>());
    Ok(CovarianceCheck { covariance: p.mean * n / (n - 1.0), covariance_stderr: p.stderr, meet, replicas })
}

/// ⟨h_t, f⟩ over `trees` growth runs on the grid with `fields` samples each,
/// together with the per-tree Σᵢⱼ f(zᵢ)f(zⱼ)(T(zᵢ,zⱼ) ∧ t)·area².
pub fn pairing_samples(
    grid: &FieldGrid,
    f: &TestFunction,
    cfg: &GrowConfig,
    weights: &WeightSpec,
    trees: usize,
    fields: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = cfg.t_max;
    let fv: Vec<f64> = grid.points.iter().map(|&z| f.eval(z)).collect();
    test_function_pairing(grid, &vec![0.0; fv.len()], f)?;
    let per: Vec<(Vec<f64>, f64)> = (0..trees as u64)
        .into_par_iter()
        .map(|i| {
            let c = GrowConfig { seed: replica_seed(cfg.seed, i), koebe: false, ..*cfg };
            let tree = if grid.points.len() < 2 {
                FragmentationTree::from_matrix(&grid.points, &[vec![0.0]], t)?
            } else {
                build_tree(&grow(&grid.points, &c)?)?
            };
            let mut quad = 0.0;
            for (a, &fa) in fv.iter().enumerate().filter(|p| *p.1 != 0.0) {
                quad += fa * fa * t;
                for (b, &fb) in fv[..a].iter().enumerate().filter(|p| *p.1 != 0.0) {
                    quad += 2.0 * fa * fb * tree.meet_time(a, b).min(t);
                }
            }
            let vals = (0..fields as u64)
                .map(|k| test_function_pairing(grid, &sample_field(&tree, weights, t, &mut substream(c.seed, &[2, k]))?, f))
                .collect::<Result<Vec<f64>>>()?;
            Ok((vals, quad * grid.cell_area * grid.cell_area * weights.second_moment()))
        })
        .collect::<Result<_>>()?;
    let quad = per.iter().map(|p| p.1).collect();
    Ok((per.into_iter().flat_map(|p| p.0).collect(), quad))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayParams {
    pub theta_cutoff: f64,
    /// Increment index grid (h_{n+1} − h_n).
    pub n_grid: Vec<f64>,
    pub trees: usize,
    pub fields_per_tree: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayTable {
    pub n_grid: Vec<f64>,
    /// ∬_{z≠w} |Ĉov(Δ_n h(z), Δ_n h(w))| over the grid, from field samples.
    pub empirical: Vec<f64>,
    /// The same integral of Ê[(T ∧ (n+1) − n)⁺], from the trees alone.
    pub from_trees: Vec<f64>,
    /// log(empirical) against √n, over positive entries.
    pub fit: Option<LinearFit>,
}

pub fn increment_decay_check(grid: &FieldGrid, kappa: f64, weights: &WeightSpec, params: &DecayParams) -> Result<DecayTable> {
    if params.n_grid.len() < 4 {
        return Err(Error::Parameter("the n-grid needs at least 4 values".into()));
    }
    if params.trees == 0 || params.fields_per_tree == 0 {
        return Err(Error::Parameter("need at least one tree and one field".into()));
    }
    let m = grid.points.len();
    let times: Vec<f64> = params.n_grid.iter().flat_map(|&n| [n, n + 1.0]).collect();
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
    let k = params.n_grid.len();
    // per tree: sums of Δ, of Δ(z)Δ(w) per pair, and of the tree covariance per pair
    type Acc = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>);
    let parts: Vec<Acc> = (0..params.trees as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = GrowConfig { koebe: false, ..GrowConfig::new(kappa, params.theta_cutoff, t_max, replica_seed(params.seed, i)) };
            let tree = build_tree(&grow(&grid.points, &cfg)?)?;
            let mut sum = vec![vec![0.0; m]; k];
            let mut prod = vec![vec![0.0; pairs.len()]; k];
            let mut shared = vec![0.0; k];
            for (a, &n) in params.n_grid.iter().enumerate() {
                shared[a] = pairs.iter().map(|&(p, q)| (tree.meet_time(p, q).min(n + 1.0) - n).max(0.0)).sum::<f64>();
            }
            for f in 0..params.fields_per_tree as u64 {
                let path = sample_field_path(&tree, weights, &times, &mut substream(cfg.seed, &[1, f]))?;
                for a in 0..k {
                    let d: Vec<f64> = (0..m).map(|x| path[2 * a + 1][x] - path[2 * a][x]).collect();
                    for x in 0..m {
                        sum[a][x] += d[x];
                    }
                    for (c, &(p, q)) in pairs.iter().enumerate() {
                        prod[a][c] += d[p] * d[q];
                    }
                }
            }
            Ok((sum, prod, shared))
        })
        .collect::<Result<_>>()?;
    let total = (params.trees * params.fields_per_tree) as f64;
    let area2 = grid.cell_area * grid.cell_area;
    let mut empirical = vec![0.0; k];
    let mut from_trees = vec![0.0; k];
    for a in 0..k {
        let mean: Vec<f64> = (0..m).map(|x| parts.iter().map(|p| p.0[a][x]).sum::<f64>() / total).collect();
        // ordered pairs z ≠ w count each unordered pair twice
        empirical[a] = 2.0
            * area2
            * pairs
                .iter()
                .enumerate()
                .map(|(c, &(p, q))| (parts.iter().map(|pt| pt.1[a][c]).sum::<f64>() / total - mean[p] * mean[q]).abs())
                .sum::<f64>();
        from_trees[a] = 2.0 * area2 * weights.second_moment() * parts.iter().map(|p| p.2[a]).sum::<f64>() / params.trees as f64;
    }
    let (x, y): (Vec<f64>, Vec<f64>) =
        params.n_grid.iter().zip(&empirical).filter(|(_, &v)| v > 0.0).map(|(&n, &v)| (n.sqrt(), v.ln())).unzip();
    let fit = if x.len() >= 3 { Some(linear_fit(&x, &y)) } else { None };
    Ok(DecayTable { n_grid: params.n_grid.clone(), empirical, from_trees, fit })
}

/// x,y,h rows with 17 significant digits.
pub fn field_csv(grid: &FieldGrid, h: &[f64]) -> String {
    let mut s = String::from("x,y,h\n");
    for (z, v) in grid.points.iter().zip(h) {
        s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", z.re, z.im, v));
    }
    s
}

/// Binary PGM; cells outside the disk are black, field values span 1..=255.
pub fn field_pgm(grid: &FieldGrid, h: &[f64]) -> Vec<u8> {
    let lo = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut img = vec![0u8; grid.side * grid.side];
    for (&(col, row), &v) in grid.pixels.iter().zip(h) {
        let u = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        img[row * grid.side + col] = 1 + (u * 254.0).round() as u8;
    }
    let mut out = format!("P5\n{} {}\n255\n", grid.side, grid.side).into_bytes();
    out.extend(img);
    out
}
