use cge_core::capacity::{mc_capacity_laplace, sample_many, SdeConfig};
use cge_core::conformal::green_disk;
use cge_core::exponent::{alpha_min_with, dimension_bound_curve, lambda_prime_truncated, ExponentTable, LegendreCurve};
use cge_core::field::{build_tree, field_csv, field_pgm, sample_field, FieldGrid, WeightSpec};
use cge_core::growth::{box_dimension, disconnection_mc, events_csv, grow, render_svg, shrinkage_stats, Follow, GrowConfig, GrowthRecord};
use cge_core::hypergeom::{capacity_laplace, CapacityLaplaceParams};
use cge_core::io::{csv, fmt_f64, Manifest, OutputDir};
use cge_core::rng::{mix, substream};
use cge_core::subordinator::{capacity_subordinator, overshoot_tail, passages, passages_csv};
use cge_core::validate::{run_suite, Tolerances, DEFAULT_SEED};
use cge_core::{Error, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cge", version, about = "Conformal growth of SLE excursions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0.3)]
    cutoff: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Λ_κ table, Legendre transform with α_min, dimension-bound curve.
    Exponent {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Monte Carlo E[exp(λ·cap)] against the closed form.
    CapacityMc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        lambda: f64,
        #[arg(long, default_value_t = std::f64::consts::PI)]
        theta: f64,
        #[arg(long, default_value_t = 10_000)]
        replicas: usize,
    },
    /// One growth run: events, −log CR trajectories, disconnection times.
    Grow {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2.0)]
        t_max: f64,
        /// Targets as "x,y;x,y;...".
        #[arg(long, default_value = "0,0")]
        targets: String,
    },
    /// SVG snapshots of the excursions around the origin after given arc counts.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "75,150,300,500")]
        arcs: String,
        /// Also draw the image under z ↦ 1/z̄.
        #[arg(long)]
        invert: bool,
    },
    /// Mean disconnection time of two points.
    Disconnect {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0,0")]
        z: String,
        #[arg(long, default_value = "0.1353352832366127,0")]
        w: String,
        #[arg(long, default_value_t = 200)]
        replicas: usize,
    },
    /// P[D_t^0 ⊄ B(0, r)] on a (t, r) grid.
    Shrinkage {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 5.0)]
        t_max: f64,
        #[arg(long, default_value_t = 100)]
        replicas: usize,
    },
    /// Box-counting dimension of the arcs around the origin.
    Dimension {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 500)]
        arcs: usize,
    },
    /// One sample of the weighted field on a square grid.
    Field {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 32)]
        grid: usize,
    },
    /// First passages of the capacity subordinator.
    Subordinator {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2.0)]
        level: f64,
        #[arg(long, default_value_t = 2000)]
        replicas: usize,
    },
    /// Run the acceptance suite and write a JSON report.
    Validate {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Add the κ = 2 dimension estimate.
        #[arg(long)]
        long: bool,
        #[arg(long)]
        tolerances: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Parameter(_) | Error::Geometry(_) | Error::Separation(_) => 2,
        Error::Schema(_) => 3,
        _ => 4,
    }
}

fn need_seed(c: &Common) -> Result<u64> {
    c.seed.ok_or_else(|| Error::Parameter("--seed is required for stochastic commands".into()))
}

fn growth_kappa(kappa: f64) -> Result<()> {
    if !(0.0..4.0).contains(&kappa) {
        return Err(Error::Parameter(format!(
            "κ = {kappa}: the growth process and Λ_κ diverge for κ ≥ 4; use κ ∈ [0, 4)"
        )));
    }
    Ok(())
}

fn parse_point(s: &str) -> Result<C64> {
    let (x, y) = s.split_once(',').ok_or_else(|| Error::Parameter(format!("point {s:?} is not \"x,y\"")))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| Error::Parameter(format!("{v:?}: {e}")));
    Ok(C64::new(p(x)?, p(y)?))
}

fn parse_points(s: &str) -> Result<Vec<C64>> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(parse_point).collect()
}

fn parse_counts(s: &str) -> Result<Vec<usize>> {
    s.split(',').map(|v| v.trim().parse::<usize>().map_err(|e| Error::Parameter(format!("{v:?}: {e}")))).collect()
}

fn cr_csv(rec: &GrowthRecord) -> String {
    let mut s = String::from("target,t,minus_log_cr\n");
    for (i, tr) in rec.cr_trajectories.iter().enumerate() {
        for &(t, v) in tr {
            s.push_str(&format!("{i},{},{}\n", fmt_f64(t), fmt_f64(v)));
        }
    }
    s
}

fn disconnection_csv(rec: &GrowthRecord) -> String {
    let mut s = String::from("i,j,time\n");
    let n = rec.targets.len();
    for i in 0..n {
        for j in i + 1..n {
            s.push_str(&format!("{i},{j},{}\n", fmt_f64(rec.disconnection[i][j])));
        }
    }
    s
}

fn exponent(common: &Common, grid: usize) -> Result<()> {
    growth_kappa(common.kappa)?;
    let kappa = common.kappa;
    let table = ExponentTable::build(kappa, grid)?;
    let lp = table.lambda_prime_zero.integral;
    let a_min = alpha_min_with(kappa, lp)?;
    let (lo, hi) = (0.5 * a_min, 20.0 * lp);
    let alphas: Vec<f64> = (0..grid).map(|k| lo * (hi / lo).powf(k as f64 / (grid.max(2) - 1) as f64)).collect();
    let curve = LegendreCurve::build(kappa, &alphas, lp)?;
    let bound = dimension_bound_curve(kappa, curve.alpha_min, &alphas)?;
    let mut out = OutputDir::new(&common.out, Manifest::new("exponent", None, json!({ "kappa": kappa, "grid": grid })));
    out.write("lambda.csv", csv(&["lambda", "Lambda"], table.lambda_grid.iter().zip(&table.values).map(|(&l, &v)| vec![l, v])).as_bytes())?;
    let mut leg = String::from("alpha,Lambda_star,lambda_star,alpha_min\n");
    for p in &curve.points {
        leg.push_str(&format!("{},{},{},{}\n", fmt_f64(p.alpha), fmt_f64(p.value), fmt_f64(p.lambda_star), fmt_f64(curve.alpha_min)));
    }
    out.write("legendre.csv", leg.as_bytes())?;
    let mut db = String::from("alpha,bound\n");
    for p in &bound {
        db.push_str(&format!("{},{}\n", fmt_f64(p.alpha), p.bound.map(fmt_f64).unwrap_or_default()));
    }
    out.write("dimension_bound.csv", db.as_bytes())?;
    out.finish()
}

fn capacity_mc(common: &Common, lambda: f64, theta: f64, replicas: usize) -> Result<()> {
    let seed = need_seed(common)?;
    let cfg = SdeConfig::default();
    let mc = mc_capacity_laplace(common.kappa, lambda, theta, replicas, seed, &cfg)?;
    let exact = capacity_laplace(&CapacityLaplaceParams::new(common.kappa, lambda)?, theta)?;
    let params = json!({ "kappa": common.kappa, "lambda": lambda, "theta": theta, "replicas": replicas, "step_base": cfg.step_base });
    let mut out = OutputDir::new(&common.out, Manifest::new("capacity-mc", Some(seed), params));
    let summary = json!({ "estimate": mc.estimate, "stderr": mc.stderr, "analytic": exact.to_f64(), "moment_divergence": mc.moment_divergence, "capped_paths": mc.capped_paths, "step_base": cfg.step_base });
    out.write("laplace.json", (serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?;
    let paths = sample_many(common.kappa, theta, replicas, seed, &cfg)?;
    out.write("hitting_times.csv", csv(&["hitting_time"], paths.iter().map(|p| vec![p.hitting_time])).as_bytes())?;
    out.finish()
}

fn grow_cmd(common: &Common, t_max: f64, targets: &str) -> Result<()> {
    growth_kappa(common.kappa)?;
    let seed = need_seed(common)?;
    let targets = parse_points(targets)?;
    let rec = grow(&targets, &GrowConfig::new(common.kappa, common.cutoff, t_max, seed))?;
    let pts: Vec<[f64; 2]> = targets.iter().map(|z| [z.re, z.im]).collect();
    let params = json!({ "kappa": common.kappa, "cutoff": common.cutoff, "t_max": t_max, "targets": pts });
    let mut out = OutputDir::new(&common.out, Manifest::new("grow", Some(seed), params));
    out.write("events.csv", events_csv(&rec).as_bytes())?;
    out.write("cr.csv", cr_csv(&rec).as_bytes())?;
    if targets.len() >= 2 {
        out.write("disconnection.csv", disconnection_csv(&rec).as_bytes())?;
    }
    let koebe = json!({ "checks": rec.koebe.checks, "violations": rec.koebe.violations, "resamples": rec.resamples, "attempts": rec.attempts });
    out.write("audit.json", (serde_json::to_string_pretty(&koebe)? + "\n").as_bytes())?;
    out.finish()
}

fn render(common: &Common, arcs: &str, invert: bool) -> Result<()> {
    growth_kappa(common.kappa)?;
    let seed = need_seed(common)?;
    let counts = parse_counts(arcs)?;
    let most = counts.iter().copied().max().unwrap_or(0);
    let mut cfg = GrowConfig::new(common.kappa, common.cutoff, 1e6, seed);
    cfg.retain_traces = true;
    cfg.koebe = false;
    cfg.follow = Follow::Target(0);
    cfg.max_events = Some(most);
    let rec = grow(&[C64::new(0.0, 0.0)], &cfg)?;
    let all: Vec<(usize, Vec<C64>)> = rec.events.iter().filter_map(|e| e.trace.clone().map(|t| (e.component, t))).collect();
    let params = json!({ "kappa": common.kappa, "cutoff": common.cutoff, "arcs": counts, "invert": invert });
    let mut out = OutputDir::new(&common.out, Manifest::new("render", Some(seed), params));
    for &n in &counts {
        let shown = &all[..n.min(all.len())];
        out.write(&format!("arcs_{n:04}.svg"), render_svg(shown, false, 1.0).as_bytes())?;
        if invert {
            out.write(&format!("arcs_{n:04}_inverted.svg"), render_svg(shown, true, 3.0).as_bytes())?;
        }
    }
    out.finish()
}

fn disconnect(common: &Common, z: &str, w: &str, replicas: usize) -> Result<()> {
    growth_kappa(common.kappa)?;
    let seed = need_seed(common)?;
    let (z, w) = (parse_point(z)?, parse_point(w)?);
    let lp = lambda_prime_truncated(common.kappa, common.cutoff)?;
    let st = disconnection_mc(z, w, &GrowConfig::new(common.kappa, common.cutoff, 0.0, seed), lp, replicas)?;
    let g = green_disk(z, w)?;
    let params = json!({ "kappa": common.kappa, "cutoff": common.cutoff, "z": [z.re, z.im], "w": [w.re, w.im], "replicas": replicas });
    let mut out = OutputDir::new(&common.out, Manifest::new("disconnect", Some(seed), params));
    let header = ["green", "predicted", "mean", "stderr", "replicas", "censored", "horizon"];
    let row = vec![g, g / lp, st.mean, st.stderr, st.replicas as f64, st.censored as f64, st.horizon];
    out.write("disconnection.csv", csv(&header, [row]).as_bytes())?;
    out.finish()
}

fn shrinkage(common: &Common, t_max: f64, replicas: usize) -> Result<()> {
    growth_kappa(common.kappa)?;
    let seed = need_seed(common)?;
    let r_grid: Vec<f64> = (0..16).map(|k| 0.9 * 0.75f64.powi(k)).collect();
    let steps = (2.0 * t_max).ceil().max(1.0) as usize;
    let t_grid: Vec<f64> = (0..=steps).map(|k| t_max * k as f64 / steps as f64).collect();
    let tab = shrinkage_stats(&GrowConfig::new(common.kappa, common.cutoff, t_max, seed), &t_grid, &r_grid, 12, replicas)?;
    let params = json!({ "kappa": common.kappa, "cutoff": common.cutoff, "t_max": t_max, "replicas": replicas, "ring_points": 12 });
    let mut out = OutputDir::new(&common.out, Manifest::new("shrinkage", Some(seed), params));
    let rows = tab.t_grid.iter().zip(&tab.probability).flat_map(|(&t, p)| r_grid.iter().zip(p).map(move |(&r, &q)| vec![t, r, q]));
    out.write("shrinkage.csv", csv(&["t", "r", "probability"], rows).as_bytes())?;
    let mut fits = String::from("r,slope,intercept,r_squared\n");
    for (r, f) in r_grid.iter().zip(&tab.decay) {
        if let Some(f) = f {
            fits.push_str(&format!("{},{},{},{}\n", fmt_f64(*r), fmt_f64(f.slope), fmt_f64(f.intercept), fmt_f64(f.r_squared)));
        }
    }
    out.write("decay.csv", fits.as_bytes())?;
    out.finish()
}

fn dimension(common: &Common, arcs: usize) -> Result<()> {
    growth_kappa(common.kappa)?;
    let seed = need_seed(common)?;
    let mut cfg = GrowConfig::new(common.kappa, common.cutoff, 1e6, seed);
    cfg.retain_traces = true;
    cfg.koebe = false;
    cfg.follow = Follow::Target(0);
    cfg.max_events = Some(arcs);
    let rec = grow(&[C64::new(0.0, 0.0)], &cfg)?;
    let bd = box_dimension(rec.traces(), &[5, 6, 7, 8, 9])?;
    let params = json!({ "kappa": common.kappa, "cutoff": common.cutoff, "arcs": arcs, "levels": [5, 6, 7, 8, 9] });
    let mut out = OutputDir::new(&common.out, Manifest::new("dimension", Some(seed), params));
    out.write("boxes.csv", csv(&["side", "occupied"], bd.counts.iter().map(|&(e, n)| vec![e, n as f64])).as_bytes())?;
    let summary = json!({ "estimate": bd.estimate, "r_squared": bd.fit.r_squared, "unreliable": bd.unreliable, "reference": 1.0 + common.kappa / 8.0 });
    out.write("dimension.json", (serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?;
    out.finish()
}

fn field(common: &Common, t_max: f64, side: usize) -> Result<()> {
    growth_kappa(common.kappa)?;
    let seed = need_seed(common)?;
    let grid = FieldGrid::new(side, 0.9)?;
    let cfg = GrowConfig { koebe: false, ..GrowConfig::new(common.kappa, common.cutoff, t_max, seed) };
    let tree = build_tree(&grow(&grid.points, &cfg)?)?;
    let h = sample_field(&tree, &WeightSpec::unit_atom(), t_max, &mut substream(seed, &[1]))?;
    let params = json!({ "kappa": common.kappa, "cutoff": common.cutoff, "t_max": t_max, "grid": side, "radius": grid.radius, "weights": "unit atom" });
    let mut out = OutputDir::new(&common.out, Manifest::new("field", Some(seed), params));
    out.write("field.csv", field_csv(&grid, &h).as_bytes())?;
    out.write("field.pgm", &field_pgm(&grid, &h))?;
    out.finish()
}

fn subordinator(common: &Common, level: f64, replicas: usize) -> Result<()> {
    growth_kappa(common.kappa)?;
    let seed = need_seed(common)?;
    let spec = capacity_subordinator(common.kappa, common.cutoff, 4000, seed, &SdeConfig::default())?;
    let recs = passages(&spec, level, replicas, mix(&[seed, 1]))?;
    let params = json!({ "kappa": common.kappa, "cutoff": common.cutoff, "level": level, "replicas": replicas, "jump_samples": 4000 });
    let mut out = OutputDir::new(&common.out, Manifest::new("subordinator", Some(seed), params));
    out.write("passages.csv", passages_csv(&recs).as_bytes())?;
    let tail = overshoot_tail(&spec, 0.5, &[level], &[0.25, 0.5, 1.0, 2.0], replicas, seed)?;
    out.write("overshoot.json", (serde_json::to_string_pretty(&tail)? + "\n").as_bytes())?;
    out.finish()
}

fn validate(seed: Option<u64>, out_dir: &Path, long: bool, tolerances: Option<&Path>) -> Result<bool> {
    let tol = match tolerances {
        Some(p) => Tolerances::from_json(&std::fs::read_to_string(p)?)?,
        None => Tolerances::pinned(),
    };
    let seed = seed.unwrap_or(DEFAULT_SEED);
    let rep = run_suite(&tol, seed, long)?;
    for c in &rep.criteria {
        println!("{}", c.line());
    }
    let mut out = OutputDir::new(out_dir, Manifest::new("validate", Some(seed), json!({ "long": long })));
    out.write("report.json", (serde_json::to_string_pretty(&rep)? + "\n").as_bytes())?;
    out.finish()?;
    Ok(rep.all_pass)
}

fn threads() -> Result<()> {
    if let Ok(v) = std::env::var("CGE_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::Parameter(format!("CGE_THREADS = {v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Parameter(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    threads()?;
    match &cli.command {
        Command::Exponent { common, grid } => exponent(common, *grid)?,
        Command::CapacityMc { common, lambda, theta, replicas } => capacity_mc(common, *lambda, *theta, *replicas)?,
        Command::Grow { common, t_max, targets } => grow_cmd(common, *t_max, targets)?,
        Command::Render { common, arcs, invert } => render(common, arcs, *invert)?,
        Command::Disconnect { common, z, w, replicas } => disconnect(common, z, w, *replicas)?,
        Command::Shrinkage { common, t_max, replicas } => shrinkage(common, *t_max, *replicas)?,
        Command::Dimension { common, arcs } => dimension(common, *arcs)?,
        Command::Field { common, t_max, grid } => field(common, *t_max, *grid)?,
        Command::Subordinator { common, level, replicas } => subordinator(common, *level, *replicas)?,
        Command::Validate { seed, out, long, tolerances } => return validate(*seed, out, *long, tolerances.as_deref()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
