//! Adaptive Simpson quadrature and endpoint-regularizing substitutions.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

struct Simpson<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    evals: usize,
    budget: usize,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        self.evals += 2;
        if self.evals > self.budget {
            return Err(Error::Numeric("quadrature evaluation budget exhausted".into()));
        }
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if !delta.is_finite() {
            return Err(Error::Numeric(format!("non-finite integrand near {m}")));
        }
        if depth >= MAX_DEPTH || delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        let l = self.recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
        let r = self.recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
        Ok(l + r)
    }
}

/// Adaptive Simpson on [a, b] with absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    // a fixed 8-panel start avoids accepting a lucky first estimate
    let panels = 8;
    let h = (b - a) / panels as f64;
    let mut s = Simpson { f: &f, evals: 0, budget: 4_000_000 };
    let mut total = 0.0;
    for k in 0..panels {
        let x0 = a + k as f64 * h;
        let x1 = if k + 1 == panels { b } else { x0 + h };
        let fa = f(x0);
        let fb = f(x1);
        let fm = f(0.5 * (x0 + x1));
        s.evals += 3;
        let whole = (x1 - x0) / 6.0 * (fa + 4.0 * fm + fb);
        total += s.recurse(x0, x1, fa, fm, fb, whole, tol / panels as f64, 0)?;
    }
    Ok(total)
}

/// Simpson with a relative target: a coarse pass sets the scale.
pub fn simpson_rel<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64, abs_floor: f64) -> Result<f64> {
    let coarse = simpson(&f, a, b, 1e-3 * (b - a).abs().max(1e-300))?;
    let tol = (rel * coarse.abs()).max(abs_floor);
    simpson(f, a, b, tol)
}

/// ∫_a^b f over an interval whose left end behaves like (x−a)^{p}, p > −1.
/// Substitutes x = a + (b−a)·s^m with m chosen so the new integrand is O(s).
pub fn left_power<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, p: f64, rel: f64, abs_floor: f64) -> Result<f64> {
    let m = power_for(p);
    let w = b - a;
    let g = |s: f64| {
        let t = s.powf(m);
        // below this the new integrand is O(s) and f may overflow
        if t < 1e-280 {
            return 0.0;
        }
        let x = a + w * t;
        f(x) * w * m * s.powf(m - 1.0)
    };
    simpson_rel(g, 0.0, 1.0, rel, abs_floor)
}

/// Mirror of [`left_power`] for a right-end singularity (b−x)^{p}.
pub fn right_power<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, p: f64, rel: f64, abs_floor: f64) -> Result<f64> {
    left_power(|y| f(a + b - y), a, b, p, rel, abs_floor)
}

/// ∫_a^b f with 0 < a < b via x = e^v; suited to power-law integrands spanning decades.
pub fn log_scale<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64, abs_floor: f64) -> Result<f64> {
    if !(a > 0.0 && b > a) {
        return Err(Error::Domain(format!("log_scale needs 0 < a < b, got [{a}, {b}]")));
    }
    let g = |v: f64| {
        let x = v.exp();
        f(x) * x
    };
    simpson_rel(g, a.ln(), b.ln(), rel, abs_floor)
}

fn power_for(p: f64) -> f64 {
    // integrand ~ s^{m(p+1)-1}; aim for exponent 1
    if p >= 1.0 {
        1.0
    } else {
        (2.0 / (p + 1.0)).clamp(1.0, 96.0)
    }
}
