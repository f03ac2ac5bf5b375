//! Gauss hypergeometric series and the Laplace transform of chordal SLE capacity.
//!
//! Parameters a, b enter the series only through (a+n)(b+n) = n² + n(a+b) + ab,
//! so a pair is stored as its sum and product. That keeps every series real
//! when a and b are complex conjugates, which happens for λ below
//! −κ(1−4/κ)²/8 (negative discriminant).

use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::special::{gamma_real, rgamma};
use num_complex::Complex64;
use std::f64::consts::PI;

const SERIES_EPS: f64 = 1e-17;
const CONNECTION_SWITCH: f64 = 0.75;
const DEGENERATE_SHIFT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamPair {
    pub sum: f64,
    pub prod: f64,
}

impl ParamPair {
    pub fn real(a: f64, b: f64) -> Self {
        ParamPair { sum: a + b, prod: a * b }
    }

    pub fn roots(&self) -> (Complex64, Complex64) {
        let h = 0.5 * self.sum;
        let disc = h * h - self.prod;
        if disc >= 0.0 {
            let r = disc.sqrt();
            // larger-magnitude root first, the other from the product
            let big = if h >= 0.0 { h + r } else { h - r };
            let small = if big != 0.0 { self.prod / big } else { 0.0 };
            (Complex64::new(big, 0.0), Complex64::new(small, 0.0))
        } else {
            let r = (-disc).sqrt();
            (Complex64::new(h, r), Complex64::new(h, -r))
        }
    }

    /// (a+n)(b+n)
    fn rising(&self, n: f64) -> f64 {
        n * n + n * self.sum + self.prod
    }

    /// (a+t, b+t)
    pub fn shifted(&self, t: f64) -> Self {
        ParamPair { sum: self.sum + 2.0 * t, prod: self.prod + t * self.sum + t * t }
    }

    /// (c−a, c−b)
    pub fn reflected(&self, c: f64) -> Self {
        ParamPair { sum: 2.0 * c - self.sum, prod: c * c - c * self.sum + self.prod }
    }

    /// 1/(Γ(a)Γ(b)), real for real or conjugate pairs.
    fn rgamma_product(&self) -> f64 {
        let (a, b) = self.roots();
        (rgamma(a) * rgamma(b)).re
    }
}

fn check_c(c: f64) -> Result<()> {
    if c <= 0.0 && (c - c.round()).abs() < 1e-12 {
        return Err(Error::Parameter(format!("c = {c} is a nonpositive integer")));
    }
    Ok(())
}

/// Σ_{n≥1} of the ₂F₁ series, i.e. ₂F₁ − 1.
fn series_tail(pair: ParamPair, c: f64, z: f64, max_terms: usize) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 0..max_terms {
        let nf = n as f64;
        let ratio = pair.rising(nf) / ((c + nf) * (nf + 1.0)) * z;
        term *= ratio;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if ratio.abs() < 1.0 && term.abs() <= SERIES_EPS * (1.0 + sum.abs()) {
            return Ok(sum);
        }
        if !term.is_finite() {
            break;
        }
    }
    Err(Error::Numeric(format!("₂F₁ series did not converge at z = {z}")))
}

/// ₂F₁(a, b; c; z) − 1 for real z ∈ [0, 1).
pub fn gauss_2f1_pair_minus_one(pair: ParamPair, c: f64, z: f64) -> Result<f64> {
    check_c(c)?;
    if !(0.0..1.0).contains(&z) {
        return Err(Error::Domain(format!("z = {z} outside [0, 1)")));
    }
    if z <= CONNECTION_SWITCH {
        return series_tail(pair, c, z, 10_000);
    }
    let ccab = c - pair.sum;
    if (ccab - ccab.round()).abs() < 1e-9 {
        // logarithmic case of the connection formula: sum the slow series
        return series_tail(pair, c, z, 20_000_000);
    }
    let w = 1.0 - z;
    let gc = gamma_real(c);
    let coef_a = gc * gamma_real(ccab) * pair.reflected(c).rgamma_product();
    let coef_b = gc * gamma_real(-ccab) * pair.rgamma_product();
    let t1 = 1.0 + series_tail(pair, 1.0 - ccab, w, 10_000)?;
    let t2 = 1.0 + series_tail(pair.reflected(c), 1.0 + ccab, w, 10_000)?;
    Ok(coef_a * t1 + coef_b * w.powf(ccab) * t2 - 1.0)
}

pub fn gauss_2f1_pair(pair: ParamPair, c: f64, z: f64) -> Result<f64> {
    Ok(1.0 + gauss_2f1_pair_minus_one(pair, c, z)?)
}

/// ₂F₁(a, b; c; z) for real parameters and z ∈ [0, 1).
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    gauss_2f1_pair(ParamPair::real(a, b), c, z)
}

/// κ, λ and the derived constants of the capacity Laplace transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityLaplaceParams {
    pub kappa: f64,
    pub lambda: f64,
}

impl CapacityLaplaceParams {
    pub fn new(kappa: f64, lambda: f64) -> Result<Self> {
        if !(0.0..8.0).contains(&kappa) || !lambda.is_finite() {
            return Err(Error::Parameter(format!("need κ ∈ [0, 8) and finite λ, got κ={kappa}, λ={lambda}")));
        }
        Ok(CapacityLaplaceParams { kappa, lambda })
    }

    pub fn p(&self) -> f64 {
        1.0 - 4.0 / self.kappa
    }

    pub fn discriminant(&self) -> f64 {
        let p = self.p();
        p * p + 8.0 * self.lambda / self.kappa
    }

    pub fn c(&self) -> f64 {
        1.5 - 4.0 / self.kappa
    }

    pub fn pair(&self) -> ParamPair {
        ParamPair { sum: 2.0 * self.p(), prod: -8.0 * self.lambda / self.kappa }
    }

    /// a = p + √D (complex when D < 0), evaluated without cancellation.
    pub fn a(&self) -> Complex64 {
        let (r0, r1) = self.pair().roots();
        if r0.im != 0.0 {
            return r0;
        }
        Complex64::new(r0.re.max(r1.re), 0.0)
    }

    pub fn b(&self) -> Complex64 {
        let (r0, r1) = self.pair().roots();
        if r0.im != 0.0 {
            return r1;
        }
        Complex64::new(r0.re.min(r1.re), 0.0)
    }

    pub fn blowup(&self) -> f64 {
        1.0 - self.kappa / 8.0
    }

    /// c ∈ ℤ, i.e. κ = 8/(2m+1).
    pub fn integer_c(&self) -> bool {
        self.kappa > 0.0 && (self.c() - self.c().round()).abs() < 1e-9
    }
}

/// (f(u), g(u)); u = 1 uses the Γ closed forms.
pub fn f_and_g(params: &CapacityLaplaceParams, u: f64) -> Result<(f64, f64)> {
    if params.kappa == 0.0 {
        return Err(Error::Parameter("f and g are undefined at κ = 0".into()));
    }
    if params.integer_c() {
        return Err(Error::Parameter(format!("c = {} is an integer", params.c())));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("u = {u} outside [0, 1]")));
    }
    if u == 1.0 {
        return Ok((f_at_one(params), g_at_one(params)));
    }
    let c = params.c();
    let pair = params.pair();
    let f = gauss_2f1_pair(pair, c, u)?;
    let g = if u == 0.0 { 0.0 } else { u.powf(1.0 - c) * gauss_2f1_pair(pair.shifted(1.0 - c), 2.0 - c, u)? };
    Ok((f, g))
}

/// Γ(c)Γ(c−a−b)/(Γ(c−a)Γ(c−b)).
pub fn f_at_one(params: &CapacityLaplaceParams) -> f64 {
    let c = params.c();
    let pair = params.pair();
    gamma_real(c) * gamma_real(c - pair.sum) * pair.reflected(c).rgamma_product()
}

/// Γ(2−c)Γ(1−c)/(Γ(1−a)Γ(1−b)).
pub fn g_at_one(params: &CapacityLaplaceParams) -> f64 {
    let c = params.c();
    let pair = params.pair();
    gamma_real(2.0 - c) * gamma_real(1.0 - c) * pair.reflected(1.0).rgamma_product()
}

/// Ready-to-evaluate F(u) = E[exp(λ·cap)] with u = sin²(θ/4).
#[derive(Debug, Clone)]
pub struct CapacityLaplace {
    pub params: CapacityLaplaceParams,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Divergent,
    Zero,
    Regular { pair: ParamPair, c: f64, k: f64 },
    Averaged(Box<(CapacityLaplace, CapacityLaplace)>),
}

impl CapacityLaplace {
    pub fn new(params: CapacityLaplaceParams) -> Result<Self> {
        let kind = if params.lambda >= params.blowup() {
            Kind::Divergent
        } else if params.kappa == 0.0 {
            Kind::Zero
        } else if params.integer_c() {
            let lo = CapacityLaplaceParams::new(params.kappa * (1.0 - DEGENERATE_SHIFT), params.lambda)?;
            let hi = CapacityLaplaceParams::new(params.kappa * (1.0 + DEGENERATE_SHIFT), params.lambda)?;
            Kind::Averaged(Box::new((CapacityLaplace::new(lo)?, CapacityLaplace::new(hi)?)))
        } else {
            let g1 = g_at_one(&params);
            if !(g1.is_finite() && g1 != 0.0) {
                return Err(Error::Numeric(format!("g(1) = {g1} for κ={}, λ={}", params.kappa, params.lambda)));
            }
            let k = (1.0 - f_at_one(&params)) / g1;
            Kind::Regular { pair: params.pair(), c: params.c(), k }
        };
        Ok(CapacityLaplace { params, kind })
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self.kind, Kind::Divergent)
    }

    /// F(u) − 1, computed without forming F for small u.
    pub fn minus_one(&self, u: f64) -> Result<Extended> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("u = {u} outside [0, 1]")));
        }
        match &self.kind {
            Kind::Divergent => Ok(if u == 0.0 || u == 1.0 { Extended::Finite(0.0) } else { Extended::PosInfinity }),
            Kind::Zero => {
                let s = (1.0 - 2.0 * u).abs();
                let lam = self.params.lambda;
                if s == 0.0 {
                    return Ok(if lam > 0.0 {
                        Extended::PosInfinity
                    } else if lam == 0.0 {
                        Extended::Finite(0.0)
                    } else {
                        Extended::Finite(-1.0)
                    });
                }
                let ln_s = if u < 0.5 { (-2.0 * u).ln_1p() } else { s.ln() };
                Ok(Extended::Finite((-lam * ln_s).exp_m1()))
            }
            Kind::Regular { pair, c, k } => {
                if u == 0.0 || u == 1.0 {
                    return Ok(Extended::Finite(0.0));
                }
                let fm1 = gauss_2f1_pair_minus_one(*pair, *c, u)?;
                let g = u.powf(1.0 - c) * gauss_2f1_pair(pair.shifted(1.0 - c), 2.0 - c, u)?;
                Ok(Extended::Finite(fm1 + k * g))
            }
            Kind::Averaged(pair) => {
                let a = pair.0.minus_one(u)?.to_f64();
                let b = pair.1.minus_one(u)?.to_f64();
                Ok(Extended::Finite(0.5 * (a + b)))
            }
        }
    }

    pub fn value(&self, u: f64) -> Result<Extended> {
        Ok(match self.minus_one(u)? {
            Extended::Finite(v) => Extended::Finite(1.0 + v),
            other => other,
        })
    }

    pub fn at_angle(&self, theta: f64) -> Result<Extended> {
        if !(theta > 0.0 && theta < 2.0 * PI) {
            return Err(Error::Domain(format!("θ = {theta} outside (0, 2π)")));
        }
        self.value(angle_to_u(theta))
    }
}

pub fn angle_to_u(theta: f64) -> f64 {
    let s = (0.25 * theta).sin();
    s * s
}

/// E[exp(λ·cap(γ^θ))] for chordal SLE_κ between boundary points at angle θ.
pub fn capacity_laplace(params: &CapacityLaplaceParams, theta: f64) -> Result<Extended> {
    CapacityLaplace::new(*params)?.at_angle(theta)
}

/// Exponent e with E[exp(λ cap)] − 1 ≍ u^e as u → 0.
pub fn small_u_exponent(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 8.0) {
        return Err(Error::Parameter(format!("κ = {kappa} outside (0, 8)")));
    }
    if (kappa - 8.0 / 3.0).abs() < 1e-12 {
        return Err(Error::Domain("κ = 8/3: logarithmic case u·log(1/u)".into()));
    }
    if kappa > 8.0 / 3.0 {
        Ok(1.0 - (1.5 - 4.0 / kappa))
    } else {
        Ok(1.0)
    }
}
