//! Gamma function for complex arguments (Lanczos, g = 7, n = 9).

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma_right(z: Complex64) -> Complex64 {
    // valid for Re z >= 0.5
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS[0], 0.0);
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// sin(πx) and cos(πx), exact at integers and half-integers.
fn sin_cos_pi(x: f64) -> (f64, f64) {
    let r = x - 2.0 * (0.5 * x).round();
    let (y, sign) = if r > 0.5 {
        (1.0 - r, -1.0)
    } else if r < -0.5 {
        (-1.0 - r, -1.0)
    } else {
        (r, 1.0)
    };
    let c = if y.abs() == 0.5 { 0.0 } else { sign * (PI * y).cos() };
    ((PI * y).sin(), c)
}

/// sin(πz) with exact zeros at the integers.
fn sin_pi(z: Complex64) -> Complex64 {
    let (s, c) = sin_cos_pi(z.re);
    let t = PI * z.im;
    Complex64::new(s * t.cosh(), c * t.sinh())
}

/// Principal-ish log Γ(z). The imaginary part is only meaningful modulo 2π,
/// which is all that products and quotients of Γ values need.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = sin_pi(z);
        Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma_right(1.0 - z)
    } else {
        ln_gamma_right(z)
    }
}

pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

/// 1/Γ(z), entire: exactly zero at the poles of Γ.
pub fn rgamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        sin_pi(z) / PI * ln_gamma_right(1.0 - z).exp()
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

pub fn gamma_real(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).re
}

pub fn rgamma_real(x: f64) -> f64 {
    rgamma(Complex64::new(x, 0.0)).re
}
