//! Complex Gamma function (Lanczos, g = 7, nine terms) and helpers.

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma_right(z: Complex64) -> Complex64 {
    // valid for Re z >= 1/2
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// log Gamma(z) on some branch; only its exponential is meaningful across
/// the reflection.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (PI * z).sin();
        Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma_right(1.0 - z)
    } else {
        ln_gamma_right(z)
    }
}

/// Gamma(z); infinite at the poles z = 0, -1, -2, ...
pub fn gamma(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    ln_gamma(z).exp()
}

/// 1/Gamma(z), entire; exactly zero at the non-positive integers.
pub fn recip_gamma(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        (PI * z).sin() * ln_gamma_right(1.0 - z).exp() / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}

/// Principal power w^p = exp(p log w).
pub fn cpow(w: Complex64, p: Complex64) -> Complex64 {
    if w == Complex64::new(0.0, 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    (p * w.ln()).exp()
}

/// sg(x): 1, 0, -1.
pub fn sg(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
