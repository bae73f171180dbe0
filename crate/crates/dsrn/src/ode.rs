//! Adaptive Runge-Kutta-Fehlberg 7(8) for complex linear systems.
//!
//! The solution is advanced with the eighth-order weights (local
//! extrapolation); the classical Fehlberg difference of the two solutions
//! 41/840 (k0 + k10 - k11 - k12) drives the step size.

use num_complex::Complex64;

use crate::error::{DsrnError, Result};

const STAGES: usize = 13;

const C: [f64; STAGES] = [
    0.0,
    2.0 / 27.0,
    1.0 / 9.0,
    1.0 / 6.0,
    5.0 / 12.0,
    0.5,
    5.0 / 6.0,
    1.0 / 6.0,
    2.0 / 3.0,
    1.0 / 3.0,
    1.0,
    0.0,
    1.0,
];

#[rustfmt::skip]
const A: [[f64; 12]; STAGES] = [
    [0.0; 12],
    [2.0/27.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0/36.0, 1.0/12.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0/24.0, 0.0, 1.0/8.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [5.0/12.0, 0.0, -25.0/16.0, 25.0/16.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0/20.0, 0.0, 0.0, 1.0/4.0, 1.0/5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-25.0/108.0, 0.0, 0.0, 125.0/108.0, -65.0/27.0, 125.0/54.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [31.0/300.0, 0.0, 0.0, 0.0, 61.0/225.0, -2.0/9.0, 13.0/900.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.0, 0.0, 0.0, -53.0/6.0, 704.0/45.0, -107.0/9.0, 67.0/90.0, 3.0, 0.0, 0.0, 0.0, 0.0],
    [-91.0/108.0, 0.0, 0.0, 23.0/108.0, -976.0/135.0, 311.0/54.0, -19.0/60.0, 17.0/6.0, -1.0/12.0, 0.0, 0.0, 0.0],
    [2383.0/4100.0, 0.0, 0.0, -341.0/164.0, 4496.0/1025.0, -301.0/82.0, 2133.0/4100.0, 45.0/82.0, 45.0/164.0, 18.0/41.0, 0.0, 0.0],
    [3.0/205.0, 0.0, 0.0, 0.0, 0.0, -6.0/41.0, -3.0/205.0, -3.0/41.0, 3.0/41.0, 6.0/41.0, 0.0, 0.0],
    [-1777.0/4100.0, 0.0, 0.0, -341.0/164.0, 4496.0/1025.0, -289.0/82.0, 2193.0/4100.0, 51.0/82.0, 33.0/164.0, 12.0/41.0, 0.0, 1.0],
];

/// Eighth-order weights.
const B8: [f64; STAGES] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    34.0 / 105.0,
    9.0 / 35.0,
    9.0 / 35.0,
    9.0 / 280.0,
    9.0 / 280.0,
    0.0,
    41.0 / 840.0,
    41.0 / 840.0,
];

const ERR: f64 = 41.0 / 840.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-300, h_init: 0.1, h_max: 1.0, h_min: 1e-12, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

fn sup<const N: usize>(y: &[Complex64; N]) -> f64 {
    y.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Integrate y' = f(x, y) from x0 through each point of `outputs`
/// (monotone, all on one side of x0) and return the state there.
/// `f` writes the derivative into its third argument.
pub fn integrate<const N: usize, F>(
    mut f: F,
    x0: f64,
    y0: [Complex64; N],
    outputs: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<[Complex64; N]>, OdeStats)>
where
    F: FnMut(f64, &[Complex64; N], &mut [Complex64; N]),
{
    let mut stats = OdeStats::default();
    let mut out = Vec::with_capacity(outputs.len());
    if outputs.is_empty() {
        return Ok((out, stats));
    }
    let dir = if outputs[outputs.len() - 1] >= x0 { 1.0 } else { -1.0 };
    for w in outputs.windows(2) {
        if dir * (w[1] - w[0]) < 0.0 {
            return Err(DsrnError::Invalid("output points must be monotone in the direction of integration".into()));
        }
    }
    if dir * (outputs[0] - x0) < 0.0 {
        return Err(DsrnError::Invalid("output points must not precede the initial point".into()));
    }

    let zero = Complex64::new(0.0, 0.0);
    let mut k = [[zero; N]; STAGES];
    let mut tmp = [zero; N];
    let mut x = x0;
    let mut y = y0;
    let mut h = opts.h_init.min(opts.h_max);

    for &target in outputs {
        while dir * (target - x) > 0.0 {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(DsrnError::NumericalFailure {
                    message: format!("step limit {} reached at x = {x}", opts.max_steps),
                    norms: vec![sup(&y)],
                });
            }
            let remaining = (target - x).abs();
            let last = h >= remaining;
            let hs = if last { remaining } else { h };
            let step = dir * hs;
            for s in 0..STAGES {
                for i in 0..N {
                    let mut acc = y[i];
                    for j in 0..s {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += k[j][i] * (step * a);
                        }
                    }
                    tmp[i] = acc;
                }
                let (ks, _) = k.split_at_mut(s + 1);
                f(x + C[s] * step, &tmp, &mut ks[s]);
            }
            let mut y_new = y;
            let mut err = 0.0f64;
            for i in 0..N {
                let mut acc = zero;
                for s in 0..STAGES {
                    if B8[s] != 0.0 {
                        acc += k[s][i] * B8[s];
                    }
                }
                y_new[i] += acc * step;
                let e = (k[0][i] + k[10][i] - k[11][i] - k[12][i]) * (ERR * step);
                err = err.max(e.norm());
            }
            let scale = opts.atol + opts.rtol * sup(&y).max(sup(&y_new));
            let ratio = err / scale;
            if !ratio.is_finite() {
                return Err(DsrnError::NumericalFailure {
                    message: format!("non-finite state near x = {x}"),
                    norms: vec![sup(&y)],
                });
            }
            if ratio <= 1.0 {
                stats.accepted += 1;
                x = if last { target } else { x + step };
                y = y_new;
                let grow = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-1.0 / 8.0)).clamp(0.2, 5.0) };
                if !last || grow < 1.0 {
                    h = (hs * grow).min(opts.h_max);
                }
            } else {
                stats.rejected += 1;
                h = hs * (0.9 * ratio.powf(-1.0 / 8.0)).clamp(0.1, 0.9);
                if h < opts.h_min {
                    return Err(DsrnError::Stiffness { x });
                }
            }
        }
        out.push(y);
    }
    Ok((out, stats))
}
