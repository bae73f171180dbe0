//! Large-|z| leading terms of the Jost matrices and of A_L, the exponents
//! of the singular Sturm-Liouville problem, and the width estimator.
//!
//! With s_- = (lambda - c_-)/kappa_- and s_+ = (lambda - c_+)/kappa_+:
//! nu_- = 1/2 - i s_-, mu_- = 1/2 + i s_-, and likewise at the cosmological
//! horizon. Jost predictions refer to the unhatted F in the Liouville
//! variable X.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::bessel::bessel_i;
use crate::dirac::{antisym2, M2};
use crate::error::{DsrnError, Result};
use crate::jost::Side;
use crate::potentials::PotentialProfile;
use crate::special::{cpow, gamma, sg};

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Smallest |z| for which predictions are offered.
pub const MIN_Z: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentSet {
    pub nu_minus: C,
    pub mu_minus: C,
    pub nu_plus: C,
    pub mu_plus: C,
    pub omega_minus: C,
    pub omega_plus: C,
}

pub fn exponents(lambda: f64, prof: &PotentialProfile) -> ExponentSet {
    let h = &prof.horizons;
    let (km, kp) = (h.kappa_minus(), h.kappa_plus());
    let (cm, cp) = (prof.asym.c_minus, prof.asym.c_plus);
    let sm = (lambda - cm) / km;
    let sp = (lambda - cp) / kp;
    let omega = |c: f64, k: f64| C::new((c - lambda).powi(2) / (k * k), -(c - lambda) / k);
    ExponentSet {
        nu_minus: C::new(0.5, -sm),
        mu_minus: C::new(0.5, sm),
        nu_plus: C::new(0.5, -sp),
        mu_plus: C::new(0.5, sp),
        omega_minus: omega(cm, km),
        omega_plus: omega(cp, kp),
    }
}

fn check_z(z: C) -> Result<()> {
    if z.norm() < MIN_Z {
        return Err(DsrnError::Domain(format!("predictions need |z| >= {MIN_Z}, got {}", z.norm())));
    }
    Ok(())
}

// (kappa/a)-type positive base raised to i t
fn pos_pow_i(base: f64, t: f64) -> C {
    C::new(0.0, t * base.ln()).exp()
}

/// Leading term of block `blk` (1..=4) of the unhatted Jost matrix from the
/// given side at Liouville coordinate X. For Re z < 0 the even (blocks 1, 4)
/// or odd (blocks 2, 3) continuation from -z is used.
#[allow(clippy::too_many_arguments)]
pub fn predict_jost_leading(
    side: Side,
    blk: usize,
    big_x: f64,
    lambda: f64,
    z: C,
    exp: &ExponentSet,
    prof: &PotentialProfile,
) -> Result<M2> {
    check_z(z)?;
    if !(1..=4).contains(&blk) {
        return Err(DsrnError::Invalid(format!("block index {blk} not in 1..=4")));
    }
    let width = prof.width_a();
    if !(big_x > 0.0 && big_x < width) {
        return Err(DsrnError::Domain(format!("X = {big_x} outside (0, {width})")));
    }
    if z.re < 0.0 {
        let v = predict_jost_leading(side, blk, big_x, lambda, -z, exp, prof)?;
        return Ok(if blk == 1 || blk == 4 { v } else { -v });
    }
    let (nu, mu, base, s, y) = match side {
        Side::Right => (
            exp.nu_minus,
            exp.mu_minus,
            prof.horizons.kappa_minus() / prof.asym.a_minus,
            (lambda - prof.asym.c_minus) / prof.horizons.kappa_minus(),
            big_x,
        ),
        Side::Left => (
            exp.nu_plus,
            exp.mu_plus,
            -prof.horizons.kappa_plus() / prof.asym.a_plus,
            (lambda - prof.asym.c_plus) / prof.horizons.kappa_plus(),
            width - big_x,
        ),
    };
    let alpha = |w: C| cpow(w * 0.5, nu) * pos_pow_i(base, s) * gamma(1.0 - nu);
    let beta = |w: C| cpow(w * 0.5, mu) * pos_pow_i(base, -s) * gamma(1.0 - mu);
    let root = y.sqrt();
    let zy = z * y;
    // left-side blocks 2 and 3 carry the opposite sign
    let sign = if side == Side::Right { 1.0 } else { -1.0 };
    let m = match blk {
        1 => M2::identity() * (alpha(z) * root * bessel_i(-nu, zy)?),
        2 => antisym2() * (sign * I * beta(z) * root * bessel_i(nu, zy)?),
        3 => antisym2() * (sign * I * beta(z.conj()).conj() * root * bessel_i(mu, zy)?),
        _ => M2::identity() * (alpha(z.conj()).conj() * root * bessel_i(-mu, zy)?),
    };
    Ok(m)
}

/// Leading terms of the four blocks of A_L for large |z|. Blocks 2 and 3
/// carry the antisymmetric pattern [[0, 1], [-1, 0]]. For Re z < 0 the
/// parity continuation from -z is used.
pub fn predict_al_blocks(lambda: f64, z: C, exp: &ExponentSet, prof: &PotentialProfile) -> Result<[M2; 4]> {
    check_z(z)?;
    if z.re < 0.0 {
        let [b1, b2, b3, b4] = predict_al_blocks(lambda, -z, exp, prof)?;
        return Ok([b1, -b2, -b3, b4]);
    }
    let h = &prof.horizons;
    let (km, kp) = (h.kappa_minus(), h.kappa_plus());
    let sm = (lambda - prof.asym.c_minus) / km;
    let sp = (lambda - prof.asym.c_plus) / kp;
    let base_m = km / prof.asym.a_minus;
    let base_p = -kp / prof.asym.a_plus;
    let a = prof.width_a();
    let half = z * 0.5;
    let zpow = |t: f64| cpow(half, C::new(0.0, t));
    let g = sg(z.im);
    let grow = (z * a).exp();
    let decay = (-z * a).exp();
    let k = 1.0 / (2.0 * PI);

    let l1 = k * pos_pow_i(base_p, sp) * pos_pow_i(base_m, -sm) * gamma(1.0 - exp.nu_plus) * gamma(1.0 - exp.mu_minus)
        * zpow(sm - sp)
        * (grow + decay * (-g * PI * (sp - sm)).exp());
    let l2 = -I * k * pos_pow_i(base_p, -sp) * pos_pow_i(base_m, -sm)
        * gamma(1.0 - exp.mu_plus)
        * gamma(1.0 - exp.mu_minus)
        * zpow(sm + sp)
        * (grow - decay * (g * PI * (sp - sm)).exp());
    let l3 = -I * k * pos_pow_i(base_p, sp) * pos_pow_i(base_m, sm)
        * gamma(1.0 - exp.nu_plus)
        * gamma(1.0 - exp.nu_minus)
        * zpow(-(sm + sp))
        * (grow - decay * (-g * PI * (sp + sm)).exp());
    let l4 = k * pos_pow_i(base_p, -sp) * pos_pow_i(base_m, sm) * gamma(1.0 - exp.mu_plus) * gamma(1.0 - exp.nu_minus)
        * zpow(-(sm - sp))
        * (grow + decay * (g * PI * (sp - sm)).exp());
    let j = antisym2();
    Ok([M2::identity() * l1, j * l2, j * l3, M2::identity() * l4])
}

/// Leading terms matched to the solutions as normalized in this crate:
/// the off-diagonal blocks of the displayed formulas carry the opposite
/// sign, and F_L picks up the constant factor e^{-i Gamma^1 beta} from the
/// limit of C^- at the cosmological horizon.
pub fn predict_jost_normalized(
    side: Side,
    blk: usize,
    big_x: f64,
    lambda: f64,
    z: C,
    exp: &ExponentSet,
    prof: &PotentialProfile,
) -> Result<M2> {
    let m = predict_jost_leading(side, blk, big_x, lambda, z, exp, prof)?;
    let sign = if blk == 2 || blk == 3 { -1.0 } else { 1.0 };
    let phase = match side {
        Side::Right => C::new(1.0, 0.0),
        Side::Left => beta_factor(blk, prof.phase_beta()),
    };
    Ok(m * (phase * sign))
}

/// A_L blocks with the same two corrections; A_L = (displayed) e^{-i Gamma^1 beta}
/// up to the sign of blocks 2 and 3.
pub fn predict_al_normalized(lambda: f64, z: C, exp: &ExponentSet, prof: &PotentialProfile) -> Result<[M2; 4]> {
    let b = predict_al_blocks(lambda, z, exp, prof)?;
    let beta = prof.phase_beta();
    Ok([
        b[0] * beta_factor(1, beta),
        -b[1] * beta_factor(2, beta),
        -b[2] * beta_factor(3, beta),
        b[3] * beta_factor(4, beta),
    ])
}

// right multiplication by e^{-i Gamma^1 beta}: columns 1-2 get e^{-i beta}
fn beta_factor(blk: usize, beta: f64) -> C {
    if blk == 1 || blk == 3 {
        C::new(0.0, -beta).exp()
    } else {
        C::new(0.0, beta).exp()
    }
}

/// Least-squares slope of ln|A_L1(n)_{ii}| against n, the exponential
/// growth rate of A_L1; `entry` is 0 for (1,1), 1 for (2,2).
pub fn estimate_width(al1: &BTreeMap<u32, M2>, entry: usize) -> Result<f64> {
    if al1.len() < 4 {
        return Err(DsrnError::Estimation(format!("need at least 4 values of n, got {}", al1.len())));
    }
    if let Some((&n, _)) = al1.iter().find(|(&n, _)| n < 8) {
        return Err(DsrnError::Estimation(format!("n = {n} below 8")));
    }
    let pts: Vec<(f64, f64)> = al1.iter().map(|(&n, m)| (n as f64, m[(entry, entry)].norm().ln())).collect();
    if pts.windows(2).any(|w| !(w[1].1 > w[0].1)) || pts.iter().any(|p| !p.1.is_finite()) {
        return Err(DsrnError::Estimation("|A_L1| is not increasing in n".into()));
    }
    Ok(linear_fit(&pts).1)
}

/// (intercept, slope) of the least-squares line through `pts`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Fit err ~ C n^p on a log-log scale; returns (C, p).
pub fn fit_power_law(ns: &[f64], errs: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = ns.iter().zip(errs).map(|(n, e)| (n.ln(), e.ln())).collect();
    let (c, p) = linear_fit(&pts);
    (c.exp(), p)
}

/// Least-squares C in err ~ C / n.
pub fn fit_inverse_constant(ns: &[f64], errs: &[f64]) -> f64 {
    let num: f64 = ns.iter().zip(errs).map(|(n, e)| e / n).sum();
    let den: f64 = ns.iter().map(|n| 1.0 / (n * n)).sum();
    num / den
}

/// One row of a prediction/numeric comparison.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComparisonRow {
    pub n: f64,
    pub numeric: f64,
    pub predicted: f64,
    pub ratio_re: f64,
    pub ratio_im: f64,
}

impl ComparisonRow {
    pub fn new(n: f64, numeric: C, predicted: C) -> Self {
        let r = numeric / predicted;
        Self { n, numeric: numeric.norm(), predicted: predicted.norm(), ratio_re: r.re, ratio_im: r.im }
    }
}
