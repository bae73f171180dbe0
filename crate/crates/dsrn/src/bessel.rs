//! Modified Bessel functions of complex order and argument.
//!
//! I_nu is summed from its power series for |z| <= 30 and from the complete
//! Hankel expansion beyond. The series loses accuracy to cancellation when
//! |Re z| is much smaller than |z|; the arguments used in this crate have
//! Re z >= 0 and moderate phase.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{DsrnError, Result};
use crate::special::{cpow, recip_gamma, sg};

/// Series/asymptotic switch point in |z|.
pub const CROSSOVER: f64 = 30.0;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn is_negative_integer(nu: Complex64) -> bool {
    nu.im == 0.0 && nu.re < 0.0 && nu.re.fract() == 0.0
}

fn check_branch(z: Complex64) -> Result<()> {
    if z.im == 0.0 && z.re < 0.0 {
        return Err(DsrnError::Branch(format!("z = {z} lies on the branch cut")));
    }
    Ok(())
}

/// Power series of I_nu(z).
pub fn bessel_i_series(nu: Complex64, z: Complex64) -> Result<Complex64> {
    let nu = if is_negative_integer(nu) { -nu } else { nu };
    let half = z * 0.5;
    let w = half * half;
    let mut term = cpow(half, nu) * recip_gamma(nu + 1.0);
    let mut sum = term;
    let kmin = z.norm().ceil() as usize + 2;
    for k in 0..500usize {
        let kf = k as f64;
        term = term * w / ((kf + 1.0) * (nu + kf + 1.0));
        sum += term;
        if k >= kmin && term.norm() <= 1e-18 * sum.norm() {
            return Ok(sum);
        }
        if !term.norm().is_finite() {
            break;
        }
    }
    if term.norm() <= 1e-18 * sum.norm() || sum.norm() == 0.0 {
        return Ok(sum);
    }
    Err(DsrnError::Evaluation(format!("I_nu series for nu = {nu}, z = {z} did not converge in 500 terms")))
}

// sum_k (s)^k a_k(nu) / z^k, truncated at the smallest term
fn hankel_sum(nu: Complex64, z: Complex64, alternate: bool) -> Complex64 {
    let mu = 4.0 * nu * nu;
    let mut term = c(1.0, 0.0);
    let mut sum = term;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let mut next = term * (mu - odd * odd) / (8.0 * kf * z);
        if alternate {
            next = -next;
        }
        let mag = next.norm();
        if mag > last {
            break;
        }
        sum += next;
        term = next;
        last = mag;
        if mag <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// Complete large-argument expansion of I_nu(z).
pub fn bessel_i_hankel(nu: Complex64, z: Complex64) -> Complex64 {
    let root = (2.0 * PI * z).sqrt();
    let s = if z.im >= 0.0 { 1.0 } else { -1.0 };
    let grow = z.exp() / root * hankel_sum(nu, z, true);
    let decay = c(0.0, s) * (c(0.0, s * PI) * nu).exp() * (-z).exp() / root * hankel_sum(nu, z, false);
    grow + decay
}

/// I_nu(z), principal branch.
pub fn bessel_i(nu: Complex64, z: Complex64) -> Result<Complex64> {
    if z == c(0.0, 0.0) {
        if nu == c(0.0, 0.0) {
            return Ok(c(1.0, 0.0));
        }
        if nu.re > 0.0 {
            return Ok(c(0.0, 0.0));
        }
        return Err(DsrnError::Domain(format!("I_nu(0) undefined for nu = {nu}")));
    }
    check_branch(z)?;
    if z.norm() > CROSSOVER {
        Ok(bessel_i_hankel(nu, z))
    } else {
        bessel_i_series(nu, z)
    }
}

/// dI_nu/dz = I_{nu+1}(z) + (nu/z) I_nu(z).
pub fn bessel_i_derivative(nu: Complex64, z: Complex64) -> Result<Complex64> {
    Ok(bessel_i(nu + 1.0, z)? + nu / z * bessel_i(nu, z)?)
}

/// Leading large-|z| form e^z/sqrt(2 pi z) + e^{-z + sg(Im z) i pi (nu + 1/2)}/sqrt(2 pi z).
pub fn bessel_i_asymptotic(nu: Complex64, z: Complex64) -> Result<Complex64> {
    if z.norm() <= 5.0 {
        return Err(DsrnError::Domain(format!("asymptotic form needs |z| > 5, got {}", z.norm())));
    }
    if z.arg().abs() > PI - 1e-3 {
        return Err(DsrnError::Branch(format!("arg z = {} too close to the negative axis", z.arg())));
    }
    let root = (2.0 * PI * z).sqrt();
    let phase = c(0.0, sg(z.im) * PI) * (nu + 0.5);
    Ok(z.exp() / root + (-z + phase).exp() / root)
}

fn near_integer(nu: Complex64) -> bool {
    (nu - c(nu.re.round(), 0.0)).norm() < 1e-8
}

// K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt by the trapezoidal rule
fn bessel_k_integral(nu: Complex64, z: Complex64) -> Complex64 {
    let h = 0.02;
    let t_max = (800.0 / z.re).max(1.0).acosh() + 1.0;
    let n = (t_max / h).ceil() as usize;
    let mut sum = 0.5 * (-z).exp();
    for k in 1..=n {
        let t = k as f64 * h;
        sum += (-z * t.cosh()).exp() * (nu * t).cosh();
    }
    sum * h
}

/// K_nu(z) = (pi/2)(I_{-nu} - I_nu)/sin(nu pi) for non-integer nu.
///
/// For |z| > 2 in the sector |arg z| < pi/3 the difference of the two I's
/// cancels badly, and the equivalent integral representation is used.
pub fn bessel_k(nu: Complex64, z: Complex64) -> Result<Complex64> {
    if near_integer(nu) {
        return Err(DsrnError::IllConditionedOrder(format!("{nu}")));
    }
    check_branch(z)?;
    if z.norm() > 2.0 && z.arg().abs() < PI / 3.0 {
        return Ok(bessel_k_integral(nu, z));
    }
    let ip = bessel_i(-nu, z)?;
    let im = bessel_i(nu, z)?;
    Ok(0.5 * PI * (ip - im) / (nu * PI).sin())
}
