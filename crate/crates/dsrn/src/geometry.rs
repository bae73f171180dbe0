//! Horizon structure of the de Sitter-Reissner-Nordstrom exterior and the
//! Regge-Wheeler coordinate.
//!
//! Points of the exterior are carried as [`RadialPoint`], which keeps the
//! distances to both horizons next to `r`. Near a horizon `r` itself cannot
//! resolve the distance, but everything downstream (potentials, phases, the
//! Liouville variable) is computed from the stored distances.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{DsrnError, Result};

/// Black-hole parameters together with the Dirac field mass and charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackHoleParams {
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "Q")]
    pub charge: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    #[serde(rename = "m")]
    pub m_dirac: f64,
    #[serde(rename = "q")]
    pub q_dirac: f64,
}

impl BlackHoleParams {
    pub fn new(mass: f64, charge: f64, lambda: f64, m_dirac: f64, q_dirac: f64) -> Self {
        Self { mass, charge, lambda, m_dirac, q_dirac }
    }

    /// Same field, different geometry.
    pub fn with_geometry(&self, mass: f64, charge: f64, lambda: f64) -> Self {
        Self { mass, charge, lambda, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.mass, self.charge, self.lambda, self.m_dirac, self.q_dirac];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(DsrnError::Invalid("non-finite parameter".into()));
        }
        if self.mass <= 0.0 {
            return Err(DsrnError::Invalid(format!("M must be positive, got {}", self.mass)));
        }
        if self.lambda <= 0.0 {
            return Err(DsrnError::Invalid(format!("Lambda must be positive, got {}", self.lambda)));
        }
        if self.m_dirac < 0.0 {
            return Err(DsrnError::Invalid(format!("m must be non-negative, got {}", self.m_dirac)));
        }
        Ok(())
    }
}

/// F(r) = 1 - 2M/r + Q^2/r^2 - Lambda r^2/3, evaluated as written.
pub fn evaluate_f(r: f64, p: &BlackHoleParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(DsrnError::Domain(format!("F needs r > 0, got {r}")));
    }
    Ok(1.0 - 2.0 * p.mass / r + p.charge * p.charge / (r * r) - p.lambda * r * r / 3.0)
}

/// dF/dr.
pub fn evaluate_f_prime(r: f64, p: &BlackHoleParams) -> f64 {
    2.0 * p.mass / (r * r) - 2.0 * p.charge * p.charge / (r * r * r) - 2.0 * p.lambda * r / 3.0
}

/// A point of the exterior with its distances to the two horizons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPoint {
    pub r: f64,
    /// r - r_minus
    pub d_minus: f64,
    /// r_plus - r
    pub d_plus: f64,
    /// The requested x was so extreme that the horizon distance underflowed.
    pub saturated: bool,
}

/// Roots of r^2 F(r) and the surface gravities, ordered r_n < 0 < r_c < r_- < r_+.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonData {
    pub params: BlackHoleParams,
    /// [r_n, r_c, r_minus, r_plus]
    pub roots: [f64; 4],
    /// F'(r_j)/2. For Q = 0 the root r_c is 0 and its entry is +inf.
    pub kappas: [f64; 4],
    /// 1/(2 kappa_j): the residues of 1/F.
    pub rho: [f64; 4],
    /// rho_j / r_j (0 when r_c = 0).
    pub sigma: [f64; 4],
    /// log constants C_- and C_+ of the horizon expansions
    pub c_log_minus: f64,
    pub c_log_plus: f64,
    /// x at the midpoint of the exterior, where the inversion switches sides
    pub x_mid: f64,
}

pub const IDX_N: usize = 0;
pub const IDX_C: usize = 1;
pub const IDX_MINUS: usize = 2;
pub const IDX_PLUS: usize = 3;

fn quartic(r: f64, p: &BlackHoleParams) -> (f64, f64, f64) {
    // -(L/3) r^4 + r^2 - 2 M r + Q^2, its derivative, and a magnitude scale
    let l3 = p.lambda / 3.0;
    let q2 = p.charge * p.charge;
    let r2 = r * r;
    let val = -l3 * r2 * r2 + r2 - 2.0 * p.mass * r + q2;
    let der = -4.0 * l3 * r2 * r + 2.0 * r - 2.0 * p.mass;
    let scale = l3 * r2 * r2 + r2 + 2.0 * p.mass * r.abs() + q2;
    (val, der, scale)
}

fn polish_root(r0: f64, p: &BlackHoleParams) -> f64 {
    let mut r = r0;
    for _ in 0..50 {
        let (v, d, _) = quartic(r, p);
        if d == 0.0 {
            break;
        }
        let step = v / d;
        r -= step;
        if step.abs() <= 4.0 * f64::EPSILON * r.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    r
}

/// Locate the four real roots of r^2 F(r) by companion-matrix eigenvalues
/// followed by Newton polishing.
pub fn find_horizons(p: &BlackHoleParams) -> Result<HorizonData> {
    p.validate()?;
    let l = p.lambda;
    // monic form: r^4 - (3/L) r^2 + (6M/L) r - 3Q^2/L
    let coeffs = [-3.0 * p.charge * p.charge / l, 6.0 * p.mass / l, -3.0 / l, 0.0];
    let mut comp = Matrix4::<f64>::zeros();
    for i in 1..4 {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..4 {
        comp[(i, 3)] = -coeffs[i];
    }
    let eig = comp.complex_eigenvalues();
    let found: Vec<(f64, f64)> = eig.iter().map(|c| (c.re, c.im)).collect();

    let scale = found.iter().map(|(a, b)| a.hypot(*b)).fold(1.0, f64::max);
    if found.iter().any(|(_, im)| im.abs() > 1e-9 * scale) {
        return Err(DsrnError::Inadmissible {
            reason: "r^2 F(r) has complex roots".into(),
            roots: found,
        });
    }
    let mut roots: Vec<f64> = found.iter().map(|(re, _)| polish_root(*re, p)).collect();
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if p.charge == 0.0 {
        // r = 0 is then an exact root
        let (k, _) = roots
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap();
        roots[k] = 0.0;
    }
    let as_pairs = |rs: &[f64]| rs.iter().map(|r| (*r, 0.0)).collect::<Vec<_>>();
    let c_ok = if p.charge == 0.0 { roots[1] >= 0.0 } else { roots[1] > 0.0 };
    if !(roots[0] < 0.0 && c_ok && roots[2] > roots[1] && roots[3] > roots[2]) {
        return Err(DsrnError::Inadmissible {
            reason: "root structure is not one negative and three positive roots".into(),
            roots: as_pairs(&roots),
        });
    }
    let r_plus = roots[3];
    for w in roots.windows(2) {
        if (w[1] - w[0]).abs() < 1e-8 * r_plus {
            return Err(DsrnError::Inadmissible {
                reason: "degenerate (multiple) root".into(),
                roots: as_pairs(&roots),
            });
        }
    }

    let mut kappas = [0.0; 4];
    let mut rho = [0.0; 4];
    let mut sigma = [0.0; 4];
    for j in 0..4 {
        if roots[j] == 0.0 {
            kappas[j] = f64::INFINITY;
            rho[j] = 0.0;
            sigma[j] = 0.0;
        } else {
            kappas[j] = 0.5 * evaluate_f_prime(roots[j], p);
            rho[j] = 0.5 / kappas[j];
            sigma[j] = rho[j] / roots[j];
        }
    }
    if !(kappas[IDX_MINUS] > 0.0 && kappas[IDX_PLUS] < 0.0) {
        return Err(DsrnError::Inadmissible {
            reason: "surface gravity signs violate kappa_- > 0 > kappa_+".into(),
            roots: as_pairs(&roots),
        });
    }

    let log_const = |k: usize| -> f64 {
        (0..4)
            .filter(|&j| j != k && rho[j] != 0.0)
            .map(|j| rho[j] * (roots[k] - roots[j]).abs().ln())
            .sum()
    };
    let mut h = HorizonData {
        params: *p,
        roots: [roots[0], roots[1], roots[2], roots[3]],
        kappas,
        rho,
        sigma,
        c_log_minus: log_const(IDX_MINUS),
        c_log_plus: log_const(IDX_PLUS),
        x_mid: 0.0,
    };
    let w = h.width_r();
    h.x_mid = h.x_of_deltas(0.5 * w, 0.5 * w, h.r_minus() + 0.5 * w);
    Ok(h)
}

impl HorizonData {
    pub fn r_n(&self) -> f64 {
        self.roots[IDX_N]
    }
    pub fn r_c(&self) -> f64 {
        self.roots[IDX_C]
    }
    pub fn r_minus(&self) -> f64 {
        self.roots[IDX_MINUS]
    }
    pub fn r_plus(&self) -> f64 {
        self.roots[IDX_PLUS]
    }
    pub fn kappa_minus(&self) -> f64 {
        self.kappas[IDX_MINUS]
    }
    pub fn kappa_plus(&self) -> f64 {
        self.kappas[IDX_PLUS]
    }
    /// r_plus - r_minus
    pub fn width_r(&self) -> f64 {
        self.r_plus() - self.r_minus()
    }

    /// Dimensionless residuals |F(r_j)| for the nonzero roots.
    pub fn root_residuals(&self) -> Vec<f64> {
        self.roots
            .iter()
            .filter(|r| **r != 0.0)
            .map(|&r| {
                let (v, _, _) = quartic(r, &self.params);
                (v / (r * r)).abs()
            })
            .collect()
    }

    /// (r - r_n, r - r_c) built from whichever horizon distance is smaller.
    fn far_factors(&self, p: &RadialPoint) -> (f64, f64) {
        if p.d_minus <= p.d_plus {
            (
                (self.r_minus() - self.r_n()) + p.d_minus,
                (self.r_minus() - self.r_c()) + p.d_minus,
            )
        } else {
            (
                (self.r_plus() - self.r_n()) - p.d_plus,
                (self.r_plus() - self.r_c()) - p.d_plus,
            )
        }
    }

    fn x_of_deltas(&self, dm: f64, dp: f64, r: f64) -> f64 {
        let pt = RadialPoint { r, d_minus: dm, d_plus: dp, saturated: false };
        self.x_of_point(&pt)
    }

    /// Build a point from r; fails outside the open exterior.
    pub fn point_from_r(&self, r: f64) -> Result<RadialPoint> {
        if !(r > self.r_minus() && r < self.r_plus()) {
            return Err(DsrnError::Domain(format!(
                "r = {r} outside the exterior ({}, {})",
                self.r_minus(),
                self.r_plus()
            )));
        }
        Ok(RadialPoint { r, d_minus: r - self.r_minus(), d_plus: self.r_plus() - r, saturated: false })
    }

    /// Point from the distance to r_minus (accurate for tiny distances).
    pub fn point_from_d_minus(&self, dm: f64) -> RadialPoint {
        let w = self.width_r();
        RadialPoint { r: self.r_minus() + dm, d_minus: dm, d_plus: w - dm, saturated: false }
    }

    /// Point from the distance to r_plus.
    pub fn point_from_d_plus(&self, dp: f64) -> RadialPoint {
        let w = self.width_r();
        RadialPoint { r: self.r_plus() - dp, d_minus: w - dp, d_plus: dp, saturated: false }
    }

    /// F at a point, in factored form so it stays accurate near both horizons.
    pub fn f_at(&self, p: &RadialPoint) -> f64 {
        let (fn_, fc) = self.far_factors(p);
        self.params.lambda / 3.0 * p.d_minus * p.d_plus * fn_ * fc / (p.r * p.r)
    }

    /// x = sum_j ln|r - r_j| / (2 kappa_j).
    pub fn x_of_point(&self, p: &RadialPoint) -> f64 {
        let (fn_, fc) = self.far_factors(p);
        let mut x = self.rho[IDX_N] * fn_.ln();
        if self.rho[IDX_C] != 0.0 {
            x += self.rho[IDX_C] * fc.ln();
        }
        x + self.rho[IDX_MINUS] * p.d_minus.ln() + self.rho[IDX_PLUS] * p.d_plus.ln()
    }

    /// Regge-Wheeler coordinate of r in (r_minus, r_plus).
    pub fn regge_wheeler_x(&self, r: f64) -> Result<f64> {
        Ok(self.x_of_point(&self.point_from_r(r)?))
    }

    // x and dx/dt with t = ln(r - r_minus)
    fn x_left(&self, t: f64) -> (f64, f64, RadialPoint) {
        let p = self.point_from_d_minus(t.exp());
        let (fn_, fc) = self.far_factors(&p);
        let mut x = self.rho[IDX_N] * fn_.ln();
        if self.rho[IDX_C] != 0.0 {
            x += self.rho[IDX_C] * fc.ln();
        }
        x += self.rho[IDX_MINUS] * t + self.rho[IDX_PLUS] * p.d_plus.ln();
        let dxdt = p.r * p.r / (self.params.lambda / 3.0 * p.d_plus * fn_ * fc);
        (x, dxdt, p)
    }

    // x and dx/dt with t = ln(r_plus - r)
    fn x_right(&self, t: f64) -> (f64, f64, RadialPoint) {
        let p = self.point_from_d_plus(t.exp());
        let (fn_, fc) = self.far_factors(&p);
        let mut x = self.rho[IDX_N] * fn_.ln();
        if self.rho[IDX_C] != 0.0 {
            x += self.rho[IDX_C] * fc.ln();
        }
        x += self.rho[IDX_MINUS] * p.d_minus.ln() + self.rho[IDX_PLUS] * t;
        let dxdt = -p.r * p.r / (self.params.lambda / 3.0 * p.d_minus * fn_ * fc);
        (x, dxdt, p)
    }

    /// Inverse of the Regge-Wheeler map. Safeguarded Newton in the log of
    /// the distance to the nearer horizon, seeded by the horizon asymptotics.
    pub fn point_from_x(&self, x: f64) -> RadialPoint {
        if x.is_nan() {
            return RadialPoint { r: f64::NAN, d_minus: f64::NAN, d_plus: f64::NAN, saturated: true };
        }
        let w = self.width_r();
        let t_edge = (0.5 * w).ln();
        let left = x <= self.x_mid;
        let eval = |t: f64| if left { self.x_left(t) } else { self.x_right(t) };
        // increasing in t on the left, decreasing on the right
        let sgn = if left { 1.0 } else { -1.0 };
        let (rho_h, c_h) = if left {
            (self.rho[IDX_MINUS], self.c_log_minus)
        } else {
            (self.rho[IDX_PLUS], self.c_log_plus)
        };
        let mut t = ((x - c_h) / rho_h).min(t_edge);
        let mut t_hi = t_edge;
        let mut t_lo = t - 1.0;
        let mut step = 2.0;
        while sgn * (eval(t_lo).0 - x) > 0.0 {
            t_hi = t_hi.min(t_lo);
            t_lo -= step;
            step *= 2.0;
            if t_lo < -1e6 {
                break;
            }
        }
        t = t.clamp(t_lo, t_hi);
        let mut last = eval(t);
        for _ in 0..200 {
            let f = sgn * (last.0 - x);
            if f == 0.0 {
                break;
            }
            if f < 0.0 {
                t_lo = t;
            } else {
                t_hi = t;
            }
            let mut t_new = t - (last.0 - x) / last.1;
            if !(t_new > t_lo && t_new < t_hi) {
                t_new = 0.5 * (t_lo + t_hi);
            }
            let dt = (t_new - t).abs();
            t = t_new;
            last = eval(t);
            if dt <= 4.0 * f64::EPSILON * t.abs().max(1.0) || t_hi - t_lo <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
                break;
            }
        }
        let mut p = last.2;
        let d = if left { p.d_minus } else { p.d_plus };
        if d < f64::MIN_POSITIVE {
            p.saturated = true;
        }
        p
    }

    /// r(x), the unique radius in (r_minus, r_plus) with regge_wheeler_x(r) = x.
    pub fn radius_from_x(&self, x: f64) -> f64 {
        self.point_from_x(x).r
    }

    pub fn to_json(&self) -> Value {
        json!({
            "roots": self.roots.to_vec(),
            "kappas": self.kappas.to_vec(),
            "params": self.params,
        })
    }
}
