//! The radial Dirac potentials a, b, c on the exterior, their horizon
//! asymptotics, the accumulated phases C^- and beta, and the Liouville
//! variable X = int_{-inf}^x a.
//!
//! Integrals of rational functions of r are done in closed form through the
//! partial fractions 1/F = sum_j rho_j/(r - r_j). The Liouville integral is
//! evaluated in the angle theta defined by r = r_- + w sin^2(theta/2), where
//! the integrand dtheta/(r sqrt G) is analytic on [0, pi].

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{DsrnError, Result};
use crate::geometry::{evaluate_f, find_horizons, BlackHoleParams, HorizonData, RadialPoint, IDX_C, IDX_MINUS, IDX_N, IDX_PLUS};
use crate::quadrature::GaussLegendre;

const THETA_PANELS: usize = 16;
const THETA_NODES: usize = 20;

/// Leading horizon coefficients:
/// a ~ a_pm e^{kappa_pm x}, b ~ b_pm e^{kappa_pm x}, c ~ c_pm + c'_pm e^{2 kappa_pm x}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticCoeffs {
    pub a_minus: f64,
    pub a_plus: f64,
    pub b_minus: f64,
    pub b_plus: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub cprime_minus: f64,
    pub cprime_plus: f64,
}

/// Potentials and their x-derivatives at one point.
#[derive(Debug, Clone, Copy)]
pub struct PotentialSample {
    pub x: f64,
    pub point: RadialPoint,
    pub f: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub a_prime: f64,
    pub b_prime: f64,
    pub c_prime: f64,
    /// C^-(x)
    pub phase: f64,
}

#[derive(Debug, Clone)]
struct LiouvilleTable {
    step: f64,
    /// X at theta = k * step
    cum: Vec<f64>,
    gl: GaussLegendre,
}

#[derive(Debug, Clone)]
pub struct PotentialProfile {
    pub horizons: HorizonData,
    pub params: BlackHoleParams,
    pub asym: AsymptoticCoeffs,
    pub width_a: f64,
    pub beta_phase: f64,
    table: LiouvilleTable,
    maxima: [f64; 2],
}

impl PotentialProfile {
    pub fn new(params: &BlackHoleParams) -> Result<Self> {
        let horizons = find_horizons(params)?;
        Ok(Self::from_horizons(horizons))
    }

    pub fn from_horizons(horizons: HorizonData) -> Self {
        let params = horizons.params;
        let h = &horizons;
        let (rm, rp) = (h.r_minus(), h.r_plus());
        let (km, kp) = (h.kappa_minus(), h.kappa_plus());
        let qq = params.q_dirac * params.charge;
        let a_minus = (2.0 * km).sqrt() * (-km * h.c_log_minus).exp() / rm;
        let a_plus = (-2.0 * kp).sqrt() * (-kp * h.c_log_plus).exp() / rp;
        let asym = AsymptoticCoeffs {
            a_minus,
            a_plus,
            b_minus: params.m_dirac * rm * a_minus,
            b_plus: params.m_dirac * rp * a_plus,
            c_minus: qq / rm,
            c_plus: qq / rp,
            cprime_minus: -qq / (rm * rm) * (-2.0 * km * h.c_log_minus).exp(),
            cprime_plus: qq / (rp * rp) * (-2.0 * kp * h.c_log_plus).exp(),
        };
        let mut prof = Self {
            horizons,
            params,
            asym,
            width_a: 0.0,
            beta_phase: 0.0,
            table: LiouvilleTable {
                step: std::f64::consts::PI / THETA_PANELS as f64,
                cum: Vec::new(),
                gl: GaussLegendre::new(THETA_NODES),
            },
            maxima: [0.0; 2],
        };
        // sup of a and b over the exterior, scanned in r
        let n_scan = 4000;
        for k in 1..n_scan {
            let r = rm + (rp - rm) * k as f64 / n_scan as f64;
            let f = evaluate_f(r, &params).unwrap_or(0.0).max(0.0);
            prof.maxima[0] = prof.maxima[0].max(f.sqrt() / r);
            prof.maxima[1] = prof.maxima[1].max(params.m_dirac * f.sqrt());
        }
        let mut cum = vec![0.0; THETA_PANELS + 1];
        for k in 0..THETA_PANELS {
            let (t0, t1) = (k as f64 * prof.table.step, (k + 1) as f64 * prof.table.step);
            cum[k + 1] = cum[k] + prof.table.gl.integrate(|t| prof.theta_integrand(t), t0, t1);
        }
        prof.width_a = cum[THETA_PANELS];
        prof.table.cum = cum;
        prof.beta_phase = prof.compute_beta();
        prof
    }

    pub fn horizons(&self) -> &HorizonData {
        &self.horizons
    }

    /// Point of the exterior at Regge-Wheeler coordinate x.
    pub fn point(&self, x: f64) -> RadialPoint {
        self.horizons.point_from_x(x)
    }

    /// a, b, c at x.
    pub fn potential_abc(&self, x: f64) -> (f64, f64, f64) {
        let s = self.sample(x);
        (s.a, s.b, s.c)
    }

    /// All potentials, derivatives and the phase C^- at x.
    pub fn sample(&self, x: f64) -> PotentialSample {
        let p = self.point(x);
        self.sample_at(x, p)
    }

    /// Same as [`sample`](Self::sample) for an already located point.
    pub fn sample_at(&self, x: f64, p: RadialPoint) -> PotentialSample {
        let h = &self.horizons;
        let pr = &self.params;
        let r = p.r;
        let f = h.f_at(&p);
        let sf = f.sqrt();
        let fp = 2.0 * pr.mass / (r * r) - 2.0 * pr.charge * pr.charge / (r * r * r) - 2.0 * pr.lambda * r / 3.0;
        let qq = pr.q_dirac * pr.charge;
        PotentialSample {
            x,
            point: p,
            f,
            a: sf / r,
            b: pr.m_dirac * sf,
            c: qq / r,
            a_prime: sf * (fp / (2.0 * r) - f / (r * r)),
            b_prime: 0.5 * pr.m_dirac * fp * sf,
            c_prime: -qq * f / (r * r),
            phase: self.phase_at(x, &p),
        }
    }

    pub fn asymptotic_coeffs(&self) -> AsymptoticCoeffs {
        self.asym
    }

    // ln|(r - r_j)/(r_- - r_j)| for j != minus
    fn log_ratio_from_minus(&self, j: usize, p: &RadialPoint) -> f64 {
        let h = &self.horizons;
        if j == IDX_PLUS {
            let w = h.width_r();
            if p.d_plus < 0.5 * w {
                (p.d_plus / w).ln()
            } else {
                (-p.d_minus / w).ln_1p()
            }
        } else {
            (p.d_minus / (h.r_minus() - h.roots[j])).ln_1p()
        }
    }

    // ln|(r_+ - r_j)/(r - r_j)| for j != plus
    fn log_ratio_to_plus(&self, j: usize, p: &RadialPoint) -> f64 {
        let h = &self.horizons;
        if j == IDX_MINUS {
            let w = h.width_r();
            if p.d_minus < 0.5 * w {
                (w / p.d_minus).ln()
            } else {
                -(-p.d_plus / w).ln_1p()
            }
        } else {
            -(-p.d_plus / (h.r_plus() - h.roots[j])).ln_1p()
        }
    }

    fn phase_at(&self, x: f64, p: &RadialPoint) -> f64 {
        let qq = self.params.q_dirac * self.params.charge;
        if qq == 0.0 {
            return 0.0;
        }
        let h = &self.horizons;
        let rm = h.r_minus();
        let mut s = 0.0;
        for j in [IDX_N, IDX_C, IDX_PLUS] {
            let coef = h.sigma[j] - h.rho[j] / rm;
            if coef != 0.0 {
                s += coef * self.log_ratio_from_minus(j, p);
            }
        }
        qq * s + self.asym.c_minus * x
    }

    /// C^-(x) = int_{-inf}^x (c - c_-) + c_- x.
    pub fn phase_cminus(&self, x: f64) -> f64 {
        let p = self.point(x);
        self.phase_at(x, &p)
    }

    fn compute_beta(&self) -> f64 {
        let qq = self.params.q_dirac * self.params.charge;
        if qq == 0.0 {
            return 0.0;
        }
        let h = &self.horizons;
        let p0 = self.point(0.0);
        let rp = h.r_plus();
        let mut s = 0.0;
        for j in [IDX_N, IDX_C, IDX_MINUS] {
            let coef = h.sigma[j] - h.rho[j] / rp;
            if coef != 0.0 {
                s += coef * self.log_ratio_to_plus(j, &p0);
            }
        }
        self.phase_at(0.0, &p0) + qq * s
    }

    /// beta = int_{-inf}^0 (c - c_-) + int_0^inf (c - c_+).
    pub fn phase_beta(&self) -> f64 {
        self.beta_phase
    }

    fn theta_integrand(&self, theta: f64) -> f64 {
        let h = &self.horizons;
        let s = (0.5 * theta).sin();
        let r = h.r_minus() + h.width_r() * s * s;
        let g = self.params.lambda / 3.0 * (r - h.r_n()) * (r - h.r_c()) / (r * r);
        1.0 / (r * g.sqrt())
    }

    fn theta_of_point(&self, p: &RadialPoint) -> f64 {
        let w = self.horizons.width_r();
        if p.d_minus <= p.d_plus {
            2.0 * (p.d_minus / w).sqrt().asin()
        } else {
            std::f64::consts::PI - 2.0 * (p.d_plus / w).sqrt().asin()
        }
    }

    fn point_of_theta(&self, theta: f64) -> RadialPoint {
        let w = self.horizons.width_r();
        if theta <= 0.5 * std::f64::consts::PI {
            let s = (0.5 * theta).sin();
            self.horizons.point_from_d_minus(w * s * s)
        } else {
            let c = (0.5 * theta).cos();
            self.horizons.point_from_d_plus(w * c * c)
        }
    }

    fn x_of_theta(&self, theta: f64) -> f64 {
        let t = &self.table;
        let k = ((theta / t.step).floor() as usize).min(THETA_PANELS - 1);
        let t0 = k as f64 * t.step;
        t.cum[k] + t.gl.integrate(|u| self.theta_integrand(u), t0, theta)
    }

    fn complement_of_theta(&self, theta: f64) -> f64 {
        let t = &self.table;
        let k = ((theta / t.step).floor() as usize).min(THETA_PANELS - 1);
        let t1 = (k + 1) as f64 * t.step;
        (t.cum[THETA_PANELS] - t.cum[k + 1]) + t.gl.integrate(|u| self.theta_integrand(u), theta, t1)
    }

    /// X = g(x) = int_{-inf}^x a.
    pub fn liouville_x(&self, x: f64) -> f64 {
        let p = self.point(x);
        self.x_of_theta(self.theta_of_point(&p))
    }

    /// A - g(x), accurate when x is large.
    pub fn liouville_complement(&self, x: f64) -> f64 {
        let p = self.point(x);
        self.complement_of_theta(self.theta_of_point(&p))
    }

    /// Point of the exterior where g = X; X must lie in (0, A).
    pub fn liouville_inverse_point(&self, big_x: f64) -> Result<RadialPoint> {
        if !(big_x > 0.0 && big_x < self.width_a) {
            return Err(DsrnError::Domain(format!(
                "Liouville inverse needs 0 < X < A = {}, got {big_x}",
                self.width_a
            )));
        }
        let t = &self.table;
        let k = t.cum.partition_point(|c| *c <= big_x).clamp(1, THETA_PANELS) - 1;
        let (mut lo, mut hi) = (k as f64 * t.step, (k + 1) as f64 * t.step);
        let frac = (big_x - t.cum[k]) / (t.cum[k + 1] - t.cum[k]);
        let mut theta = lo + frac * (hi - lo);
        for _ in 0..100 {
            let f = self.x_of_theta(theta) - big_x;
            if f == 0.0 {
                break;
            }
            if f < 0.0 {
                lo = theta;
            } else {
                hi = theta;
            }
            let mut next = theta - f / self.theta_integrand(theta);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let d = (next - theta).abs();
            theta = next;
            if d <= 2.0 * f64::EPSILON * theta.max(1e-300) {
                break;
            }
        }
        Ok(self.point_of_theta(theta))
    }

    /// h(X), the inverse of the Liouville map.
    pub fn liouville_inverse(&self, big_x: f64) -> Result<f64> {
        let p = self.liouville_inverse_point(big_x)?;
        Ok(self.horizons.x_of_point(&p))
    }

    /// A = int_R a.
    /// Upper bound of a on the exterior.
    pub fn a_max(&self) -> f64 {
        self.maxima[0]
    }

    pub fn b_max(&self) -> f64 {
        self.maxima[1]
    }

    /// |c| is largest at the event horizon.
    pub fn c_abs_max(&self) -> f64 {
        self.asym.c_minus.abs()
    }

    pub fn width_a(&self) -> f64 {
        self.width_a
    }

    /// Truncation point on the left where |z| a + b + |c - c_-| < eps
    /// (and on the right with c_+), found from the horizon asymptotics and
    /// then checked on the actual potentials.
    pub fn tail_cutoffs(&self, z_abs: f64, eps: f64) -> (f64, f64) {
        let tail = |x: f64, left: bool| {
            let s = self.sample(x);
            let c_inf = if left { self.asym.c_minus } else { self.asym.c_plus };
            z_abs * s.a + s.b + (s.c - c_inf).abs()
        };
        let h = &self.horizons;
        let lead_m = z_abs * self.asym.a_minus + self.asym.b_minus + self.asym.cprime_minus.abs();
        let lead_p = z_abs * self.asym.a_plus + self.asym.b_plus + self.asym.cprime_plus.abs();
        let mut x_min = (eps / lead_m.max(1e-300)).ln() / h.kappa_minus();
        let mut x_max = (eps / lead_p.max(1e-300)).ln() / h.kappa_plus();
        x_min = x_min.min(-1.0);
        x_max = x_max.max(1.0);
        while tail(x_min, true) >= eps {
            x_min -= 1.0 / h.kappa_minus();
        }
        while tail(x_max, false) >= eps {
            x_max -= 1.0 / h.kappa_plus();
        }
        (x_min, x_max)
    }

    pub fn summary_json(&self) -> Value {
        json!({
            "horizons": self.horizons.to_json(),
            "asymptotics": self.asym,
            "width_A": self.width_a,
            "beta": self.beta_phase,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> PotentialProfile {
        PotentialProfile::new(&BlackHoleParams::new(1.0, 0.5, 0.05, 0.1, 0.2)).unwrap()
    }

    #[test]
    fn basic_signs_and_ratios() {
        let p = profile();
        for i in -20..=20 {
            let x = 3.0 * i as f64;
            let s = p.sample(x);
            assert!(s.a > 0.0 && s.b >= 0.0);
            assert!((s.b / s.a - 0.1 * s.point.r).abs() < 1e-14);
        }
        assert_eq!(p.asym.c_minus, 0.1 / p.horizons.r_minus());
        assert_eq!(p.asym.c_plus, 0.1 / p.horizons.r_plus());
        let rb = p.asym.b_minus / p.asym.a_minus;
        assert!((rb - 0.1 * p.horizons.r_minus()).abs() < 1e-15);
    }

    #[test]
    fn vanishing_fields() {
        let p = PotentialProfile::new(&BlackHoleParams::new(1.0, 0.5, 0.05, 0.0, 0.0)).unwrap();
        for x in [-30.0, 0.0, 17.0] {
            let (_, b, c) = p.potential_abc(x);
            assert_eq!(b, 0.0);
            assert_eq!(c, 0.0);
            assert_eq!(p.phase_cminus(x), 0.0);
        }
        assert_eq!(p.phase_beta(), 0.0);
        let q0 = PotentialProfile::new(&BlackHoleParams::new(1.0, 0.0, 0.05, 0.1, 0.2)).unwrap();
        assert_eq!(q0.phase_beta(), 0.0);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let p = profile();
        for i in 0..20 {
            let x = -40.0 + 4.3 * i as f64;
            let h = 1e-5;
            let (sp, sm, s) = (p.sample(x + h), p.sample(x - h), p.sample(x));
            let rel = |num: f64, exact: f64| (num - exact).abs() / exact.abs().max(1e-300);
            assert!(rel((sp.a - sm.a) / (2.0 * h), s.a_prime) < 1e-6);
            assert!(rel((sp.b - sm.b) / (2.0 * h), s.b_prime) < 1e-6);
            assert!(((sp.c - sm.c) / (2.0 * h) - s.c_prime).abs() < 1e-6 * s.c_prime.abs() + 1e-10);
            assert!(((sp.phase - sm.phase) / (2.0 * h) - s.c).abs() < 1e-7);
            let dg = (p.liouville_x(x + h) - p.liouville_x(x - h)) / (2.0 * h);
            assert!(rel(dg, s.a) < 1e-7);
        }
    }

    #[test]
    fn liouville_round_trip() {
        let p = profile();
        for i in 0..50 {
            let x = -60.0 + 2.3 * i as f64;
            let back = p.liouville_inverse(p.liouville_x(x)).unwrap();
            assert!((back - x).abs() < 1e-10, "{x} {back}");
        }
        assert!(p.liouville_inverse(0.0).is_err());
        assert!(p.liouville_inverse(p.width_a).is_err());
        let x = 40.0;
        let sum = p.liouville_x(x) + p.liouville_complement(x);
        assert!((sum - p.width_a).abs() < 1e-13);
    }

    #[test]
    fn cutoffs_meet_tail_criterion() {
        let p = profile();
        let (lo, hi) = p.tail_cutoffs(16.0, 1e-12);
        let (a, b, c) = p.potential_abc(lo);
        assert!(16.0 * a + b + (c - p.asym.c_minus).abs() < 1e-12);
        let (a, b, c) = p.potential_abc(hi);
        assert!(16.0 * a + b + (c - p.asym.c_plus).abs() < 1e-12);
    }
}
