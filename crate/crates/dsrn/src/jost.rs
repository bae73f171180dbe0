//! Jost and Faddeev matrices of the reduced radial Dirac system
//!
//!   F' = i Gamma^1 (lambda - W(x, z)) F,   W = [[0, k], [k#, 0]],
//!   k  = e^{2iC^-} [[-ib, za], [-za, ib]],  k# = e^{-2iC^-} [[ib, -za], [za, -ib]],
//!
//! where k# is the analytic continuation in z of k* from the real axis.
//! Both solvers work with Y = e^{-i Gamma^1 lambda x} F, which satisfies
//! Y' = G(x) Y with G = -i e^{-i Gamma^1 lambda x} Gamma^1 W e^{i Gamma^1 lambda x}.
//! G vanishes at both horizons, so Y is constant in the tails.
//!
//! With phi = 2 C^- - 2 lambda x and K = [[-ib, za], [-za, ib]] the two
//! nonzero blocks of G are -i e^{i phi} K (upper right) and -i e^{-i phi} K
//! (lower left).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dirac::{exp_i_gamma1, gamma1, M2, M4};
use crate::error::{DsrnError, Result};
use crate::ode::{integrate, OdeOptions};
use crate::potentials::{PotentialProfile, PotentialSample};
use crate::quadrature::ChebyshevPanel;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Largest |z| accepted without `force`.
pub const MAX_Z: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy)]
pub struct JostOptions {
    /// Local relative tolerance of the ODE integrator.
    pub tol: f64,
    /// Tail criterion |z| a + b + |c - c_inf| < tail_eps at the cutoffs.
    pub tail_eps: f64,
    /// Allow |z| > 64.
    pub force: bool,
    /// Switch the potential off (k = 0); used to test the plumbing.
    pub zero_potential: bool,
    /// Chebyshev nodes per Volterra panel.
    pub panel_nodes: usize,
}

impl Default for JostOptions {
    fn default() -> Self {
        Self { tol: 1e-10, tail_eps: 1e-12, force: false, zero_potential: false, panel_nodes: 24 }
    }
}

/// Hatted Jost matrix sampled at increasing x.
#[derive(Debug, Clone)]
pub struct JostMatrix {
    pub side: Side,
    pub lambda: f64,
    pub z: C,
    pub xs: Vec<f64>,
    /// F-hat at each x
    pub values: Vec<M4>,
    /// Bound on the effect of the neglected tail, exp(tail integral) - 1.
    pub error_estimate: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl JostMatrix {
    /// Faddeev matrix M-hat = F-hat e^{-i Gamma^1 lambda x}.
    pub fn faddeev(&self, i: usize) -> M4 {
        self.values[i] * exp_i_gamma1(-self.lambda * self.xs[i])
    }

    /// Unhatted Jost matrix F = e^{-i Gamma^1 C^-(x)} F-hat.
    pub fn unhatted(&self, i: usize, prof: &PotentialProfile) -> M4 {
        exp_i_gamma1(-prof.phase_cminus(self.xs[i])) * self.values[i]
    }

    /// Y = e^{-i Gamma^1 lambda x} F-hat.
    pub fn interaction(&self, i: usize) -> M4 {
        exp_i_gamma1(-self.lambda * self.xs[i]) * self.values[i]
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

fn check_z(z: C, opts: &JostOptions) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(DsrnError::Invalid(format!("non-finite angular momentum {z}")));
    }
    if z.norm() > MAX_Z && !opts.force {
        return Err(DsrnError::Invalid(format!(
            "|z| = {} exceeds {MAX_Z}; use the asymptotic predictions or force the solve",
            z.norm()
        )));
    }
    Ok(())
}

/// The 2x2 potential block k(x, z).
pub fn reduced_k(s: &PotentialSample, z: C) -> M2 {
    let e = C::new(0.0, 2.0 * s.phase).exp();
    M2::new(C::new(0.0, -s.b), z * s.a, -z * s.a, C::new(0.0, s.b)) * e
}

/// The continuation k#(x, z); equals k(x, z)* for real z.
pub fn reduced_k_sharp(s: &PotentialSample, z: C) -> M2 {
    let e = C::new(0.0, -2.0 * s.phase).exp();
    M2::new(C::new(0.0, s.b), -z * s.a, z * s.a, C::new(0.0, -s.b)) * e
}

/// W(x, z) = [[0, k], [k#, 0]].
pub fn reduced_w(s: &PotentialSample, z: C) -> M4 {
    let k = reduced_k(s, z);
    let ks = reduced_k_sharp(s, z);
    let mut w = M4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            w[(i, j + 2)] = k[(i, j)];
            w[(i + 2, j)] = ks[(i, j)];
        }
    }
    w
}

/// Right-hand side i Gamma^1 (lambda - W) F of the hatted system.
pub fn dirac_rhs(prof: &PotentialProfile, lambda: f64, z: C, x: f64, f: &M4) -> M4 {
    let s = prof.sample(x);
    let w = reduced_w(&s, z);
    let a = (M4::identity() * C::new(lambda, 0.0) - w) * f;
    gamma1() * a * I
}

// K and e^{i phi} at one point
#[derive(Clone, Copy)]
struct Coupling {
    k: [C; 4],
    e: C,
}

fn coupling(prof: &PotentialProfile, lambda: f64, z: C, x: f64) -> Coupling {
    let s = prof.sample(x);
    Coupling {
        k: [C::new(0.0, -s.b), z * s.a, -z * s.a, C::new(0.0, s.b)],
        e: C::new(0.0, 2.0 * s.phase - 2.0 * lambda * x).exp(),
    }
}

// G Y for Y in row-major [C; 16]
fn apply_g(cp: &Coupling, y: &[C; 16], out: &mut [C; 16]) {
    let ur = -I * cp.e;
    let ll = -I * cp.e.conj();
    let k = &cp.k;
    for col in 0..4 {
        let y0 = y[col];
        let y1 = y[4 + col];
        let y2 = y[8 + col];
        let y3 = y[12 + col];
        out[col] = ur * (k[0] * y2 + k[1] * y3);
        out[4 + col] = ur * (k[2] * y2 + k[3] * y3);
        out[8 + col] = ll * (k[0] * y0 + k[1] * y1);
        out[12 + col] = ll * (k[2] * y0 + k[3] * y1);
    }
}

fn to_m4(y: &[C; 16]) -> M4 {
    M4::from_row_slice(y)
}

fn tail_integral(prof: &PotentialProfile, z: C, x: f64, side: Side) -> f64 {
    let s = prof.sample(x);
    let kappa = match side {
        Side::Right => prof.horizons.kappa_minus(),
        Side::Left => -prof.horizons.kappa_plus(),
    };
    (z.norm() * s.a + s.b) / kappa
}

/// Cutoffs (x_min, x_max) meeting the tail criterion for this z.
pub fn cutoffs(prof: &PotentialProfile, z: C, opts: &JostOptions) -> (f64, f64) {
    prof.tail_cutoffs(z.norm().max(1.0), opts.tail_eps)
}

/// Hatted Jost solution by adaptive RKF7(8) integration from the cutoff,
/// sampled at `points` (any order, inside the cutoffs).
pub fn jost_ode(
    side: Side,
    lambda: f64,
    z: C,
    prof: &PotentialProfile,
    points: &[f64],
    opts: &JostOptions,
) -> Result<JostMatrix> {
    check_z(z, opts)?;
    if !(opts.tol >= 1e-13 && opts.tol <= 1e-6) {
        return Err(DsrnError::Invalid(format!("tolerance {} outside [1e-13, 1e-6]", opts.tol)));
    }
    let (x_min, x_max) = cutoffs(prof, z, opts);
    let mut xs: Vec<f64> = points.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if let (Some(first), Some(last)) = (xs.first(), xs.last()) {
        if *first < x_min || *last > x_max {
            return Err(DsrnError::Domain(format!(
                "sample points must lie in the truncated line [{x_min}, {x_max}]"
            )));
        }
    }
    // the Fehlberg estimate is nearly blind where G Y hardly depends on Y
    // (the tails), so the step is also capped at about one radian of phase
    let freq = 2.0 * lambda.abs() + 2.0 * prof.c_abs_max() + z.norm() * prof.a_max() + prof.b_max();
    let ode_opts = OdeOptions {
        rtol: opts.tol,
        h_max: (1.0 / freq).min(1.0),
        h_init: (0.25 / freq).min(0.25),
        ..Default::default()
    };
    let mut y0 = [ZERO; 16];
    for i in 0..4 {
        y0[5 * i] = C::new(1.0, 0.0);
    }
    let zero_pot = opts.zero_potential;
    let rhs = |x: f64, y: &[C; 16], dy: &mut [C; 16]| {
        if zero_pot {
            *dy = [ZERO; 16];
        } else {
            apply_g(&coupling(prof, lambda, z, x), y, dy);
        }
    };
    let (x0, targets): (f64, Vec<f64>) = match side {
        Side::Right => (x_min, xs.clone()),
        Side::Left => (x_max, xs.iter().rev().cloned().collect()),
    };
    let (ys, _) = integrate(rhs, x0, y0, &targets, &ode_opts)?;
    let mut values: Vec<M4> = ys.iter().zip(&targets).map(|(y, &x)| exp_i_gamma1(lambda * x) * to_m4(y)).collect();
    if side == Side::Left {
        values.reverse();
    }
    let tail = tail_integral(prof, z, if side == Side::Right { x_min } else { x_max }, side);
    Ok(JostMatrix { side, lambda, z, xs, values, error_estimate: tail.exp_m1(), x_min, x_max })
}

/// F-hat_R by the ODE path.
pub fn faddeev_right_ode(lambda: f64, z: C, prof: &PotentialProfile, tol: f64, points: &[f64]) -> Result<JostMatrix> {
    jost_ode(Side::Right, lambda, z, prof, points, &JostOptions { tol, ..Default::default() })
}

/// F-hat_L by the ODE path (integrated backwards from x_max).
pub fn jost_left(lambda: f64, z: C, prof: &PotentialProfile, tol: f64, points: &[f64]) -> Result<JostMatrix> {
    jost_ode(Side::Left, lambda, z, prof, points, &JostOptions { tol, ..Default::default() })
}

/// Panel breakpoints on [x_min, x_max] fine enough for the Volterra solver.
pub fn volterra_grid(prof: &PotentialProfile, lambda: f64, z: C, opts: &JostOptions) -> Vec<f64> {
    let (x_min, x_max) = cutoffs(prof, z, opts);
    let mut grid = vec![x_min];
    let mut x = x_min;
    while x < x_max {
        let w = panel_width(prof, lambda, z, x);
        let w = w.min(panel_width(prof, lambda, z, (x + w).min(x_max)));
        x = (x + w).min(x_max);
        if x_max - x < 1e-9 {
            x = x_max;
        }
        grid.push(x);
    }
    grid
}

fn panel_width(prof: &PotentialProfile, lambda: f64, z: C, x: f64) -> f64 {
    let s = prof.sample(x);
    let omega = 2.0 * (s.c - lambda).abs() + z.norm() * s.a + s.b;
    (8.0 / omega.max(1e-12)).min(2.0)
}

/// Hatted Jost solution from the Volterra series of the Faddeev matrix,
/// summed iterate by iterate on Chebyshev panels. Returns F-hat at the
/// points of `x_grid` (increasing). Gaps wider than the local oscillation
/// scale are subdivided internally.
pub fn faddeev_volterra(
    side: Side,
    lambda: f64,
    z: C,
    x_grid: &[f64],
    prof: &PotentialProfile,
    opts: &JostOptions,
) -> Result<JostMatrix> {
    check_z(z, opts)?;
    if x_grid.len() < 2 || x_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(DsrnError::Invalid("x_grid must be strictly increasing with at least two points".into()));
    }
    let x_min = x_grid[0];
    let x_max = x_grid[x_grid.len() - 1];
    let end = if side == Side::Right { x_min } else { x_max };
    let es = prof.sample(end);
    let c_inf = if side == Side::Right { prof.asym.c_minus } else { prof.asym.c_plus };
    let tail_val = z.norm() * es.a + es.b + (es.c - c_inf).abs();
    if tail_val >= opts.tail_eps && !opts.zero_potential {
        return Err(DsrnError::Truncation(format!(
            "tail criterion {tail_val:e} >= {:e} at x = {end}",
            opts.tail_eps
        )));
    }

    // panels
    let mut edges = vec![x_min];
    let mut keep = vec![0usize];
    for w in x_grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let width = panel_width(prof, lambda, z, a).min(panel_width(prof, lambda, z, b));
        let m = ((b - a) / width).ceil().max(1.0) as usize;
        for j in 1..=m {
            edges.push(if j == m { b } else { a + (b - a) * j as f64 / m as f64 });
        }
        keep.push(edges.len() - 1);
    }
    let cheb = ChebyshevPanel::new(opts.panel_nodes);
    let np = cheb.len();
    let n_panels = edges.len() - 1;
    // node data: each panel carries its own copy of the shared endpoints
    let node_x: Vec<f64> = (0..n_panels)
        .flat_map(|p| {
            let (a, b) = (edges[p], edges[p + 1]);
            cheb.nodes.iter().map(move |t| 0.5 * (a + b) + 0.5 * (b - a) * t).collect::<Vec<_>>()
        })
        .collect();
    let cps: Vec<Coupling> = if opts.zero_potential {
        node_x.iter().map(|_| Coupling { k: [ZERO; 4], e: C::new(1.0, 0.0) }).collect()
    } else {
        node_x.par_iter().map(|&x| coupling(prof, lambda, z, x)).collect()
    };
    let n_nodes = node_x.len();
    let total_w: Vec<f64> = cheb.cumulative[np - 1].clone();

    // iterate as two 2x2 blocks (P, Q), row-major; even iterates are
    // diag(P, Q), odd ones [[0, P], [Q, 0]]; both map by P' = int G_ur Q,
    // Q' = int G_ll P
    let mut p_blk = vec![[ZERO; 4]; n_nodes];
    let mut q_blk = vec![[ZERO; 4]; n_nodes];
    for i in 0..n_nodes {
        p_blk[i] = [C::new(1.0, 0.0), ZERO, ZERO, C::new(1.0, 0.0)];
        q_blk[i] = p_blk[i];
    }
    let mut sum_even = (p_blk.clone(), q_blk.clone());
    let mut sum_odd = (vec![[ZERO; 4]; n_nodes], vec![[ZERO; 4]; n_nodes]);
    let mul = |a: &[C; 4], b: &[C; 4]| -> [C; 4] {
        [a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]]
    };
    let mut norms = Vec::new();
    let mut fp = vec![[ZERO; 4]; n_nodes];
    let mut fq = vec![[ZERO; 4]; n_nodes];
    let mut converged = false;
    for iter in 1..=20_000usize {
        for i in 0..n_nodes {
            let cp = &cps[i];
            let ur = -I * cp.e;
            let ll = -I * cp.e.conj();
            let kq = mul(&cp.k, &q_blk[i]);
            let kp = mul(&cp.k, &p_blk[i]);
            fp[i] = [ur * kq[0], ur * kq[1], ur * kq[2], ur * kq[3]];
            fq[i] = [ll * kp[0], ll * kp[1], ll * kp[2], ll * kp[3]];
        }
        let mut carry_p = [ZERO; 4];
        let mut carry_q = [ZERO; 4];
        let panel_order: Vec<usize> = match side {
            Side::Right => (0..n_panels).collect(),
            Side::Left => (0..n_panels).rev().collect(),
        };
        for p in panel_order {
            let half = 0.5 * (edges[p + 1] - edges[p]);
            let base = p * np;
            for i in 0..np {
                let row = &cheb.cumulative[i];
                let mut ap = [ZERO; 4];
                let mut aq = [ZERO; 4];
                for j in 0..np {
                    let wgt = match side {
                        Side::Right => row[j],
                        Side::Left => -(total_w[j] - row[j]),
                    };
                    if wgt == 0.0 {
                        continue;
                    }
                    let (sp, sq) = (&fp[base + j], &fq[base + j]);
                    for c in 0..4 {
                        ap[c] += sp[c] * wgt;
                        aq[c] += sq[c] * wgt;
                    }
                }
                for c in 0..4 {
                    p_blk[base + i][c] = carry_p[c] + ap[c] * half;
                    q_blk[base + i][c] = carry_q[c] + aq[c] * half;
                }
            }
            let edge = match side {
                Side::Right => base + np - 1,
                Side::Left => base,
            };
            carry_p = p_blk[edge];
            carry_q = q_blk[edge];
        }
        {
            let target = if iter % 2 == 0 { &mut sum_even } else { &mut sum_odd };
            for i in 0..n_nodes {
                for c in 0..4 {
                    target.0[i][c] += p_blk[i][c];
                    target.1[i][c] += q_blk[i][c];
                }
            }
        }
        let mut worst = 0.0f64;
        let mut peak = 0.0f64;
        let cmax = |v: &[C; 4]| v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for i in 0..n_nodes {
            let it = cmax(&p_blk[i]).max(cmax(&q_blk[i]));
            let tot = cmax(&sum_even.0[i]).max(cmax(&sum_even.1[i])).max(cmax(&sum_odd.0[i])).max(cmax(&sum_odd.1[i]));
            worst = worst.max(it / tot.max(1.0));
            peak = peak.max(it);
        }
        norms.push(peak);
        if !peak.is_finite() {
            break;
        }
        if worst < 1e-16 {
            converged = true;
            break;
        }
    }
    if !converged {
        let tail: Vec<f64> = norms.iter().rev().take(8).cloned().collect();
        return Err(DsrnError::NumericalFailure { message: "Volterra series did not converge".into(), norms: tail });
    }

    // read off at the requested grid points (panel end nodes)
    let mut xs = Vec::with_capacity(keep.len());
    let mut values = Vec::with_capacity(keep.len());
    for (g, &e) in keep.iter().enumerate() {
        let node = if e == 0 { 0 } else { (e - 1) * np + np - 1 };
        let (pe, qe) = (&sum_even.0[node], &sum_even.1[node]);
        let (po, qo) = (&sum_odd.0[node], &sum_odd.1[node]);
        #[rustfmt::skip]
        let y = M4::new(
            pe[0], pe[1], po[0], po[1],
            pe[2], pe[3], po[2], po[3],
            qo[0], qo[1], qe[0], qe[1],
            qo[2], qo[3], qe[2], qe[3],
        );
        let x = x_grid[g];
        xs.push(x);
        values.push(exp_i_gamma1(lambda * x) * y);
    }
    let tail = tail_integral(prof, z, end, side);
    Ok(JostMatrix { side, lambda, z, xs, values, error_estimate: tail.exp_m1(), x_min, x_max })
}

/// F-hat_R from the Volterra series.
pub fn faddeev_right_volterra(lambda: f64, z: C, x_grid: &[f64], prof: &PotentialProfile) -> Result<JostMatrix> {
    faddeev_volterra(Side::Right, lambda, z, x_grid, prof, &JostOptions::default())
}

/// Coupling coefficients c1..c4 of the second-order equations for the
/// components of the Jost matrices.
pub fn coupling_coeffs(x: f64, lambda: f64, z: C, prof: &PotentialProfile) -> Result<[C; 4]> {
    let s = prof.sample(x);
    let (a, b, ap, bp) = (s.a, s.b, s.a_prime, s.b_prime);
    let den = z * z * (a * a) + b * b;
    if den.norm() <= 1e-300 || den.norm() <= 1e-14 * (z.norm_sqr() * a * a + b * b) {
        return Err(DsrnError::Pole(format!("z^2 a^2 + b^2 vanishes at x = {x}, z = {z}")));
    }
    let num1 = a * a * b * bp - ap * a * b * b;
    let num2 = -a * bp + ap * b;
    let c1 = num1 / (den * (a * a));
    let c2 = -I * z * num2 / den;
    let cl = s.c - lambda;
    let c3 = I * cl * c1;
    let c4 = z * num2 * cl / den;
    Ok([c1, c2, c3, c4])
}

/// q(X, lambda) of the Sturm-Liouville form in the Liouville variable,
/// with x-derivatives taken at h(X).
pub fn liouville_potential_q(big_x: f64, lambda: f64, prof: &PotentialProfile) -> Result<C> {
    let p = prof.liouville_inverse_point(big_x)?;
    let x = prof.horizons.x_of_point(&p);
    let s = prof.sample_at(x, p);
    Ok(liouville_q_at(&s, lambda))
}

pub fn liouville_q_at(s: &PotentialSample, lambda: f64) -> C {
    let cl = s.c - lambda;
    let a2 = s.a * s.a;
    C::new((cl * cl - s.b * s.b) / a2, s.c_prime / a2 - cl * s.a_prime / (a2 * s.a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::max_abs4;
    use crate::geometry::BlackHoleParams;

    fn profile() -> PotentialProfile {
        PotentialProfile::new(&BlackHoleParams::new(1.0, 0.5, 0.05, 0.1, 0.2)).unwrap()
    }

    #[test]
    fn zero_potential_gives_free_solution() {
        let p = profile();
        let opts = JostOptions { zero_potential: true, ..Default::default() };
        let grid: Vec<f64> = (0..11).map(|k| -50.0 + 10.0 * k as f64).collect();
        let j = faddeev_volterra(Side::Right, 1.0, C::new(2.0, 0.0), &grid, &p, &opts).unwrap();
        for i in 0..j.len() {
            assert!(max_abs4(&(j.faddeev(i) - M4::identity())) < 1e-15);
            assert!(max_abs4(&(j.interaction(i) - M4::identity())) < 1e-15);
        }
    }

    #[test]
    fn k_sharp_is_adjoint_for_real_z() {
        let p = profile();
        let s = p.sample(1.3);
        let z = C::new(3.0, 0.0);
        let d = reduced_k_sharp(&s, z) - reduced_k(&s, z).adjoint();
        assert!(d.iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn coupling_vanishes_without_mass_and_at_resonant_energy() {
        let p0 = PotentialProfile::new(&BlackHoleParams::new(1.0, 0.5, 0.05, 0.0, 0.0)).unwrap();
        for c in coupling_coeffs(0.7, 1.0, C::new(3.0, 0.0), &p0).unwrap() {
            assert_eq!(c, C::new(0.0, 0.0));
        }
        let p = profile();
        let s = p.sample(0.7);
        let c = coupling_coeffs(0.7, s.c, C::new(3.0, 0.0), &p).unwrap();
        assert_eq!(c[2], C::new(0.0, 0.0));
        assert_eq!(c[3], C::new(0.0, 0.0));
    }

    #[test]
    fn refuses_large_z() {
        let p = profile();
        assert!(faddeev_right_ode(1.0, C::new(65.0, 0.0), &p, 1e-10, &[0.0]).is_err());
        assert!(faddeev_right_ode(1.0, C::new(2.0, 0.0), &p, 1e-3, &[0.0]).is_err());
    }
}
