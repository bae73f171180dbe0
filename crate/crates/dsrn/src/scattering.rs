//! Scattering-data matrices and partial-wave S-matrices.
//!
//! A_L is read off the pairing Gamma^1 F_R(z*)^* Gamma^1 F_L(z), which is
//! x-independent, at points in the middle half of the truncated line.
//! A_R is the boundary value e^{-i Gamma^1 lambda x} F_R(x) at the right
//! cutoff. For real z these are tied by A_R = Gamma^1 A_L^* Gamma^1.
//!
//! The blocks of both matrices grow like e^{|z| A}, so relation residuals
//! are reported twice: absolute, and divided by the natural scale of the
//! products involved (see [`RelationResiduals`]).

use std::collections::BTreeMap;

use nalgebra::Matrix4;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dirac::{block, exp_i_gamma1, from_blocks, gamma1, max_abs2, max_abs4, M2, M4};
use crate::error::{DsrnError, Result};
use crate::jost::{cutoffs, faddeev_volterra, jost_ode, volterra_grid, JostMatrix, JostOptions, Side};
use crate::potentials::PotentialProfile;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    #[default]
    Ode,
    Volterra,
}

/// How A_L is obtained for the reflection blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Extraction {
    /// Wronskian with F_R averaged over the extraction points.
    #[default]
    Wronskian,
    /// e^{-i Gamma^1 lambda x_min} F-hat_L(x_min); one integration instead of two.
    Boundary,
}

#[derive(Debug, Clone, Copy)]
pub struct ScatteringOptions {
    pub jost: JostOptions,
    pub solver: Solver,
    pub extraction: Extraction,
    /// Number of extraction points for A_L.
    pub eval_points: usize,
    /// Relative x_spread above which extraction fails.
    pub spread_threshold: f64,
}

impl Default for ScatteringOptions {
    fn default() -> Self {
        Self { jost: JostOptions::default(), solver: Solver::Ode, extraction: Extraction::Wronskian, eval_points: 10, spread_threshold: 1e-7 }
    }
}

#[derive(Debug, Clone)]
pub struct ScatteringData {
    pub lambda: f64,
    pub z: C,
    pub al: M4,
    pub ar: M4,
    /// max_k |A_L(x_k) - mean| / max(1, |A_L|), entrywise sup norm
    pub x_spread: f64,
    /// absolute x_spread
    pub x_spread_abs: f64,
    pub eval_points: Vec<f64>,
}

/// Residual of one relation: absolute and scale-normalized.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residual {
    pub abs: f64,
    pub rel: f64,
}

impl Residual {
    fn new(abs: f64, scale: f64) -> Self {
        Self { abs, rel: abs / scale.max(1.0) }
    }
}

/// Residuals of the algebraic relations between the blocks of A_L, A_R.
/// The normalizing scale is the sup norm of the products involved.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RelationResiduals {
    /// A_R2 + A_L3^*
    pub r2_l3: Residual,
    /// A_R3 + A_L2^*
    pub r3_l2: Residual,
    /// A_L1 - A_R1^*
    pub l1_r1: Residual,
    /// A_R4 - A_L4^*
    pub r4_l4: Residual,
    /// A_L1^* A_L1 - I - A_L3^* A_L3
    pub pseudo_unitary: Residual,
    /// A_L1 A_R1 + A_L2 A_R3 - I
    pub inverse_left: Residual,
    /// A_R1 A_L1 + A_R2 A_L3 - I
    pub inverse_right: Residual,
    /// A_R - Gamma^1 A_L^* Gamma^1
    pub ar_consistency: Residual,
}

impl RelationResiduals {
    /// Largest normalized residual.
    pub fn max_rel(&self) -> f64 {
        self.all().iter().map(|r| r.rel).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.all().iter().map(|r| r.abs).fold(0.0, f64::max)
    }

    fn all(&self) -> [Residual; 8] {
        [
            self.r2_l3,
            self.r3_l2,
            self.l1_r1,
            self.r4_l4,
            self.pseudo_unitary,
            self.inverse_left,
            self.inverse_right,
            self.ar_consistency,
        ]
    }
}

impl ScatteringData {
    pub fn al_block(&self, k: usize) -> M2 {
        block(&self.al, k)
    }

    pub fn ar_block(&self, k: usize) -> M2 {
        block(&self.ar, k)
    }

    /// Relation residuals; meaningful for real z.
    pub fn relation_residuals(&self) -> RelationResiduals {
        let l: [M2; 4] = [1, 2, 3, 4].map(|k| self.al_block(k));
        let r: [M2; 4] = [1, 2, 3, 4].map(|k| self.ar_block(k));
        let sl = max_abs4(&self.al);
        let sr = max_abs4(&self.ar);
        let id = M2::identity();
        let res = |m: M2, scale: f64| Residual::new(max_abs2(&m), scale);
        let g = gamma1();
        RelationResiduals {
            r2_l3: res(r[1] + l[2].adjoint(), sl.max(sr)),
            r3_l2: res(r[2] + l[1].adjoint(), sl.max(sr)),
            l1_r1: res(l[0] - r[0].adjoint(), sl.max(sr)),
            r4_l4: res(r[3] - l[3].adjoint(), sl.max(sr)),
            pseudo_unitary: res(l[0].adjoint() * l[0] - id - l[2].adjoint() * l[2], sl * sl),
            inverse_left: res(l[0] * r[0] + l[1] * r[2] - id, sl * sr),
            inverse_right: res(r[0] * l[0] + r[1] * l[2] - id, sl * sr),
            ar_consistency: Residual::new(max_abs4(&(self.ar - g * self.al.adjoint() * g)), sl.max(sr)),
        }
    }
}

/// Extraction points: `count` equispaced points over the middle half of
/// [x_min, x_max].
pub fn extraction_points(x_min: f64, x_max: f64, count: usize) -> Vec<f64> {
    let w = x_max - x_min;
    if count == 1 {
        return vec![x_min + 0.5 * w];
    }
    (0..count).map(|k| x_min + w * (0.25 + 0.5 * k as f64 / (count - 1) as f64)).collect()
}

/// A_L from Jost matrices sampled at common points: the pairing is
/// evaluated at every point of `eval_points` (which must be among the
/// samples of both) and averaged.
pub fn matrix_al(
    lambda: f64,
    z: C,
    f_r_conj: &JostMatrix,
    f_l: &JostMatrix,
    eval_points: &[f64],
    f_r_boundary: M4,
    threshold: f64,
) -> Result<ScatteringData> {
    if eval_points.is_empty() {
        return Err(DsrnError::Invalid("no evaluation points".into()));
    }
    let g = gamma1();
    let find = |j: &JostMatrix, x: f64| -> Result<M4> {
        j.xs.iter()
            .position(|&t| t == x)
            .map(|i| j.values[i])
            .ok_or_else(|| DsrnError::Invalid(format!("x = {x} is not a sample point of the Jost matrix")))
    };
    let mut samples = Vec::with_capacity(eval_points.len());
    for &x in eval_points {
        let fr = find(f_r_conj, x)?;
        let fl = find(f_l, x)?;
        samples.push(g * fr.adjoint() * g * fl);
    }
    let mut mean = M4::zeros();
    for s in &samples {
        mean += s;
    }
    mean /= C::new(samples.len() as f64, 0.0);
    let spread_abs = samples.iter().map(|s| max_abs4(&(s - mean))).fold(0.0, f64::max);
    let spread = spread_abs / max_abs4(&mean).max(1.0);
    if spread > threshold || !spread.is_finite() {
        return Err(DsrnError::ExtractionInconsistency { spread, threshold });
    }
    Ok(ScatteringData {
        lambda,
        z,
        al: mean,
        ar: f_r_boundary,
        x_spread: spread,
        x_spread_abs: spread_abs,
        eval_points: eval_points.to_vec(),
    })
}

/// Jost solution at `points` with the solver chosen in `opts`.
pub fn jost_solution(
    side: Side,
    lambda: f64,
    z: C,
    prof: &PotentialProfile,
    points: &[f64],
    opts: &ScatteringOptions,
) -> Result<JostMatrix> {
    match opts.solver {
        Solver::Ode => jost_ode(side, lambda, z, prof, points, &opts.jost),
        Solver::Volterra => {
            let mut grid = volterra_grid(prof, lambda, z, &opts.jost);
            grid.extend_from_slice(points);
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
            grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * (1.0 + b.abs()));
            // keep the requested points exactly
            for &p in points {
                if let Some(g) = grid.iter_mut().find(|g| (**g - p).abs() < 1e-9 * (1.0 + p.abs())) {
                    *g = p;
                }
            }
            let mut j = faddeev_volterra(side, lambda, z, &grid, prof, &opts.jost)?;
            let keep: Vec<usize> = (0..j.xs.len()).filter(|&i| points.contains(&j.xs[i])).collect();
            j.values = keep.iter().map(|&i| j.values[i]).collect();
            j.xs = keep.iter().map(|&i| j.xs[i]).collect();
            Ok(j)
        }
    }
}

/// A_L and A_R at (lambda, z).
pub fn scattering_data(lambda: f64, z: C, prof: &PotentialProfile, opts: &ScatteringOptions) -> Result<ScatteringData> {
    let (x_min, x_max) = cutoffs(prof, z, &opts.jost);
    let pts = extraction_points(x_min, x_max, opts.eval_points);
    let mut with_end = pts.clone();
    with_end.push(x_max);
    let fl = jost_solution(Side::Left, lambda, z, prof, &pts, opts)?;
    let fr = jost_solution(Side::Right, lambda, z, prof, &with_end, opts)?;
    let end = fr.values[fr.len() - 1];
    let ar = exp_i_gamma1(-lambda * x_max) * end;
    if z.im == 0.0 {
        matrix_al(lambda, z, &fr, &fl, &pts, ar, opts.spread_threshold)
    } else {
        let frc = jost_solution(Side::Right, lambda, z.conj(), prof, &pts, opts)?;
        matrix_al(lambda, z, &frc, &fl, &pts, ar, opts.spread_threshold)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PartialWaveSMatrix {
    #[serde(serialize_with = "ser_m2")]
    pub t_l: M2,
    #[serde(serialize_with = "ser_m2")]
    pub t_r: M2,
    #[serde(serialize_with = "ser_m2")]
    pub l: M2,
    #[serde(serialize_with = "ser_m2")]
    pub r: M2,
    pub hatted: bool,
    pub lambda: f64,
    pub z: C,
    /// singular values of A_L1, largest first
    pub al1_singular_values: [f64; 2],
    /// |A_L3 A_L1^{-1} + A_R4^{-1} A_R3|, the two forms of L
    pub l_forms_residual: f64,
}

fn ser_m2<S: serde::Serializer>(m: &M2, s: S) -> std::result::Result<S::Ok, S::Error> {
    m2_pairs(m).serialize(s)
}

/// Row-major [[re, im]; 4].
pub fn m2_pairs(m: &M2) -> Vec<[f64; 2]> {
    vec![
        [m[(0, 0)].re, m[(0, 0)].im],
        [m[(0, 1)].re, m[(0, 1)].im],
        [m[(1, 0)].re, m[(1, 0)].im],
        [m[(1, 1)].re, m[(1, 1)].im],
    ]
}

fn singular_values(m: &M2) -> [f64; 2] {
    let sv = m.singular_values();
    [sv[0].max(sv[1]), sv[0].min(sv[1])]
}

fn invert(m: &M2, what: &str, z: C) -> Result<M2> {
    let sv = singular_values(m);
    if !(sv[1] > 1e-14 * sv[0]) {
        return Err(DsrnError::Pole(format!(
            "{what} is singular at z = {z}: singular values {:e}, {:e}",
            sv[0], sv[1]
        )));
    }
    m.try_inverse().ok_or_else(|| DsrnError::Pole(format!("{what} is singular at z = {z}")))
}

impl PartialWaveSMatrix {
    /// S = [[T_L, R], [L, T_R]].
    pub fn full(&self) -> M4 {
        from_blocks(&self.t_l, &self.r, &self.l, &self.t_r)
    }

    /// |S^* S - I|, entrywise sup.
    pub fn unitarity_residual(&self) -> f64 {
        let s = self.full();
        max_abs4(&(s.adjoint() * s - Matrix4::identity()))
    }

    pub fn to_json(&self, x_spread: f64) -> Value {
        json!({
            "lambda": self.lambda,
            "n": if self.z.im == 0.0 { json!(self.z.re) } else { json!([self.z.re, self.z.im]) },
            "hatted": self.hatted,
            "blocks": {
                "TL": m2_pairs(&self.t_l),
                "R": m2_pairs(&self.r),
                "L": m2_pairs(&self.l),
                "TR": m2_pairs(&self.t_r),
            },
            "residuals": {
                "unitarity": self.unitarity_residual(),
                "x_spread": x_spread,
            },
        })
    }

    /// One CSV row: lambda, z, then re/im of TL, R, L, TR row-major.
    pub fn csv_record(&self) -> Vec<String> {
        let mut out = vec![format!("{:.16e}", self.lambda), format!("{:.16e}", self.z.re), format!("{:.16e}", self.z.im)];
        for m in [&self.t_l, &self.r, &self.l, &self.t_r] {
            for p in m2_pairs(m) {
                out.push(format!("{:.16e}", p[0]));
                out.push(format!("{:.16e}", p[1]));
            }
        }
        out
    }

    pub fn csv_header() -> Vec<String> {
        let mut h = vec!["lambda".to_string(), "z_re".into(), "z_im".into()];
        for b in ["TL", "R", "L", "TR"] {
            for e in ["11", "12", "21", "22"] {
                h.push(format!("{b}{e}_re"));
                h.push(format!("{b}{e}_im"));
            }
        }
        h
    }
}

/// Hatted S-matrix blocks: T_L = A_L1^{-1}, T_R = A_R4^{-1},
/// L = A_L3 A_L1^{-1}, R = -A_L1^{-1} A_L2.
pub fn smatrix_hat(data: &ScatteringData) -> Result<PartialWaveSMatrix> {
    let l1 = data.al_block(1);
    let t_l = invert(&l1, "A_L1", data.z)?;
    let t_r = invert(&data.ar_block(4), "A_R4", data.z)?;
    let l = data.al_block(3) * t_l;
    let r = -(t_l * data.al_block(2));
    let l_alt = -(t_r * data.ar_block(3));
    Ok(PartialWaveSMatrix {
        t_l,
        t_r,
        l,
        r,
        hatted: true,
        lambda: data.lambda,
        z: data.z,
        al1_singular_values: singular_values(&l1),
        l_forms_residual: max_abs2(&(l - l_alt)),
    })
}

/// Physical S-matrix [[e^{-i beta} T_L, e^{-2 i beta} R], [L, e^{-i beta} T_R]].
pub fn smatrix_physical(hat: &PartialWaveSMatrix, beta: f64) -> Result<PartialWaveSMatrix> {
    if !hat.hatted {
        return Err(DsrnError::Invalid("smatrix_physical expects a hatted S-matrix".into()));
    }
    let e1 = C::new(0.0, -beta).exp();
    let e2 = C::new(0.0, -2.0 * beta).exp();
    Ok(PartialWaveSMatrix { t_l: hat.t_l * e1, t_r: hat.t_r * e1, r: hat.r * e2, hatted: false, ..hat.clone() })
}

/// Physical S-matrix at integer n.
pub fn partial_wave_smatrix(lambda: f64, n: u32, prof: &PotentialProfile, opts: &ScatteringOptions) -> Result<(PartialWaveSMatrix, ScatteringData)> {
    let data = scattering_data(lambda, C::new(n as f64, 0.0), prof, opts)?;
    let hat = smatrix_hat(&data)?;
    Ok((smatrix_physical(&hat, prof.phase_beta())?, data))
}

/// Reflection blocks L(lambda, n) for every n of `n_set`; L carries no
/// phase, so hatted and physical agree.
pub fn reflection_l(lambda: f64, n_set: &[u32], prof: &PotentialProfile) -> Result<BTreeMap<u32, M2>> {
    reflection_l_with(lambda, n_set, prof, &ScatteringOptions::default())
}

/// A_L read off F_L at the left cutoff, where F_R is free.
pub fn al_boundary(lambda: f64, z: C, prof: &PotentialProfile, opts: &ScatteringOptions) -> Result<M4> {
    let (x_min, _) = cutoffs(prof, z, &opts.jost);
    let fl = jost_solution(Side::Left, lambda, z, prof, &[x_min], opts)?;
    Ok(fl.interaction(0))
}

// hatted (L, R) from A_L alone
fn reflections(lambda: f64, n: u32, prof: &PotentialProfile, opts: &ScatteringOptions) -> Result<(M2, M2)> {
    let z = C::new(n as f64, 0.0);
    let al = match opts.extraction {
        Extraction::Wronskian => scattering_data(lambda, z, prof, opts)?.al,
        Extraction::Boundary => al_boundary(lambda, z, prof, opts)?,
    };
    let t_l = invert(&block(&al, 1), "A_L1", z)?;
    Ok((block(&al, 3) * t_l, -(t_l * block(&al, 2))))
}

pub fn reflection_l_with(
    lambda: f64,
    n_set: &[u32],
    prof: &PotentialProfile,
    opts: &ScatteringOptions,
) -> Result<BTreeMap<u32, M2>> {
    if n_set.is_empty() {
        return Err(DsrnError::Invalid("empty angular momentum set".into()));
    }
    let results: Vec<(u32, Result<M2>)> = n_set
        .par_iter()
        .map(|&n| {
            let r = reflections(lambda, n, prof, opts).map(|(l, _)| l);
            (n, r)
        })
        .collect();
    let mut out = BTreeMap::new();
    for (n, r) in results {
        match r {
            Ok(l) => {
                out.insert(n, l);
            }
            Err(e) => return Err(DsrnError::NumericalFailure { message: format!("n = {n}: {e}"), norms: vec![] }),
        }
    }
    Ok(out)
}

/// Reflection blocks R(lambda, n), physical (carrying e^{-2 i beta}).
pub fn reflection_r(lambda: f64, n_set: &[u32], prof: &PotentialProfile, opts: &ScatteringOptions) -> Result<BTreeMap<u32, M2>> {
    if n_set.is_empty() {
        return Err(DsrnError::Invalid("empty angular momentum set".into()));
    }
    let beta = prof.phase_beta();
    let results: Vec<(u32, Result<M2>)> = n_set
        .par_iter()
        .map(|&n| {
            let r = reflections(lambda, n, prof, opts).map(|(_, r)| r * C::new(0.0, -2.0 * beta).exp());
            (n, r)
        })
        .collect();
    let mut out = BTreeMap::new();
    for (n, r) in results {
        out.insert(n, r.map_err(|e| DsrnError::NumericalFailure { message: format!("n = {n}: {e}"), norms: vec![] })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BlackHoleParams;

    fn profile() -> PotentialProfile {
        PotentialProfile::new(&BlackHoleParams::new(1.0, 0.5, 0.05, 0.1, 0.2)).unwrap()
    }

    #[test]
    fn zero_potential_gives_identity() {
        let p = profile();
        let opts = ScatteringOptions {
            jost: JostOptions { zero_potential: true, ..Default::default() },
            ..Default::default()
        };
        let d = scattering_data(0.5, C::new(3.0, 0.0), &p, &opts).unwrap();
        assert!(max_abs4(&(d.al - M4::identity())) < 1e-14);
        assert!(max_abs4(&(d.ar - M4::identity())) < 1e-14);
        let s = smatrix_hat(&d).unwrap();
        assert!(max_abs2(&s.l) < 1e-14);
    }

    #[test]
    fn extraction_points_cover_middle_half() {
        let pts = extraction_points(-100.0, 100.0, 10);
        assert_eq!(pts.len(), 10);
        assert_eq!(pts[0], -50.0);
        assert_eq!(pts[9], 50.0);
    }

    #[test]
    fn physical_with_zero_phase_is_hatted() {
        let p = profile();
        let d = scattering_data(1.0, C::new(2.0, 0.0), &p, &ScatteringOptions::default()).unwrap();
        let h = smatrix_hat(&d).unwrap();
        let s = smatrix_physical(&h, 0.0).unwrap();
        assert_eq!(s.full(), h.full());
        let s = smatrix_physical(&h, 0.3).unwrap();
        for (a, b) in s.full().iter().zip(h.full().iter()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
    }
}
