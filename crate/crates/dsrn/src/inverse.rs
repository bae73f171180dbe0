//! Recovery of (M, Q, Lambda) from fixed-energy reflection data, and the
//! algebraic identification of the parameters from the potential ratios
//! (c - lambda)/a and b/a along the Liouville variable.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dirac::M2;
use crate::error::{DsrnError, Result};
use crate::geometry::BlackHoleParams;
use crate::lsq::{fd_jacobian, levenberg_marquardt, LmOptions};
use crate::potentials::PotentialProfile;
use crate::scattering::{m2_pairs, Extraction, reflection_l_with, reflection_r, ScatteringOptions};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    L,
    R,
}

impl std::str::FromStr for Which {
    type Err = DsrnError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "l" => Ok(Which::L),
            "R" | "r" => Ok(Which::R),
            _ => Err(DsrnError::Invalid(format!("unknown reflection block '{s}' (expected L or R)"))),
        }
    }
}

/// Box on (M, Q, Lambda).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Default for Bounds {
    fn default() -> Self {
        Self { lo: [1e-6, -1e3, 1e-10], hi: [1e3, 1e3, 10.0] }
    }
}

impl Bounds {
    pub fn contains(&self, t: &[f64]) -> bool {
        (0..3).all(|i| t[i] >= self.lo[i] && t[i] <= self.hi[i])
    }
}

#[derive(Debug, Clone)]
pub struct InverseProblem {
    pub lambda: f64,
    pub n_set: Vec<u32>,
    pub data: BTreeMap<u32, M2>,
    pub which: Which,
    /// Field mass and charge (known) come from here, together with the
    /// starting guess for (M, Q, Lambda).
    pub init: BlackHoleParams,
    pub bounds: Bounds,
    /// Coordinates of (M, Q, Lambda) held fixed at the given value.
    pub fixed: [Option<f64>; 3],
    /// Per-n residual weights; empty means 1.
    pub weights: BTreeMap<u32, f64>,
}

impl InverseProblem {
    pub fn new(lambda: f64, data: BTreeMap<u32, M2>, which: Which, init: BlackHoleParams) -> Self {
        Self {
            lambda,
            n_set: data.keys().cloned().collect(),
            data,
            which,
            init,
            bounds: Bounds::default(),
            fixed: [None; 3],
            weights: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_set.is_empty() {
            return Err(DsrnError::Invalid("empty angular momentum set".into()));
        }
        for n in &self.n_set {
            let m = self.data.get(n).ok_or_else(|| DsrnError::Invalid(format!("no datum for n = {n}")))?;
            if m.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(DsrnError::Invalid(format!("non-finite datum for n = {n}")));
            }
        }
        if self.lambda == 0.0 && self.init.q_dirac == 0.0 {
            return Err(DsrnError::Invalid("zero energy requires a charged field (q != 0)".into()));
        }
        self.init.validate()
    }

    fn free(&self) -> Vec<usize> {
        (0..3).filter(|&i| self.fixed[i].is_none()).collect()
    }

    fn full_theta(&self, free_vals: &[f64]) -> [f64; 3] {
        let mut t = [0.0; 3];
        let mut k = 0;
        for (i, ti) in t.iter_mut().enumerate() {
            *ti = match self.fixed[i] {
                Some(v) => v,
                None => {
                    k += 1;
                    free_vals[k - 1]
                }
            };
        }
        t
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InverseResult {
    pub params: BlackHoleParams,
    /// sqrt of the sum of squared Frobenius misfits
    pub residual: f64,
    pub iterations: usize,
    /// fitted constant phase for R data
    pub phase: Option<f64>,
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct InverseOptions {
    pub lm: LmOptions,
    pub scattering: ScatteringOptions,
    /// Fit the smallest third of the n values with relative weights first,
    /// then all of them, before the final unweighted fit. The reflection
    /// blocks of large n rotate quickly with the parameters and give the
    /// plain misfit many spurious minima.
    pub continuation: bool,
    /// Step tolerance of the intermediate stages.
    pub stage_tol: f64,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self {
            lm: LmOptions::default(),
            scattering: ScatteringOptions { extraction: Extraction::Boundary, ..Default::default() },
            continuation: true,
            stage_tol: 1e-6,
        }
    }
}

/// Reflection blocks L (hatted = physical) or R (physical, with e^{-2 i beta})
/// for every n of `n_set`.
pub fn synthesize_reflection_data(p: &BlackHoleParams, lambda: f64, n_set: &[u32], which: Which) -> Result<BTreeMap<u32, M2>> {
    synthesize_with(p, lambda, n_set, which, &InverseOptions::default().scattering)
}

pub fn synthesize_with(
    p: &BlackHoleParams,
    lambda: f64,
    n_set: &[u32],
    which: Which,
    opts: &ScatteringOptions,
) -> Result<BTreeMap<u32, M2>> {
    let prof = PotentialProfile::new(p)?;
    match which {
        Which::L => reflection_l_with(lambda, n_set, &prof, opts),
        Which::R => reflection_r(lambda, n_set, &prof, opts),
    }
}

fn flatten(prob: &InverseProblem, model: &BTreeMap<u32, M2>, phase: C) -> Vec<f64> {
    let mut out = Vec::with_capacity(8 * prob.n_set.len());
    for n in &prob.n_set {
        let w = prob.weights.get(n).copied().unwrap_or(1.0);
        let d = (model[n] * phase - prob.data[n]) * C::new(w, 0.0);
        for c in d.iter() {
            out.push(c.re);
            out.push(c.im);
        }
    }
    out
}

/// Constant phase minimizing sum_n |model_n e^{i phi} - data_n|^2.
pub fn best_phase(model: &BTreeMap<u32, M2>, data: &BTreeMap<u32, M2>, n_set: &[u32]) -> f64 {
    let s: C = n_set.iter().map(|n| model[n].iter().zip(data[n].iter()).map(|(a, b)| a.conj() * b).sum::<C>()).sum();
    if s.norm() == 0.0 {
        0.0
    } else {
        s.arg()
    }
}

fn evaluate(prob: &InverseProblem, theta: &[f64], opts: &InverseOptions) -> Result<(Vec<f64>, Option<f64>)> {
    if !prob.bounds.contains(theta) {
        return Err(DsrnError::Domain(format!("iterate {theta:?} outside the parameter box")));
    }
    let p = prob.init.with_geometry(theta[0], theta[1], theta[2]);
    let model = synthesize_with(&p, prob.lambda, &prob.n_set, prob.which, &opts.scattering)?;
    match prob.which {
        Which::L => Ok((flatten(prob, &model, C::new(1.0, 0.0)), None)),
        Which::R => {
            let phi = best_phase(&model, &prob.data, &prob.n_set);
            Ok((flatten(prob, &model, C::new(0.0, phi).exp()), Some(phi)))
        }
    }
}

/// Residual vector (real and imaginary parts of the block misfits) at
/// (M, Q, Lambda). For R data the unknown constant phase is eliminated in
/// closed form.
pub fn residual_vector(prob: &InverseProblem, theta: &[f64], opts: &InverseOptions) -> Result<Vec<f64>> {
    evaluate(prob, theta, opts).map(|r| r.0)
}

/// Levenberg-Marquardt fit of (M, Q, Lambda) to the reflection data.
/// `tol` sets the step criterion.
pub fn recover_parameters(prob: &InverseProblem, tol: f64) -> Result<InverseResult> {
    recover_with(prob, &InverseOptions { lm: LmOptions { tol, ..Default::default() }, ..Default::default() })
}

pub fn recover_with(prob: &InverseProblem, opts: &InverseOptions) -> Result<InverseResult> {
    prob.validate()?;
    if !opts.continuation || !prob.weights.is_empty() || prob.n_set.len() < 4 {
        return fit(prob, opts);
    }
    let mut ns = prob.n_set.clone();
    ns.sort_unstable();
    let weights: BTreeMap<u32, f64> = ns
        .iter()
        .map(|n| {
            let d = prob.data[n].norm();
            (*n, if d > 0.0 { 1.0 / d } else { 1.0 })
        })
        .collect();
    let head = ns.len().div_ceil(3).max(3);
    let stage_opts = InverseOptions { lm: LmOptions { tol: opts.stage_tol, ..opts.lm }, ..*opts };
    let mut stage = prob.clone();
    stage.weights = weights;
    stage.n_set = ns[..head].to_vec();
    let mut trace = Vec::new();
    let mut iterations = 0;
    for last in [false, true] {
        let r = fit(&stage, &stage_opts)?;
        trace.extend(r.trace);
        iterations += r.iterations;
        stage.init = r.params;
        if last {
            break;
        }
        stage.n_set = ns.clone();
    }
    let mut fin = prob.clone();
    fin.init = stage.init;
    let r = fit(&fin, opts)?;
    trace.extend(r.trace);
    Ok(InverseResult { iterations: iterations + r.iterations, trace, ..r })
}

fn fit(prob: &InverseProblem, opts: &InverseOptions) -> Result<InverseResult> {
    let free = prob.free();
    let init = [prob.init.mass, prob.init.charge, prob.init.lambda];
    let theta0: Vec<f64> = free.iter().map(|&i| init[i]).collect();
    let floor = vec![1e-8; theta0.len()];
    let f = |t: &[f64]| residual_vector(prob, &prob.full_theta(t), opts);
    let rep = levenberg_marquardt(f, &theta0, &floor, &opts.lm)?;
    let full = prob.full_theta(&rep.theta);
    let (_, phase) = evaluate(prob, &full, opts)?;
    Ok(InverseResult {
        params: prob.init.with_geometry(full[0], full[1], full[2]),
        residual: rep.cost.sqrt(),
        iterations: rep.iterations,
        phase,
        trace: rep.trace,
    })
}

/// Gauss-Newton approximation 2 J^T J of the Hessian of the objective at
/// `theta` = (M, Q, Lambda), with the relative step `rel`.
pub fn gauss_newton_hessian(prob: &InverseProblem, theta: &[f64], rel: f64, opts: &InverseOptions) -> Result<DMatrix<f64>> {
    let j = jacobian(prob, theta, rel, opts)?;
    Ok(j.transpose() * &j * 2.0)
}

pub fn jacobian(prob: &InverseProblem, theta: &[f64], rel: f64, opts: &InverseOptions) -> Result<DMatrix<f64>> {
    let f = |t: &[f64]| residual_vector(prob, t, opts);
    let r0 = f(theta)?;
    let floor = vec![1e-8; theta.len()];
    fd_jacobian(&f, theta, &r0, rel, &floor)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(h: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(h.clone()).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Largest relative column difference between the difference Jacobians
/// with steps rel and rel/2.
pub fn jacobian_step_consistency(prob: &InverseProblem, theta: &[f64], rel: f64, opts: &InverseOptions) -> Result<f64> {
    let j1 = jacobian(prob, theta, rel, opts)?;
    let j2 = jacobian(prob, theta, rel / 2.0, opts)?;
    let mut worst = 0.0f64;
    for c in 0..j1.ncols() {
        let a = j1.column(c);
        let b = j2.column(c);
        worst = worst.max((a - b).norm() / b.norm().max(1e-300));
    }
    Ok(worst)
}

/// JSON record in the inversion schema.
pub fn problem_json(prob: &InverseProblem, result: Option<&InverseResult>) -> Value {
    let data: serde_json::Map<String, Value> = prob.data.iter().map(|(n, m)| (n.to_string(), json!(m2_pairs(m)))).collect();
    let mut v = json!({
        "lambda": prob.lambda,
        "n_set": prob.n_set,
        "which": prob.which,
        "data": data,
        "init": prob.init,
    });
    if let Some(r) = result {
        v["result"] = json!({
            "M": r.params.mass,
            "Q": r.params.charge,
            "Lambda": r.params.lambda,
            "residual": r.residual,
            "iterations": r.iterations,
        });
        if let Some(ph) = r.phase {
            v["result"]["phase"] = json!(ph);
        }
    }
    v
}

/// Parse a 2x2 block given as [[re, im]; 4] row-major.
pub fn m2_from_pairs(v: &Value) -> Result<M2> {
    let arr = v.as_array().filter(|a| a.len() == 4).ok_or_else(|| DsrnError::Invalid("block must be 4 [re, im] pairs".into()))?;
    let mut e = [C::new(0.0, 0.0); 4];
    for (k, p) in arr.iter().enumerate() {
        let re = p.get(0).and_then(Value::as_f64);
        let im = p.get(1).and_then(Value::as_f64);
        match (re, im) {
            (Some(re), Some(im)) => e[k] = C::new(re, im),
            _ => return Err(DsrnError::Invalid("block entries must be [re, im] numbers".into())),
        }
    }
    Ok(M2::new(e[0], e[1], e[2], e[3]))
}

pub fn problem_from_json(v: &Value) -> Result<InverseProblem> {
    let lambda = v["lambda"].as_f64().ok_or_else(|| DsrnError::Invalid("missing lambda".into()))?;
    let which: Which = serde_json::from_value(v["which"].clone())?;
    let init: BlackHoleParams = serde_json::from_value(v["init"].clone())?;
    let obj = v["data"].as_object().ok_or_else(|| DsrnError::Invalid("missing data".into()))?;
    let mut data = BTreeMap::new();
    for (k, m) in obj {
        let n: u32 = k.parse().map_err(|_| DsrnError::Invalid(format!("bad n '{k}'")))?;
        data.insert(n, m2_from_pairs(m)?);
    }
    let mut prob = InverseProblem::new(lambda, data, which, init);
    if let Some(ns) = v["n_set"].as_array() {
        prob.n_set = ns.iter().filter_map(Value::as_u64).map(|n| n as u32).collect();
    }
    Ok(prob)
}

/// The two invariants (c - lambda)/a and b/a at h(X), with r(h(X)).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialRatios {
    pub big_x: Vec<f64>,
    pub r: Vec<f64>,
    pub ratio1: Vec<f64>,
    pub ratio2: Vec<f64>,
}

pub fn potential_ratios(p: &BlackHoleParams, lambda: f64, x_grid: &[f64]) -> Result<PotentialRatios> {
    let prof = PotentialProfile::new(p)?;
    let mut out = PotentialRatios { big_x: Vec::new(), r: Vec::new(), ratio1: Vec::new(), ratio2: Vec::new() };
    for &bx in x_grid {
        let pt = prof.liouville_inverse_point(bx)?;
        let x = prof.horizons().x_of_point(&pt);
        let s = prof.sample_at(x, pt);
        out.big_x.push(bx);
        out.r.push(pt.r);
        out.ratio1.push((s.c - lambda) / s.a);
        out.ratio2.push(s.b / s.a);
    }
    Ok(out)
}

/// (M, Q, Lambda) identified from the ratio (c - lambda)/a sampled at radii r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentifiedParams {
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "Q")]
    pub charge: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
}

// least squares with column equilibration; rejects numerically rank-deficient systems
fn solve_scaled(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let mut a = a;
    let scales: Vec<f64> = (0..a.ncols()).map(|j| a.column(j).norm().max(1e-300)).collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-13 * smax) {
        return Err(DsrnError::Conditioning(format!("sample matrix is rank deficient (singular value ratio {:e})", smin / smax)));
    }
    let x = svd.solve(&b, 0.0).map_err(|e| DsrnError::Conditioning(e.to_string()))?;
    Ok(DVector::from_iterator(x.len(), x.iter().zip(&scales).map(|(v, s)| v / s)))
}

/// Identify (M, Q, Lambda) from samples of (c - lambda)/a = (qQ - lambda r)/sqrt(F).
///
/// With P = r^2 F = -(Lambda/3) r^4 + r^2 - 2M r + Q^2 and D = (qQ - lambda r)^2,
/// the samples satisfy ratio^2 P(r) = r^2 D(r), linear in the coefficients
/// of P and D. For lambda != 0 the product E = P D is matched at r^6
/// (Lambda), r^5 (Q) and r^3 (M) in that order. For lambda = 0 the fit gives
/// M, Q^2 and Lambda, and the sign of Q is that of q times the ratio.
pub fn identify_params_from_ratios(r: &[f64], ratio1: &[f64], lambda: f64, q_dirac: f64) -> Result<IdentifiedParams> {
    if r.len() != ratio1.len() {
        return Err(DsrnError::Invalid("r and ratio samples differ in length".into()));
    }
    let mut distinct = r.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 7 {
        return Err(DsrnError::Invalid(format!("need at least 7 distinct radii, got {}", distinct.len())));
    }
    if lambda == 0.0 && q_dirac == 0.0 {
        return Err(DsrnError::Invalid("lambda = 0 and q = 0 carry no information".into()));
    }
    let m = r.len();
    if lambda != 0.0 {
        // unknowns p4, p1, p0, d2, d1, d0
        let mut a = DMatrix::zeros(m, 6);
        let mut b = DVector::zeros(m);
        for i in 0..m {
            let (ri, g) = (r[i], ratio1[i] * ratio1[i]);
            let row = [g * ri.powi(4), g * ri, g, -ri.powi(4), -ri.powi(3), -ri * ri];
            for (j, v) in row.iter().enumerate() {
                a[(i, j)] = *v;
            }
            b[i] = -g * ri * ri;
        }
        let x = solve_scaled(a, b)?;
        let (p4, p1, d2, d1) = (x[0], x[1], x[3], x[4]);
        let e6 = p4 * d2;
        let e5 = p4 * d1;
        let e3 = d1 + p1 * d2;
        let big_lambda = -3.0 * e6 / (lambda * lambda);
        let charge = if q_dirac != 0.0 {
            3.0 * e5 / (2.0 * lambda * q_dirac * big_lambda)
        } else {
            // the data only see Q^2
            x[2].max(0.0).sqrt()
        };
        let mass = -(e3 + 2.0 * lambda * q_dirac * charge) / (2.0 * lambda * lambda);
        Ok(IdentifiedParams { mass, charge, lambda: big_lambda })
    } else {
        // unknowns p4, p1, p0, d0
        let mut a = DMatrix::zeros(m, 4);
        let mut b = DVector::zeros(m);
        for i in 0..m {
            let (ri, g) = (r[i], ratio1[i] * ratio1[i]);
            let row = [g * ri.powi(4), g * ri, g, -ri * ri];
            for (j, v) in row.iter().enumerate() {
                a[(i, j)] = *v;
            }
            b[i] = -g * ri * ri;
        }
        let x = solve_scaled(a, b)?;
        let q_abs = x[2].max(0.0).sqrt();
        let sign = (ratio1[0] * q_dirac).signum();
        Ok(IdentifiedParams { mass: -x[1] / 2.0, charge: sign * q_abs, lambda: -3.0 * x[0] })
    }
}
