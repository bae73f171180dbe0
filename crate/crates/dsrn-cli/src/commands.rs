use std::collections::BTreeMap;

use dsrn::asymptotics::{estimate_width, exponents, predict_al_normalized, ComparisonRow, MIN_Z};
use dsrn::dirac::{block, gamma1, max_abs4, M2, M4};
use dsrn::inverse::{m2_from_pairs, problem_from_json, problem_json, recover_with, InverseOptions, InverseProblem, Which};
use dsrn::io::{comparison_csv, fmt_f64, read_json, smatrix_csv, to_json_string, write_atomic};
use dsrn::jost::{cutoffs, JostOptions, Side};
use dsrn::lsq::LmOptions;
use dsrn::scattering::{
    al_boundary, jost_solution, m2_pairs, partial_wave_smatrix, scattering_data, Extraction, ScatteringOptions, Solver,
};
use dsrn::{find_horizons, BlackHoleParams, PotentialProfile};
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::settings::{parse_axis, Format, Settings};
use crate::{Cli, Command, Failure};

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Horizons => horizons(&Settings::resolve(&cli.common, "1")?),
        Command::Direct => direct(&Settings::resolve(&cli.common, "1..10")?),
        Command::Verify => verify(&Settings::resolve(&cli.common, "1..10")?),
        Command::Asympt { block } => asympt(&Settings::resolve(&cli.common, "8..24")?, *block),
        Command::Invert { data, init_perturb, which, fit_tol } => {
            let s = Settings::resolve(&cli.common, "1..64")?;
            let which: Option<Which> = which.as_deref().map(str::parse).transpose()?;
            invert(&s, data, *init_perturb, which, *fit_tol)
        }
        Command::Cam { re, im } => {
            let s = Settings::resolve(&cli.common, "1")?;
            cam(&s, &parse_axis(re).map_err(Failure::Usage)?, &parse_axis(im).map_err(Failure::Usage)?)
        }
    }
}

// summaries go to stdout when the artifact goes to a file
fn note(s: &Settings, line: &str) {
    if s.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn emit(s: &Settings, text: &str) -> Result<(), Failure> {
    match &s.out {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(|e| Failure::Usage(e.to_string())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(s: &Settings, v: &Value) -> Result<(), Failure> {
    emit(s, &to_json_string(v))
}

fn csv_lines(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn scattering_options(s: &Settings) -> ScatteringOptions {
    ScatteringOptions { jost: s.jost, ..Default::default() }
}

fn horizons(s: &Settings) -> Result<(), Failure> {
    let prof = PotentialProfile::new(&s.params)?;
    let h = prof.horizons();
    note(
        s,
        &format!(
            "roots {:?}  kappa_- {:.10}  kappa_+ {:.10}  A {:.12}  beta {:.12}",
            h.roots,
            h.kappa_minus(),
            h.kappa_plus(),
            prof.width_a(),
            prof.phase_beta()
        ),
    );
    match s.format {
        Format::Json => emit_json(s, &prof.summary_json()),
        Format::Csv => {
            let names = ["r_n", "r_c", "r_minus", "r_plus"];
            let mut rows: Vec<Vec<String>> = Vec::new();
            for k in 0..4 {
                rows.push(vec![names[k].into(), fmt_f64(h.roots[k])]);
                rows.push(vec![format!("kappa_{}", &names[k][2..]), fmt_f64(h.kappas[k])]);
            }
            rows.push(vec!["width_A".into(), fmt_f64(prof.width_a())]);
            rows.push(vec!["beta".into(), fmt_f64(prof.phase_beta())]);
            emit(s, &csv_lines(&["quantity", "value"], &rows))
        }
    }
}

fn largest_singular(m: &M2) -> f64 {
    let sv = m.singular_values();
    sv[0].max(sv[1])
}

fn direct(s: &Settings) -> Result<(), Failure> {
    let prof = PotentialProfile::new(&s.params)?;
    let opts = scattering_options(s);
    let results: Vec<_> = s.ns.par_iter().map(|&n| (n, partial_wave_smatrix(s.lambda, n, &prof, &opts))).collect();
    let mut list = Vec::new();
    let mut objs = Vec::new();
    for (n, r) in results {
        let (sm, data) = r.map_err(|e| Failure::from(e).tagged(n))?;
        note(
            s,
            &format!(
                "n = {n:>2}  lambda = {}  |T_L| {:.6e}  |L| {:.6e}  |R| {:.6e}  unitarity {:.1e}  x_spread {:.1e}",
                s.lambda,
                largest_singular(&sm.t_l),
                largest_singular(&sm.l),
                largest_singular(&sm.r),
                sm.unitarity_residual(),
                data.x_spread
            ),
        );
        let mut v = sm.to_json(data.x_spread);
        v["n"] = json!(n);
        v["params"] = json!(s.params);
        objs.push(v);
        list.push(sm);
    }
    match s.format {
        Format::Json => emit_json(s, &Value::Array(objs)),
        Format::Csv => emit(s, &smatrix_csv(&list)?),
    }
}

impl Failure {
    fn tagged(self, n: u32) -> Self {
        match self {
            Failure::Usage(m) => Failure::Usage(format!("n = {n}: {m}")),
            Failure::Math(m) => Failure::Math(format!("n = {n}: {m}")),
        }
    }
}

// |F* G F - G| / |F|_F^2 and |det F - 1| / prod of column norms
fn identity_residuals(f: &M4) -> (f64, f64) {
    let g = gamma1();
    let pseudo = max_abs4(&(f.adjoint() * g * f - g));
    let scale: f64 = f.iter().map(|c| c.norm_sqr()).sum();
    let det = (f.determinant() - C::new(1.0, 0.0)).norm();
    let cols: f64 = (0..4).map(|j| f.column(j).norm()).product();
    (pseudo / scale.max(1.0), det / cols.max(1.0))
}

fn interior(x_min: f64, x_max: f64, k: usize) -> Vec<f64> {
    (1..=k).map(|i| x_min + (x_max - x_min) * i as f64 / (k + 1) as f64).collect()
}

struct WaveCheck {
    values: BTreeMap<&'static str, f64>,
    limits: BTreeMap<&'static str, f64>,
    error: Option<String>,
}

impl WaveCheck {
    fn pass(&self) -> bool {
        self.error.is_none() && self.values.iter().all(|(k, v)| *v < self.limits[k])
    }
}

fn check_wave(prof: &PotentialProfile, lambda: f64, n: u32, jost: &JostOptions) -> WaveCheck {
    let mut c = WaveCheck { values: BTreeMap::new(), limits: BTreeMap::new(), error: None };
    if let Err(e) = check_wave_inner(prof, lambda, n, jost, &mut c) {
        c.error = Some(e.to_string());
    }
    c
}

fn check_wave_inner(prof: &PotentialProfile, lambda: f64, n: u32, jost: &JostOptions, c: &mut WaveCheck) -> dsrn::Result<()> {
    let z = C::new(n as f64, 0.0);
    let (x_min, x_max) = cutoffs(prof, z, jost);
    // identities are global statements; the integrator runs at 1e-12 for them
    let tight = ScatteringOptions { jost: JostOptions { tol: jost.tol.min(1e-12), ..*jost }, ..Default::default() };
    let f = jost_solution(Side::Right, lambda, z, prof, &interior(x_min, x_max, 30), &tight)?;
    let (mut pseudo, mut det) = (0.0f64, 0.0f64);
    for m in &f.values {
        let (a, b) = identity_residuals(m);
        pseudo = pseudo.max(a);
        det = det.max(b);
    }
    c.values.insert("pseudo_unitarity", pseudo);
    c.limits.insert("pseudo_unitarity", 1e-8);
    c.values.insert("det", det);
    c.limits.insert("det", 1e-9);

    let ode = ScatteringOptions { jost: *jost, ..Default::default() };
    let vol = ScatteringOptions { solver: Solver::Volterra, ..ode };
    let pts = interior(x_min, x_max, 10);
    let mut methods = 0.0f64;
    for side in [Side::Right, Side::Left] {
        let a = jost_solution(side, lambda, z, prof, &pts, &ode)?;
        let b = jost_solution(side, lambda, z, prof, &pts, &vol)?;
        for (fa, fb) in a.values.iter().zip(&b.values) {
            methods = methods.max(max_abs4(&(fa - fb)) / max_abs4(fa).max(1.0));
        }
    }
    c.values.insert("methods", methods);
    c.limits.insert("methods", (if n <= 16 { 1e-8f64 } else { 1e-6 }).max(100.0 * jost.tol));

    let (sm, data) = partial_wave_smatrix(lambda, n, prof, &ode)?;
    c.values.insert("relations", data.relation_residuals().max_rel());
    c.limits.insert("relations", 1e-8);
    c.values.insert("l_forms", sm.l_forms_residual);
    c.limits.insert("l_forms", 1e-8);
    c.values.insert("x_spread", data.x_spread);
    c.limits.insert("x_spread", 1e-7);
    c.values.insert("unitarity", sm.unitarity_residual());
    c.limits.insert("unitarity", 1e-7);
    Ok(())
}

fn verify(s: &Settings) -> Result<(), Failure> {
    let h = find_horizons(&s.params)?;
    let prof = PotentialProfile::from_horizons(h.clone());
    let roots = h.root_residuals().into_iter().fold(0.0, f64::max);
    let kappa_sum: f64 = h.kappas.iter().map(|k| 1.0 / k).sum::<f64>().abs();
    let kappa_scale: f64 = h.kappas.iter().map(|k| 1.0 / k.abs()).sum();
    let geometry_pass = roots < 1e-10 && kappa_sum < 1e-10 * kappa_scale && h.kappa_minus() > 0.0 && h.kappa_plus() < 0.0;
    note(
        s,
        &format!(
            "geometry  {}  root residual {roots:.1e}  |sum 1/kappa| {kappa_sum:.1e}",
            if geometry_pass { "PASS" } else { "FAIL" }
        ),
    );
    let checks: Vec<(u32, WaveCheck)> = s.ns.par_iter().map(|&n| (n, check_wave(&prof, s.lambda, n, &s.jost))).collect();
    let mut all = geometry_pass;
    let mut waves = Vec::new();
    let mut rows = Vec::new();
    for (n, c) in &checks {
        let pass = c.pass();
        all &= pass;
        let detail = match &c.error {
            Some(e) => e.clone(),
            None => c.values.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect::<Vec<_>>().join("  "),
        };
        note(s, &format!("n = {n:>2}  {}  {detail}", if pass { "PASS" } else { "FAIL" }));
        let mut w = json!({"n": n, "pass": pass, "values": c.values, "limits": c.limits});
        if let Some(e) = &c.error {
            w["error"] = json!(e);
        }
        waves.push(w);
        let mut row = vec![n.to_string(), pass.to_string()];
        for k in ["pseudo_unitarity", "det", "methods", "relations", "l_forms", "x_spread", "unitarity"] {
            row.push(c.values.get(k).map(|v| fmt_f64(*v)).unwrap_or_else(|| "nan".into()));
        }
        rows.push(row);
    }
    let report = json!({
        "params": s.params,
        "lambda": s.lambda,
        "geometry": {"root_residual": roots, "kappa_sum": kappa_sum, "pass": geometry_pass},
        "waves": waves,
        "pass": all,
    });
    match s.format {
        Format::Json => emit_json(s, &report)?,
        Format::Csv => emit(
            s,
            &csv_lines(
                &["n", "pass", "pseudo_unitarity", "det", "methods", "relations", "l_forms", "x_spread", "unitarity"],
                &rows,
            ),
        )?,
    }
    if all {
        Ok(())
    } else {
        Err(Failure::Math("verification failed".into()))
    }
}

fn asympt(s: &Settings, blk: usize) -> Result<(), Failure> {
    if !(1..=4).contains(&blk) {
        return Err(Failure::Usage(format!("block must be 1..4, got {blk}")));
    }
    if let Some(n) = s.ns.iter().find(|&&n| (n as f64) < MIN_Z) {
        return Err(Failure::Usage(format!("asymptotic comparison needs n >= {MIN_Z}, got {n}")));
    }
    let prof = PotentialProfile::new(&s.params)?;
    let exp = exponents(s.lambda, &prof);
    let opts = scattering_options(s);
    // dominant entry: diagonal for blocks 1 and 4, off-diagonal for 2 and 3
    let (i, j) = if blk == 1 || blk == 4 { (0, 0) } else { (0, 1) };
    let results: Vec<_> = s
        .ns
        .par_iter()
        .map(|&n| {
            let z = C::new(n as f64, 0.0);
            let r = scattering_data(s.lambda, z, &prof, &opts)
                .and_then(|d| predict_al_normalized(s.lambda, z, &exp, &prof).map(|p| (d, p)));
            (n, r)
        })
        .collect();
    let mut rows = Vec::new();
    let mut al1 = BTreeMap::new();
    for (n, r) in results {
        let (data, pred) = r.map_err(|e| Failure::from(e).tagged(n))?;
        let a = block(&data.al, blk);
        let row = ComparisonRow::new(n as f64, a[(i, j)], pred[blk - 1][(i, j)]);
        note(
            s,
            &format!(
                "n = {n:>2}  A_L{blk}[{}{}]  |numeric| {:.6e}  |predicted| {:.6e}  ratio {:.6}{:+.6}i",
                i + 1,
                j + 1,
                row.numeric,
                row.predicted,
                row.ratio_re,
                row.ratio_im
            ),
        );
        rows.push(row);
        al1.insert(n, block(&data.al, 1));
    }
    let width = if al1.len() >= 4 {
        match estimate_width(&al1, 0) {
            Ok(w) => {
                let rel = (w - prof.width_a()).abs() / prof.width_a();
                note(s, &format!("width estimate {w:.8}  A {:.8}  relative error {rel:.2e}", prof.width_a()));
                json!({"estimate": w, "A": prof.width_a(), "relative_error": rel})
            }
            Err(e) => json!({"error": e.to_string(), "A": prof.width_a()}),
        }
    } else {
        Value::Null
    };
    match s.format {
        Format::Json => emit_json(
            s,
            &json!({
                "params": s.params,
                "lambda": s.lambda,
                "block": blk,
                "entry": [i + 1, j + 1],
                "rows": rows,
                "width": width,
            }),
        ),
        Format::Csv => emit(s, &comparison_csv(&rows)?),
    }
}

struct Loaded {
    prob: InverseProblem,
    truth: Option<BlackHoleParams>,
}

// output of `direct`: an array of S-matrix records carrying their parameters
fn load_direct(v: &[Value], which: Which) -> Result<Loaded, Failure> {
    let bad = |m: &str| Failure::Usage(format!("data file: {m}"));
    let key = match which {
        Which::L => "L",
        Which::R => "R",
    };
    let mut data = BTreeMap::new();
    let mut lambda = None;
    let mut params: Option<BlackHoleParams> = None;
    for rec in v {
        let n = rec["n"].as_f64().filter(|n| n.fract() == 0.0 && *n >= 1.0).ok_or_else(|| bad("record without integer n"))?;
        let l = rec["lambda"].as_f64().ok_or_else(|| bad("record without lambda"))?;
        let p: BlackHoleParams =
            serde_json::from_value(rec["params"].clone()).map_err(|e| bad(&format!("record without params ({e})")))?;
        if lambda.is_some_and(|x| x != l) || params.is_some_and(|x| x != p) {
            return Err(bad("records disagree on lambda or params"));
        }
        lambda = Some(l);
        params = Some(p);
        if rec["hatted"].as_bool() == Some(true) && which == Which::R {
            return Err(bad("R data must be physical"));
        }
        data.insert(n as u32, m2_from_pairs(&rec["blocks"][key]).map_err(|e| bad(&e.to_string()))?);
    }
    let (lambda, params) = match (lambda, params) {
        (Some(l), Some(p)) => (l, p),
        _ => return Err(bad("no records")),
    };
    Ok(Loaded { prob: InverseProblem::new(lambda, data, which, params), truth: Some(params) })
}

fn invert(s: &Settings, path: &std::path::Path, perturb: f64, which: Option<Which>, fit_tol: f64) -> Result<(), Failure> {
    let v = read_json(path).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut loaded = match &v {
        Value::Array(a) => load_direct(a, which.unwrap_or(Which::L))?,
        Value::Object(_) => {
            let prob = problem_from_json(&v).map_err(|e| Failure::Usage(format!("data file: {e}")))?;
            if which.is_some_and(|w| w != prob.which) {
                return Err(Failure::Usage("--which disagrees with the problem file".into()));
            }
            Loaded { prob, truth: None }
        }
        _ => return Err(Failure::Usage("data file must hold an array of S-matrix records or an inversion problem".into())),
    };
    let prob = &mut loaded.prob;
    prob.n_set.retain(|n| s.ns.contains(n));
    if prob.n_set.is_empty() {
        return Err(Failure::Usage("no data left for the requested n".into()));
    }
    let base = prob.init;
    let mut init = base.with_geometry(base.mass * (1.0 + perturb), base.charge * (1.0 - perturb), base.lambda * (1.0 + perturb));
    if let Some(m) = s.geometry_flags[0] {
        init.mass = m;
    }
    if let Some(q) = s.geometry_flags[1] {
        init.charge = q;
    }
    if let Some(l) = s.geometry_flags[2] {
        init.lambda = l;
    }
    prob.init = init;
    let opts = InverseOptions {
        lm: LmOptions { tol: fit_tol, ..Default::default() },
        scattering: ScatteringOptions { jost: s.jost, extraction: Extraction::Boundary, ..Default::default() },
        ..Default::default()
    };
    let res = recover_with(prob, &opts)?;
    let p = res.params;
    let mut line = format!(
        "{} data, n = {:?}: M {:.12}  Q {:.12}  Lambda {:.12}  residual {:.2e}  iterations {}",
        match prob.which {
            Which::L => "L",
            Which::R => "R",
        },
        prob.n_set,
        p.mass,
        p.charge,
        p.lambda,
        res.residual,
        res.iterations
    );
    let mut out = problem_json(prob, Some(&res));
    if let Some(t) = loaded.truth {
        let err = [(p.mass, t.mass), (p.charge, t.charge), (p.lambda, t.lambda)]
            .iter()
            .map(|(a, b)| (a - b).abs() / b.abs().max(1e-300))
            .fold(0.0, f64::max);
        line.push_str(&format!("  max relative error vs generating {err:.2e}"));
        out["truth"] = json!(t);
        out["max_relative_error"] = json!(err);
    }
    note(s, &line);
    match s.format {
        Format::Json => emit_json(s, &out),
        Format::Csv => emit(
            s,
            &csv_lines(
                &["M", "Q", "Lambda", "residual", "iterations"],
                &[vec![fmt_f64(p.mass), fmt_f64(p.charge), fmt_f64(p.lambda), fmt_f64(res.residual), res.iterations.to_string()]],
            ),
        ),
    }
}

// row-major moduli and arguments
fn abs_phase(m: &M2) -> Value {
    let e: Vec<C> = m2_pairs(m).iter().map(|p| C::new(p[0], p[1])).collect();
    json!({"abs": e.iter().map(|c| c.norm()).collect::<Vec<_>>(), "phase": e.iter().map(|c| c.arg()).collect::<Vec<_>>()})
}

fn cam(s: &Settings, re: &[f64], im: &[f64]) -> Result<(), Failure> {
    if let Some(r) = re.iter().find(|r| r.abs() > 64.0) {
        return Err(Failure::Usage(format!("|Re z| must not exceed 64, got {r}")));
    }
    let prof = PotentialProfile::new(&s.params)?;
    let opts = scattering_options(s);
    let grid: Vec<C> = re.iter().flat_map(|&a| im.iter().map(move |&b| C::new(a, b))).collect();
    let results: Vec<_> = grid.par_iter().map(|&z| (z, al_boundary(s.lambda, z, &prof, &opts))).collect();
    let mut points = Vec::new();
    let mut rows = Vec::new();
    let mut failed = 0usize;
    for (z, r) in results {
        let mut row = vec![fmt_f64(z.re), fmt_f64(z.im)];
        let al = match r {
            Ok(al) => al,
            Err(e) => {
                failed += 1;
                note(s, &format!("z = {z}  error: {e}"));
                points.push(json!({"z": [z.re, z.im], "error": e.to_string()}));
                row.extend(std::iter::repeat_n("nan".to_string(), 48));
                rows.push(row);
                continue;
            }
        };
        let blocks: Vec<M2> = (1..=4).map(|k| block(&al, k)).collect();
        let sv = blocks[0].singular_values();
        let (smax, smin) = (sv[0].max(sv[1]), sv[0].min(sv[1]));
        let pole = !(smin > 1e-14 * smax);
        let lr = if pole {
            None
        } else {
            blocks[0].try_inverse().map(|t| (blocks[2] * t, -(t * blocks[1])))
        };
        let mut p = json!({
            "z": [z.re, z.im],
            "AL1": abs_phase(&blocks[0]),
            "AL2": abs_phase(&blocks[1]),
            "AL3": abs_phase(&blocks[2]),
            "AL4": abs_phase(&blocks[3]),
            "al1_singular_values": [smax, smin],
            "pole": lr.is_none(),
        });
        for m in &blocks {
            for pr in m2_pairs(m) {
                let c = C::new(pr[0], pr[1]);
                row.push(fmt_f64(c.norm()));
                row.push(fmt_f64(c.arg()));
            }
        }
        match &lr {
            Some((l, r)) => {
                p["L"] = abs_phase(l);
                p["R"] = abs_phase(r);
                for m in [l, r] {
                    for pr in m2_pairs(m) {
                        let c = C::new(pr[0], pr[1]);
                        row.push(fmt_f64(c.norm()));
                        row.push(fmt_f64(c.arg()));
                    }
                }
                note(s, &format!("z = {z}  |A_L1| {smax:.4e}  |L| {:.4e}  |R| {:.4e}", largest_singular(l), largest_singular(r)));
            }
            None => {
                row.extend(std::iter::repeat_n("nan".to_string(), 16));
                note(s, &format!("z = {z}  A_L1 singular: singular values {smax:.4e}, {smin:.4e}"));
            }
        }
        points.push(p);
        rows.push(row);
    }
    match s.format {
        Format::Json => emit_json(
            s,
            &json!({"params": s.params, "lambda": s.lambda, "re": re, "im": im, "points": points}),
        )?,
        Format::Csv => {
            let mut header: Vec<String> = vec!["z_re".into(), "z_im".into()];
            for b in ["AL1", "AL2", "AL3", "AL4", "L", "R"] {
                for e in ["11", "12", "21", "22"] {
                    header.push(format!("{b}{e}_abs"));
                    header.push(format!("{b}{e}_phase"));
                }
            }
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            emit(s, &csv_lines(&h, &rows))?;
        }
    }
    if failed > 0 {
        return Err(Failure::Math(format!("{failed} of {} grid points failed", grid.len())));
    }
    Ok(())
}
