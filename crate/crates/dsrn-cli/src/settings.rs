//! Flag > config file > default resolution.

use std::collections::BTreeMap;
use std::path::PathBuf;

use dsrn::io::{jost_options_from_config, read_config};
use dsrn::jost::{JostOptions, MAX_Z};
use dsrn::BlackHoleParams;

use crate::{Common, Failure};

const KNOWN_KEYS: &[&str] = &[
    "M", "Q", "Lambda", "m", "q", "lambda", "n", "out", "format", "tol", "tail_eps", "panel_nodes", "force",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format '{s}' (expected json or csv)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub params: BlackHoleParams,
    pub lambda: f64,
    pub ns: Vec<u32>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub jost: JostOptions,
    /// Flags given explicitly for (M, Q, Lambda).
    pub geometry_flags: [Option<f64>; 3],
}

/// "1..10", "3", "1,2,5" or mixtures like "1..4,8,16"; ranges are inclusive.
pub fn parse_n_set(s: &str) -> Result<Vec<u32>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || format!("bad n set '{part}'");
        if let Some((a, b)) = part.split_once("..") {
            let a: u32 = a.trim().parse().map_err(|_| bad())?;
            let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err("empty n set".into());
    }
    if out[0] == 0 {
        return Err("angular momentum n must be positive".into());
    }
    Ok(out)
}

/// "lo:hi:count" with count >= 1; count 1 gives lo alone.
pub fn parse_axis(s: &str) -> Result<Vec<f64>, String> {
    let bad = || format!("bad grid axis '{s}' (expected lo:hi:count)");
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if k == 0 || !lo.is_finite() || !hi.is_finite() {
        return Err(bad());
    }
    if k == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect())
}

fn pick<T: std::str::FromStr>(flag: Option<T>, cfg: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, Failure> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match cfg.get(key) {
        Some(s) => s.parse().map_err(|_| Failure::Usage(format!("config key {key}: cannot parse '{s}'"))),
        None => Ok(default),
    }
}

fn pick_opt(flag: Option<f64>, cfg: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    cfg.get(key)
        .map(|s| s.parse().map_err(|_| Failure::Usage(format!("config key {key}: cannot parse '{s}'"))))
        .transpose()
}

impl Settings {
    pub fn resolve(c: &Common, default_n: &str) -> Result<Self, Failure> {
        let cfg = match &c.config {
            Some(p) => read_config(p).map_err(|e| Failure::Usage(e.to_string()))?,
            None => BTreeMap::new(),
        };
        if let Some(k) = cfg.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(Failure::Usage(format!("unknown config key '{k}'")));
        }
        let geometry_flags = [
            pick_opt(c.mass, &cfg, "M")?,
            pick_opt(c.charge, &cfg, "Q")?,
            pick_opt(c.cosmo, &cfg, "Lambda")?,
        ];
        let params = BlackHoleParams::new(
            geometry_flags[0].unwrap_or(1.0),
            geometry_flags[1].unwrap_or(0.5),
            geometry_flags[2].unwrap_or(0.05),
            pick(c.m_dirac, &cfg, "m", 0.1)?,
            pick(c.q_dirac, &cfg, "q", 0.2)?,
        );
        let lambda = pick(c.lambda, &cfg, "lambda", 1.0)?;
        let n_text = pick(c.n.clone(), &cfg, "n", default_n.to_string())?;
        let ns = parse_n_set(&n_text).map_err(Failure::Usage)?;
        let out = match &c.out {
            Some(p) => Some(p.clone()),
            None => cfg.get("out").map(PathBuf::from),
        };
        let format = pick(c.format, &cfg, "format", Format::Json)?;
        let mut jost = jost_options_from_config(&cfg, JostOptions::default()).map_err(|e| Failure::Usage(e.to_string()))?;
        if let Some(t) = c.tol {
            jost.tol = t;
        }
        if let Some(t) = c.tail_eps {
            jost.tail_eps = t;
        }
        if !(1e-13..=1e-6).contains(&jost.tol) {
            return Err(Failure::Usage(format!("tol {} outside [1e-13, 1e-6]", jost.tol)));
        }
        if !jost.force {
            if let Some(n) = ns.iter().find(|&&n| n as f64 > MAX_Z) {
                return Err(Failure::Usage(format!("n = {n} exceeds {MAX_Z}; set force = true in the config to override")));
            }
        }
        if !lambda.is_finite() {
            return Err(Failure::Usage("lambda must be finite".into()));
        }
        Ok(Self { params, lambda, ns, out, format, jost, geometry_flags })
    }
}
