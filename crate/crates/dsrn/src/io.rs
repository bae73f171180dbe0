//! File formats: reproducible JSON, CSV exports and flat key=value configs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::asymptotics::ComparisonRow;
use crate::error::{DsrnError, Result};
use crate::jost::{JostMatrix, JostOptions};
use crate::potentials::PotentialProfile;
use crate::scattering::PartialWaveSMatrix;

/// Floats with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_u64() || n.is_i64() {
                out.push_str(&n.to_string());
            } else {
                out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            // short numeric rows stay on one line
            if a.iter().all(|x| x.is_number()) && a.len() <= 4 {
                out.push('[');
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, indent, out);
                }
                out.push(']');
                return;
            }
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                if i + 1 < a.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) => {
            if m.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, indent + 1, out);
                if i + 1 < m.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Deterministic JSON text: sorted keys, floats with 17 significant digits.
pub fn to_json_string(v: &Value) -> String {
    let mut s = String::new();
    write_value(v, 0, &mut s);
    s.push('\n');
    s
}

/// Write through a temporary file in the target directory and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| DsrnError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    write_atomic(path, to_json_string(v).as_bytes())
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| DsrnError::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Flat key=value text. Blank lines and lines starting with '#' are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| DsrnError::Invalid(format!("config line {}: expected key=value", no + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(DsrnError::Invalid(format!("config line {}: empty key", no + 1)));
        }
        if out.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(DsrnError::Invalid(format!("config line {}: duplicate key '{k}'", no + 1)));
        }
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| DsrnError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn parse_key<T: std::str::FromStr>(cfg: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match cfg.get(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| DsrnError::Invalid(format!("config key {key}: cannot parse '{v}'"))),
    }
}

/// Jost solver settings from keys tol, tail_eps, panel_nodes, force.
/// Other keys are left to the caller.
pub fn jost_options_from_config(cfg: &BTreeMap<String, String>, base: JostOptions) -> Result<JostOptions> {
    let mut o = base;
    if let Some(v) = parse_key(cfg, "tol")? {
        o.tol = v;
    }
    if let Some(v) = parse_key(cfg, "tail_eps")? {
        o.tail_eps = v;
    }
    if let Some(v) = parse_key(cfg, "panel_nodes")? {
        o.panel_nodes = v;
    }
    if let Some(v) = parse_key(cfg, "force")? {
        o.force = v;
    }
    Ok(o)
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| DsrnError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| DsrnError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| DsrnError::Io(e.to_string()))
}

/// x followed by Re/Im of the 16 entries of F-hat, row-major.
pub fn jost_csv(j: &JostMatrix) -> Result<String> {
    let mut header = vec!["x".to_string()];
    for r in 1..=4 {
        for c in 1..=4 {
            header.push(format!("F{r}{c}_re"));
            header.push(format!("F{r}{c}_im"));
        }
    }
    let rows: Vec<Vec<String>> = j
        .xs
        .iter()
        .zip(&j.values)
        .map(|(x, m)| {
            let mut row = vec![fmt_f64(*x)];
            for r in 0..4 {
                for c in 0..4 {
                    row.push(fmt_f64(m[(r, c)].re));
                    row.push(fmt_f64(m[(r, c)].im));
                }
            }
            row
        })
        .collect();
    csv_text(&header, &rows)
}

/// Columns x, a, b, c.
pub fn potential_csv(prof: &PotentialProfile, xs: &[f64]) -> Result<String> {
    let header: Vec<String> = ["x", "a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = xs
        .iter()
        .map(|&x| {
            let s = prof.sample(x);
            vec![fmt_f64(x), fmt_f64(s.a), fmt_f64(s.b), fmt_f64(s.c)]
        })
        .collect();
    csv_text(&header, &rows)
}

/// Columns n, |numeric|, |predicted|, ratio (real and imaginary part).
pub fn comparison_csv(rows: &[ComparisonRow]) -> Result<String> {
    let header: Vec<String> = ["n", "numeric_abs", "predicted_abs", "ratio_re", "ratio_im"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![fmt_f64(r.n), fmt_f64(r.numeric), fmt_f64(r.predicted), fmt_f64(r.ratio_re), fmt_f64(r.ratio_im)])
        .collect();
    csv_text(&header, &rows)
}

pub fn smatrix_csv(list: &[PartialWaveSMatrix]) -> Result<String> {
    let rows: Vec<Vec<String>> = list.iter().map(|s| s.csv_record()).collect();
    csv_text(&PartialWaveSMatrix::csv_header(), &rows)
}
