//! Python bindings. Blocks cross the boundary as 2x2 nested lists of
//! complex numbers; energies are called `energy` since `lambda` is reserved.
#![allow(non_snake_case)]

use std::collections::BTreeMap;

use dsrn::dirac::M2;
use dsrn::inverse::{recover_parameters, synthesize_reflection_data, InverseProblem, Which};
use dsrn::scattering::{partial_wave_smatrix, ScatteringOptions};
use dsrn::{BlackHoleParams, DsrnError, PotentialProfile};
use num_complex::Complex64 as C;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Rows = Vec<Vec<C>>;

fn to_py_err(e: DsrnError) -> PyErr {
    match e {
        DsrnError::Invalid(_) | DsrnError::Domain(_) | DsrnError::Inadmissible { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn rows(m: &M2) -> Rows {
    vec![vec![m[(0, 0)], m[(0, 1)]], vec![m[(1, 0)], m[(1, 1)]]]
}

fn from_rows(r: &Rows) -> Result<M2, DsrnError> {
    if r.len() != 2 || r.iter().any(|row| row.len() != 2) {
        return Err(DsrnError::Invalid("blocks must be 2x2 nested lists".into()));
    }
    Ok(M2::new(r[0][0], r[0][1], r[1][0], r[1][1]))
}

fn which(s: &str) -> PyResult<Which> {
    s.parse().map_err(to_py_err)
}

/// Horizon radii (r_n, r_c, r_-, r_+), surface gravities, width A and phase beta.
#[pyfunction]
#[pyo3(signature = (M, Q, Lambda, m=0.0, q=0.0))]
fn horizons<'py>(py: Python<'py>, M: f64, Q: f64, Lambda: f64, m: f64, q: f64) -> PyResult<Bound<'py, PyDict>> {
    let prof = PotentialProfile::new(&BlackHoleParams::new(M, Q, Lambda, m, q)).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("roots", prof.horizons().roots.to_vec())?;
    d.set_item("kappas", prof.horizons().kappas.to_vec())?;
    d.set_item("width_A", prof.width_a())?;
    d.set_item("beta", prof.phase_beta())?;
    Ok(d)
}

/// Physical partial-wave S-matrix blocks TL, R, L, TR with the unitarity
/// residual and the extraction spread.
#[pyfunction]
#[pyo3(signature = (M, Q, Lambda, m, q, energy, n))]
fn s_matrix<'py>(py: Python<'py>, M: f64, Q: f64, Lambda: f64, m: f64, q: f64, energy: f64, n: u32) -> PyResult<Bound<'py, PyDict>> {
    let p = BlackHoleParams::new(M, Q, Lambda, m, q);
    let (s, data) = py
        .detach(|| {
            let prof = PotentialProfile::new(&p)?;
            partial_wave_smatrix(energy, n, &prof, &ScatteringOptions::default())
        })
        .map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("TL", rows(&s.t_l))?;
    d.set_item("R", rows(&s.r))?;
    d.set_item("L", rows(&s.l))?;
    d.set_item("TR", rows(&s.t_r))?;
    d.set_item("unitarity", s.unitarity_residual())?;
    d.set_item("x_spread", data.x_spread)?;
    Ok(d)
}

/// Reflection blocks {n: L(energy, n)} or, with which="R", the physical R.
#[pyfunction]
#[pyo3(signature = (M, Q, Lambda, m, q, energy, ns, which="L"))]
fn reflection(py: Python<'_>, M: f64, Q: f64, Lambda: f64, m: f64, q: f64, energy: f64, ns: Vec<u32>, which: &str) -> PyResult<BTreeMap<u32, Rows>> {
    let w = self::which(which)?;
    let p = BlackHoleParams::new(M, Q, Lambda, m, q);
    let data = py.detach(|| synthesize_reflection_data(&p, energy, &ns, w)).map_err(to_py_err)?;
    Ok(data.iter().map(|(n, b)| (*n, rows(b))).collect())
}

/// Fit (M, Q, Lambda) to reflection data {n: 2x2 block} starting from `init`.
#[pyfunction]
#[pyo3(signature = (data, energy, m, q, init, which="L", tol=1e-10))]
fn recover<'py>(
    py: Python<'py>,
    data: BTreeMap<u32, Rows>,
    energy: f64,
    m: f64,
    q: f64,
    init: (f64, f64, f64),
    which: &str,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let w = self::which(which)?;
    let blocks = data
        .iter()
        .map(|(n, r)| from_rows(r).map(|b| (*n, b)))
        .collect::<Result<BTreeMap<u32, M2>, _>>()
        .map_err(to_py_err)?;
    let prob = InverseProblem::new(energy, blocks, w, BlackHoleParams::new(init.0, init.1, init.2, m, q));
    let res = py.detach(|| recover_parameters(&prob, tol)).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("M", res.params.mass)?;
    d.set_item("Q", res.params.charge)?;
    d.set_item("Lambda", res.params.lambda)?;
    d.set_item("residual", res.residual)?;
    d.set_item("iterations", res.iterations)?;
    d.set_item("phase", res.phase)?;
    Ok(d)
}

#[pymodule]
fn dsrn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(horizons, m)?)?;
    m.add_function(wrap_pyfunction!(s_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(reflection, m)?)?;
    m.add_function(wrap_pyfunction!(recover, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_round_trip_through_rows() {
        let b = M2::new(C::new(1.0, 2.0), C::new(-3.0, 0.5), C::new(0.0, -1.0), C::new(4.0, 4.0));
        let r = rows(&b);
        assert_eq!(r[0][1], C::new(-3.0, 0.5));
        assert_eq!(r[1][0], C::new(0.0, -1.0));
        assert_eq!(from_rows(&r).unwrap(), b);
        assert!(from_rows(&vec![vec![C::new(0.0, 0.0); 3]; 2]).is_err());
    }
}
