//! Python bindings for the `liouville` crate.
//!
//! Complex numbers cross the boundary as Python `complex`. Validation errors
//! raise `ValueError`, numerical failures raise `RuntimeError`; both messages
//! start with the error kind.

use liouville::correlators::{self, InsertionSet};
use liouville::dozz::{self, ScanGrid};
use liouville::mc::McConfig;
use liouville::semiclassical::{self, SemiclassicalProblem};
use liouville::special_fn::{self, UpsilonConfig};
use liouville::sphere_geom::{self, LiouvilleParams, SpherePoint};
use liouville::wrong_sign::{self, AnalyticFn, QuadratureSpec};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::sync::Arc;

fn err(e: liouville::Error) -> PyErr {
    let msg = format!("{}: {}", e.kind(), e);
    if e.is_validation() {
        PyValueError::new_err(msg)
    } else {
        PyRuntimeError::new_err(msg)
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for liouville::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn three(v: Vec<Complex64>) -> PyResult<[Complex64; 3]> {
    v.try_into().map_err(|_| PyValueError::new_err("Invalid: expected exactly three charges"))
}

fn estimate<'py>(py: Python<'py>, e: &correlators::CorrelationEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean", e.mean)?;
    d.set_item("stderr", e.stderr)?;
    d.set_item("n_samples", e.n_samples)?;
    d.set_item("prefactor_log", e.prefactor_log)?;
    d.set_item("max_weight_ratio", e.max_weight_ratio)?;
    d.set_item("delta_moment", e.delta_moment)?;
    d.set_item("heavy_tail_warning", e.heavy_tail_warning)?;
    d.set_item("statistical_failure", e.statistical_failure)?;
    Ok(d)
}

/// Υ_b(z).
#[pyfunction]
fn upsilon(py: Python<'_>, b: f64, z: Complex64) -> PyResult<Complex64> {
    py.detach(|| special_fn::upsilon(b, z, &UpsilonConfig::default())).py_err()
}

/// ln Υ_b(z), principal branch not enforced.
#[pyfunction]
fn ln_upsilon(py: Python<'_>, b: f64, z: Complex64) -> PyResult<Complex64> {
    py.detach(|| special_fn::ln_upsilon(b, z, &UpsilonConfig::default())).py_err()
}

/// γ(x) = Γ(x)/Γ(1 − x).
#[pyfunction]
fn gamma_ratio(x: Complex64) -> PyResult<Complex64> {
    special_fn::gamma_ratio(x).py_err()
}

/// Timelike structure constant for three charges.
#[pyfunction]
#[pyo3(signature = (b, alphas, mu = 1.0))]
fn structure_constant<'py>(py: Python<'py>, b: f64, alphas: Vec<Complex64>, mu: f64) -> PyResult<Bound<'py, PyDict>> {
    let p = LiouvilleParams::new(b, mu).py_err()?;
    let al = three(alphas)?;
    let sc = py.detach(|| dozz::structure_constant(&p, al, &UpsilonConfig::default())).py_err()?;
    let d = PyDict::new(py);
    d.set_item("value", sc.value)?;
    d.set_item("log_value", sc.log_value)?;
    d.set_item("w", sc.w)?;
    Ok(d)
}

/// Three-point function on the plane.
#[pyfunction]
#[pyo3(signature = (b, alphas, z, mu = 1.0))]
fn three_point(py: Python<'_>, b: f64, alphas: Vec<Complex64>, z: Vec<Complex64>, mu: f64) -> PyResult<Complex64> {
    let p = LiouvilleParams::new(b, mu).py_err()?;
    let (al, z) = (three(alphas)?, three(z)?);
    py.detach(|| dozz::three_point(&p, al, z, &UpsilonConfig::default())).py_err()
}

/// Monte Carlo k-point function with insertions on the plane.
#[pyfunction]
#[pyo3(signature = (b, alphas, z, mu = 1.0, samples = 100_000, seed = 0, workers = 1, frame = "plane"))]
#[allow(clippy::too_many_arguments)]
fn kpoint<'py>(
    py: Python<'py>,
    b: f64,
    alphas: Vec<Complex64>,
    z: Vec<Complex64>,
    mu: f64,
    samples: usize,
    seed: u64,
    workers: usize,
    frame: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let p = LiouvilleParams::new(b, mu).py_err()?;
    let mc = McConfig::new(samples, seed, workers).py_err()?;
    let ins = InsertionSet::plane(&z, &alphas).py_err()?;
    let e = py
        .detach(|| match frame {
            "plane" => correlators::kpoint_plane(&p, &ins, &mc),
            "sphere" => correlators::kpoint_sphere(&p, &ins.to_sphere()?, &mc),
            other => Err(liouville::Error::Invalid(format!("unknown frame {other}"))),
        })
        .py_err()?;
    estimate(py, &e)
}

/// Monte Carlo Selberg integral against its closed form.
#[pyfunction]
#[pyo3(signature = (b, alpha1, alpha2, w, samples = 200_000, seed = 0, workers = 1))]
fn selberg_check<'py>(
    py: Python<'py>,
    b: f64,
    alpha1: f64,
    alpha2: f64,
    w: u32,
    samples: usize,
    seed: u64,
    workers: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let mc = McConfig::new(samples, seed, workers).py_err()?;
    let e = py.detach(|| correlators::selberg_complex(b, alpha1, alpha2, w, &mc)).py_err()?;
    let p = LiouvilleParams::new(b, 1.0).py_err()?;
    let a3 = p.q - alpha1 - alpha2 - b * w as f64;
    let c = |x: f64| Complex64::new(x, 0.0);
    let closed = correlators::selberg_closed_form(b, c(alpha1), c(alpha2), c(a3), w).py_err()?;
    let d = estimate(py, &e)?;
    d.set_item("closed_form", closed)?;
    d.set_item("sigmas", (e.mean - closed).norm() / e.stderr)?;
    Ok(d)
}

/// Grid points of the fixed-w chart where the structure constant has a pole,
/// as (alpha1, alpha2, alpha3) tuples.
#[pyfunction]
#[pyo3(signature = (b, w, alpha1, alpha2, mu = 1.0))]
fn pole_scan(
    py: Python<'_>,
    b: f64,
    w: u32,
    alpha1: (f64, f64, usize),
    alpha2: (f64, f64, usize),
    mu: f64,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let p = LiouvilleParams::new(b, mu).py_err()?;
    let grid = ScanGrid {
        alpha1_min: alpha1.0,
        alpha1_max: alpha1.1,
        n1: alpha1.2,
        alpha2_min: alpha2.0,
        alpha2_max: alpha2.1,
        n2: alpha2.2,
    };
    let hits = py.detach(|| dozz::pole_scan(&p, w, &grid));
    Ok(hits.into_iter().map(|h| (h.alpha1, h.alpha2, h.alpha3)).collect())
}

/// Wrap a Python callable of one complex argument. Exceptions and non-complex
/// returns become NaN, which the integrator reports as a divergent integrand.
fn univariate(f: Py<PyAny>) -> AnalyticFn {
    let f = Arc::new(f);
    AnalyticFn::univariate(move |z| {
        Python::attach(|py| {
            f.call1(py, (z,))
                .and_then(|v| v.extract::<Complex64>(py))
                .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
        })
    })
}

/// Wrong-sign Gaussian expectation of an analytic function of one variable.
#[pyfunction]
#[pyo3(signature = (f, nodes = 200))]
fn expect_wrong_sign(py: Python<'_>, f: Py<PyAny>, nodes: usize) -> PyResult<Complex64> {
    let f = univariate(f);
    let q = QuadratureSpec { points: nodes, ..QuadratureSpec::default_for(1) };
    py.detach(|| wrong_sign::expect_wrong_sign(&f, &q)).py_err()
}

/// Backward heat flow of h to time t at the point x.
#[pyfunction]
#[pyo3(signature = (h, t, x, nodes = 200))]
fn backward_heat(py: Python<'_>, h: Py<PyAny>, t: f64, x: f64, nodes: usize) -> PyResult<Complex64> {
    let h = univariate(h);
    let q = QuadratureSpec { points: nodes, ..QuadratureSpec::default_for(1) };
    py.detach(|| wrong_sign::backward_heat(&h, t, &[x], &q)).py_err()
}

/// Naive continuation against the wrong-sign expectation, as (naive, correct).
#[pyfunction]
fn naive_vs_correct_demo(py: Python<'_>) -> PyResult<(Complex64, Complex64)> {
    let r = py.detach(wrong_sign::naive_vs_correct_demo).py_err()?;
    Ok((r.naive, r.correct))
}

/// Solve the semiclassical problem for insertions given as (lat, lon) pairs.
#[pyfunction]
#[pyo3(signature = (alphas, points, mu = 1.0, eps = std::f64::consts::PI / 32.0, damping = 0.5, max_iter = 500))]
fn solve_semiclassical<'py>(
    py: Python<'py>,
    alphas: Vec<f64>,
    points: Vec<(f64, f64)>,
    mu: f64,
    eps: f64,
    damping: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let pts: Vec<SpherePoint> = points.iter().map(|&(lat, lon)| SpherePoint::from_lat_lon(lat, lon)).collect();
    let p = SemiclassicalProblem::new(alphas, pts, mu).py_err()?;
    let (r, limit) = py
        .detach(|| {
            let mesh = Arc::new(sphere_geom::build_trapezoid_mesh(eps)?);
            let r = semiclassical::minimize_s(&p, mesh, damping, max_iter)?;
            let limit = semiclassical::limit_value(&p, &r)?;
            Ok((r, limit))
        })
        .py_err()?;
    let d = PyDict::new(py);
    d.set_item("limit_value", limit)?;
    d.set_item("s_value", r.s_value)?;
    d.set_item("multiplier_lambda", r.multiplier_lambda)?;
    d.set_item("fixed_point_residual", r.fixed_point_residual)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("beta", p.beta)?;
    let centers: Vec<(f64, f64)> = r.rho_hat.mesh.cells.iter().map(|c| c.center.lat_lon()).collect();
    d.set_item("cell_centers", centers)?;
    d.set_item("cell_areas", r.rho_hat.mesh.cells.iter().map(|c| c.area).collect::<Vec<_>>())?;
    d.set_item("rho_hat", r.rho_hat.values.clone())?;
    Ok(d)
}

/// Round-sphere Green function between two points given as (lat, lon).
#[pyfunction]
fn green(x: (f64, f64), y: (f64, f64)) -> PyResult<f64> {
    sphere_geom::green(&SpherePoint::from_lat_lon(x.0, x.1), &SpherePoint::from_lat_lon(y.0, y.1)).py_err()
}

#[pymodule]
fn liouville_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(upsilon, m)?)?;
    m.add_function(wrap_pyfunction!(ln_upsilon, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(structure_constant, m)?)?;
    m.add_function(wrap_pyfunction!(three_point, m)?)?;
    m.add_function(wrap_pyfunction!(kpoint, m)?)?;
    m.add_function(wrap_pyfunction!(selberg_check, m)?)?;
    m.add_function(wrap_pyfunction!(pole_scan, m)?)?;
    m.add_function(wrap_pyfunction!(expect_wrong_sign, m)?)?;
    m.add_function(wrap_pyfunction!(backward_heat, m)?)?;
    m.add_function(wrap_pyfunction!(naive_vs_correct_demo, m)?)?;
    m.add_function(wrap_pyfunction!(solve_semiclassical, m)?)?;
    m.add_function(wrap_pyfunction!(green, m)?)?;
    Ok(())
}
