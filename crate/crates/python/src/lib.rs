//! Python bindings: `import tscale`.

use nalgebra::{DMatrix, DVector};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tscale::cli::commands::{self, exit_code, EXIT_INPUT};
use tscale::cli::document::{Model, SystemDocument};
use tscale::dynamics::{self, LinearSystem, SignalRole, Trajectory};
use tscale::exact::{QMatrix, RationalMatrix};
use tscale::gramian::{self, GramianResult};
use tscale::linalg::C64;
use tscale::ranktests;
use tscale::realization::{self, Provenance, Realization};
use tscale::stability;
use tscale::timescale::TimeScaleGrid;

create_exception!(tscale, PreconditionError, PyException, "A mathematical precondition does not hold.");

fn err(e: tscale::Error) -> PyErr {
    if exit_code(&e) == EXIT_INPUT {
        PyValueError::new_err(e.to_string())
    } else {
        PreconditionError::new_err(e.to_string())
    }
}

fn to_matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err("expected a nonempty rectangular list of rows"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|row| row.iter().copied().collect()).collect()
}

fn to_qmatrix(rows: Vec<Vec<String>>) -> PyResult<QMatrix> {
    QMatrix::parse_rows(&rows).map_err(err)
}

fn trajectory_pair(t: &Trajectory) -> (Vec<f64>, Vec<Vec<f64>>) {
    let values = t.values().iter().map(|v| v.iter().copied().collect()).collect();
    (t.times().to_vec(), values)
}

/// A time scale built from a spec string such as `"interval 0 1 0.001; points 2 4"`.
#[pyclass(module = "tscale", frozen)]
struct TimeScale {
    grid: TimeScaleGrid,
}

#[pymethods]
impl TimeScale {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let spec = spec.parse().map_err(err)?;
        Ok(Self {
            grid: TimeScaleGrid::build(spec).map_err(err)?,
        })
    }

    fn times(&self) -> Vec<f64> {
        self.grid.times().to_vec()
    }

    fn mu(&self, t: f64) -> PyResult<f64> {
        self.grid.mu(t).map_err(err)
    }

    fn sigma(&self, t: f64) -> PyResult<f64> {
        self.grid.sigma(t).map_err(err)
    }

    #[getter]
    fn t_min(&self) -> f64 {
        self.grid.t_min()
    }

    #[getter]
    fn t_max(&self) -> f64 {
        self.grid.t_max()
    }

    #[getter]
    fn mu_max(&self) -> f64 {
        self.grid.mu_max()
    }

    fn __len__(&self) -> usize {
        self.grid.len()
    }

    fn __repr__(&self) -> String {
        format!("TimeScale({:?})", self.grid.spec().to_string())
    }
}

/// Time-invariant `x^Δ = A x + B u`, `y = C x + D u`.
#[pyclass(module = "tscale", frozen)]
struct System {
    sys: LinearSystem,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
}

#[pymethods]
impl System {
    #[new]
    #[pyo3(signature = (a, b, c, d = None))]
    fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<Vec<f64>>, d: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let (a, b, c) = (to_matrix(a)?, to_matrix(b)?, to_matrix(c)?);
        let sys = match d {
            None => LinearSystem::time_invariant(a.clone(), b.clone(), c.clone()),
            Some(d) => LinearSystem::new(a.clone().into(), b.clone().into(), c.clone().into(), to_matrix(d)?.into()),
        }
        .map_err(err)?;
        Ok(Self { sys, a, b, c })
    }

    /// `(n, m, p)`
    #[getter]
    fn dims(&self) -> (usize, usize, usize) {
        self.sys.dims()
    }

    fn is_regressive(&self, grid: &TimeScale) -> PyResult<bool> {
        Ok(dynamics::check_regressive(&self.sys, &grid.grid).map_err(err)?.ok)
    }

    /// `Φ_A(t, s)`
    fn transition_matrix(&self, grid: &TimeScale, t: f64, s: f64) -> PyResult<Vec<Vec<f64>>> {
        Ok(from_matrix(&dynamics::transition_matrix(&self.sys, &grid.grid, t, s).map_err(err)?))
    }

    /// Simulates from `x0` under a constant input; returns `(times, states, outputs)`.
    #[pyo3(signature = (grid, x0, t0, tf, u = None))]
    fn simulate(
        &self,
        grid: &TimeScale,
        x0: Vec<f64>,
        t0: f64,
        tf: f64,
        u: Option<Vec<f64>>,
    ) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let m = self.b.ncols();
        let u = DVector::from_vec(u.unwrap_or_else(|| vec![0.0; m]));
        let u = Trajectory::constant(&grid.grid, SignalRole::Input, t0, tf, u).map_err(err)?;
        let (xs, ys) = dynamics::simulate(&self.sys, &grid.grid, &DVector::from_vec(x0), &u, t0, tf).map_err(err)?;
        let (times, states) = trajectory_pair(&xs);
        Ok((times, states, trajectory_pair(&ys).1))
    }

    fn controllability_gramian<'py>(&self, py: Python<'py>, grid: &TimeScale, t0: f64, tf: f64) -> PyResult<Bound<'py, PyDict>> {
        gramian_dict(py, gramian::controllability_gramian(&self.sys, &grid.grid, t0, tf).map_err(err)?)
    }

    fn observability_gramian<'py>(&self, py: Python<'py>, grid: &TimeScale, t0: f64, tf: f64) -> PyResult<Bound<'py, PyDict>> {
        gramian_dict(py, gramian::observability_gramian(&self.sys, &grid.grid, t0, tf).map_err(err)?)
    }

    /// Minimum-energy input steering `x0` to `xf`; returns `(times, inputs)`.
    fn min_energy_input(
        &self,
        grid: &TimeScale,
        t0: f64,
        tf: f64,
        x0: Vec<f64>,
        xf: Vec<f64>,
    ) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let (x0, xf) = (DVector::from_vec(x0), DVector::from_vec(xf));
        let u = gramian::min_energy_input(&self.sys, &grid.grid, t0, tf, &x0, &xf).map_err(err)?;
        Ok(trajectory_pair(&u))
    }

    /// Recovers `x(t0)` from zero-input outputs sampled at `times`.
    fn reconstruct_initial_state(
        &self,
        grid: &TimeScale,
        times: Vec<f64>,
        outputs: Vec<Vec<f64>>,
        t0: f64,
        tf: f64,
    ) -> PyResult<Vec<f64>> {
        let values = outputs.into_iter().map(DVector::from_vec).collect();
        let y = Trajectory::new(SignalRole::Output, times, values).map_err(err)?;
        let x0 = gramian::reconstruct_initial_state(&self.sys, &grid.grid, &y, t0, tf).map_err(err)?;
        Ok(x0.iter().copied().collect())
    }

    /// Kalman rank test on `[B, AB, ..]`; returns `(rank, controllable)`.
    fn kalman_controllability(&self) -> PyResult<(usize, bool)> {
        let v = ranktests::kalman_controllability(&self.a, &self.b, None).map_err(err)?;
        Ok((v.rank, v.pass))
    }

    fn kalman_observability(&self) -> PyResult<(usize, bool)> {
        let v = ranktests::kalman_observability(&self.a, &self.c, None).map_err(err)?;
        Ok((v.rank, v.pass))
    }

    fn pbh_controllability(&self) -> PyResult<bool> {
        Ok(ranktests::pbh_controllability(&self.a, &self.b, None).map_err(err)?.pass)
    }

    fn pbh_observability(&self) -> PyResult<bool> {
        Ok(ranktests::pbh_observability(&self.a, &self.c, None).map_err(err)?.pass)
    }

    /// Verdict of the spectrum criterion: `"stable"`, `"unstable"`, `"marginal"` or `"inconclusive"`.
    #[pyo3(signature = (grid, horizons, delta = 1e-3))]
    fn exp_stable_spectrum(&self, grid: &TimeScale, horizons: Vec<f64>, delta: f64) -> PyResult<&'static str> {
        let v = stability::exp_stable_spectrum(&self.a, &grid.grid, &horizons, delta).map_err(err)?;
        Ok(v.verdict.as_str())
    }

    /// Integral criterion for exponential stability; returns `(verdict, partial integrals)`.
    fn exp_stable_integral(&self, grid: &TimeScale, horizons: Vec<f64>) -> PyResult<(&'static str, Vec<f64>)> {
        let b = stability::exp_stable_integral(&self.sys, &grid.grid, &horizons).map_err(err)?;
        Ok((b.verdict().as_str(), b.partials))
    }

    /// `Φ_A(t, t0)` rebuilt from the spectrum of `A`.
    fn spectral_exponential(&self, grid: &TimeScale, t0: f64, t: f64) -> PyResult<Vec<Vec<f64>>> {
        Ok(from_matrix(&stability::spectral_exponential(&self.a, &grid.grid, t0, t).map_err(err)?))
    }
}

fn gramian_dict(py: Python<'_>, g: GramianResult) -> PyResult<Bound<'_, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("matrix", from_matrix(&g.matrix))?;
    d.set_item("eigen_min", g.eigen_min)?;
    d.set_item("eigen_max", g.eigen_max)?;
    d.set_item("invertible", g.invertible)?;
    Ok(d)
}

fn realization_dict<'py>(py: Python<'py>, r: &Realization) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("A", r.a.to_string_rows())?;
    d.set_item("B", r.b.to_string_rows())?;
    d.set_item("C", r.c.to_string_rows())?;
    let m = realization::is_minimal(r).map_err(err)?;
    d.set_item("minimal", m.minimal)?;
    Ok(d)
}

/// Exact Kalman controllability of rational `(A, B)` given as strings like `"-8/45"`.
#[pyfunction]
fn kalman_controllability_exact<'py>(
    py: Python<'py>,
    a: Vec<Vec<String>>,
    b: Vec<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let v = ranktests::kalman_controllability_exact(&to_qmatrix(a)?, &to_qmatrix(b)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("matrix", v.matrix.to_string_rows())?;
    d.set_item("rank", v.rank)?;
    d.set_item("controllable", v.pass)?;
    Ok(d)
}

#[pyfunction]
fn kalman_observability_exact<'py>(
    py: Python<'py>,
    a: Vec<Vec<String>>,
    c: Vec<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let v = ranktests::kalman_observability_exact(&to_qmatrix(a)?, &to_qmatrix(c)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("matrix", v.matrix.to_string_rows())?;
    d.set_item("rank", v.rank)?;
    d.set_item("observable", v.pass)?;
    Ok(d)
}

/// Transfer function of a rational realization, in the `num / den` text format.
#[pyfunction]
fn transfer_function(a: Vec<Vec<String>>, b: Vec<Vec<String>>, c: Vec<Vec<String>>) -> PyResult<String> {
    let r = Realization::new(to_qmatrix(a)?, to_qmatrix(b)?, to_qmatrix(c)?, Provenance::User).map_err(err)?;
    Ok(realization::transfer_function(&r).map_err(err)?.to_text())
}

/// Companion realization of a strictly proper transfer function such as `"333,2700 / 5,75,270"`.
#[pyfunction]
fn realize<'py>(py: Python<'py>, tf: &str) -> PyResult<Bound<'py, PyDict>> {
    let g: RationalMatrix = tf.parse().map_err(err)?;
    let r = realization::companion_realization(&g).map_err(err)?;
    realization_dict(py, &r)
}

/// Exact eigenvalues of a rational matrix, or `None` if the spectrum is not rational.
#[pyfunction]
fn rational_spectrum(a: Vec<Vec<String>>) -> PyResult<Option<Vec<(String, usize)>>> {
    let s = realization::rational_spectrum(&to_qmatrix(a)?).map_err(err)?;
    Ok(s.map(|v| v.into_iter().map(|(q, k)| (q.to_string(), k)).collect()))
}

/// `"inside"`, `"outside"` or `"marginal"` for the stability region of the time scale.
#[pyfunction]
#[pyo3(signature = (grid, lam, horizons, delta = 1e-3))]
fn in_stability_region(grid: &TimeScale, lam: C64, horizons: Vec<f64>, delta: f64) -> PyResult<&'static str> {
    let q = stability::in_stability_region(&grid.grid, lam, &horizons, delta).map_err(err)?;
    Ok(q.region.as_str())
}

/// BIBO stability of a rational realization by the pole and integral routes.
#[pyfunction]
#[pyo3(signature = (a, b, c, grid, horizons, delta = 1e-3))]
fn bibo_ti<'py>(
    py: Python<'py>,
    a: Vec<Vec<String>>,
    b: Vec<Vec<String>>,
    c: Vec<Vec<String>>,
    grid: &TimeScale,
    horizons: Vec<f64>,
    delta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = Realization::new(to_qmatrix(a)?, to_qmatrix(b)?, to_qmatrix(c)?, Provenance::User).map_err(err)?;
    let v = stability::bibo_ti(&r, &grid.grid, &horizons, delta).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("verdict", v.verdict.as_str())?;
    d.set_item("pole_verdict", v.pole_verdict.as_str())?;
    d.set_item("routes_agree", v.routes_agree)?;
    d.set_item("warning", v.warning)?;
    Ok(d)
}

/// Runs `tscale analyze` on a TOML document; returns `(report_json, exit_code)`.
#[pyfunction]
fn analyze(document: &str) -> PyResult<(String, i32)> {
    let doc = SystemDocument::parse(document).map_err(err)?;
    let model = Model::from_document(&doc).map_err(err)?;
    let out = commands::analyze(&model, "<python>", "analyze").map_err(err)?;
    Ok((out.report.to_json(), out.code))
}

#[pymodule]
#[pyo3(name = "tscale")]
fn tscale_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PreconditionError", m.py().get_type::<PreconditionError>())?;
    m.add_class::<TimeScale>()?;
    m.add_class::<System>()?;
    m.add_function(wrap_pyfunction!(kalman_controllability_exact, m)?)?;
    m.add_function(wrap_pyfunction!(kalman_observability_exact, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_function, m)?)?;
    m.add_function(wrap_pyfunction!(realize, m)?)?;
    m.add_function(wrap_pyfunction!(rational_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(in_stability_region, m)?)?;
    m.add_function(wrap_pyfunction!(bibo_ti, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    Ok(())
}
