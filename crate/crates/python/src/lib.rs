//! Python bindings. Vectors and matrices cross the boundary as lists.

use std::collections::BTreeMap;

use mzcg_core::benchmark as bm;
use mzcg_core::experiments::{self, Experiment, ExperimentConfig, Settings};
use mzcg_core::kernel;
use mzcg_core::sde;
use mzcg_core::{Error, IntegratorConfig, ModelKind, NoiseStream, SelectorMatrix, Thermostat};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

/// Row-major nested lists.
type Matrix = Vec<Vec<f64>>;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NumericalBlowup { .. } => PyRuntimeError::new_err(e.to_string()),
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn thermostat(on: bool) -> Thermostat {
    if on {
        Thermostat::On
    } else {
        Thermostat::Off
    }
}

#[pyclass(name = "BenchmarkParams", from_py_object)]
#[derive(Clone, Copy)]
struct PyParams(bm::BenchmarkParams);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (mu, lambda_, tau, omega, beta=1.0, deterministic=false))]
    fn new(
        mu: f64,
        lambda_: f64,
        tau: f64,
        omega: f64,
        beta: f64,
        deterministic: bool,
    ) -> PyResult<Self> {
        let p = bm::BenchmarkParams::new(mu, lambda_, tau, omega, beta).map_err(py_err)?;
        Ok(Self(p.with_deterministic(deterministic)))
    }

    #[staticmethod]
    fn steep_valley() -> Self {
        Self(bm::BenchmarkParams::steep_valley())
    }

    #[staticmethod]
    fn shallow_valley() -> Self {
        Self(bm::BenchmarkParams::shallow_valley())
    }

    fn with_beta(&self, beta: f64) -> PyResult<Self> {
        let p = self.0.with_beta(beta);
        p.validate().map_err(py_err)?;
        Ok(Self(p))
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu
    }
    #[getter(lambda_)]
    fn lambda(&self) -> f64 {
        self.0.lambda
    }
    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau
    }
    #[getter]
    fn omega(&self) -> f64 {
        self.0.omega
    }
    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }
    #[getter]
    fn deterministic(&self) -> bool {
        self.0.deterministic
    }

    fn potential(&self, x: f64, y: f64) -> f64 {
        bm::potential(&self.0, x, y)
    }

    fn grad_potential(&self, x: f64, y: f64) -> (f64, f64) {
        let g = bm::grad_potential(&self.0, x, y);
        (g[0], g[1])
    }

    fn orthogonal_drift(&self, x: f64, y: f64) -> (f64, f64) {
        let d = bm::orthogonal_drift(&self.0, x, y);
        (d[0], d[1])
    }

    fn effective_potential_grad(&self, h: f64) -> f64 {
        bm::effective_potential_grad(&self.0, h)
    }

    fn valley_floor(&self, x: f64) -> f64 {
        self.0.valley_floor(x)
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "BenchmarkParams(mu={}, lambda_={}, tau={}, omega={}, beta={}, deterministic={})",
            p.mu,
            p.lambda,
            p.tau,
            p.omega,
            p.beta,
            if p.deterministic { "True" } else { "False" }
        )
    }
}

fn to_rows(m: &DMatrix<f64>) -> Matrix {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[pyclass(name = "CgMap")]
struct PyCgMap(mzcg_core::CgMap);

#[pymethods]
impl PyCgMap {
    #[new]
    fn new(phi: Matrix) -> PyResult<Self> {
        let rows: Vec<&[f64]> = phi.iter().map(Vec::as_slice).collect();
        let sel = SelectorMatrix::from_rows(&rows).map_err(py_err)?;
        Ok(Self(mzcg_core::CgMap::new(sel).map_err(py_err)?))
    }

    #[staticmethod]
    fn benchmark() -> Self {
        Self(mzcg_core::geometry::benchmark_map())
    }

    #[getter]
    fn phi(&self) -> Matrix {
        to_rows(self.0.phi())
    }
    #[getter]
    fn phi_star(&self) -> Matrix {
        to_rows(self.0.phi_star())
    }
    #[getter]
    fn psi(&self) -> Matrix {
        to_rows(self.0.psi())
    }
    #[getter]
    fn sigma(&self) -> Matrix {
        to_rows(self.0.sigma())
    }
    #[getter]
    fn sigma_inv(&self) -> Matrix {
        to_rows(self.0.sigma_inv())
    }

    fn decompose(&self, x: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        self.0.decompose(&x).map_err(py_err)
    }

    fn reconstruct(&self, h: Vec<f64>, xt: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.reconstruct(&h, &xt).map_err(py_err)
    }

    fn partition_of_identity_error(&self) -> f64 {
        self.0.partition_of_identity_error()
    }
}

#[pyclass(name = "EffectiveModel")]
struct PyModel(mzcg_core::EffectiveModel);

#[pymethods]
impl PyModel {
    /// `kind` is one of "memory-corrected", "memory-free", "naive-memory".
    #[new]
    fn new(kind: &str, params: PyParams) -> PyResult<Self> {
        let kind: ModelKind = kind.parse().map_err(py_err)?;
        Ok(Self(
            mzcg_core::EffectiveModel::new(kind, params.0).map_err(py_err)?,
        ))
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind.name()
    }

    fn drift(&self, h: f64) -> f64 {
        self.0.drift(h)
    }

    fn diffusion(&self, h: f64) -> PyResult<f64> {
        self.0.diffusion(h).map_err(py_err)
    }
}

#[pyfunction]
fn approx_kernel(p: PyParams, s: f64, h: f64) -> f64 {
    kernel::approx_kernel(&p.0, s, h)
}

#[pyfunction]
fn approx_kernel_div(p: PyParams, s: f64, h: f64) -> f64 {
    kernel::approx_kernel_div(&p.0, s, h)
}

/// Returns `(drift_term, div_term)`.
#[pyfunction]
fn memory_integral_closed_form(p: PyParams, h: f64) -> (f64, f64) {
    kernel::memory_integral_closed_form(&p.0, h)
}

/// Returns `(times, states)` with `states[i] = [x, y]`.
#[pyfunction]
#[pyo3(signature = (p, x0, y0, dt, t_final, record_stride=1, seed=0, stream=0, thermostat_on=true))]
#[allow(clippy::too_many_arguments)]
fn simulate_full(
    py: Python<'_>,
    p: PyParams,
    x0: f64,
    y0: f64,
    dt: f64,
    t_final: f64,
    record_stride: u64,
    seed: u64,
    stream: u64,
    thermostat_on: bool,
) -> PyResult<(Vec<f64>, Matrix)> {
    let cfg = IntegratorConfig::new(dt, t_final, record_stride).map_err(py_err)?;
    let tr = py
        .detach(|| {
            sde::simulate_full(
                &p.0,
                [x0, y0],
                &cfg,
                NoiseStream::new(seed, stream),
                thermostat(thermostat_on),
            )
        })
        .map_err(py_err)?;
    Ok((
        tr.times().to_vec(),
        tr.states().map(<[f64]>::to_vec).collect(),
    ))
}

/// Returns `(times, values)`.
#[pyfunction]
#[pyo3(signature = (model, h0, dt, t_final, record_stride=1, seed=0, stream=0, thermostat_on=false))]
#[allow(clippy::too_many_arguments)]
fn simulate_scalar(
    py: Python<'_>,
    model: &PyModel,
    h0: f64,
    dt: f64,
    t_final: f64,
    record_stride: u64,
    seed: u64,
    stream: u64,
    thermostat_on: bool,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let cfg = IntegratorConfig::new(dt, t_final, record_stride).map_err(py_err)?;
    let m = model.0.clone();
    let tr = py
        .detach(|| {
            sde::simulate_scalar(
                &m,
                h0,
                &cfg,
                NoiseStream::new(seed, stream),
                thermostat(thermostat_on),
            )
        })
        .map_err(py_err)?;
    Ok((tr.times().to_vec(), tr.component(0)))
}

/// Monte Carlo kernel estimate. Returns `(lags, values, stderr)`.
#[pyfunction]
#[pyo3(signature = (p, x0, lags, n_samples, seed=0, max_dt=None))]
fn empirical_kernel(
    py: Python<'_>,
    p: PyParams,
    x0: f64,
    lags: Vec<f64>,
    n_samples: usize,
    seed: u64,
    max_dt: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let dt = max_dt.unwrap_or(1e-4 / p.0.lambda);
    let horizon = lags.last().copied().unwrap_or(dt).max(dt);
    let cfg = IntegratorConfig::new(dt, horizon, 1).map_err(py_err)?;
    let k = py
        .detach(|| {
            kernel::empirical_kernel(&p.0, x0, &lags, n_samples, &NoiseStream::new(seed, 0), &cfg)
        })
        .map_err(py_err)?;
    Ok((k.lags, k.values, k.stderr))
}

#[pyfunction]
#[pyo3(signature = (p, x0, n=60, span=5.0))]
fn default_lag_grid(p: PyParams, x0: f64, n: usize, span: f64) -> Vec<f64> {
    kernel::default_lag_grid(&p.0, x0, n, span)
}

/// Run a CLI experiment. `settings` maps config keys to values. Returns
/// `(output_paths, summary)`; raises `RuntimeError` on blowup of the reference
/// dynamics after writing the partial output.
#[pyfunction]
#[pyo3(signature = (experiment, settings=None, desk_scale=false))]
fn run_experiment(
    py: Python<'_>,
    experiment: &str,
    settings: Option<BTreeMap<String, Bound<'_, PyAny>>>,
    desk_scale: bool,
) -> PyResult<(Vec<String>, BTreeMap<String, String>)> {
    let exp: Experiment = experiment.parse().map_err(py_err)?;
    let mut s = Settings::new();
    for (k, v) in settings.unwrap_or_default() {
        s.set(&k, v.str()?.to_string()).map_err(py_err)?;
    }
    let cfg = ExperimentConfig::resolve(exp, desk_scale, &s).map_err(py_err)?;
    let report = py.detach(|| experiments::run(&cfg)).map_err(py_err)?;
    if let Some(b) = report.blowup {
        return Err(PyRuntimeError::new_err(format!(
            "numerical blowup at step {} (t={}); partial output written",
            b.step, b.time
        )));
    }
    let outputs = report
        .outputs
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    Ok((outputs, report.summary.into_iter().collect()))
}

#[pymodule]
fn mzcg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyCgMap>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(approx_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(approx_kernel_div, m)?)?;
    m.add_function(wrap_pyfunction!(memory_integral_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_full, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_scalar, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(default_lag_grid, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
