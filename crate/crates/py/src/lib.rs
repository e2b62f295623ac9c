//! Python bindings. All quantities are SI: tesla, seconds, rad/s.

use berrymag_core::analytic::{self, DynamicModel, GeometricModel};
use berrymag_core::estimate::{self as est, Measurement};
use berrymag_core::harness::{self, Engine, SweepSpec};
use berrymag_core::noise::{self, SpectralDensity};
use berrymag_core::quadrature::QuadratureSpec;
use berrymag_core::sequences::{self, ExecOptions, Protocol, SweepMethod};
use berrymag_core::{Error, PhysicalConstants};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(berrymag, BerrymagError, PyRuntimeError);
create_exception!(berrymag, UnresolvableError, BerrymagError);

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::OutOfRange(_) => PyValueError::new_err(e.to_string()),
        Error::Unresolvable(_) => UnresolvableError::new_err(e.to_string()),
        _ => BerrymagError::new_err(e.to_string()),
    }
}

/// Serializable results cross over as plain dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| BerrymagError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Constants", module = "berrymag", from_py_object)]
#[derive(Clone)]
struct PyConstants(PhysicalConstants);

#[pymethods]
impl PyConstants {
    #[new]
    #[pyo3(signature = (gamma=None, hyperfine_splitting=None))]
    fn new(gamma: Option<f64>, hyperfine_splitting: Option<f64>) -> PyResult<Self> {
        let d = PhysicalConstants::default();
        PhysicalConstants::new(gamma.unwrap_or(d.gamma), hyperfine_splitting.unwrap_or(d.hyperfine_splitting))
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma
    }

    #[getter]
    fn hyperfine_splitting(&self) -> f64 {
        self.0.hyperfine_splitting
    }

    fn __repr__(&self) -> String {
        format!("Constants(gamma={:e}, hyperfine_splitting={:e})", self.0.gamma, self.0.hyperfine_splitting)
    }
}

fn consts(c: Option<PyConstants>) -> PhysicalConstants {
    c.map_or_else(PhysicalConstants::default, |c| c.0)
}

/// A sampled Ornstein-Uhlenbeck field trajectory usable as noise.
#[pyclass(name = "OuTrajectory", module = "berrymag", frozen)]
struct PyOu(noise::OuTrajectory);

#[pymethods]
impl PyOu {
    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.0.samples.clone()
    }

    fn field_at(&self, t: f64) -> f64 {
        use sequences::NoiseSource;
        self.0.field_at(t)
    }
}

#[pyclass(name = "SequencePlan", module = "berrymag", frozen)]
struct PyPlan(sequences::SequencePlan);

#[pymethods]
impl PyPlan {
    #[staticmethod]
    fn ramsey(t: f64) -> PyResult<Self> {
        sequences::build_ramsey(t).map(Self).map_err(err)
    }

    #[staticmethod]
    fn hahn(t: f64) -> PyResult<Self> {
        sequences::build_hahn(t).map(Self).map_err(err)
    }

    #[staticmethod]
    fn berry(rabi: f64, n: u32, t: f64) -> PyResult<Self> {
        sequences::build_berry(rabi, n, t).map(Self).map_err(err)
    }

    #[getter]
    fn protocol(&self) -> &'static str {
        self.0.protocol.name()
    }

    #[getter]
    fn interaction_time(&self) -> f64 {
        self.0.interaction_time()
    }

    /// Segments as a list of dicts.
    fn segments<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.segments)
    }

    /// Final `P = s_z` at static field `b`, optionally with a noise trajectory.
    #[pyo3(signature = (b, constants=None, noise=None, mesh=false))]
    fn execute(&self, b: f64, constants: Option<PyConstants>, noise: Option<PyRef<'_, PyOu>>, mesh: bool) -> PyResult<f64> {
        let opts = ExecOptions {
            sweep_method: if mesh { SweepMethod::Mesh } else { SweepMethod::Auto },
            ..ExecOptions::default()
        };
        let src = noise.as_ref().map(|n| &n.0 as &dyn sequences::NoiseSource);
        sequences::execute(&self.0, &consts(constants), b, src, &opts).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("SequencePlan({}, T={:e})", self.0.protocol.name(), self.0.control.t)
    }
}

#[pyfunction]
#[pyo3(signature = (t, b, constants=None))]
fn ramsey_signal(t: f64, b: f64, constants: Option<PyConstants>) -> PyResult<f64> {
    let m = DynamicModel::new(t, &consts(constants)).map_err(err)?;
    Ok(analytic::ramsey_signal(&m, b))
}

#[pyfunction]
#[pyo3(signature = (rabi, n, b, constants=None))]
fn berry_signal(rabi: f64, n: u32, b: f64, constants: Option<PyConstants>) -> PyResult<f64> {
    let m = GeometricModel::new(rabi, n, &consts(constants)).map_err(err)?;
    Ok(analytic::berry_signal(&m, b))
}

#[pyfunction]
#[pyo3(signature = (rabi, n, constants=None))]
fn berry_field_range(rabi: f64, n: u32, constants: Option<PyConstants>) -> PyResult<f64> {
    let m = GeometricModel::new(rabi, n, &consts(constants)).map_err(err)?;
    Ok(analytic::berry_field_range(&m))
}

#[pyfunction]
#[pyo3(signature = (t, constants=None))]
fn ramsey_field_range(t: f64, constants: Option<PyConstants>) -> PyResult<f64> {
    let m = DynamicModel::new(t, &consts(constants)).map_err(err)?;
    Ok(analytic::ramsey_field_range(&m))
}

/// `(exact, approx)` adiabaticity of a Berry sweep.
#[pyfunction]
#[pyo3(signature = (rabi, n, t, b=0.0, constants=None))]
fn adiabaticity(rabi: f64, n: u32, t: f64, b: f64, constants: Option<PyConstants>) -> PyResult<(f64, f64)> {
    let a = analytic::adiabaticity(rabi, n, t, b, consts(constants).gamma).map_err(err)?;
    Ok((a.exact, a.approx))
}

fn measurement(p: f64, slope: Option<f64>, sigma: f64, delta_b: Option<f64>) -> Measurement {
    let mut m = Measurement::new(p, slope);
    m.sigma = sigma;
    m.delta_b = delta_b;
    m
}

#[pyfunction]
#[pyo3(signature = (rabi, n, p, slope, sigma=0.0, delta_b=None, constants=None))]
#[allow(clippy::too_many_arguments)]
fn estimate_geometric<'py>(
    py: Python<'py>,
    rabi: f64,
    n: u32,
    p: f64,
    slope: f64,
    sigma: f64,
    delta_b: Option<f64>,
    constants: Option<PyConstants>,
) -> PyResult<Bound<'py, PyAny>> {
    let m = GeometricModel::new(rabi, n, &consts(constants)).map_err(err)?;
    let e = est::estimate_geometric(&m, &measurement(p, Some(slope), sigma, delta_b)).map_err(err)?;
    to_py(py, &e)
}

#[pyfunction]
#[pyo3(signature = (rabi, n, p, constants=None))]
fn geometric_candidates<'py>(
    py: Python<'py>,
    rabi: f64,
    n: u32,
    p: f64,
    constants: Option<PyConstants>,
) -> PyResult<Bound<'py, PyAny>> {
    let m = GeometricModel::new(rabi, n, &consts(constants)).map_err(err)?;
    to_py(py, &est::geometric_candidates(&m, p))
}

#[pyfunction]
#[pyo3(signature = (t, p, window, slope=None, sigma=0.0, constants=None))]
fn estimate_dynamic<'py>(
    py: Python<'py>,
    t: f64,
    p: f64,
    window: (f64, f64),
    slope: Option<f64>,
    sigma: f64,
    constants: Option<PyConstants>,
) -> PyResult<Bound<'py, PyAny>> {
    let m = DynamicModel::new(t, &consts(constants)).map_err(err)?;
    let e = est::estimate_dynamic(&m, &measurement(p, slope, sigma, None), window).map_err(err)?;
    to_py(py, &e)
}

fn lorentzian(delta: f64, tau_c: f64) -> PyResult<SpectralDensity> {
    SpectralDensity::lorentzian(delta, tau_c).map_err(err)
}

/// Geometric, dynamic and total decoherence exponents for a Lorentzian bath.
#[pyfunction]
fn decoherence<'py>(py: Python<'py>, delta: f64, tau_c: f64, a: f64, t: f64) -> PyResult<Bound<'py, PyAny>> {
    let s = lorentzian(delta, tau_c)?;
    to_py(py, &noise::decoherence_function(&s, a, t, &QuadratureSpec::default()).map_err(err)?)
}

#[pyfunction]
fn coherence_decay<'py>(
    py: Python<'py>,
    delta: f64,
    tau_c: f64,
    a: f64,
    t_grid: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let s = lorentzian(delta, tau_c)?;
    to_py(py, &noise::coherence_decay(&s, a, &t_grid, &QuadratureSpec::default()).map_err(err)?)
}

#[pyfunction]
fn calibrate<'py>(py: Python<'py>, t2_star: f64, t2: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &noise::calibrate_noise(t2_star, t2, &QuadratureSpec::default()).map_err(err)?)
}

#[pyfunction]
fn spectral_overlay<'py>(
    py: Python<'py>,
    delta: f64,
    tau_c: f64,
    a: f64,
    t: f64,
    omega: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let s = lorentzian(delta, tau_c)?;
    to_py(py, &noise::spectral_overlay(&s, a, t, &omega).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (delta, tau_c, duration, dt, seed=0, index=0, constants=None))]
fn ou_trajectory(
    delta: f64,
    tau_c: f64,
    duration: f64,
    dt: f64,
    seed: u64,
    index: u64,
    constants: Option<PyConstants>,
) -> PyResult<PyOu> {
    let s = lorentzian(delta, tau_c)?;
    noise::ou_trajectory(&s, duration, dt, seed, index, &consts(constants))
        .map(PyOu)
        .map_err(err)
}

/// Runs a parameter sweep and returns one dict per grid point.
#[pyfunction]
#[pyo3(signature = (protocol, t, b, rabi=None, n=None, engine="analytic", sigma_p=1.0, overhead=0.0, workers=1, constants=None))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    protocol: &str,
    t: Vec<f64>,
    b: Vec<f64>,
    rabi: Option<Vec<f64>>,
    n: Option<Vec<u32>>,
    engine: &str,
    sigma_p: f64,
    overhead: f64,
    workers: usize,
    constants: Option<PyConstants>,
) -> PyResult<Bound<'py, PyAny>> {
    let protocol: Protocol = protocol.parse().map_err(err)?;
    let engine = match engine {
        "analytic" => Engine::Analytic,
        "numeric" => Engine::Numeric,
        other => return Err(PyValueError::new_err(format!("unknown engine '{other}'"))),
    };
    let mut spec = SweepSpec::new(protocol, engine);
    spec.t = t;
    spec.b = b;
    spec.rabi = rabi.unwrap_or_default();
    spec.n = n.unwrap_or_default();
    spec.sigma_p = sigma_p;
    spec.overhead = overhead;
    spec.workers = workers;
    spec.consts = consts(constants);
    let result = py.detach(|| harness::run_sweep(&spec)).map_err(err)?;
    to_py(py, &result.records)
}

#[pymodule]
fn berrymag(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConstants>()?;
    m.add_class::<PyPlan>()?;
    m.add_class::<PyOu>()?;
    m.add("BerrymagError", m.py().get_type::<BerrymagError>())?;
    m.add("UnresolvableError", m.py().get_type::<UnresolvableError>())?;
    m.add_function(wrap_pyfunction!(ramsey_signal, m)?)?;
    m.add_function(wrap_pyfunction!(berry_signal, m)?)?;
    m.add_function(wrap_pyfunction!(ramsey_field_range, m)?)?;
    m.add_function(wrap_pyfunction!(berry_field_range, m)?)?;
    m.add_function(wrap_pyfunction!(adiabaticity, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_geometric, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_candidates, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_dynamic, m)?)?;
    m.add_function(wrap_pyfunction!(decoherence, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_decay, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_overlay, m)?)?;
    m.add_function(wrap_pyfunction!(ou_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
