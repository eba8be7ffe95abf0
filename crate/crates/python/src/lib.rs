//! Python module `ipid`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ipid_core::equivalence;
use ipid_core::scenarios::{self, builtin, BUILTIN_NAMES, TRAJECTORY_COLUMNS};
use ipid_core::{
    signals, tuning, ClassicGains, ClassicKind, Error, FaultModel, IntelligentConfig, IntelligentKind, Metrics,
    NoiseModel, ReferenceSample, RunConfig, TimeSeries,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Diverged { .. } | Error::NotSettled(_) | Error::DegenerateResponse => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn intelligent(kind: &str, alpha: f64, kp: f64, ki: f64, kd: f64) -> PyResult<(IntelligentKind, IntelligentConfig)> {
    let kind: IntelligentKind = kind.parse().map_err(py_err)?;
    let cfg = IntelligentConfig::for_kind(kind, alpha, kp, ki, kd).map_err(py_err)?;
    Ok((kind, cfg))
}

/// Classic gains equivalent to an intelligent controller sampled at `h`.
///
/// Returns a dict with `classic` (the counterpart kind) and one entry per
/// gain slot.
#[pyfunction]
#[pyo3(signature = (kind, alpha, h, kp=0.0, ki=0.0, kd=0.0))]
fn map_gains<'py>(py: Python<'py>, kind: &str, alpha: f64, h: f64, kp: f64, ki: f64, kd: f64) -> PyResult<Bound<'py, PyDict>> {
    let (kind, cfg) = intelligent(kind, alpha, kp, ki, kd)?;
    let corr = equivalence::map_gains(kind, &cfg, h).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("classic", corr.classic_kind.name())?;
    for (slot, value) in corr.entries() {
        d.set_item(slot, value)?;
    }
    Ok(d)
}

/// Drives both controllers of a pair with `errors` and compares outputs.
#[pyfunction]
#[pyo3(signature = (kind, alpha, h, errors, kp=0.0, ki=0.0, kd=0.0))]
fn verify_equivalence<'py>(
    py: Python<'py>,
    kind: &str,
    alpha: f64,
    h: f64,
    errors: Vec<f64>,
    kp: f64,
    ki: f64,
    kd: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let (kind, cfg) = intelligent(kind, alpha, kp, ki, kd)?;
    let e = TimeSeries::new(h, 0.0, errors).map_err(py_err)?;
    let r = equivalence::verify_equivalence(kind, &cfg, h, &e).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("max_abs_diff", r.max_abs_diff)?;
    d.set_item("max_abs_u", r.max_abs_u)?;
    d.set_item("samples", r.samples)?;
    d.set_item("tolerance", r.tolerance())?;
    d.set_item("passes", r.passes())?;
    Ok(d)
}

#[pyclass(name = "FopdtFit", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyFopdtFit {
    #[pyo3(get)]
    gain: f64,
    #[pyo3(get)]
    time_constant: f64,
    #[pyo3(get)]
    delay: f64,
}

#[pymethods]
impl PyFopdtFit {
    #[new]
    fn new(gain: f64, time_constant: f64, delay: f64) -> Self {
        PyFopdtFit { gain, time_constant, delay }
    }

    fn __repr__(&self) -> String {
        format!("FopdtFit(gain={}, time_constant={}, delay={})", self.gain, self.time_constant, self.delay)
    }
}

/// Fits `k e^{-tau s} / (1 + T s)` to a step response sampled every `h`
/// from the step instant. `y_initial` defaults to the first sample.
#[pyfunction]
#[pyo3(signature = (response, h, u_step=1.0, y_initial=None))]
fn identify_broida(response: Vec<f64>, h: f64, u_step: f64, y_initial: Option<f64>) -> PyResult<PyFopdtFit> {
    let y0 = y_initial.or_else(|| response.first().copied()).unwrap_or(0.0);
    let s = TimeSeries::new(h, 0.0, response).map_err(py_err)?;
    let fit = tuning::identify_broida(&s, u_step, y0).map_err(py_err)?;
    Ok(PyFopdtFit { gain: fit.gain, time_constant: fit.time_constant, delay: fit.delay })
}

/// PI gains `(kp, ki)` from a fit; `floor` raises a too-small dead time.
#[pyfunction]
#[pyo3(signature = (fit, floor=None))]
fn tune_pi_broida(fit: PyFopdtFit, floor: Option<f64>) -> PyResult<(f64, f64)> {
    let f = tuning::FopdtFit { gain: fit.gain, time_constant: fit.time_constant, delay: fit.delay };
    let g = match floor {
        Some(floor) => tuning::tune_pi_broida_with_floor(&f, floor),
        None => tuning::tune_pi_broida(&f),
    }
    .map_err(py_err)?;
    Ok((g.kp, g.ki))
}

#[pyfunction]
#[pyo3(signature = (values, h, order=1))]
fn backward_difference(values: Vec<f64>, h: f64, order: usize) -> PyResult<Vec<f64>> {
    let s = TimeSeries::new(h, 0.0, values).map_err(py_err)?;
    Ok(signals::backward_difference(&s, order).map_err(py_err)?.into_values())
}

#[pyfunction]
fn moving_average(values: Vec<f64>, window: usize) -> PyResult<Vec<f64>> {
    let s = TimeSeries::new(1.0, 0.0, values).map_err(py_err)?;
    Ok(signals::moving_average(&s, window).map_err(py_err)?.into_values())
}

/// Power-loss fault: `decay^(t/h) u` for `t > onset`, `u` otherwise.
#[pyfunction]
#[pyo3(signature = (u, t, h, onset=4.0, decay=0.996))]
fn apply_fault(u: f64, t: f64, h: f64, onset: f64, decay: f64) -> PyResult<f64> {
    let fault = FaultModel::PowerLoss { onset, decay };
    fault.validate().map_err(py_err)?;
    Ok(fault.apply(u, t, h))
}

#[pyfunction]
fn builtin_scenarios() -> Vec<&'static str> {
    BUILTIN_NAMES.to_vec()
}

fn metrics_dict<'py>(py: Python<'py>, m: &Metrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("window", m.window)?;
    d.set_item("iae", m.iae)?;
    d.set_item("itae", m.itae)?;
    d.set_item("max_overshoot", m.max_overshoot)?;
    d.set_item("settling_time_2pct", m.settling_time_2pct)?;
    d.set_item("final_abs_error", m.final_abs_error)?;
    Ok(d)
}

/// Runs a builtin scenario by name, or a TOML configuration given as text.
///
/// Returns a dict holding one list per trajectory column, `metrics`,
/// `window_metrics` (or `None`) and `diverged_at` (or `None`).
#[pyfunction]
#[pyo3(signature = (name=None, config=None, seed=None))]
fn run_scenario<'py>(
    py: Python<'py>,
    name: Option<&str>,
    config: Option<&str>,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut s = match (name, config) {
        (Some(n), None) => builtin(n).ok_or_else(|| PyValueError::new_err(format!("unknown scenario '{n}'")))?,
        (None, Some(text)) => RunConfig::from_toml(text).and_then(|c| c.to_scenario()).map_err(py_err)?,
        _ => return Err(PyValueError::new_err("give exactly one of `name` or `config`")),
    };
    if let Some(seed) = seed {
        s.noise = s.noise.with_seed(seed);
    }
    let run = py.detach(|| scenarios::run_scenario(&s)).map_err(py_err)?;
    let d = PyDict::new(py);
    let t = &run.trajectory;
    let cols = [
        &t.time,
        &t.setpoint,
        &t.reference,
        &t.output,
        &t.output_denoised,
        &t.control_commanded,
        &t.control_applied,
        &t.f_estimate,
    ];
    for (name, col) in TRAJECTORY_COLUMNS.iter().zip(cols) {
        d.set_item(*name, col.values().to_vec())?;
    }
    d.set_item("metrics", metrics_dict(py, &run.metrics)?)?;
    match &run.window_metrics {
        Some(m) => d.set_item("window_metrics", metrics_dict(py, m)?)?,
        None => d.set_item("window_metrics", py.None())?,
    }
    d.set_item("diverged_at", run.diverged_at)?;
    Ok(d)
}

/// Open-loop response of the cubic plant `y' + y^3 = 2u` to `inputs`,
/// each held for `h`.
#[pyfunction]
#[pyo3(signature = (inputs, h, substeps=10))]
fn simulate_cubic(inputs: Vec<f64>, h: f64, substeps: usize) -> PyResult<Vec<f64>> {
    let u = TimeSeries::new(h, 0.0, inputs).map_err(py_err)?;
    let model = ipid_core::PlantModel::nonlinear_cubic();
    let y = ipid_core::plant::simulate_open_loop(&model, &u, substeps, &NoiseModel::None).map_err(py_err)?;
    Ok(y.into_values())
}

/// Velocity-form PI, PID, PII2 or PII2D acting on the error it is given.
#[pyclass(name = "ClassicController")]
struct PyClassicController(ipid_core::ClassicController);

#[pymethods]
impl PyClassicController {
    #[new]
    #[pyo3(signature = (kind, h, kp, ki=0.0, kii=0.0, kd=0.0))]
    fn new(kind: &str, h: f64, kp: f64, ki: f64, kii: f64, kd: f64) -> PyResult<Self> {
        let kind: ClassicKind = kind.parse().map_err(py_err)?;
        let c = ipid_core::ClassicController::new(kind, ClassicGains::pii2d(kp, ki, kii, kd), h).map_err(py_err)?;
        Ok(PyClassicController(c))
    }

    fn step(&mut self, error: f64) -> f64 {
        self.0.step(error)
    }
}

/// i-P, i-PD, i-PI or i-PID with `e = y - y*`; stabilizing gains are
/// negative in this convention.
#[pyclass(name = "IntelligentController")]
struct PyIntelligentController(ipid_core::IntelligentController);

#[pymethods]
impl PyIntelligentController {
    #[new]
    #[pyo3(signature = (kind, alpha, h, kp=0.0, ki=0.0, kd=0.0, f_window=1))]
    fn new(kind: &str, alpha: f64, h: f64, kp: f64, ki: f64, kd: f64, f_window: usize) -> PyResult<Self> {
        let (_, cfg) = intelligent(kind, alpha, kp, ki, kd)?;
        let cfg = cfg.with_f_window(f_window).map_err(py_err)?;
        Ok(PyIntelligentController(ipid_core::IntelligentController::new(cfg, h).map_err(py_err)?))
    }

    /// Returns `(u, F_estimate)`.
    #[pyo3(signature = (y, y_star, d1=0.0, d2=0.0))]
    fn step(&mut self, y: f64, y_star: f64, d1: f64, d2: f64) -> PyResult<(f64, f64)> {
        let (u, f) = self.0.step(y, ReferenceSample { y_star, d1, d2 }).map_err(py_err)?;
        Ok((u, f.value))
    }
}

#[pymodule]
fn ipid(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(map_gains, m)?)?;
    m.add_function(wrap_pyfunction!(verify_equivalence, m)?)?;
    m.add_function(wrap_pyfunction!(identify_broida, m)?)?;
    m.add_function(wrap_pyfunction!(tune_pi_broida, m)?)?;
    m.add_function(wrap_pyfunction!(backward_difference, m)?)?;
    m.add_function(wrap_pyfunction!(moving_average, m)?)?;
    m.add_function(wrap_pyfunction!(apply_fault, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_cubic, m)?)?;
    m.add_class::<PyFopdtFit>()?;
    m.add_class::<PyClassicController>()?;
    m.add_class::<PyIntelligentController>()?;
    Ok(())
}
