//! Python bindings, importable as `biphoton_hom`.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use biphoton_hom::{analysis, correlation, csv, ensemble, model};
use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn csv_err(e: csv::CsvError) -> PyErr {
    match e {
        csv::CsvError::Io { .. } => PyOSError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn parse_convention(s: &str) -> PyResult<model::PhaseConvention> {
    s.parse().map_err(PyValueError::new_err)
}

#[pyclass(name = "PhaseConfig", module = "biphoton_hom", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PyPhaseConfig(pub model::PhaseConfig);

#[pymethods]
impl PyPhaseConfig {
    #[new]
    #[pyo3(signature = (xi = 0.0, zeta = FRAC_PI_2, convention = "paper"))]
    fn new(xi: f64, zeta: f64, convention: &str) -> PyResult<Self> {
        Ok(Self(model::PhaseConfig::new(xi, zeta).with_convention(parse_convention(convention)?)))
    }

    #[getter]
    fn xi(&self) -> f64 {
        self.0.xi
    }

    #[getter]
    fn zeta(&self) -> f64 {
        self.0.zeta
    }

    #[getter]
    fn convention(&self) -> &'static str {
        self.0.convention.as_str()
    }

    fn interference_phase(&self, delta_f: f64, tau: f64) -> f64 {
        self.0.interference_phase(delta_f, tau)
    }

    fn __repr__(&self) -> String {
        format!(
            "PhaseConfig(xi={}, zeta={}, convention='{}')",
            self.0.xi, self.0.zeta, self.0.convention
        )
    }
}

#[pyclass(name = "Spectrum", module = "biphoton_hom", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PySpectrum(pub ensemble::Spectrum);

#[pymethods]
impl PySpectrum {
    #[staticmethod]
    #[pyo3(signature = (sigma, truncation = ensemble::DEFAULT_TRUNCATION))]
    fn gaussian(sigma: f64, truncation: f64) -> PyResult<Self> {
        let s = ensemble::Spectrum::Gaussian { sigma, truncation };
        s.validate().map_err(value_err)?;
        Ok(Self(s))
    }

    #[staticmethod]
    fn band_pass(center: f64, width: f64) -> PyResult<Self> {
        let s = ensemble::Spectrum::band_pass(center, width);
        s.validate().map_err(value_err)?;
        Ok(Self(s))
    }

    fn __repr__(&self) -> String {
        match self.0 {
            ensemble::Spectrum::Gaussian { sigma, truncation } => {
                format!("Spectrum.gaussian(sigma={sigma}, truncation={truncation})")
            }
            ensemble::Spectrum::BandPass { center, width } => {
                format!("Spectrum.band_pass(center={center}, width={width})")
            }
        }
    }
}

#[pyclass(name = "SamplingPlan", module = "biphoton_hom", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
pub struct PySamplingPlan(pub ensemble::SamplingPlan);

#[pymethods]
impl PySamplingPlan {
    #[staticmethod]
    #[pyo3(signature = (n, seed = 0))]
    fn monte_carlo(n: usize, seed: u64) -> PyResult<Self> {
        let p = ensemble::SamplingPlan::MonteCarlo { n, seed };
        p.validate().map_err(value_err)?;
        Ok(Self(p))
    }

    #[staticmethod]
    #[pyo3(signature = (nodes = ensemble::DEFAULT_NODES))]
    fn quadrature(nodes: usize) -> PyResult<Self> {
        let p = ensemble::SamplingPlan::Quadrature { nodes };
        p.validate().map_err(value_err)?;
        Ok(Self(p))
    }

    fn __repr__(&self) -> String {
        match self.0 {
            ensemble::SamplingPlan::MonteCarlo { n, seed } => {
                format!("SamplingPlan.monte_carlo(n={n}, seed={seed})")
            }
            ensemble::SamplingPlan::Quadrature { nodes } => {
                format!("SamplingPlan.quadrature(nodes={nodes})")
            }
        }
    }
}

#[pyclass(name = "CorrelationCurve", module = "biphoton_hom", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCorrelationCurve(pub correlation::CorrelationCurve);

#[pymethods]
impl PyCorrelationCurve {
    /// Wraps externally produced data; `tau` must be strictly increasing.
    #[new]
    #[pyo3(signature = (tau, r_mean, r_stderr = None))]
    fn new(tau: Vec<f64>, r_mean: Vec<f64>, r_stderr: Option<Vec<f64>>) -> PyResult<Self> {
        let stderr = r_stderr.unwrap_or_else(|| vec![0.0; r_mean.len()]);
        correlation::CorrelationCurve::new(tau, r_mean, stderr, correlation::CurveMeta::external())
            .map(Self)
            .map_err(value_err)
    }

    #[getter]
    fn tau(&self) -> Vec<f64> {
        self.0.tau.clone()
    }

    #[getter]
    fn r_mean(&self) -> Vec<f64> {
        self.0.r_mean.clone()
    }

    #[getter]
    fn r_stderr(&self) -> Vec<f64> {
        self.0.r_stderr.clone()
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.0.meta.method.name()
    }

    fn value_near(&self, tau: f64) -> f64 {
        self.0.value_near(tau)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("CorrelationCurve(method='{}', points={})", self.0.meta.method.name(), self.0.len())
    }
}

#[pyclass(name = "XiSweep", module = "biphoton_hom", frozen, get_all)]
pub struct PyXiSweep {
    xi: Vec<f64>,
    r_mean: Vec<f64>,
    r_stderr: Vec<f64>,
    tau: f64,
}

impl From<correlation::XiSweep> for PyXiSweep {
    fn from(s: correlation::XiSweep) -> Self {
        Self { xi: s.xi, r_mean: s.r_mean, r_stderr: s.r_stderr, tau: s.tau }
    }
}

#[pyclass(name = "CurveMetrics", module = "biphoton_hom", frozen, get_all)]
pub struct PyCurveMetrics {
    baseline: f64,
    extremum: f64,
    tau_extremum: f64,
    visibility: f64,
    fwhm: f64,
    kind: &'static str,
}

#[pyclass(name = "FitResult", module = "biphoton_hom", frozen, get_all)]
pub struct PyFitResult {
    baseline: f64,
    amplitude: f64,
    rate: f64,
    rms_residual: f64,
    converged: bool,
    iterations: usize,
}

#[pymethods]
impl PyFitResult {
    fn __repr__(&self) -> String {
        format!(
            "FitResult(baseline={}, amplitude={}, rate={:e}, rms_residual={:e}, converged={})",
            self.baseline, self.amplitude, self.rate, self.rms_residual, self.converged
        )
    }
}

fn parse_term(s: &str) -> PyResult<ensemble::Term> {
    match s {
        "AB" | "ab" => Ok(ensemble::Term::AB),
        "BA" | "ba" => Ok(ensemble::Term::BA),
        other => Err(PyValueError::new_err(format!("unknown term `{other}` (expected AB or BA)"))),
    }
}

#[pyfunction]
fn bs_transform(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    model::bs_transform(a, b)
}

#[pyfunction]
#[pyo3(signature = (delta_f, tau, convention = "paper"))]
fn detuning_phase(delta_f: f64, tau: f64, convention: &str) -> PyResult<f64> {
    Ok(model::detuning_phase(delta_f, tau, parse_convention(convention)?))
}

#[pyfunction]
fn output_fields(cfg: &PyPhaseConfig, delta_f: f64, tau: f64) -> (Complex64, Complex64, Complex64, Complex64) {
    let f = model::output_fields(&cfg.0, delta_f, tau);
    (f.e_c, f.e_d, f.e_c2, f.e_d2)
}

#[pyfunction]
fn output_intensities(cfg: &PyPhaseConfig, delta_f: f64, tau: f64) -> (f64, f64, f64, f64) {
    let i = model::output_intensities(&cfg.0, delta_f, tau);
    (i.i_c, i.i_d, i.i_c2, i.i_d2)
}

/// Returns `(reflected, transmitted)` for `branch` "+" or "-".
#[pyfunction]
fn phase_ledger(xi: f64, branch: &str) -> PyResult<(f64, f64)> {
    let branch = match branch {
        "+" | "plus" => model::ZetaBranch::Plus,
        "-" | "minus" => model::ZetaBranch::Minus,
        other => return Err(PyValueError::new_err(format!("unknown branch `{other}`"))),
    };
    let l = model::phase_ledger(xi, branch).map_err(value_err)?;
    Ok((l.reflected, l.transmitted))
}

#[pyfunction]
fn mean_port_intensities(
    cfg: &PyPhaseConfig,
    spectrum: &PySpectrum,
    plan: &PySamplingPlan,
    tau: f64,
) -> PyResult<(f64, f64)> {
    ensemble::mean_port_intensities(&cfg.0, &spectrum.0, &plan.0, tau).map_err(value_err)
}

#[pyfunction]
fn single_term_intensity(
    term: &str,
    cfg: &PyPhaseConfig,
    spectrum: &PySpectrum,
    plan: &PySamplingPlan,
    tau: f64,
) -> PyResult<(f64, f64)> {
    ensemble::single_term_intensity(parse_term(term)?, &cfg.0, &spectrum.0, &plan.0, tau)
        .map_err(value_err)
}

#[pyfunction]
fn pair_coincidence(cfg: &PyPhaseConfig, delta_f: f64, tau: f64) -> f64 {
    correlation::pair_coincidence(&cfg.0, delta_f, tau)
}

#[pyfunction]
fn analytic_coincidence(cfg: &PyPhaseConfig, sigma: f64, tau: f64) -> f64 {
    correlation::analytic_coincidence(&cfg.0, sigma, tau)
}

#[pyfunction]
fn analytic_curve(cfg: &PyPhaseConfig, sigma: f64, tau: Vec<f64>) -> PyResult<PyCorrelationCurve> {
    correlation::analytic_curve(&cfg.0, sigma, &tau).map(PyCorrelationCurve).map_err(value_err)
}

/// Releases the GIL while the ensemble is evaluated.
#[pyfunction]
fn ensemble_coincidence(
    py: Python<'_>,
    cfg: &PyPhaseConfig,
    spectrum: &PySpectrum,
    plan: &PySamplingPlan,
    tau: Vec<f64>,
) -> PyResult<PyCorrelationCurve> {
    let (cfg, spectrum, plan) = (cfg.0, spectrum.0, plan.0);
    py.detach(|| correlation::ensemble_coincidence(&cfg, &spectrum, &plan, &tau))
        .map(PyCorrelationCurve)
        .map_err(value_err)
}

#[pyfunction]
fn filtered_coincidence(
    py: Python<'_>,
    cfg: &PyPhaseConfig,
    band: &PySpectrum,
    plan: &PySamplingPlan,
    tau: Vec<f64>,
) -> PyResult<PyCorrelationCurve> {
    let (cfg, band, plan) = (cfg.0, band.0, plan.0);
    py.detach(|| correlation::filtered_coincidence(&cfg, &band, &plan, &tau))
        .map(PyCorrelationCurve)
        .map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (zeta, sigma, xi, tau = 0.0, convention = "paper"))]
fn xi_sweep(zeta: f64, sigma: f64, xi: Vec<f64>, tau: f64, convention: &str) -> PyResult<PyXiSweep> {
    correlation::xi_sweep(zeta, sigma, parse_convention(convention)?, &xi, tau)
        .map(PyXiSweep::from)
        .map_err(value_err)
}

#[pyfunction]
fn noon_correlation(n: u32, phi: f64) -> PyResult<f64> {
    correlation::noon_correlation(n, phi).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (center, convention = "paper"))]
fn beat_extrema_spacing(center: f64, convention: &str) -> PyResult<f64> {
    Ok(correlation::beat_extrema_spacing(center, parse_convention(convention)?))
}

#[pyfunction]
fn curve_metrics(curve: &PyCorrelationCurve) -> PyResult<PyCurveMetrics> {
    let m = analysis::curve_metrics(&curve.0).map_err(value_err)?;
    Ok(PyCurveMetrics {
        baseline: m.baseline,
        extremum: m.extremum,
        tau_extremum: m.tau_extremum,
        visibility: m.visibility,
        fwhm: m.fwhm,
        kind: m.kind.as_str(),
    })
}

#[pyfunction]
fn fit_gaussian_envelope(curve: &PyCorrelationCurve) -> PyResult<PyFitResult> {
    let f = analysis::fit_gaussian_envelope(&curve.0).map_err(value_err)?;
    Ok(PyFitResult {
        baseline: f.baseline,
        amplitude: f.amplitude,
        rate: f.rate,
        rms_residual: f.rms_residual,
        converged: f.converged,
        iterations: f.iterations,
    })
}

#[pyfunction]
fn read_csv(path: PathBuf) -> PyResult<PyCorrelationCurve> {
    csv::read_csv(&path).map(PyCorrelationCurve).map_err(csv_err)
}

#[pyfunction]
fn write_csv(curve: &PyCorrelationCurve, path: PathBuf) -> PyResult<()> {
    csv::write_csv(&csv::Table::Curve(&curve.0), &path).map_err(csv_err)
}

#[pymodule(name = "biphoton_hom")]
pub fn biphoton_hom_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyPhaseConfig>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PySamplingPlan>()?;
    m.add_class::<PyCorrelationCurve>()?;
    m.add_class::<PyXiSweep>()?;
    m.add_class::<PyCurveMetrics>()?;
    m.add_class::<PyFitResult>()?;
    m.add_function(wrap_pyfunction!(bs_transform, m)?)?;
    m.add_function(wrap_pyfunction!(detuning_phase, m)?)?;
    m.add_function(wrap_pyfunction!(output_fields, m)?)?;
    m.add_function(wrap_pyfunction!(output_intensities, m)?)?;
    m.add_function(wrap_pyfunction!(phase_ledger, m)?)?;
    m.add_function(wrap_pyfunction!(mean_port_intensities, m)?)?;
    m.add_function(wrap_pyfunction!(single_term_intensity, m)?)?;
    m.add_function(wrap_pyfunction!(pair_coincidence, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_coincidence, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_curve, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_coincidence, m)?)?;
    m.add_function(wrap_pyfunction!(filtered_coincidence, m)?)?;
    m.add_function(wrap_pyfunction!(xi_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(noon_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(beat_extrema_spacing, m)?)?;
    m.add_function(wrap_pyfunction!(curve_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(fit_gaussian_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(read_csv, m)?)?;
    m.add_function(wrap_pyfunction!(write_csv, m)?)?;
    Ok(())
}

