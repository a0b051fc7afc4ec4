use biphoton_hom_py::biphoton_hom_module;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};

fn with_module(code: &std::ffi::CStr) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "biphoton_hom").unwrap();
        biphoton_hom_module(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("bh", m).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn dip_and_peak() {
    with_module(
        c"
import math
tau = [k * 1e-10 - 5e-9 for k in range(101)]
g = bh.Spectrum.gaussian(1e9)
q = bh.SamplingPlan.quadrature()
dip = bh.ensemble_coincidence(bh.PhaseConfig(), g, q, tau)
peak = bh.ensemble_coincidence(bh.PhaseConfig(xi=math.pi / 2), g, q, tau)
assert abs(dip.value_near(0.0)) <= 1e-12
assert abs(peak.value_near(0.0) - 1.0) <= 1e-12
assert dip.method == 'quad'
",
    );
}

#[test]
fn errors_map_to_python_exceptions() {
    with_module(
        c"
for bad in (lambda: bh.Spectrum.gaussian(0.0),
            lambda: bh.SamplingPlan.quadrature(1),
            lambda: bh.PhaseConfig(convention='furlong'),
            lambda: bh.phase_ledger(0.3, '+'),
            lambda: bh.CorrelationCurve([0.0, 0.0], [1.0, 1.0])):
    try:
        bad()
    except ValueError:
        pass
    else:
        raise AssertionError('expected ValueError')
try:
    bh.read_csv('/nonexistent/x.csv')
except OSError:
    pass
else:
    raise AssertionError('expected OSError')
",
    );
}

#[test]
fn fit_through_bindings() {
    with_module(
        c"
tau = [k * 1e-10 - 1e-8 for k in range(201)]
curve = bh.analytic_curve(bh.PhaseConfig(), 1e9, tau)
fit = bh.fit_gaussian_envelope(curve)
assert fit.converged
assert abs(fit.baseline - 0.5) < 5e-4
assert abs(fit.amplitude + 0.5) < 5e-4
assert abs(fit.rate / 8e18 - 1) < 1e-3
",
    );
}
