//! Drives the module through an embedded interpreter.

use pyo3::prelude::*;
use pyo3::types::PyDict;
use pyo3::wrap_pymodule;

fn run(code: &std::ffi::CStr) {
    Python::attach(|py| {
        let globals = PyDict::new(py);
        globals.set_item("k", wrap_pymodule!(kleinian_py::kleinian_py)(py)).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.print(py);
            panic!("python code failed");
        }
    });
}

#[test]
fn genus_two_round_trip() {
    run(c"
c = k.Curve.random(1)
assert c.genus == 2 and len(c.lambdas) == 6
s = k.Sigma(c)
assert s.legendre_residual() < 1e-8
t = s.tau
assert abs(t[0][1] - t[1][0]) < 1e-9
x1, x2 = 0.3 + 0.4j, -0.7 + 0.2j
y1 = c.f(x1) ** 0.5
y2 = c.f(x2) ** 0.5
u = s.abel(x1, y1, x2, y2)
assert abs(s.wp(u, '22') - (x1 + x2)) < 1e-8
assert abs(s.wp(u, '12') + x1 * x2) < 1e-8
ps = s.psi(0.35 + 1.2j, 6)
y = c.f(0.35 + 1.2j) ** 0.5
assert abs(ps[2] - 2 * y) < 1e-8 * abs(y) or abs(ps[2] + 2 * y) < 1e-8 * abs(y)
assert s.recursion_residual(0.35 + 1.2j, 4, 2) < 1e-8
");
}

#[test]
fn errors_map_to_python_exceptions() {
    run(c"
try:
    k.Curve([1, 2, 3])
    raise AssertionError('accepted a bad curve')
except ValueError:
    pass
s = k.Sigma(k.Curve.random(2))
try:
    s.wp([0.1, 0.2], '13')
    raise AssertionError('accepted bad labels')
except ValueError:
    pass
try:
    k.run_suites('{\"suites\": [\"nope\"]}')
    raise AssertionError('accepted a bad suite')
except ValueError:
    pass
import json
recs = json.loads(k.run_suites('{\"seeds\": [1], \"suites\": [\"periods\"]}'))
assert all(r['verdict'] == 'pass' for r in recs)
");
}
