//! Drives the module through an embedded interpreter.

use std::ffi::CString;
use std::sync::Once;

use pyo3::prelude::*;
use qds_py::qds_py;

static INIT: Once = Once::new();

fn run(code: &str) {
    INIT.call_once(|| {
        pyo3::append_to_inittab!(qds_py);
        Python::initialize();
    });
    Python::attach(|py| {
        let code = CString::new(code).unwrap();
        if let Err(e) = py.run(&code, None, None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn spot_values() {
    run(r#"
import qds_py as q
assert q.divisor_anatomy_sum(12, 10, 1) == "8"
assert q.divisor_anatomy_bound(12, 10, 1, 2) == "12"
assert q.divisor_anatomy_bound(12, 10, "1/2", 2) is None
assert q.count_many_small_primes(100, 10, 0) == 100
assert q.omega_t(12, 18, 10) == 2
assert q.omega_t(12, 18, 10, "lcm") == 2
assert q.d_value(6, 4, q.PairSystem({6: "1/4"}, {4: "1/8"})) == "1/2"
"#);
}

#[test]
fn pipeline_on_generated_instance() {
    run(r#"
import qds_py as q
from fractions import Fraction
system, params = q.generate_instance(3, support_max=50)
e = q.build_edge_set(system, params)
system = system.with_edges(e)
assert len(system) == len(e)
rep = q.main_bound_check(system, params)
assert rep["verdict"] == "holds"
n, star = q.concentrate(system)
peeled, steps, ok = q.peel(system.with_edges(star), params)
assert ok
if peeled:
    res = q.resolution_check(system.with_edges(peeled), n, params)
    assert res["all_hold"], res
p2 = q.Params(Fraction(1, 4), 1, 10, 0)
assert p2.q_prime == "4/3"
try:
    q.Params(1, 1, 10, 0)
    raise AssertionError("epsilon = 1 accepted")
except ValueError:
    pass
"#);
}
