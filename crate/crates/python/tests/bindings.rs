use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) -> PyResult<()> {
    Python::with_gil(|py| {
        let module = PyModule::new_bound(py, "pylebdiff")?;
        pylebdiff::pylebdiff(&module)?;
        let globals = PyDict::new_bound(py);
        globals.set_item("lb", module)?;
        globals.set_item("json", py.import_bound("json")?)?;
        py.run_bound(code, Some(&globals), None)
    })
}

fn setup() {
    pyo3::prepare_freethreaded_python();
}

#[test]
fn scalars_are_exact() {
    setup();
    run(r#"
a = lb.Scalar("1/3")
b = lb.Scalar("-5/12")
assert str(a + b) == "-1/12"
assert (a * b).den == "36"
assert b < a and not a < b
try:
    lb.Scalar("2/7")
    raise AssertionError("accepted 2/7")
except ValueError:
    pass
"#)
    .unwrap();
}

#[test]
fn avoidance_measures_are_certified() {
    setup();
    run(r#"
w = lb.WTest.avoidance(1, 1)
assert w.dim == 1
for m in range(5):
    c = json.loads(w.certified_measure(m))
    assert c["within_target"], c
assert json.loads(w.verify_averaging(1, 5))["violation"] is None
cap = json.loads(w.capital("1/2", 8))
assert cap["non_decreasing"]
again = lb.WTest(w.to_json())
assert again.to_json() == w.to_json()
"#)
    .unwrap();
}

#[test]
fn errors_map_to_python_exceptions() {
    setup();
    run(r#"
try:
    lb.WTest.avoidance(2, 3)
    raise AssertionError("bad axis accepted")
except ValueError:
    pass
w = lb.WTest.avoidance(2, 1)
try:
    w.covers("1/3", 0)
    raise AssertionError("dimension mismatch accepted")
except ValueError as e:
    assert "dimension" in str(e)
try:
    w.decompose(2, None, 3)
    raise AssertionError("node budget ignored")
except lb.ResourceCapError:
    pass
"#)
    .unwrap();
}

#[test]
fn trap_counterexample_alternates() {
    setup();
    run(r#"
trap = lb.WTest.point_trap(["1/3,1/3"])
out = json.loads(trap.covers("1/3,1/3", 2, 6))
assert out == {"verdict": "covered_certified", "term": 2}, out
tree = trap.decompose(5)
s = json.loads(lb.synthesize(tree, 4, "1/3,1/3", 5))
assert all(g["holds"] for g in s["gaps"])
rows = s["oscillation"]["rows"]
assert len(rows) == 6
for row in rows:
    avg = int(row["average"]["num"]) / int(row["average"]["den"])
    assert (avg >= 0.75) if row["level"] % 2 == 0 else (avg <= 0.25), row
"#)
    .unwrap();
}
