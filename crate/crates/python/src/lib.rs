//! Python bindings. Structured values cross the boundary as JSON strings in the
//! same shapes the `lebdiff` CLI reads and writes.

#![allow(clippy::useless_conversion)] // pyo3 0.22 macro expansion

use std::sync::Arc;

use lebdiff::counterexample::{oscillation_check, OscillatingFunction};
use lebdiff::dyadic::{Point, TiePolicy};
use lebdiff::martingale::{capital, from_wtest, sum_martingale, verify_averaging};
use lebdiff::stepfn::{ConstantSequence, SequenceSpec, SimpleStepFunction, StepSequence};
use lebdiff::tree::{decompose, DecomposeOptions, DyadicTree};
use lebdiff::wtest::{TestSpec, WTest};
use lebdiff::ExactScalar;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

create_exception!(pylebdiff, ResourceCapError, PyException);
create_exception!(pylebdiff, InvariantError, PyException);

fn py_err(e: lebdiff::Error) -> PyErr {
    match e {
        lebdiff::Error::ResourceCap { .. } => ResourceCapError::new_err(e.to_string()),
        lebdiff::Error::Invariant(_) => InvariantError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: DeserializeOwned>(text: &str, what: &str) -> PyResult<T> {
    serde_json::from_str(text)
        .map_err(|e| PyValueError::new_err(format!("not a valid {what}: {e}")))
}

fn dump<T: Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn point(s: &str, n: usize) -> PyResult<Point> {
    let x = Point::parse(s).map_err(py_err)?;
    if x.dim() != n {
        return Err(py_err(lebdiff::Error::Dimension {
            expected: n,
            got: x.dim(),
        }));
    }
    Ok(x)
}

fn tie(policy: &str) -> PyResult<TiePolicy> {
    match policy {
        "strict" => Ok(TiePolicy::Strict),
        "lower_closed" | "lower-closed" => Ok(TiePolicy::LowerClosed),
        other => Err(PyValueError::new_err(format!(
            "unknown tie policy {other:?}"
        ))),
    }
}

/// Exact value `num/den` with `den = 2^b 3^a`.
#[pyclass(name = "Scalar", frozen)]
#[derive(Clone)]
struct PyScalar(ExactScalar);

#[pymethods]
impl PyScalar {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        let r = lebdiff::scalar::parse_ratio(text)
            .ok_or_else(|| PyValueError::new_err(format!("bad ratio {text:?}")))?;
        ExactScalar::from_ratio(&r).map(PyScalar).ok_or_else(|| {
            PyValueError::new_err(format!("{text} has a denominator other than 2^b 3^a"))
        })
    }

    #[getter]
    fn num(&self) -> String {
        self.0.to_ratio().numer().to_string()
    }

    #[getter]
    fn den(&self) -> String {
        self.0.to_ratio().denom().to_string()
    }

    fn __float__(&self) -> f64 {
        self.0.to_f64()
    }

    fn __str__(&self) -> String {
        self.0.to_ratio().to_string()
    }

    fn __repr__(&self) -> String {
        format!("Scalar('{}')", self.0.to_ratio())
    }

    fn __add__(&self, other: &PyScalar) -> PyScalar {
        PyScalar(&self.0 + &other.0)
    }

    fn __sub__(&self, other: &PyScalar) -> PyScalar {
        PyScalar(&self.0 - &other.0)
    }

    fn __mul__(&self, other: &PyScalar) -> PyScalar {
        PyScalar(&self.0 * &other.0)
    }

    fn __eq__(&self, other: &PyScalar) -> bool {
        self.0 == other.0
    }

    fn __lt__(&self, other: &PyScalar) -> bool {
        self.0 < other.0
    }

    fn __le__(&self, other: &PyScalar) -> bool {
        self.0 <= other.0
    }
}

/// A W-test built from its JSON record.
#[pyclass(name = "WTest", frozen)]
struct PyWTest {
    spec: TestSpec,
    inner: Arc<WTest>,
}

#[pymethods]
impl PyWTest {
    #[new]
    fn new(spec_json: &str) -> PyResult<Self> {
        let spec: TestSpec = parse(spec_json, "test")?;
        let inner = Arc::new(spec.build().map_err(py_err)?);
        Ok(PyWTest { spec, inner })
    }

    #[staticmethod]
    fn avoidance(n: usize, axis: usize) -> PyResult<Self> {
        let spec = TestSpec::Avoidance { n, axis };
        let inner = Arc::new(spec.build().map_err(py_err)?);
        Ok(PyWTest { spec, inner })
    }

    #[staticmethod]
    fn point_trap(centers: Vec<String>) -> PyResult<Self> {
        let pts = centers
            .iter()
            .map(|c| Point::parse(c).map_err(py_err))
            .collect::<PyResult<Vec<_>>>()?;
        let spec = TestSpec::Custom { centers: pts };
        let inner = Arc::new(spec.build().map_err(py_err)?);
        Ok(PyWTest { spec, inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn to_json(&self) -> PyResult<String> {
        dump(&self.spec)
    }

    fn certified_measure(&self, m: u32) -> PyResult<String> {
        dump(
            &self
                .inner
                .certified_measure(m, self.inner.default_last(m))
                .map_err(py_err)?,
        )
    }

    fn array_defect(&self, k: u32, m: u32) -> PyResult<String> {
        dump(
            &self
                .inner
                .array_defect(k, m, self.inner.default_last(m))
                .map_err(py_err)?,
        )
    }

    #[pyo3(signature = (x, m, k_max=4))]
    fn covers(&self, x: &str, m: u32, k_max: u32) -> PyResult<String> {
        let x = point(x, self.inner.dim())?;
        dump(&self.inner.covers(&x, m, k_max).map_err(py_err)?)
    }

    /// Exact averaging check of the component martingale `d_m` up to `r_max`.
    fn verify_averaging(&self, m: u32, r_max: u32) -> PyResult<String> {
        let d = from_wtest(self.inner.clone(), m);
        dump(&verify_averaging(&d, r_max).map_err(py_err)?)
    }

    /// Capital of the summed martingale along the dyadic cubes of `x`.
    fn capital(&self, x: &str, r_max: u32) -> PyResult<String> {
        let x = point(x, self.inner.dim())?;
        let d = sum_martingale(self.inner.clone());
        let t = capital(&d, &x, r_max).map_err(py_err)?;
        dump(&json!({ "non_decreasing": t.non_decreasing(), "rows": t.rows }))
    }

    #[pyo3(signature = (depth, focus=None, node_budget=None))]
    fn decompose(
        &self,
        depth: u32,
        focus: Option<&str>,
        node_budget: Option<usize>,
    ) -> PyResult<String> {
        let mut opts = match focus {
            Some(x) => DecomposeOptions::focused(depth, point(x, self.inner.dim())?),
            None => DecomposeOptions::new(depth),
        };
        if let Some(b) = node_budget {
            opts.node_budget = b;
        }
        let tree = decompose(&self.inner, &opts).map_err(py_err)?;
        let report = tree.verify();
        dump(&json!({ "tree": tree, "report": report }))
    }
}

fn tree_from(text: &str) -> PyResult<DyadicTree> {
    let v: Value = parse(text, "tree")?;
    let v = match v {
        Value::Object(mut map) if map.contains_key("tree") => {
            map.remove("tree").unwrap_or(Value::Null)
        }
        other => other,
    };
    serde_json::from_value(v).map_err(|e| PyValueError::new_err(format!("not a valid tree: {e}")))
}

/// Oscillating step function from a tree, with its certified gaps for `m <= m_max`
/// and, when `x` is given, the alternating averages along `x` to `depth`.
#[pyfunction]
#[pyo3(signature = (tree_json, m_max=4, x=None, depth=3))]
fn synthesize(tree_json: &str, m_max: u32, x: Option<&str>, depth: u32) -> PyResult<String> {
    let f = OscillatingFunction::synthesize(tree_from(tree_json)?).map_err(py_err)?;
    let mut gaps = Vec::new();
    for m in 0..=m_max {
        let gap = f.certified_gap(m).map_err(py_err)?;
        let bound = ExactScalar::pow2(-(m as i64));
        gaps.push(json!({ "m": m, "holds": gap <= bound, "gap": gap, "bound": bound }));
    }
    let oscillation = match x {
        Some(x) => Some(oscillation_check(&f, &point(x, f.tree().n)?, depth).map_err(py_err)?),
        None => None,
    };
    dump(&json!({
        "function": f.built(),
        "unexpanded_bound": f.unexpanded_bound(),
        "gaps": gaps,
        "parity": f.parity_bounds(),
        "oscillation": oscillation,
    }))
}

/// Shifted-grid averages of a step function or sequence around `x`.
#[pyfunction]
#[pyo3(signature = (function_json, x, r_max, m=0, tie_policy="strict"))]
fn lebesgue_probe(
    function_json: &str,
    x: &str,
    r_max: u32,
    m: u32,
    tie_policy: &str,
) -> PyResult<String> {
    let v: Value = parse(function_json, "function")?;
    let seq: Arc<dyn StepSequence> = if v.get("kind").is_some() {
        let spec: SequenceSpec =
            serde_json::from_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
        spec.build().map_err(py_err)?
    } else {
        let f: SimpleStepFunction =
            serde_json::from_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Arc::new(ConstantSequence::new(f))
    };
    let x = point(x, seq.dim())?;
    dump(
        &lebdiff::stepfn::lebesgue_probe(seq.as_ref(), &x, r_max, m, tie(tie_policy)?)
            .map_err(py_err)?,
    )
}

#[pymodule]
pub fn pylebdiff(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScalar>()?;
    m.add_class::<PyWTest>()?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(lebesgue_probe, m)?)?;
    m.add(
        "ResourceCapError",
        m.py().get_type_bound::<ResourceCapError>(),
    )?;
    m.add("InvariantError", m.py().get_type_bound::<InvariantError>())?;
    Ok(())
}
