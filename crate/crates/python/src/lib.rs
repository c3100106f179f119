//! Python bindings: points, function specs, counting oracles, the search
//! primitives, the tester, and a few exact quantities.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unate::exact::{self, Rational, TruthTable};
use unate::harness::{overlap_check as overlap, FamilyTemplate};
use unate::search;
use unate::tester::{run_tester, BudgetConfig, TesterKind, Verdict};
use unate::{Ordering, VarSet};

fn err(e: unate::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn frac(r: Rational) -> (u64, u64) {
    (*r.numer(), *r.denom())
}

#[pyclass(name = "Point", frozen, from_py_object)]
#[derive(Clone)]
struct PyPoint(unate::Point);

#[pymethods]
impl PyPoint {
    /// Parse a bit string, variable 1 first.
    #[new]
    fn new(bits: &str) -> PyResult<Self> {
        unate::Point::parse(bits).map(PyPoint).map_err(err)
    }

    #[staticmethod]
    fn zeros(n: usize) -> Self {
        PyPoint(unate::Point::zeros(n))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn get(&self, i: usize) -> bool {
        self.0.get(i)
    }

    fn flipped(&self, i: usize) -> Self {
        PyPoint(self.0.flipped(i))
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Point('{}')", self.0)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

#[pyclass(name = "FunctionSpec", frozen, from_py_object)]
#[derive(Clone)]
struct PyFunctionSpec(unate::FunctionSpec);

#[pymethods]
impl PyFunctionSpec {
    /// Build from a family template such as `"dictator:3"` or `"parity"`.
    #[staticmethod]
    fn template(text: &str, n: usize) -> PyResult<Self> {
        FamilyTemplate::parse(text).and_then(|t| t.instantiate(n)).map(PyFunctionSpec).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        unate::FunctionSpec::from_json(text).map(PyFunctionSpec).map_err(err)
    }

    #[staticmethod]
    fn from_table(n: usize, table: Vec<bool>) -> PyResult<Self> {
        unate::FunctionSpec::from_table(n, &table).map(PyFunctionSpec).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    fn label(&self) -> String {
        self.0.label()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __repr__(&self) -> String {
        format!("FunctionSpec({})", self.0.label())
    }
}

#[pyclass(name = "Oracle")]
struct PyOracle(unate::OracleHandle);

#[pymethods]
impl PyOracle {
    #[new]
    fn new(spec: &PyFunctionSpec) -> PyResult<Self> {
        unate::make_oracle(&spec.0).map(PyOracle).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn queries(&self) -> u64 {
        self.0.queries()
    }

    fn query(&mut self, x: &PyPoint) -> PyResult<bool> {
        self.0.query(&x.0).map_err(err)
    }

    /// Binary search along `order` (variables, `n+1` for the placeholder).
    /// Returns `(variable, point, value)` or `None`.
    fn binary_search(&mut self, x: &PyPoint, order: Vec<usize>) -> PyResult<Option<(usize, PyPoint, bool)>> {
        let pi = Ordering::from_seq(self.0.n(), order).map_err(err)?;
        let hit = search::binary_search(&mut self.0, &x.0, &pi).map_err(err)?;
        Ok(hit.map(|e| (e.variable, PyPoint(e.point), e.value)))
    }

    /// Adaptive edge search at `x` over `vars`. Returns `(variable, monotone)` or `None`.
    fn ae_search(&mut self, x: &PyPoint, vars: Vec<usize>, seed: u64) -> PyResult<Option<(usize, bool)>> {
        let s = VarSet::new(self.0.n(), vars).map_err(err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hit = search::ae_search(&mut self.0, &x.0, &s, &mut rng).map_err(err)?;
        Ok(hit.map(|e| (e.variable(), e.orientation == unate::Orientation::Monotone)))
    }
}

/// Result of one tester run.
#[pyclass(name = "Outcome", frozen, get_all)]
struct PyOutcome {
    rejected: bool,
    queries: u64,
    capped: bool,
    seed: u64,
    /// Variable of the violation certificate, if any.
    violating_variable: Option<usize>,
}

#[pymethods]
impl PyOutcome {
    fn __repr__(&self) -> String {
        format!(
            "Outcome(rejected={}, queries={}, capped={}, seed={})",
            self.rejected, self.queries, self.capped, self.seed
        )
    }
}

/// Run a tester (`main`, `baseline` or `case-only:<case>`) on a fresh oracle.
#[pyfunction]
#[pyo3(signature = (spec, eps, seed, tester = "main", budget_json = None))]
fn test_unate(
    spec: &PyFunctionSpec,
    eps: f64,
    seed: u64,
    tester: &str,
    budget_json: Option<&str>,
) -> PyResult<PyOutcome> {
    let kind = TesterKind::parse(tester).map_err(err)?;
    let budget = match budget_json {
        Some(t) => BudgetConfig::from_json(t).map_err(err)?,
        None => BudgetConfig::default(),
    };
    let mut h = unate::make_oracle(&spec.0).map_err(err)?;
    let o = run_tester(&mut h, eps, &budget, seed, kind).map_err(err)?;
    Ok(PyOutcome {
        rejected: o.verdict == Verdict::Reject,
        queries: o.queries,
        capped: o.capped,
        seed: o.seed,
        violating_variable: o.certificate.map(|c| c.variable),
    })
}

fn table(spec: &PyFunctionSpec) -> PyResult<TruthTable> {
    TruthTable::from_spec(&spec.0).map_err(err)
}

/// Exact influence of variable `i` as `(numerator, denominator)`.
#[pyfunction]
fn influence(spec: &PyFunctionSpec, i: usize) -> PyResult<(u64, u64)> {
    exact::influence(&table(spec)?, i).map(frac).map_err(err)
}

#[pyfunction]
fn distance_to_monotone(spec: &PyFunctionSpec) -> PyResult<(u64, u64)> {
    exact::distance_to_monotone(&table(spec)?).map(frac).map_err(err)
}

#[pyfunction]
fn distance_to_unate(spec: &PyFunctionSpec) -> PyResult<(u64, u64)> {
    exact::distance_to_unate(&table(spec)?).map(frac).map_err(err)
}

#[pyfunction]
fn is_unate(spec: &PyFunctionSpec) -> PyResult<bool> {
    Ok(table(spec)?.is_unate())
}

/// Tail frequencies of `|S ∩ T|` as a list of `(threshold, frequency, exact)`.
#[pyfunction]
#[pyo3(signature = (n, k, l, trials, seed = 0))]
fn overlap_check(n: u64, k: u64, l: u64, trials: u64, seed: u64) -> PyResult<Vec<(u64, f64, f64)>> {
    let r = overlap(n, k, l, trials, seed).map_err(err)?;
    Ok(r.tails.iter().map(|t| (t.threshold, t.frequency, t.exact)).collect())
}

#[pymodule]
fn unate_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPoint>()?;
    m.add_class::<PyFunctionSpec>()?;
    m.add_class::<PyOracle>()?;
    m.add_class::<PyOutcome>()?;
    m.add_function(wrap_pyfunction!(test_unate, m)?)?;
    m.add_function(wrap_pyfunction!(influence, m)?)?;
    m.add_function(wrap_pyfunction!(distance_to_monotone, m)?)?;
    m.add_function(wrap_pyfunction!(distance_to_unate, m)?)?;
    m.add_function(wrap_pyfunction!(is_unate, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_check, m)?)?;
    Ok(())
}
