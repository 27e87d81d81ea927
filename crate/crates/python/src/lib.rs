//! Python bindings: load a catalog, optimize SQL under a mode, and inspect
//! the plan, rewrite decisions and work counters.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use optlab::bench::corpus::generate_corpus as gen_corpus;
use optlab::bench::fixture::tpch_catalog;
use optlab::catalog::{load_catalog, load_catalog_str, Datum, HllSketch};
use optlab::frontend::parse_and_resolve;
use optlab::qrw::optimize as run_optimize;
use optlab::session::{Mode, OptimizerSession, SessionConfig};

fn err(e: optlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Catalog", frozen)]
struct PyCatalog {
    inner: Arc<optlab::catalog::Catalog>,
}

#[pymethods]
impl PyCatalog {
    /// The bundled TPC-H statistics.
    #[staticmethod]
    fn tpch() -> Self {
        Self { inner: Arc::new(tpch_catalog()) }
    }

    #[staticmethod]
    fn from_path(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(load_catalog(&path).map_err(err)?) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(load_catalog_str(text).map_err(err)?) })
    }

    fn table_names(&self) -> Vec<String> {
        self.inner.tables().iter().map(|t| t.name.clone()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Catalog({} tables)", self.inner.tables().len())
    }
}

/// Optimizes `sql` and returns a dict with the plan digest, cost, EXPLAIN
/// text, rewrite decisions and work counters.
#[pyfunction]
#[pyo3(signature = (catalog, sql, mode = "cache-guess", time_critical = false, tau = None))]
fn optimize<'py>(
    py: Python<'py>,
    catalog: &PyCatalog,
    sql: &str,
    mode: &str,
    time_critical: bool,
    tau: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mode: Mode = mode.parse().map_err(err)?;
    let mut cfg = SessionConfig::new(mode);
    cfg.time_critical = time_critical;
    if let Some(t) = tau {
        cfg.tau = t;
    }
    let tree = parse_and_resolve(sql, &catalog.inner).map_err(err)?;
    let mut session = OptimizerSession::new(catalog.inner.clone(), cfg);
    let out = run_optimize(&tree, &mut session).map_err(err)?;

    let d = PyDict::new(py);
    d.set_item("digest", format!("{:016x}", out.plan.digest()))?;
    d.set_item("cost", out.plan.total_cost())?;
    d.set_item("explain", out.plan.explain())?;
    let decisions: Vec<Bound<'py, PyDict>> = out
        .decisions
        .iter()
        .map(|x| {
            let r = PyDict::new(py);
            r.set_item("rule", x.rule_id)?;
            r.set_item("matched", x.matched)?;
            r.set_item("applied", x.applied)?;
            r.set_item("guess", x.guess.as_ref().map(|g| g.to_string()))?;
            r.set_item("cost_original", x.cost_original)?;
            r.set_item("cost_rewritten", x.cost_rewritten)?;
            r.set_item("pruned", x.pruned)?;
            r.set_item("cbo_invocations", x.cbo_invocations)?;
            Ok(r)
        })
        .collect::<PyResult<_>>()?;
    d.set_item("decisions", decisions)?;
    let c = session.counters;
    let counters = PyDict::new(py);
    counters.set_item("cbo_invocations", c.cbo_invocations)?;
    counters.set_item("qrw_cbo_invocations", c.qrw_cbo_invocations)?;
    counters.set_item("paths_built", c.paths_built)?;
    counters.set_item("cost_path_calls", c.cost_path_calls)?;
    counters.set_item("prune_events", c.prune_events)?;
    counters.set_item("cache_hits", session.cache.stats.total().full_matches)?;
    d.set_item("counters", counters)?;
    Ok(d)
}

#[pyfunction]
fn improvement_ratio(off: f64, naive: f64, x: f64) -> PyResult<f64> {
    optlab::bench::improvement_ratio(off, naive, x).map_err(err)
}

/// The seeded benchmark corpus as `(id, sql)` pairs.
#[pyfunction]
#[pyo3(signature = (seed = optlab::bench::corpus::DEFAULT_SEED, size = optlab::bench::corpus::DEFAULT_SIZE))]
fn generate_corpus(seed: u64, size: usize) -> Vec<(String, String)> {
    gen_corpus(seed, size).into_iter().map(|q| (q.id, q.sql)).collect()
}

#[pyclass(name = "HllSketch")]
struct PyHll {
    inner: HllSketch,
}

#[derive(FromPyObject)]
enum Item {
    Int(i64),
    Float(f64),
    Text(String),
}

#[pymethods]
impl PyHll {
    #[new]
    #[pyo3(signature = (precision = optlab::catalog::DEFAULT_PRECISION, seed = optlab::catalog::DEFAULT_HLL_SEED))]
    fn new(precision: u8, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: HllSketch::with_seed(precision, seed).map_err(err)? })
    }

    fn add(&mut self, value: Item) {
        self.inner.add(&match value {
            Item::Int(i) => Datum::Int(i),
            Item::Float(f) => Datum::Float(f),
            Item::Text(s) => Datum::Text(s),
        });
    }

    fn estimate(&self) -> f64 {
        self.inner.estimate()
    }

    fn merge(&self, other: &PyHll) -> PyResult<PyHll> {
        Ok(PyHll { inner: self.inner.merge(&other.inner).map_err(err)? })
    }

    fn intersection(&self, other: &PyHll) -> PyResult<f64> {
        optlab::catalog::hll::intersection_estimate(&self.inner, &other.inner).map_err(err)
    }
}

#[pymodule]
fn optlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCatalog>()?;
    m.add_class::<PyHll>()?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(improvement_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    m.add("MODES", Mode::ALL.iter().map(|m| m.to_string()).collect::<Vec<_>>())?;
    Ok(())
}
