//! Python bindings: parse and run transactions, build symbolic tables,
//! compute treaties and run simulations.

use std::collections::{BTreeMap, HashMap};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use homeostasis::analysis::{build_joint_table, build_table, matched_joint_guard};
use homeostasis::lang::{self, Database, TransactionAst};
use homeostasis::protocol::{self, OracleStatus, SimConfig};
use homeostasis::rewrite::Placement;
use homeostasis::treaty::{
    check_valid, default_config, execute_sequence, make_templates, optimize_config, preprocess,
    soft_constraints, SolverLimits,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_db(values: &HashMap<String, i64>) -> Database {
    values.iter().map(|(k, v)| (k.as_str(), *v)).collect()
}

fn from_db(db: &Database) -> BTreeMap<String, i64> {
    db.iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// A parsed transaction.
#[pyclass(name = "Transaction", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyTransaction {
    ast: TransactionAst,
}

#[pymethods]
impl PyTransaction {
    /// Parse source text; `arrays` gives array bounds for desugaring.
    #[new]
    #[pyo3(signature = (source, arrays=None))]
    fn new(source: &str, arrays: Option<HashMap<String, usize>>) -> PyResult<Self> {
        let ast = lang::parse(source).map_err(value_err)?;
        let bounds: BTreeMap<String, usize> = arrays.unwrap_or_default().into_iter().collect();
        let ast = lang::desugar_arrays(&ast, &bounds).map_err(value_err)?;
        Ok(PyTransaction { ast })
    }

    #[getter]
    fn name(&self) -> String {
        self.ast.name.clone()
    }

    #[getter]
    fn params(&self) -> Vec<String> {
        self.ast.params.clone()
    }

    /// Run on a database; returns the new database and the log.
    #[pyo3(signature = (db, params=Vec::new()))]
    fn eval(&self, db: HashMap<String, i64>, params: Vec<i64>) -> PyResult<(BTreeMap<String, i64>, Vec<i64>)> {
        let out = lang::eval(&self.ast, &params, &to_db(&db)).map_err(value_err)?;
        Ok((from_db(&out.db), out.log))
    }

    /// Symbolic table as text.
    fn table(&self) -> PyResult<String> {
        Ok(build_table(&self.ast).map_err(value_err)?.to_string())
    }

    fn __str__(&self) -> String {
        lang::print_ast(&self.ast)
    }
}

/// Joint symbolic table of several transactions, as text.
#[pyfunction]
fn joint_table(txns: Vec<PyTransaction>) -> PyResult<String> {
    let tables = txns
        .iter()
        .map(|t| build_table(&t.ast))
        .collect::<Result<Vec<_>, _>>()
        .map_err(value_err)?;
    Ok(build_joint_table(&tables).to_string())
}

/// Global treaty, templates and an optimized configuration for `txns` on
/// `db`, with objects placed by `placement` and futures given as lists of
/// transaction indices.
#[pyfunction]
#[pyo3(signature = (txns, db, placement, sequences=Vec::new()))]
fn treaty<'py>(
    py: Python<'py>,
    txns: Vec<PyTransaction>,
    db: HashMap<String, i64>,
    placement: HashMap<String, u32>,
    sequences: Vec<Vec<usize>>,
) -> PyResult<Bound<'py, PyDict>> {
    let db = to_db(&db);
    let tables = txns
        .iter()
        .map(|t| build_table(&t.ast))
        .collect::<Result<Vec<_>, _>>()
        .map_err(value_err)?;
    let mut p = Placement::new(placement.values().copied().max().unwrap_or(1));
    for (x, s) in &placement {
        p = p.place(x, *s);
    }
    let env = HashMap::new();
    let (psi, _) = matched_joint_guard(tables.iter().map(|t| (t, &env)), &db).map_err(value_err)?;
    let gt = preprocess(&psi, &db).map_err(value_err)?;
    let templates = make_templates(&gt, &p).map_err(value_err)?;
    let base = default_config(&templates, &gt, &db).map_err(value_err)?;
    let mut seqs = Vec::new();
    for s in &sequences {
        if let Some(i) = s.iter().find(|i| **i >= tables.len()) {
            return Err(value_err(format!("no transaction with index {i}")));
        }
        let steps: Vec<_> = s.iter().map(|i| (*i, Vec::new())).collect();
        seqs.push(execute_sequence(&tables, &db, &steps).map_err(value_err)?);
    }
    let groups = soft_constraints(&templates, &seqs);
    let opt = optimize_config(&templates, &gt, &db, &groups, &SolverLimits::default()).map_err(value_err)?;
    let valid = check_valid(&templates, &opt.config, &gt, &db);
    let show = |c: &homeostasis::treaty::TreatyConfiguration| -> BTreeMap<String, i64> {
        c.assignment.iter().map(|(v, n)| (v.to_string(), *n)).collect()
    };
    let out = PyDict::new(py);
    out.set_item("global", gt.to_string())?;
    out.set_item("templates", templates.iter().map(|t| t.to_string()).collect::<Vec<_>>())?;
    out.set_item("default", show(&base))?;
    out.set_item("config", show(&opt.config))?;
    out.set_item("satisfied", opt.satisfied)?;
    out.set_item("valid", valid)?;
    Ok(out)
}

/// Run one simulation. `config` holds `key=value` overrides of the
/// defaults; returns the summary metrics, the oracle verdict and the
/// per-transaction CSV.
#[pyfunction]
#[pyo3(signature = (config=HashMap::new()))]
fn simulate(py: Python<'_>, config: HashMap<String, String>) -> PyResult<(BTreeMap<String, f64>, String, String)> {
    let mut cfg = SimConfig::default();
    for (k, v) in &config {
        cfg.set(k, v).map_err(value_err)?;
    }
    cfg.validate().map_err(value_err)?;
    let r = py
        .detach(|| protocol::run_simulation(&cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let m = &r.metrics;
    let metrics = BTreeMap::from([
        ("committed".to_string(), m.committed as f64),
        ("throughput_per_site".to_string(), m.throughput_per_site),
        ("p50_ms".to_string(), m.p50_ms),
        ("p90_ms".to_string(), m.p90_ms),
        ("p95_ms".to_string(), m.p95_ms),
        ("p99_ms".to_string(), m.p99_ms),
        ("sync_ratio".to_string(), m.sync_ratio),
        ("violation_ratio".to_string(), m.violation_ratio),
        ("syncs".to_string(), m.syncs as f64),
    ]);
    let oracle = match r.oracle {
        OracleStatus::Match => "match".to_string(),
        OracleStatus::Mismatch(s) => format!("mismatch: {s}"),
        OracleStatus::Skipped => "skipped".to_string(),
    };
    Ok((metrics, oracle, r.trace.to_csv()))
}

#[pymodule]
fn homeostasis_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTransaction>()?;
    m.add_function(wrap_pyfunction!(joint_table, m)?)?;
    m.add_function(wrap_pyfunction!(treaty, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
