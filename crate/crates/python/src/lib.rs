//! Python bindings for the causal pipeline.
//!
//! Graphs, datasets and simulators are wrapped as classes; the analysis
//! steps are plain functions. Structured results come back as dicts.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use causal_pipeline::ci_tests::{CiMethod, DataTest, IndependenceTest};
use causal_pipeline::dataset::{Column, ColumnSpec, ColumnType, Dataset, Schema};
use causal_pipeline::discovery::{self, DiscoveryConstraints, PcSettings};
use causal_pipeline::estimation::{self, SuperLearnerSpec, Task, TmleConfig, parse_library};
use causal_pipeline::graph::CausalGraph;
use causal_pipeline::identification::{self, EstimandSpec, Provenance};
use causal_pipeline::scm::ScmSpec;
use causal_pipeline::sensitivity;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Round-trips a serializable value through `json.loads`.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "CausalGraph", module = "causal_pipeline_py")]
struct PyGraph {
    inner: CausalGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (nodes=Vec::new()))]
    fn new(nodes: Vec<String>) -> PyResult<Self> {
        Ok(PyGraph { inner: CausalGraph::new(nodes).map_err(err)? })
    }

    /// Reads the line format (`A -> B`, `A <-> B 0.7`).
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyGraph { inner: CausalGraph::parse(text).map_err(err)? })
    }

    fn add_directed(&mut self, source: &str, target: &str) -> PyResult<()> {
        self.inner = self.inner.clone().with_directed(source, target).map_err(err)?;
        Ok(())
    }

    #[pyo3(signature = (a, b, p=1.0))]
    fn add_bidirected(&mut self, a: &str, b: &str, p: f64) -> PyResult<()> {
        self.inner = self.inner.clone().with_bidirected(a, b, p).map_err(err)?;
        Ok(())
    }

    #[getter]
    fn nodes(&self) -> Vec<String> {
        self.inner.nodes().to_vec()
    }

    fn directed_edges(&self) -> Vec<(String, String)> {
        self.inner.directed_edges()
    }

    fn bidirected_edges(&self) -> Vec<(String, String, f64)> {
        self.inner.bidirected_edges()
    }

    fn parents(&self, node: &str) -> PyResult<Vec<String>> {
        self.inner.parents(node).map_err(err)
    }

    fn children(&self, node: &str) -> PyResult<Vec<String>> {
        self.inner.children(node).map_err(err)
    }

    fn ancestors(&self, node: &str) -> PyResult<Vec<String>> {
        self.inner.ancestors(node).map_err(err)
    }

    fn descendants(&self, node: &str) -> PyResult<Vec<String>> {
        self.inner.descendants(node).map_err(err)
    }

    /// `(acyclic, cycle witness)`.
    fn is_acyclic(&self) -> (bool, Option<Vec<String>>) {
        self.inner.is_acyclic()
    }

    #[pyo3(signature = (x, y, z=Vec::new()))]
    fn d_separated(&self, x: Vec<String>, y: Vec<String>, z: Vec<String>) -> PyResult<bool> {
        self.inner.d_separated(&strs(&x), &strs(&y), &strs(&z)).map_err(err)
    }

    fn latent_project(&self, keep: Vec<String>) -> PyResult<PyGraph> {
        Ok(PyGraph { inner: self.inner.latent_project(&strs(&keep)).map_err(err)? })
    }

    /// Plausibility ratio of the graph with `removed` bidirected edges dropped.
    fn plausibility_ratio(&self, removed: Vec<(String, String)>) -> PyResult<f64> {
        let pairs: Vec<(&str, &str)> = removed.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        Ok(self.inner.graph_plausibility(&pairs).map_err(err)?.ratio)
    }

    fn markov_factorization(&self) -> PyResult<String> {
        let f = self.inner.markov_factorization().map_err(err)?;
        Ok(causal_pipeline::graph::render_factorization(&f))
    }

    fn serialize(&self) -> String {
        self.inner.serialize()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "CausalGraph(nodes={}, directed={}, bidirected={})",
            self.inner.len(),
            self.inner.directed_edges().len(),
            self.inner.bidirected_edges().len()
        )
    }
}

#[pyclass(name = "Dataset", module = "causal_pipeline_py")]
struct PyDataset {
    inner: Dataset,
}

fn column_type(kind: &str, values: &[f64]) -> PyResult<ColumnType> {
    let levels = || values.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, &v| m.max(v)) as usize + 1;
    match kind.parse::<ColumnSpec>().map_err(err)? {
        ColumnSpec::Continuous => Ok(ColumnType::Continuous),
        ColumnSpec::Binary => Ok(ColumnType::Binary),
        ColumnSpec::Categorical(k) => Ok(ColumnType::Categorical(k.unwrap_or_else(levels))),
        ColumnSpec::Ordinal(k) => Ok(ColumnType::Ordinal(k.unwrap_or_else(levels))),
        ColumnSpec::Auto => Err(PyValueError::new_err("give an explicit column type")),
    }
}

#[pymethods]
impl PyDataset {
    /// Builds a dataset from named value lists. NaN marks a missing cell.
    /// Types default to continuous.
    #[staticmethod]
    #[pyo3(signature = (columns, kinds=BTreeMap::new()))]
    fn from_columns(columns: Vec<(String, Vec<f64>)>, kinds: BTreeMap<String, String>) -> PyResult<Self> {
        let cols = columns
            .into_iter()
            .map(|(name, values)| {
                let kind = column_type(kinds.get(&name).map(String::as_str).unwrap_or("continuous"), &values)?;
                let cells = values.into_iter().map(|v| if v.is_nan() { None } else { Some(v) }).collect();
                Column::with_missing(name, kind, cells).map_err(err)
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(PyDataset { inner: Dataset::new(cols).map_err(err)? })
    }

    /// Loads a CSV; `schema` is optional `name=type` text.
    #[staticmethod]
    #[pyo3(signature = (path, schema=None))]
    fn read_csv(path: &str, schema: Option<&str>) -> PyResult<Self> {
        let schema = schema.map(Schema::parse).transpose().map_err(err)?.unwrap_or_default();
        Ok(PyDataset { inner: Dataset::load_csv(path, &schema).map_err(err)? })
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn columns(&self) -> Vec<String> {
        self.inner.column_names().iter().map(|s| s.to_string()).collect()
    }

    fn kind(&self, name: &str) -> PyResult<String> {
        Ok(self.inner.kind(name).map_err(err)?.to_string())
    }

    /// Column values with NaN in missing cells.
    fn values(&self, name: &str) -> PyResult<Vec<f64>> {
        let col = self.inner.column(name).map_err(err)?;
        Ok(col.values().iter().zip(col.missing()).map(|(&v, &m)| if m { f64::NAN } else { v }).collect())
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv_string()
    }

    fn save_csv(&self, path: &str) -> PyResult<()> {
        self.inner.save_csv(path).map_err(err)
    }

    fn make_censoring(&self, name: &str) -> PyResult<PyDataset> {
        Ok(PyDataset { inner: self.inner.make_censoring(name).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(rows={}, columns={:?})", self.inner.n_rows(), self.inner.column_names())
    }
}

#[pyclass(name = "Scm", module = "causal_pipeline_py")]
struct PyScm {
    inner: ScmSpec,
}

#[pymethods]
impl PyScm {
    /// One node per line, e.g. `Y = linear(X:0.5, intercept:0) + gaussian(1)`.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyScm { inner: ScmSpec::parse(text).map_err(err)? })
    }

    #[pyo3(signature = (n, seed=0))]
    fn sample(&self, n: usize, seed: u64) -> PyResult<PyDataset> {
        Ok(PyDataset { inner: self.inner.sample(n, seed).map_err(err)? })
    }

    fn intervene(&self, assignments: BTreeMap<String, f64>) -> PyResult<PyScm> {
        let pairs: Vec<(&str, f64)> = assignments.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        Ok(PyScm { inner: self.inner.intervene(&pairs).map_err(err)? })
    }

    /// `(effect, Monte Carlo standard error)` of `t` versus `t_prime`.
    #[pyo3(signature = (treatment, t, t_prime, outcome, n_mc=100_000, seed=0))]
    fn true_effect(&self, treatment: &str, t: f64, t_prime: f64, outcome: &str, n_mc: usize, seed: u64) -> PyResult<(f64, f64)> {
        let e = self.inner.true_effect(treatment, t, t_prime, outcome, n_mc, seed).map_err(err)?;
        Ok((e.effect, e.mc_se))
    }

    fn graph(&self) -> PyResult<PyGraph> {
        Ok(PyGraph { inner: self.inner.graph().map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("Scm(nodes={:?})", self.inner.node_names())
    }
}

/// `(statistic, p_value)` of one conditional independence test.
#[pyfunction]
#[pyo3(signature = (data, a, b, z=Vec::new(), method="fisher_z", seed=0))]
fn ci_test(data: &PyDataset, a: &str, b: &str, z: Vec<String>, method: &str, seed: u64) -> PyResult<(f64, f64)> {
    let method: CiMethod = method.parse().map_err(err)?;
    let r = DataTest::new(&data.inner, method, seed).test(a, b, &strs(&z)).map_err(err)?;
    Ok((r.statistic, r.p_value))
}

fn constraints(text: Option<&str>) -> PyResult<DiscoveryConstraints> {
    text.map(DiscoveryConstraints::parse).transpose().map_err(err).map(Option::unwrap_or_default)
}

/// Runs PC once; returns `{"directed": [...], "undirected": [...]}`.
#[pyfunction]
#[pyo3(signature = (data, method="fisher_z", alpha=0.01, max_cond_size=3, constraints_text=None, seed=0))]
fn pc(
    data: &PyDataset,
    method: &str,
    alpha: f64,
    max_cond_size: usize,
    constraints_text: Option<&str>,
    seed: u64,
) -> PyResult<BTreeMap<String, Vec<(String, String)>>> {
    let method: CiMethod = method.parse().map_err(err)?;
    let cp = discovery::pc(&data.inner, method, alpha, &constraints(constraints_text)?, max_cond_size, seed).map_err(err)?;
    Ok(BTreeMap::from([("directed".to_string(), cp.directed_edges()), ("undirected".to_string(), cp.undirected_edges())]))
}

/// Bootstrap edge confidences as `(nodes, matrix)`; `matrix[i][j]` is the
/// confidence in `nodes[i] -> nodes[j]`.
#[pyfunction]
#[pyo3(signature = (data, runs=100, method="fisher_z", alpha=0.01, max_cond_size=3, constraints_text=None, seed=0))]
fn bootstrap_confidences(
    data: &PyDataset,
    runs: usize,
    method: &str,
    alpha: f64,
    max_cond_size: usize,
    constraints_text: Option<&str>,
    seed: u64,
) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let settings = PcSettings { method: method.parse().map_err(err)?, alpha, max_cond_size };
    let cm = discovery::bootstrap_confidences(&data.inner, settings, &constraints(constraints_text)?, runs, seed)
        .map_err(err)?;
    let n = cm.nodes().len();
    let matrix = (0..n).map(|i| (0..n).map(|j| cm.entry(i, j)).collect()).collect();
    Ok((cm.nodes().to_vec(), matrix))
}

#[pyfunction]
fn shd(a: &PyGraph, b: &PyGraph) -> PyResult<usize> {
    discovery::shd(&a.inner, &b.inner).map_err(err)
}

#[pyfunction]
fn backdoor_paths(graph: &PyGraph, treatment: &str, outcome: &str) -> PyResult<Vec<String>> {
    let paths = identification::backdoor_paths(&graph.inner, treatment, outcome).map_err(err)?;
    Ok(paths.iter().map(|p| p.to_string()).collect())
}

#[pyfunction]
fn is_backdoor_set(graph: &PyGraph, treatment: &str, outcome: &str, z: Vec<String>) -> PyResult<bool> {
    identification::is_backdoor_set(&graph.inner, treatment, outcome, &strs(&z)).map_err(err)
}

#[pyfunction]
fn find_backdoor_set(graph: &PyGraph, treatment: &str, outcome: &str) -> PyResult<Option<Vec<String>>> {
    identification::find_backdoor_set(&graph.inner, treatment, outcome).map_err(err)
}

/// Role per node plus the open backdoor paths and the chosen adjustment set.
#[pyfunction]
fn classify_variables<'py>(py: Python<'py>, graph: &PyGraph, treatment: &str, outcome: &str) -> PyResult<Bound<'py, PyAny>> {
    let r = identification::classify_variables(&graph.inner, treatment, outcome).map_err(err)?;
    let roles: BTreeMap<String, String> = r.roles.iter().map(|(n, role)| (n.clone(), role.to_string())).collect();
    let value = serde_json::json!({
        "roles": roles,
        "open_backdoor_paths": r.open_backdoor_paths.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "adjustment_set": r.adjustment_set,
    });
    to_py(py, &value)
}

/// `(subgraph, removed edges, plausibility ratio, adjustment set)`.
#[pyfunction]
fn most_plausible_backdoor_subgraph(
    graph: &PyGraph,
    treatment: &str,
    outcome: &str,
) -> PyResult<(PyGraph, Vec<(String, String)>, f64, Vec<String>)> {
    let r = identification::most_plausible_backdoor_subgraph(&graph.inner, treatment, outcome).map_err(err)?;
    Ok((PyGraph { inner: r.subgraph }, r.removed, r.ratio, r.adjustment_set))
}

/// Cross-validated ensemble weights: `{"learners", "weights", "cv_risk"}`.
#[pyfunction]
#[pyo3(signature = (data, target, features, learners, classification=false, folds=10, seed=0))]
fn super_learner<'py>(
    py: Python<'py>,
    data: &PyDataset,
    target: &str,
    features: Vec<String>,
    learners: &str,
    classification: bool,
    folds: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let task = if classification { Task::Classification } else { Task::Regression };
    let spec = SuperLearnerSpec::new(parse_library(learners).map_err(err)?, task).with_folds(folds).with_seed(seed);
    let fit = estimation::sl_fit(&data.inner, target, &strs(&features), &[], &spec).map_err(err)?;
    let value = serde_json::json!({
        "learners": fit.learners().iter().map(|l| l.to_string()).collect::<Vec<_>>(),
        "weights": fit.weights(),
        "cv_risk": fit.cv_risk(),
    });
    to_py(py, &value)
}

#[allow(clippy::too_many_arguments)]
fn estimand_and_config(
    treatment: &str,
    outcome: &str,
    contrasts: Vec<(f64, f64)>,
    confounders: Vec<String>,
    precision: Vec<String>,
    outcome_learners: Option<&str>,
    propensity_learners: Option<&str>,
    folds: usize,
) -> PyResult<(EstimandSpec, TmleConfig)> {
    let spec = EstimandSpec {
        treatment: treatment.into(),
        outcome: outcome.into(),
        contrasts,
        confounders,
        precision,
        provenance: Provenance::UserFixed,
    };
    let mut cfg = TmleConfig { k_folds: folds, ..TmleConfig::default() };
    if let Some(l) = outcome_learners {
        cfg.outcome_learners = parse_library(l).map_err(err)?;
    }
    if let Some(l) = propensity_learners {
        cfg.propensity_learners = parse_library(l).map_err(err)?;
    }
    Ok((spec, cfg))
}

/// Targeted estimates for each `(t, t')` contrast as a dict.
#[pyfunction]
#[pyo3(signature = (
    data, treatment, outcome, contrasts, confounders,
    precision=Vec::new(), outcome_learners=None, propensity_learners=None, folds=10, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn tmle<'py>(
    py: Python<'py>,
    data: &PyDataset,
    treatment: &str,
    outcome: &str,
    contrasts: Vec<(f64, f64)>,
    confounders: Vec<String>,
    precision: Vec<String>,
    outcome_learners: Option<&str>,
    propensity_learners: Option<&str>,
    folds: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let (spec, cfg) = estimand_and_config(
        treatment,
        outcome,
        contrasts,
        confounders,
        precision,
        outcome_learners,
        propensity_learners,
        folds,
    )?;
    let r = estimation::tmle_estimate(&data.inner, &spec, &cfg, seed).map_err(err)?;
    to_py(py, &r)
}

/// Sensitivity curves, one dict per contrast.
#[pyfunction]
#[pyo3(signature = (
    data, treatment, outcome, contrasts, confounders,
    precision=Vec::new(), multipliers=sensitivity::DEFAULT_MULTIPLIERS.to_vec(), drop_precision=false,
    outcome_learners=None, propensity_learners=None, folds=10, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn sensitivity_curve<'py>(
    py: Python<'py>,
    data: &PyDataset,
    treatment: &str,
    outcome: &str,
    contrasts: Vec<(f64, f64)>,
    confounders: Vec<String>,
    precision: Vec<String>,
    multipliers: Vec<f64>,
    drop_precision: bool,
    outcome_learners: Option<&str>,
    propensity_learners: Option<&str>,
    folds: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let (spec, cfg) = estimand_and_config(
        treatment,
        outcome,
        contrasts,
        confounders,
        precision,
        outcome_learners,
        propensity_learners,
        folds,
    )?;
    let (_, _, curves) =
        sensitivity::sensitivity_curve(&data.inner, &spec, &cfg, &multipliers, drop_precision, seed).map_err(err)?;
    to_py(py, &curves)
}

#[pymodule]
fn causal_pipeline_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyScm>()?;
    m.add_function(wrap_pyfunction!(ci_test, m)?)?;
    m.add_function(wrap_pyfunction!(pc, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_confidences, m)?)?;
    m.add_function(wrap_pyfunction!(shd, m)?)?;
    m.add_function(wrap_pyfunction!(backdoor_paths, m)?)?;
    m.add_function(wrap_pyfunction!(is_backdoor_set, m)?)?;
    m.add_function(wrap_pyfunction!(find_backdoor_set, m)?)?;
    m.add_function(wrap_pyfunction!(classify_variables, m)?)?;
    m.add_function(wrap_pyfunction!(most_plausible_backdoor_subgraph, m)?)?;
    m.add_function(wrap_pyfunction!(super_learner, m)?)?;
    m.add_function(wrap_pyfunction!(tmle, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity_curve, m)?)?;
    Ok(())
}
