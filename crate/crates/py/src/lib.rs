//! Python bindings: graphs, planning, candidate sets, verification and the
//! experiment harness.

#![allow(clippy::useless_conversion)]

use std::collections::BTreeMap;

use graphquest_core::harness::{run_experiment_on, Algorithm, ExperimentConfig, GraphSource};
use graphquest_core::io::{format_graph, parse_graph, read_graph};
use graphquest_core::multi::{solve_multi, solve_multi_unlimited};
use graphquest_core::oracle::{oracle_optimal, verify_plan};
use graphquest_core::single_bounded::solve;
use graphquest_core::single_unlimited::solve_unlimited;
use graphquest_core::{
    build_dag, candidate_set, reverse, simulate, wcase_multi, wcase_single, AnswerSet, Dag, Error,
    Mode, NodeId, Plan, Response, TargetSet, Variant,
};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(graphquest, GraphquestError, PyValueError);
create_exception!(graphquest, InconsistentAnswersError, GraphquestError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InconsistentAnswers(_) => InconsistentAnswersError::new_err(e.to_string()),
        other => GraphquestError::new_err(other.to_string()),
    }
}

fn parse_variant(s: &str) -> PyResult<Variant> {
    match s {
        "single" => Ok(Variant::Single),
        "multi" => Ok(Variant::Multi),
        _ => Err(GraphquestError::new_err(format!("unknown variant `{s}`"))),
    }
}

fn parse_mode(s: &str) -> PyResult<Mode> {
    match s {
        "bounded" => Ok(Mode::Bounded),
        "unlimited" => Ok(Mode::Unlimited),
        _ => Err(GraphquestError::new_err(format!("unknown mode `{s}`"))),
    }
}

/// Structure-dispatched plan, as the command line picks it.
pub fn plan_for(dag: &Dag, variant: Variant, mode: Mode, k: Option<usize>) -> Result<Plan, Error> {
    match (variant, mode) {
        (Variant::Multi, Mode::Unlimited) => Ok(solve_multi_unlimited(dag)),
        (Variant::Single, Mode::Unlimited) => solve_unlimited(dag),
        (_, Mode::Bounded) => {
            let k = k.ok_or(Error::InvalidTargets("bounded mode needs k".into()))?;
            match variant {
                Variant::Single => solve(dag, k),
                Variant::Multi => solve_multi(dag, k),
            }
        }
    }
}

#[pyclass(name = "Graph", module = "graphquest", frozen)]
#[derive(Clone)]
struct PyGraph {
    dag: Dag,
}

impl PyGraph {
    fn node(&self, name: &str) -> PyResult<NodeId> {
        self.dag
            .node(name)
            .ok_or_else(|| to_py(Error::UnknownNode(name.to_owned())))
    }

    fn nodes(&self, names: Vec<String>) -> PyResult<Vec<NodeId>> {
        names.iter().map(|n| self.node(n)).collect()
    }

    fn names(&self, ids: &[NodeId]) -> Vec<String> {
        ids.iter().map(|&v| self.dag.name(v).to_owned()).collect()
    }
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(nodes: Vec<String>, edges: Vec<(String, String)>) -> PyResult<Self> {
        build_dag(&nodes, &edges)
            .map(|dag| PyGraph { dag })
            .map_err(to_py)
    }

    /// Graph from `n<TAB>name` / `e<TAB>src<TAB>dst` text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_graph(text).map(|dag| PyGraph { dag }).map_err(to_py)
    }

    #[staticmethod]
    fn read(path: std::path::PathBuf) -> PyResult<Self> {
        read_graph(&path).map(|dag| PyGraph { dag }).map_err(to_py)
    }

    /// `balanced:<m>:<d>[:up]` or `random:<n>:<max_children>`.
    #[staticmethod]
    #[pyo3(signature = (spec, seed = 0))]
    fn generate(spec: &str, seed: u64) -> PyResult<Self> {
        let source: GraphSource = spec.parse().map_err(GraphquestError::new_err)?;
        source.load(seed).map(|dag| PyGraph { dag }).map_err(to_py)
    }

    fn to_text(&self) -> String {
        format_graph(&self.dag)
    }

    fn __len__(&self) -> usize {
        self.dag.n()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={}, structure={})",
            self.dag.n(),
            self.dag.edge_count(),
            self.dag.classify()
        )
    }

    #[getter]
    fn node_names(&self) -> Vec<String> {
        self.dag.names().to_vec()
    }

    #[getter]
    fn edges(&self) -> Vec<(String, String)> {
        self.dag
            .edges()
            .map(|(a, b)| (self.dag.name(a).to_owned(), self.dag.name(b).to_owned()))
            .collect()
    }

    #[getter]
    fn structure(&self) -> String {
        self.dag.classify().to_string()
    }

    fn reaches(&self, a: &str, b: &str) -> PyResult<bool> {
        Ok(self.dag.reaches(self.node(a)?, self.node(b)?))
    }

    /// Nodes reachable from `u`, `u` included.
    fn rset(&self, u: &str) -> PyResult<Vec<String>> {
        Ok(self.names(&self.dag.rset(self.node(u)?)))
    }

    /// Nodes that reach `u`, `u` excluded.
    fn pset(&self, u: &str) -> PyResult<Vec<String>> {
        Ok(self.names(&self.dag.pset(self.node(u)?)))
    }

    fn reverse(&self) -> Self {
        PyGraph {
            dag: reverse(&self.dag),
        }
    }
}

#[pyclass(name = "Plan", module = "graphquest", frozen, get_all)]
struct PyPlan {
    variant: String,
    mode: String,
    k: Option<usize>,
    method: String,
    slack: u8,
    wcase: usize,
    questions: Vec<String>,
    json: String,
}

impl PyPlan {
    fn wrap(graph: &PyGraph, plan: &Plan) -> Self {
        let record = plan.to_record(&graph.dag);
        PyPlan {
            variant: record.variant.to_string(),
            mode: record.mode.to_string(),
            k: record.k,
            method: record.method.to_string(),
            slack: record.slack,
            wcase: record.wcase,
            questions: record.questions,
            json: plan.to_json(&graph.dag),
        }
    }
}

#[pymethods]
impl PyPlan {
    fn to_json(&self) -> String {
        self.json.clone()
    }

    #[staticmethod]
    fn from_json(graph: &PyGraph, text: &str) -> PyResult<Self> {
        let plan = Plan::from_json(text, &graph.dag).map_err(to_py)?;
        Ok(PyPlan::wrap(graph, &plan))
    }

    fn __repr__(&self) -> String {
        format!(
            "Plan(method={}, wcase={}, questions={:?})",
            self.method, self.wcase, self.questions
        )
    }
}

/// Chooses questions for `graph`; bounded mode needs `k`.
#[pyfunction]
#[pyo3(signature = (graph, variant = "single", mode = "bounded", k = None))]
fn plan(graph: &PyGraph, variant: &str, mode: &str, k: Option<usize>) -> PyResult<PyPlan> {
    let p = plan_for(&graph.dag, parse_variant(variant)?, parse_mode(mode)?, k).map_err(to_py)?;
    Ok(PyPlan::wrap(graph, &p))
}

/// Exhaustive optimum on small graphs.
#[pyfunction]
#[pyo3(signature = (graph, k, variant = "single", mode = "bounded"))]
fn oracle(graph: &PyGraph, k: usize, variant: &str, mode: &str) -> PyResult<PyPlan> {
    let p =
        oracle_optimal(&graph.dag, k, parse_variant(variant)?, parse_mode(mode)?).map_err(to_py)?;
    Ok(PyPlan::wrap(graph, &p))
}

fn answer_set(graph: &PyGraph, answers: &Bound<'_, PyDict>) -> PyResult<AnswerSet> {
    let mut out = AnswerSet::new();
    for (key, value) in answers.iter() {
        let node = graph.node(&key.extract::<String>()?)?;
        let value = match value.extract::<bool>() {
            Ok(b) => Response::from_bool(b),
            Err(_) => value
                .extract::<String>()?
                .parse::<Response>()
                .map_err(GraphquestError::new_err)?,
        };
        out.insert(node, value);
    }
    Ok(out)
}

/// Sorted names of the nodes that stay possible under `answers`, a mapping
/// from node name to `True`/`False` or `"YES"`/`"NO"`.
#[pyfunction]
#[pyo3(signature = (graph, answers, variant = "single"))]
fn candidates(
    graph: &PyGraph,
    answers: &Bound<'_, PyDict>,
    variant: &str,
) -> PyResult<Vec<String>> {
    let answers = answer_set(graph, answers)?;
    let cand = candidate_set(&graph.dag, &answers, parse_variant(variant)?).map_err(to_py)?;
    Ok(cand
        .sorted_names(&graph.dag)
        .into_iter()
        .map(str::to_owned)
        .collect())
}

/// Truthful answers of `targets` at each of `questions`.
#[pyfunction]
#[pyo3(signature = (graph, targets, questions, variant = "multi"))]
fn answers_for(
    graph: &PyGraph,
    targets: Vec<String>,
    questions: Vec<String>,
    variant: &str,
) -> PyResult<BTreeMap<String, String>> {
    let targets = TargetSet::new(&graph.dag, &graph.nodes(targets)?, parse_variant(variant)?)
        .map_err(to_py)?;
    let answers = simulate(&graph.dag, &targets, &graph.nodes(questions)?);
    Ok(answers
        .iter()
        .map(|a| (graph.dag.name(a.node).to_owned(), a.value.to_string()))
        .collect())
}

/// Largest candidate set any admissible target can leave after `questions`.
#[pyfunction]
#[pyo3(signature = (graph, questions, variant = "single"))]
fn worst_case(graph: &PyGraph, questions: Vec<String>, variant: &str) -> PyResult<usize> {
    let qs = graph.nodes(questions)?;
    match parse_variant(variant)? {
        Variant::Single => Ok(wcase_single(&graph.dag, &qs)),
        Variant::Multi => wcase_multi(&graph.dag, &qs).map_err(to_py),
    }
}

/// Recomputes a plan's worst case: `{"pass", "expected_wcase", "found_wcase", "witness"}`.
#[pyfunction]
#[pyo3(signature = (graph, plan, variant = None))]
fn verify<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    plan: &PyPlan,
    variant: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = Plan::from_json(&plan.json, &graph.dag).map_err(to_py)?;
    let variant = variant.map(parse_variant).transpose()?.unwrap_or(p.variant);
    let report = verify_plan(&graph.dag, &p, variant).map_err(to_py)?;
    let d = PyDict::new_bound(py);
    d.set_item("pass", report.pass)?;
    d.set_item("expected_wcase", report.expected_wcase)?;
    d.set_item("found_wcase", report.found_wcase)?;
    d.set_item("witness", report.witness_targets)?;
    Ok(d)
}

/// Runs a search experiment on `graph`; returns the per-trial and aggregate
/// CSV texts.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (graph, algorithm, k, phases = 1, trials = 100, seed = 0, random_runs = 10))]
fn experiment(
    py: Python<'_>,
    graph: &PyGraph,
    algorithm: &str,
    k: usize,
    phases: usize,
    trials: usize,
    seed: u64,
    random_runs: usize,
) -> PyResult<(String, String)> {
    let algorithm: Algorithm = algorithm.parse().map_err(GraphquestError::new_err)?;
    let source = GraphSource::File(std::path::PathBuf::new());
    let mut cfg = ExperimentConfig::new(source, algorithm, k);
    cfg.phases = phases;
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.random_runs = random_runs;
    let dag = graph.dag.clone();
    let out = py
        .allow_threads(move || run_experiment_on(&dag, &cfg))
        .map_err(to_py)?;
    Ok((out.rows_csv(), out.aggregate_csv()))
}

#[pymodule]
fn graphquest(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyPlan>()?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(candidates, m)?)?;
    m.add_function(wrap_pyfunction!(answers_for, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(experiment, m)?)?;
    m.add(
        "GraphquestError",
        m.py().get_type_bound::<GraphquestError>(),
    )?;
    m.add(
        "InconsistentAnswersError",
        m.py().get_type_bound::<InconsistentAnswersError>(),
    )?;
    Ok(())
}
