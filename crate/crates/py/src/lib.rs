//! Python bindings: scenarios, expression trees, baselines, evaluation and
//! the evolutionary loop.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tscgp_core::gp::evolve::{evaluate_tree, evolve as run_evolve, GpConfig};
use tscgp_core::gp::tree::{terminal_name, ExprTree as CoreTree};
use tscgp_core::metrics::{compute, MetricsReport};
use tscgp_core::network::{
    generate_flow, generate_grid, load_flow, load_roadnet, write_flow, write_roadnet, FlowParams, NetworkError,
};
use tscgp_core::policy::{Baseline, PolicyMode, UrgencyPolicy};
use tscgp_core::sim::{run_scenario, Scenario as CoreScenario, DEFAULT_HORIZON};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn network_err(e: NetworkError) -> PyErr {
    match e {
        NetworkError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn parse_mode(mode: &str) -> PyResult<PolicyMode> {
    mode.parse().map_err(value_err)
}

/// Urgency expression tree in prefix S-expression form.
#[pyclass(name = "ExprTree", module = "tscgp", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyExprTree {
    inner: CoreTree,
}

#[pymethods]
impl PyExprTree {
    #[new]
    fn new(sexpr: &str) -> PyResult<Self> {
        CoreTree::parse(sexpr).map(|inner| PyExprTree { inner }).map_err(value_err)
    }

    /// Evaluates the tree on a feature vector (8 or 16 values).
    fn eval(&self, features: Vec<f64>) -> PyResult<f64> {
        let needed = self.inner.max_var().map_or(0, |v| v as usize + 1);
        if features.len() < needed {
            return Err(value_err(format!("tree needs {needed} features, got {}", features.len())));
        }
        Ok(self.inner.eval(&features))
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.len()
    }

    /// Leaf counts by terminal name; constants are not counted.
    fn terminal_frequencies(&self) -> BTreeMap<String, usize> {
        self.inner
            .terminal_frequencies()
            .into_iter()
            .map(|(t, n)| (terminal_name(t), n))
            .collect()
    }

    fn __str__(&self) -> String {
        self.inner.to_sexpr()
    }

    fn __repr__(&self) -> String {
        format!("ExprTree('{}')", self.inner.to_sexpr())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// A road network with its demand and episode length.
#[pyclass(name = "Scenario", module = "tscgp", frozen)]
struct PyScenario {
    inner: CoreScenario,
}

#[pymethods]
impl PyScenario {
    /// Synthetic `rows x cols` grid with Poisson demand.
    #[staticmethod]
    #[pyo3(signature = (rows, cols, rate=360.0, seed=0, horizon=DEFAULT_HORIZON, turn_probs=(0.1, 0.8, 0.1), lane_length=300.0))]
    fn grid(
        rows: usize,
        cols: usize,
        rate: f64,
        seed: u64,
        horizon: u32,
        turn_probs: (f64, f64, f64),
        lane_length: f64,
    ) -> PyResult<Self> {
        let network = generate_grid(rows, cols, lane_length).map_err(network_err)?;
        let params = FlowParams {
            horizon,
            rate,
            turn_probs: [turn_probs.0, turn_probs.1, turn_probs.2],
        };
        let flow = generate_flow(&network, &params, seed).map_err(network_err)?;
        Ok(PyScenario {
            inner: CoreScenario { network, flow, horizon },
        })
    }

    /// Loads a roadnet and flow file pair.
    #[staticmethod]
    #[pyo3(signature = (roadnet, flow, horizon=DEFAULT_HORIZON))]
    fn load(roadnet: &str, flow: &str, horizon: u32) -> PyResult<Self> {
        let network = load_roadnet(roadnet).map_err(network_err)?;
        let flow = load_flow(flow, &network).map_err(network_err)?;
        Ok(PyScenario {
            inner: CoreScenario { network, flow, horizon },
        })
    }

    #[getter]
    fn signalized(&self) -> usize {
        self.inner.network.signalized_count()
    }

    #[getter]
    fn vehicles(&self) -> usize {
        self.inner.flow.len()
    }

    #[getter]
    fn horizon(&self) -> u32 {
        self.inner.horizon
    }

    fn roadnet_json(&self) -> String {
        write_roadnet(&self.inner.network)
    }

    fn flow_json(&self) -> String {
        write_flow(&self.inner.flow, &self.inner.network)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(signalized={}, vehicles={}, horizon={})",
            self.inner.network.signalized_count(),
            self.inner.flow.len(),
            self.inner.horizon
        )
    }
}

fn report_dict<'py>(py: Python<'py>, m: &MetricsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("att", m.att)?;
    d.set_item("aql", m.aql)?;
    d.set_item("nt", m.nt)?;
    d.set_item("spawned", m.spawned)?;
    d.set_item("residual", m.residual)?;
    d.set_item("empty_flow", m.empty_flow)?;
    Ok(d)
}

/// Runs `random`, `fixed` or `maxpressure` and returns its metrics.
#[pyfunction]
#[pyo3(signature = (scenario, method, seed=0))]
fn run_baseline<'py>(py: Python<'py>, scenario: &PyScenario, method: &str, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let baseline: Baseline = method.parse().map_err(value_err)?;
    let sc = &scenario.inner;
    let m = py.detach(|| compute(&run_scenario(sc, baseline.controller(seed).as_mut())));
    report_dict(py, &m)
}

/// Runs one episode under the urgency tree and returns its metrics.
#[pyfunction]
#[pyo3(signature = (scenario, tree, mode="symmetric"))]
fn evaluate<'py>(py: Python<'py>, scenario: &PyScenario, tree: &PyExprTree, mode: &str) -> PyResult<Bound<'py, PyDict>> {
    let mut policy = UrgencyPolicy::new(parse_mode(mode)?, tree.inner.clone()).map_err(value_err)?;
    let sc = &scenario.inner;
    let m = py.detach(|| compute(&run_scenario(sc, &mut policy)));
    report_dict(py, &m)
}

/// Index of the phase the tree would activate, given per-lane waiting and
/// total counts for the 24 lanes of a single-intersection scenario.
#[pyfunction]
#[pyo3(signature = (scenario, tree, waiting, count, mode="symmetric"))]
fn choose_phase(
    scenario: &PyScenario,
    tree: &PyExprTree,
    waiting: Vec<u32>,
    count: Vec<u32>,
    mode: &str,
) -> PyResult<usize> {
    let policy = UrgencyPolicy::new(parse_mode(mode)?, tree.inner.clone()).map_err(value_err)?;
    let inter = scenario
        .inner
        .network
        .intersections
        .first()
        .ok_or_else(|| value_err("scenario has no signalized intersection"))?;
    if waiting.len() != 24 || count.len() != 24 {
        return Err(value_err("waiting and count must have 24 entries"));
    }
    let mut obs = tscgp_core::sim::Observation::empty(0, inter);
    for (k, lane) in inter.lanes.iter().enumerate() {
        obs.set_lane_counts(*lane, waiting[k], count[k]);
    }
    Ok(policy.choose(inter, &obs))
}

/// Evolves an urgency tree; returns `(best_tree, best_att, log)` where the
/// log holds one dict per generation.
#[pyfunction]
#[pyo3(signature = (scenario, mode="symmetric", population_size=100, generations=51, seed=0))]
fn evolve<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    mode: &str,
    population_size: usize,
    generations: usize,
    seed: u64,
) -> PyResult<(PyExprTree, f64, Vec<Bound<'py, PyDict>>)> {
    let mode = parse_mode(mode)?;
    let config = GpConfig {
        population_size,
        generations,
        seed,
        ..GpConfig::default()
    };
    let sc = &scenario.inner;
    let (best, log) = py.detach(|| run_evolve(&config, sc, mode)).map_err(value_err)?;
    let rows = log
        .generations
        .iter()
        .map(|g| {
            let d = PyDict::new(py);
            d.set_item("generation", g.generation)?;
            d.set_item("best_att", g.best_att)?;
            d.set_item("mean_att", g.mean_att)?;
            d.set_item("best_tree_size", g.best_tree_size)?;
            d.set_item("best_tree", &g.best_tree)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let att = best.fitness.unwrap_or_else(|| evaluate_tree(sc, mode, &best.tree));
    Ok((PyExprTree { inner: best.tree }, att, rows))
}

#[pymodule]
fn tscgp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExprTree>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(run_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(choose_phase, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    Ok(())
}
