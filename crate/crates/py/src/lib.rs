//! Python bindings: datasets, schedules, greedy and exact construction, MIQP
//! export, primal metrics and the synthetic simulator.

use heursched_core as core;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn costs(d: &core::Dataset, normalize: bool) -> core::IterationCostProfile {
    if normalize {
        core::avg_iteration_cost(d)
    } else {
        core::IterationCostProfile::uniform(d.num_heuristics())
    }
}

/// Shadow-mode observations: iterations to first success per heuristic and node.
#[pyclass(name = "Dataset", frozen)]
pub struct PyDataset {
    inner: core::Dataset,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        core::Dataset::from_csv(text).map(|inner| Self { inner }).map_err(err)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn heuristics(&self) -> Vec<String> {
        self.inner.heuristics().iter().map(|h| h.as_str().to_owned()).collect()
    }

    fn nodes(&self) -> Vec<String> {
        self.inner.nodes().iter().map(|n| n.as_str().to_owned()).collect()
    }

    /// Iterations `heuristic` needs at `node`, or None when it fails there.
    fn tau(&self, heuristic: &str, node: &str) -> PyResult<Option<u64>> {
        let h = self
            .inner
            .heuristic_index(heuristic)
            .ok_or_else(|| PyValueError::new_err(format!("unknown heuristic `{heuristic}`")))?;
        let n = self
            .inner
            .node_index(node)
            .ok_or_else(|| PyValueError::new_err(format!("unknown node `{node}`")))?;
        Ok(self.inner.tau(h, n))
    }

    fn breakpoints(&self, heuristic: &str) -> PyResult<Vec<u64>> {
        core::breakpoints(&self.inner, heuristic).map_err(err)
    }

    fn avg_iteration_cost(&self) -> Vec<f64> {
        core::avg_iteration_cost(&self.inner).values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.num_nodes()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} heuristics, {} nodes)",
            self.inner.num_heuristics(),
            self.inner.num_nodes()
        )
    }
}

/// Ordered `(heuristic, budget)` pairs.
#[pyclass(name = "Schedule", frozen)]
pub struct PySchedule {
    inner: core::Schedule,
}

#[pymethods]
impl PySchedule {
    #[new]
    fn new(pairs: Vec<(String, u64)>) -> PyResult<Self> {
        let refs: Vec<(&str, u64)> = pairs.iter().map(|(h, b)| (h.as_str(), *b)).collect();
        core::Schedule::from_pairs(&refs).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        core::Schedule::from_csv(text).map(|inner| Self { inner }).map_err(err)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn pairs(&self) -> Vec<(String, u64)> {
        self.inner
            .entries()
            .iter()
            .map(|e| (e.heuristic.as_str().to_owned(), e.budget))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Schedule({})", self.inner)
    }
}

/// Objective and coverage of a schedule on a dataset.
#[pyclass(name = "Evaluation", frozen, get_all)]
pub struct PyEvaluation {
    objective: f64,
    solved_nodes: usize,
    total_nodes: usize,
    success_rate: f64,
    feasible: bool,
}

#[pymethods]
impl PyEvaluation {
    fn __repr__(&self) -> String {
        format!(
            "Evaluation(objective={}, solved={}/{}, feasible={})",
            self.objective, self.solved_nodes, self.total_nodes, self.feasible
        )
    }
}

#[pyfunction]
#[pyo3(signature = (data, normalize = false, allow_extension = true))]
fn build_schedule(data: &PyDataset, normalize: bool, allow_extension: bool) -> PyResult<PySchedule> {
    let opts = core::GreedyOptions {
        allow_extension,
        normalize_costs: normalize,
        ..core::GreedyOptions::default()
    };
    core::build_schedule(&data.inner, opts)
        .map(|o| PySchedule { inner: o.schedule })
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (schedule, data, alpha = 0.0, normalize = false))]
fn evaluate(schedule: &PySchedule, data: &PyDataset, alpha: f64, normalize: bool) -> PyResult<PyEvaluation> {
    let e = core::evaluate(&schedule.inner, &data.inner, alpha, &costs(&data.inner, normalize), normalize)
        .map_err(err)?;
    Ok(PyEvaluation {
        objective: e.objective,
        solved_nodes: e.solved_nodes,
        total_nodes: e.total_nodes,
        success_rate: e.success_rate,
        feasible: e.feasible,
    })
}

/// Optimal schedule and objective, or None when `alpha` is unreachable.
#[pyfunction]
#[pyo3(signature = (data, alpha, normalize = false))]
fn solve_exact(data: &PyDataset, alpha: f64, normalize: bool) -> PyResult<Option<(PySchedule, f64)>> {
    let sol = core::solve_exact(
        &data.inner,
        alpha,
        &costs(&data.inner, normalize),
        normalize,
        core::ExactLimits::default(),
    )
    .map_err(err)?;
    Ok(sol.map(|s| (PySchedule { inner: s.schedule }, s.objective)))
}

#[pyfunction]
fn export_miqp(data: &PyDataset, alpha: f64) -> PyResult<String> {
    core::MiqpModel::build(&data.inner, alpha).map(|m| m.render()).map_err(err)
}

#[pyfunction]
fn primal_gap(value: f64, best_known: f64) -> f64 {
    core::primal_gap(value, best_known)
}

/// Primal integral of `(time, objective)` incumbent events up to `time_limit`.
#[pyfunction]
#[pyo3(signature = (events, best_known, time_limit, sense = "min"))]
fn primal_integral(events: Vec<(f64, f64)>, best_known: f64, time_limit: f64, sense: &str) -> PyResult<f64> {
    let sense: core::Sense = sense.parse().map_err(err)?;
    let tl = core::IncumbentTimeline::new(events, best_known, sense).map_err(err)?;
    core::primal_integral(&tl, time_limit).map_err(err)
}

/// Shadow dataset from synthetic instances of a simulator config.
#[pyfunction]
fn simulate(config: &str, seeds: Vec<u64>) -> PyResult<PyDataset> {
    let cfg = core::SimConfig::parse(config).map_err(err)?;
    let instances = seeds
        .iter()
        .map(|&s| core::generate_instance(&cfg, s))
        .collect::<core::Result<Vec<_>>>()
        .map_err(err)?;
    core::collect_shadow_dataset(&instances)
        .map(|inner| PyDataset { inner })
        .map_err(err)
}

/// Incumbent events from running `schedule` on one synthetic instance.
#[pyfunction]
fn run_schedule(config: &str, schedule: &PySchedule, seed: u64, time_limit: f64) -> PyResult<Vec<(f64, f64)>> {
    let cfg = core::SimConfig::parse(config).map_err(err)?;
    let inst = core::generate_instance(&cfg, seed).map_err(err)?;
    let trace = core::run_with_schedule(&inst, &schedule.inner, time_limit).map_err(err)?;
    Ok(trace.timeline.events().to_vec())
}

#[pymodule]
#[pyo3(name = "heursched")]
fn heursched(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PyEvaluation>()?;
    m.add_function(wrap_pyfunction!(build_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_exact, m)?)?;
    m.add_function(wrap_pyfunction!(export_miqp, m)?)?;
    m.add_function(wrap_pyfunction!(primal_gap, m)?)?;
    m.add_function(wrap_pyfunction!(primal_integral, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_schedule, m)?)?;
    Ok(())
}
