//! Python bindings: grids, planning, CRMI, single episodes and experiments.
//! Vertex ids are 1-based integers on the Python side as well.

use acscp_core::crmi::{self, AlphaMode, CrmiHorizon, PathCostBelief, RewardWeights};
use acscp_core::engine::{self, EpisodeConfig as CoreConfig, EpisodeLog as CoreLog};
use acscp_core::harness::experiment::{efficiency_table, episodes_table, exposure_table};
use acscp_core::harness::{self, io};
use acscp_core::metrics::{self, EpisodeSummary};
use acscp_core::planning::{self, EdgeCostField, PlanMode};
use acscp_core::workspace::{self, Point, VertexId};
use acscp_core::Error;
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(err: Error) -> PyErr {
    match err.category() {
        "input" | "config" | "format" => PyValueError::new_err(err.to_string()),
        "io" => PyOSError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

fn vertex(id: usize) -> PyResult<VertexId> {
    VertexId::new(id).map_err(to_py)
}

fn ids(path: &[VertexId]) -> Vec<usize> {
    path.iter().map(|v| v.get()).collect()
}

#[pyclass(module = "acscp", frozen)]
struct GridWorld {
    inner: workspace::GridWorld,
}

#[pymethods]
impl GridWorld {
    #[new]
    #[pyo3(signature = (side_count = 11, half_width = 1.0))]
    fn new(side_count: usize, half_width: f64) -> PyResult<Self> {
        let inner = workspace::GridWorld::new(half_width, side_count).map_err(to_py)?;
        Ok(GridWorld { inner })
    }

    #[getter]
    fn side_count(&self) -> usize {
        self.inner.side_count()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    fn coord(&self, v: usize) -> PyResult<(f64, f64)> {
        let v = vertex(v)?;
        self.inner.check_vertex(v).map_err(to_py)?;
        let p = self.inner.coord(v);
        Ok((p.x, p.y))
    }

    fn neighbors(&self, v: usize) -> PyResult<Vec<usize>> {
        Ok(ids(self.inner.neighbors(vertex(v)?).map_err(to_py)?))
    }

    fn nearest_vertex(&self, x: f64, y: f64) -> usize {
        self.inner.nearest_vertex(&Point::new(x, y)).get()
    }

    fn __repr__(&self) -> String {
        format!("GridWorld(side_count={}, spacing={})", self.inner.side_count(), self.inner.spacing())
    }
}

/// Cheapest route through a frozen field of per-vertex values.
/// Returns `(path, expected_cost, clamped_weights)`.
#[pyfunction]
fn plan_optimal_path(grid: &GridWorld, values: Vec<f64>, start: usize, goal: usize) -> PyResult<(Vec<usize>, f64, usize)> {
    let field = EdgeCostField::frozen(values, grid.inner.spacing()).map_err(to_py)?;
    let plan = planning::plan_optimal_path(&grid.inner, &field, vertex(start)?, vertex(goal)?).map_err(to_py)?;
    Ok((ids(plan.path.vertices()), plan.expected_cost, plan.clamped_weights))
}

/// Mutual information between a scalar path cost and a measurement vector.
#[pyfunction]
fn crmi_value(variance: f64, cross_cov: Vec<f64>, meas_cov: Vec<Vec<f64>>) -> PyResult<f64> {
    let m = cross_cov.len();
    if meas_cov.len() != m || meas_cov.iter().any(|row| row.len() != m) {
        return Err(PyValueError::new_err(format!("meas_cov must be {m}x{m}")));
    }
    let cross = DVector::from_vec(cross_cov);
    let meas = DMatrix::from_fn(m, m, |i, j| meas_cov[i][j]);
    let pcb = PathCostBelief::new(variance, cross, meas).map_err(to_py)?;
    Ok(crmi::crmi(&pcb))
}

#[pyfunction]
fn normalized_exposure(incurred: f64, worst: f64, optimal: f64) -> PyResult<f64> {
    metrics::normalized_exposure(incurred, worst, optimal).map_err(to_py)
}

#[pyfunction]
fn efficiency(exposure: f64, unique: usize, placements: usize) -> PyResult<f64> {
    metrics::efficiency(exposure, unique, placements).map_err(to_py)
}

#[pyclass(module = "acscp", frozen)]
struct EpisodeConfig {
    inner: CoreConfig,
}

#[pymethods]
impl EpisodeConfig {
    #[new]
    #[pyo3(signature = (
        *, side_count = 11, n_params = 49, sensor_count = 2, gamma = 1.0, alpha = "auto",
        speed_ratio = 5.0, noise_std = None, seed = 0, ticks_per_edge = 20, rho = None,
        sigma_p = None, plan_mode = "frozen", crmi_horizon = "one_step", start = None, goal = None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        side_count: usize,
        n_params: usize,
        sensor_count: usize,
        gamma: f64,
        alpha: &str,
        speed_ratio: f64,
        noise_std: Option<f64>,
        seed: u64,
        ticks_per_edge: u32,
        rho: Option<f64>,
        sigma_p: Option<f64>,
        plan_mode: &str,
        crmi_horizon: &str,
        start: Option<usize>,
        goal: Option<usize>,
    ) -> PyResult<Self> {
        let alpha = match alpha {
            "auto" => AlphaMode::Auto,
            "zero" => AlphaMode::Zero,
            other => AlphaMode::Fixed(
                other
                    .parse()
                    .map_err(|_| PyValueError::new_err(format!("alpha must be auto, zero or a number, got {other:?}")))?,
            ),
        };
        let plan_mode = match plan_mode {
            "frozen" => PlanMode::Frozen,
            "propagated" => PlanMode::Propagated,
            other => return Err(PyValueError::new_err(format!("unknown plan_mode {other:?}"))),
        };
        let crmi_horizon = match crmi_horizon {
            "one_step" => CrmiHorizon::OneStep,
            "travel_time" => CrmiHorizon::TravelTime,
            other => return Err(PyValueError::new_err(format!("unknown crmi_horizon {other:?}"))),
        };
        let mut inner = CoreConfig {
            side_count,
            n_params,
            sensor_count,
            reward: RewardWeights::new(gamma, alpha).map_err(to_py)?,
            seed,
            ticks_per_edge,
            plan_mode,
            crmi_horizon,
            start: start.map(vertex).transpose()?,
            goal: goal.map(vertex).transpose()?,
            ..CoreConfig::default()
        };
        inner.sensor_speed = inner.ego_speed * speed_ratio;
        if let Some(s) = noise_std {
            inner.noise_std = s;
        }
        if let Some(r) = rho {
            inner.scenario.rho = r;
        }
        if let Some(s) = sigma_p {
            inner.scenario.sigma_p = s;
        }
        inner.validate().map_err(to_py)?;
        Ok(EpisodeConfig { inner })
    }

    #[getter]
    fn speed_ratio(&self) -> f64 {
        self.inner.speed_ratio()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn tick_duration(&self) -> f64 {
        self.inner.tick_duration()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

fn summary_dict<'py>(py: Python<'py>, s: &EpisodeSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("placements", s.placements)?;
    d.set_item("unique_placements", s.unique_placements)?;
    d.set_item("incurred_cost", s.incurred_cost)?;
    d.set_item("optimal_cost", s.optimal_cost)?;
    d.set_item("worst_cost", s.worst_cost)?;
    d.set_item("exposure", s.exposure)?;
    d.set_item("efficiency", s.efficiency)?;
    d.set_item("optimal_path", ids(&s.optimal_path))?;
    d.set_item("worst_path", ids(&s.worst_path))?;
    d.set_item("worst_heuristic", s.worst_heuristic)?;
    d.set_item("notes", s.notes.clone())?;
    Ok(d)
}

#[pyclass(module = "acscp", frozen)]
struct EpisodeLog {
    inner: CoreLog,
}

#[pymethods]
impl EpisodeLog {
    #[staticmethod]
    fn read(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(EpisodeLog {
            inner: io::read_log(&path).map_err(to_py)?,
        })
    }

    fn write(&self, path: std::path::PathBuf) -> PyResult<()> {
        io::write_log(&path, &self.inner).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        io::encode_log(&self.inner).map_err(to_py)
    }

    #[getter]
    fn traveled(&self) -> Vec<usize> {
        ids(&self.inner.traveled())
    }

    #[getter]
    fn placements(&self) -> usize {
        self.inner.placements
    }

    #[getter]
    fn unique_placements(&self) -> usize {
        self.inner.unique_placements
    }

    #[getter]
    fn incurred_cost(&self) -> f64 {
        self.inner.incurred_cost
    }

    #[getter]
    fn final_tick(&self) -> u64 {
        self.inner.final_tick()
    }

    #[getter]
    fn replan_count(&self) -> usize {
        self.inner.replans.len()
    }

    /// `(tick, sensor, vertex)` for every placement.
    #[getter]
    fn arrivals(&self) -> Vec<(u64, usize, usize)> {
        self.inner.arrivals.iter().map(|a| (a.tick, a.sensor, a.vertex.get())).collect()
    }

    /// Benchmarks, exposure and efficiency; recomputed when the log carries none.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        match &self.inner.summary {
            Some(s) => summary_dict(py, s),
            None => summary_dict(py, &metrics::evaluate_episode(&self.inner).map_err(to_py)?),
        }
    }

    /// Mismatches between the stored and recomputed metrics; empty when consistent.
    fn verify(&self) -> PyResult<Vec<String>> {
        Ok(io::verify_log(&self.inner).map_err(to_py)?.mismatches)
    }
}

/// Simulate one episode to completion and attach its evaluation.
#[pyfunction]
fn run_episode(py: Python<'_>, config: &EpisodeConfig) -> PyResult<EpisodeLog> {
    let cfg = config.inner.clone();
    let log = py
        .detach(move || -> acscp_core::Result<CoreLog> {
            let mut log = engine::run_episode(cfg)?;
            log.summary = Some(metrics::evaluate_episode(&log)?);
            Ok(log)
        })
        .map_err(to_py)?;
    Ok(EpisodeLog { inner: log })
}

/// Run an experiment from TOML text with `key=value` overrides. Returns the
/// three summary tables as CSV text plus per-episode summaries.
#[pyfunction]
#[pyo3(signature = (spec_toml, overrides = Vec::new(), out_dir = None))]
fn run_experiment<'py>(
    py: Python<'py>,
    spec_toml: &str,
    overrides: Vec<String>,
    out_dir: Option<std::path::PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = harness::parse_spec(spec_toml, &overrides).map_err(to_py)?;
    let result = py.detach(|| harness::run_experiment(&spec)).map_err(to_py)?;
    if let Some(dir) = out_dir {
        harness::write_outputs(&result, &dir).map_err(to_py)?;
    }
    let out = PyDict::new(py);
    out.set_item("exposure", exposure_table(&result))?;
    out.set_item("efficiency", efficiency_table(&result))?;
    out.set_item("episodes", episodes_table(&result))?;
    let episodes = result
        .records
        .iter()
        .map(|r| {
            let d = summary_dict(py, &r.summary)?;
            d.set_item("scheme", &r.scheme)?;
            d.set_item("ratio", r.ratio)?;
            d.set_item("seed", r.seed)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    out.set_item("records", episodes)?;
    Ok(out)
}

#[pymodule]
fn acscp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<GridWorld>()?;
    m.add_class::<EpisodeConfig>()?;
    m.add_class::<EpisodeLog>()?;
    m.add_function(wrap_pyfunction!(plan_optimal_path, m)?)?;
    m.add_function(wrap_pyfunction!(crmi_value, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_exposure, m)?)?;
    m.add_function(wrap_pyfunction!(efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
