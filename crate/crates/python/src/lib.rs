//! Python bindings. Structured results (reports, step records, certificates)
//! cross the boundary as JSON strings.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use multiprio::config::{parse_config, parse_config_str};
use multiprio::graph::{self, DirectedCouplingGraph, UndirectedCouplingGraph};
use multiprio::mapf::{self, GridPriorities};
use multiprio::prioritization::{self, Prioritization, Strategy};
use multiprio::schedule::{self, ComputationScheduleMatrix};
use multiprio::sim::{self, ComputationGraph, World};

create_exception!(multiprio_py, MultiprioError, PyException);

fn err(e: multiprio::Error) -> PyErr {
    MultiprioError::new_err(format!("{}: {e}", e.kind()))
}

fn json_err(e: serde_json::Error) -> PyErr {
    err(e.into())
}

fn strategy(name: &str) -> PyResult<Strategy> {
    name.parse().map_err(MultiprioError::new_err)
}

fn sequence_lists(seq: &graph::ComputationSequence) -> Vec<Vec<usize>> {
    seq.classes().iter().map(|c| c.members().to_vec()).collect()
}

/// Agent classes of a DAG over agents `1..=n`, as lists of agent ids.
#[pyfunction]
fn find_agent_classes(n: usize, arcs: Vec<(usize, usize)>) -> PyResult<Vec<Vec<usize>>> {
    let dag = DirectedCouplingGraph::from_arcs(n, arcs).map_err(err)?;
    Ok(sequence_lists(
        &graph::find_agent_classes(&dag).map_err(err)?,
    ))
}

/// Orients undirected edges from higher to lower priority (lower value first).
#[pyfunction]
fn orient(
    n: usize,
    edges: Vec<(usize, usize)>,
    priorities: Vec<u64>,
) -> PyResult<Vec<(usize, usize)>> {
    let g = UndirectedCouplingGraph::from_edges(n, edges).map_err(err)?;
    let dag = graph::orient(&g, &Prioritization::from_values(&priorities)).map_err(err)?;
    Ok(dag.arcs().collect())
}

/// Unique priorities of a computation sequence, indexed by agent id - 1.
#[pyfunction]
fn priorities_from_sequence(classes: Vec<Vec<usize>>, n: usize) -> PyResult<Vec<u64>> {
    let sets: Vec<&[usize]> = classes.iter().map(Vec::as_slice).collect();
    let seq = graph::ComputationSequence::from_sets(&sets);
    let p = prioritization::priorities_from_sequence(&seq, n).map_err(err)?;
    Ok(p.iter().map(|(_, v)| v).collect())
}

#[pyfunction]
fn count_acyclic_orientations(n: usize, edges: Vec<(usize, usize)>) -> PyResult<usize> {
    let g = UndirectedCouplingGraph::from_edges(n, edges).map_err(err)?;
    Ok(graph::enumerate_acyclic_orientations(&g)
        .map_err(err)?
        .len())
}

#[pyfunction]
fn build_schedule(n_levels: usize, seed: u64) -> Vec<Vec<usize>> {
    schedule::build_schedule(n_levels, seed)
        .matrix
        .rows()
        .to_vec()
}

#[pyfunction]
fn validate_schedule(rows: Vec<Vec<usize>>) -> PyResult<bool> {
    ComputationScheduleMatrix::from_rows(rows)
        .validate()
        .map_err(err)
}

#[pyfunction]
fn unique_schedule_count(n: usize) -> PyResult<usize> {
    Ok(schedule::unique_schedule_sets(n).map_err(err)?.len())
}

/// Networked computation time of one prioritization (`times[i - 1]` per agent).
#[pyfunction]
fn networked_time(n: usize, arcs: Vec<(usize, usize)>, times: Vec<f64>) -> PyResult<f64> {
    let dag = DirectedCouplingGraph::from_arcs(n, arcs).map_err(err)?;
    let g = ComputationGraph::single(&dag, &times).map_err(err)?;
    sim::networked_computation_time(&g).map_err(err)
}

/// Vertex and edge conflicts of equal-length vertex sequences, as JSON.
#[pyfunction]
fn detect_conflicts(paths: Vec<Vec<usize>>) -> PyResult<String> {
    let conflicts = mapf::detect_conflicts(&paths).map_err(err)?;
    serde_json::to_string(&conflicts).map_err(json_err)
}

/// A scenario with its motion primitive automaton.
#[pyclass(frozen)]
struct Scenario {
    inner: Arc<sim::Scenario>,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let config = parse_config(path).map_err(err)?;
        Ok(Self {
            inner: Arc::new(sim::Scenario::new(config).map_err(err)?),
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let config = parse_config_str(text).map_err(err)?;
        Ok(Self {
            inner: Arc::new(sim::Scenario::new(config).map_err(err)?),
        })
    }

    /// Same scenario and automaton with another seed.
    fn with_seed(&self, seed: u64) -> PyResult<Self> {
        let mut config = self.inner.config.clone();
        config.seed = seed;
        let sc =
            sim::Scenario::with_automaton(config, self.inner.mpa.clone(), self.inner.table.clone())
                .map_err(err)?;
        Ok(Self {
            inner: Arc::new(sc),
        })
    }

    #[getter]
    fn n_agents(&self) -> usize {
        self.inner.n_agents()
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.config.steps()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.config.seed
    }

    /// Runs the whole experiment; returns the report as JSON.
    #[pyo3(signature = (strategy = None))]
    fn run(&self, py: Python<'_>, strategy: Option<&str>) -> PyResult<String> {
        let strategy = strategy
            .map(self::strategy)
            .transpose()?
            .unwrap_or(self.inner.config.strategy);
        let sc = self.inner.clone();
        let report = py
            .detach(move || sim::run_experiment(&sc, strategy))
            .map_err(err)?;
        serde_json::to_string(&report).map_err(json_err)
    }

    fn simulation(&self) -> PyResult<Simulation> {
        let world = sim::Simulation::new(&self.inner)
            .map_err(err)?
            .world()
            .clone();
        Ok(Simulation {
            scenario: self.inner.clone(),
            world,
        })
    }
}

/// Step-by-step simulation.
#[pyclass]
struct Simulation {
    scenario: Arc<sim::Scenario>,
    world: World,
}

#[pymethods]
impl Simulation {
    #[getter]
    fn k(&self) -> usize {
        self.world.k
    }

    /// Coupling edges of the current world.
    fn coupling(&self) -> Vec<(usize, usize)> {
        sim::Simulation::from_world(&self.scenario, self.world.clone())
            .coupling()
            .edges()
            .collect()
    }

    /// Selected networked cost of `strategy` at the current step, without
    /// advancing the world.
    fn cost(&self, strategy: &str) -> PyResult<f64> {
        let s = self::strategy(strategy)?;
        let sim = sim::Simulation::from_world(&self.scenario, self.world.clone());
        Ok(sim.plan_step(s).map_err(err)?.cost())
    }

    /// Plans and executes one step; returns the step record as JSON.
    fn step(&mut self, strategy: &str) -> PyResult<String> {
        let s = self::strategy(strategy)?;
        let mut sim = sim::Simulation::from_world(&self.scenario, self.world.clone());
        let record = sim.step(s).map_err(err)?;
        self.world = sim.world().clone();
        serde_json::to_string(&record).map_err(json_err)
    }
}

/// Grid path-finding instance.
#[pyclass(frozen)]
struct GridInstance {
    inner: mapf::GridInstance,
}

#[pymethods]
impl GridInstance {
    #[new]
    fn new(
        map: &str,
        starts: Vec<(usize, usize)>,
        targets: Vec<(usize, usize)>,
        time_limit: usize,
    ) -> PyResult<Self> {
        let grid = mapf::Grid::parse(map).map_err(err)?;
        let cell = |(x, y): (usize, usize)| grid.vertex(x, y).unwrap_or(usize::MAX);
        let starts = starts.into_iter().map(cell).collect();
        let targets = targets.into_iter().map(cell).collect();
        Ok(Self {
            inner: mapf::GridInstance::new(grid.clone(), starts, targets, time_limit)
                .map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: mapf::GridInstance::load(path).map_err(err)?,
        })
    }

    #[getter]
    fn n_agents(&self) -> usize {
        self.inner.n_agents()
    }

    /// Paths as vertex ids for a fixed ordering (highest priority first), or
    /// `None` if prioritized planning fails.
    fn solve(&self, order: Vec<usize>) -> PyResult<Option<Vec<Vec<usize>>>> {
        let plan = mapf::pp_solve_grid(&self.inner, &GridPriorities::Fixed(order)).map_err(err)?;
        Ok(plan.map(|p| p.paths))
    }

    /// Like `solve`, with one ordering per time step.
    fn solve_time_variant(&self, schedule: Vec<Vec<usize>>) -> PyResult<Option<Vec<Vec<usize>>>> {
        let plan = mapf::pp_solve_grid(&self.inner, &GridPriorities::TimeVariant(schedule))
            .map_err(err)?;
        Ok(plan.map(|p| p.paths))
    }

    /// Solvability class and certificate as JSON.
    fn classify(&self) -> PyResult<String> {
        let cert = mapf::classify_solvability(&self.inner).map_err(err)?;
        serde_json::to_string(&cert).map_err(json_err)
    }
}

#[pymodule]
fn multiprio_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MultiprioError", m.py().get_type::<MultiprioError>())?;
    m.add("STRATEGIES", Strategy::ALL.map(Strategy::name).to_vec())?;
    m.add_function(wrap_pyfunction!(find_agent_classes, m)?)?;
    m.add_function(wrap_pyfunction!(orient, m)?)?;
    m.add_function(wrap_pyfunction!(priorities_from_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(count_acyclic_orientations, m)?)?;
    m.add_function(wrap_pyfunction!(build_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(validate_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(unique_schedule_count, m)?)?;
    m.add_function(wrap_pyfunction!(networked_time, m)?)?;
    m.add_function(wrap_pyfunction!(detect_conflicts, m)?)?;
    m.add_class::<Scenario>()?;
    m.add_class::<Simulation>()?;
    m.add_class::<GridInstance>()?;
    Ok(())
}
