//! Receding-horizon networked simulation.
//!
//! Every time step the coupling graph is recomputed from reachable sets, one
//! or more computation sequences are solved (simultaneously, slot by slot),
//! and the sequence with the lowest networked cost is executed for one step.

pub mod coupling;
pub mod mailbox;
pub mod timing;

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ScenarioConfig, TimingMode};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon, Pose};
use crate::graph::{
    enumerate_acyclic_orientations, find_agent_classes, orient, AgentId, ComputationSequence,
    UndirectedCouplingGraph,
};
use crate::map::Path;
use crate::mpa::{generate_mpa, MotionPrimitiveAutomaton, ReachableSetTable};
use crate::planner::{fallback_plan, mcts_plan, trajectory_cost, Plan, PlanningProblem};
use crate::prioritization::{p_constant, priorities_from_sequence, Prioritization, Strategy};
use crate::schedule::{build_schedule, ComputationScheduleMatrix};

pub use coupling::compute_coupling;
pub use mailbox::{Mailbox, MessageRecord};
pub use timing::{networked_computation_time, ComputationGraph};

const SCHEDULE_STREAM: u64 = u64::MAX;
const RANDOM_STREAM: u64 = u64::MAX - 1;

const WALL_PIECE: f64 = 0.25;
const WALL_THICKNESS: f64 = 0.05;

/// Static scenario data shared by every simulation run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub mpa: Arc<MotionPrimitiveAutomaton>,
    pub table: Arc<ReachableSetTable>,
    paths: Vec<Arc<Path>>,
    walls: Vec<Arc<Vec<Polygon>>>,
    reach: Vec<f64>,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        let mpa = generate_mpa(&config.mpa_config())?;
        let table = ReachableSetTable::compute(&mpa);
        Self::with_automaton(config, Arc::new(mpa), Arc::new(table))
    }

    /// Reuses an automaton and its reachable sets, e.g. across seeds.
    pub fn with_automaton(
        config: ScenarioConfig,
        mpa: Arc<MotionPrimitiveAutomaton>,
        table: Arc<ReachableSetTable>,
    ) -> Result<Self> {
        if mpa.config != config.mpa_config() {
            return Err(Error::Scenario(
                "automaton was generated for a different time step, horizon or level set".into(),
            ));
        }
        let built = config.build_paths()?;
        let mut by_name: HashMap<String, (Arc<Path>, Arc<Vec<Polygon>>)> = HashMap::new();
        for (name, path) in built {
            let walls = path.lane_walls(config.map.lane_width, WALL_PIECE, WALL_THICKNESS);
            by_name.insert(name, (Arc::new(path), Arc::new(walls)));
        }
        let (paths, walls) = config
            .vehicles
            .iter()
            .map(|v| by_name[&v.path].clone())
            .unzip();
        let reach = table
            .polygons
            .iter()
            .map(|steps| {
                steps
                    .iter()
                    .map(|p| p.bounding_radius())
                    .fold(0.0, f64::max)
            })
            .collect();
        Ok(Self {
            config,
            mpa,
            table,
            paths,
            walls,
            reach,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.config.vehicles.len()
    }

    pub fn path(&self, agent: AgentId) -> &Path {
        &self.paths[agent - 1]
    }

    pub fn walls(&self, agent: AgentId) -> &[Polygon] {
        &self.walls[agent - 1]
    }

    /// Vehicles at rest at their start positions, with standstill plans.
    pub fn initial_world(&self) -> Result<World> {
        let q0 = self
            .mpa
            .state_index(0.0, 0.0)
            .unwrap_or(self.mpa.initial_state);
        let mut vehicles = Vec::with_capacity(self.n_agents());
        for (k, spec) in self.config.vehicles.iter().enumerate() {
            let path = &self.paths[k];
            let pose = path.pose_at(spec.start_s);
            vehicles.push(VehicleRuntime {
                state: q0,
                pose,
                progress: spec.start_s.rem_euclid(path.length()),
                plan: Plan::standstill(&self.mpa, q0, pose)?,
            });
        }
        let footprints: Vec<Polygon> = vehicles
            .iter()
            .map(|v| {
                self.mpa
                    .vehicle()
                    .footprint(v.pose, self.mpa.config.occupancy_margin)
            })
            .collect();
        let mut problems = Vec::new();
        for a in 0..footprints.len() {
            for b in a + 1..footprints.len() {
                if footprints[a].intersects(&footprints[b]) {
                    problems.push(format!(
                        "vehicles {} and {} overlap at the start",
                        a + 1,
                        b + 1
                    ));
                }
            }
            if self.walls[a].iter().any(|w| w.intersects(&footprints[a])) {
                problems.push(format!("vehicle {} starts outside its lane", a + 1));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Scenario(problems.join("; ")));
        }
        Ok(World {
            k: 0,
            vehicles,
            retained: p_constant(self.n_agents()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleRuntime {
    /// Current automaton state.
    pub state: usize,
    pub pose: Pose,
    /// Arc length of the projection onto the vehicle's path.
    pub progress: f64,
    /// Plan executed in the previous step; its shifted version is the
    /// fallback.
    pub plan: Plan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub k: usize,
    pub vehicles: Vec<VehicleRuntime>,
    /// Prioritization kept from the previous step's selected sequence.
    pub retained: Prioritization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub agent: AgentId,
    pub row: usize,
    pub slot: usize,
    pub feasible: bool,
    pub cost: Option<f64>,
    pub expansions: usize,
    pub seconds: f64,
    /// Agents whose plans were obstacles in this solve.
    pub obstacle_sources: Vec<AgentId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowOutcome {
    pub sequence: ComputationSequence,
    /// Plans after fallback substitution, indexed by `agent - 1`.
    pub plans: Vec<Plan>,
    pub costs: Vec<f64>,
    pub solves: Vec<SolveRecord>,
    pub fallback: Vec<AgentId>,
    /// Networked cost: the sum of `costs`.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub k: usize,
    pub strategy: Strategy,
    pub coupling: UndirectedCouplingGraph,
    /// Classes of the initial sequence (explore) or of the single sequence.
    pub n_classes: usize,
    pub schedule: Option<ComputationScheduleMatrix>,
    pub rows: Vec<RowOutcome>,
    pub selected: usize,
    pub networked_time: f64,
    pub messages: Vec<MessageRecord>,
}

impl StepOutcome {
    pub fn cost(&self) -> f64 {
        self.rows[self.selected].cost
    }

    pub fn row_costs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.cost).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStep {
    pub agent: AgentId,
    pub primitives: Vec<usize>,
    pub cost: f64,
    pub feasible: bool,
    pub fallback: bool,
    /// Pose and speed after executing the step.
    pub pose: Pose,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub strategy: Strategy,
    pub coupling_edges: Vec<(AgentId, AgentId)>,
    pub n_classes: usize,
    pub schedule: Option<ComputationScheduleMatrix>,
    pub row_costs: Vec<f64>,
    pub selected: usize,
    pub cost: f64,
    pub selected_sequence: ComputationSequence,
    /// `solve_seconds[row][agent - 1]`.
    pub solve_seconds: Vec<Vec<f64>>,
    pub expansions: usize,
    pub fallback: Vec<Vec<AgentId>>,
    pub networked_time: f64,
    pub messages: usize,
    pub message_bytes: usize,
    pub collision_free: bool,
    pub agents: Vec<AgentStep>,
}

type SolveOutput = (SolveRecord, Option<Plan>);
type InputKey<'a> = (AgentId, Vec<(AgentId, &'a [usize])>);

/// Per-step inputs shared by all solves of one agent.
struct AgentContext {
    reference: Vec<Point>,
    walls: Vec<Polygon>,
}

pub struct Simulation<'a> {
    scenario: &'a Scenario,
    world: World,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        Ok(Self {
            scenario,
            world: scenario.initial_world()?,
        })
    }

    pub fn from_world(scenario: &'a Scenario, world: World) -> Self {
        Self { scenario, world }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    pub fn coupling(&self) -> UndirectedCouplingGraph {
        let agents: Vec<(usize, Pose)> = self
            .world
            .vehicles
            .iter()
            .map(|v| (v.state, v.pose))
            .collect();
        compute_coupling(&agents, &self.scenario.table)
    }

    fn agent_context(&self, agent: AgentId) -> AgentContext {
        let sc = self.scenario;
        let v = &self.world.vehicles[agent - 1];
        let spec = &sc.config.vehicles[agent - 1];
        let reference = sc.path(agent).reference(
            v.progress,
            spec.ref_speed,
            sc.config.time_step,
            sc.config.horizon,
        );
        let radius = sc.reach[v.state] + 0.1;
        let walls = sc
            .walls(agent)
            .iter()
            .filter(|w| {
                w.vertices()
                    .iter()
                    .any(|p| (p[0] - v.pose.x).hypot(p[1] - v.pose.y) <= radius)
            })
            .cloned()
            .collect();
        AgentContext { reference, walls }
    }

    /// Plans one step with `strategy` without changing the world.
    pub fn plan_step(&self, strategy: Strategy) -> Result<StepOutcome> {
        let sc = self.scenario;
        let n = sc.n_agents();
        let k = self.world.k;
        let seed = sc.config.seed;
        let g = self.coupling();

        let (sequences, schedule, n_classes) = match strategy {
            Strategy::Explore => {
                let dag = orient(&g, &self.world.retained)?;
                let initial = find_agent_classes(&dag)?;
                let n_l = initial.len();
                let matrix =
                    build_schedule(n_l, derive_seed(&[seed, k as u64, SCHEDULE_STREAM])).matrix;
                let n_rows = sc.config.max_classes.map_or(n_l, |cap| cap.min(n_l));
                let sequences: Vec<ComputationSequence> = (0..n_rows)
                    .map(|q| matrix.row_sequence(&initial, q))
                    .collect();
                (sequences, Some((matrix, initial)), n_l)
            }
            Strategy::Optimal => {
                let orientations = enumerate_acyclic_orientations(&g)?;
                if orientations.len() > sc.config.optimal_cap {
                    return Err(Error::Capacity {
                        what: "optimal prioritization (acyclic orientations)",
                        size: orientations.len(),
                        limit: sc.config.optimal_cap,
                    });
                }
                let sequences = orientations
                    .iter()
                    .map(find_agent_classes)
                    .collect::<Result<Vec<_>>>()?;
                let n_classes = sequences
                    .iter()
                    .map(ComputationSequence::len)
                    .max()
                    .unwrap_or(1);
                (sequences, None, n_classes)
            }
            heuristic => {
                let p = heuristic
                    .heuristic(&g, derive_seed(&[seed, k as u64, RANDOM_STREAM]))
                    .expect("heuristic strategies yield a prioritization");
                let seq = find_agent_classes(&orient(&g, &p)?)?;
                let n_classes = seq.len();
                (vec![seq], None, n_classes)
            }
        };

        let (rows, messages) = self.execute(&g, &sequences)?;
        let selected =
            rows.iter().enumerate().fold(
                0,
                |best, (r, row)| if row.cost < rows[best].cost { r } else { best },
            );

        let times: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| {
                let mut t = vec![0.0; n];
                for s in &row.solves {
                    t[s.agent - 1] = s.seconds;
                }
                t
            })
            .collect();
        let graph = match &schedule {
            Some((matrix, initial)) => ComputationGraph::schedule(&g, initial, matrix, &times)?,
            None => ComputationGraph::rows(&g, &sequences, &times, |r, _| r as f64)?,
        };
        let networked_time = networked_computation_time(&graph)?;

        Ok(StepOutcome {
            k,
            strategy,
            coupling: g,
            n_classes,
            schedule: schedule.map(|(m, _)| m),
            rows,
            selected,
            networked_time,
            messages,
        })
    }

    /// Solves every sequence; slot `m` of all sequences runs concurrently,
    /// slots are barriers.
    fn execute(
        &self,
        g: &UndirectedCouplingGraph,
        sequences: &[ComputationSequence],
    ) -> Result<(Vec<RowOutcome>, Vec<MessageRecord>)> {
        let sc = self.scenario;
        let mpa = &*sc.mpa;
        let n = sc.n_agents();
        let contexts: Vec<AgentContext> = (1..=n).map(|i| self.agent_context(i)).collect();
        let mut mailbox = Mailbox::default();
        let mut results: Vec<Vec<Option<SolveOutput>>> = vec![vec![None; n]; sequences.len()];
        let n_slots = sequences
            .iter()
            .map(ComputationSequence::len)
            .max()
            .unwrap_or(0);

        for slot in 0..n_slots {
            let tasks: Vec<(usize, AgentId)> = sequences
                .iter()
                .enumerate()
                .filter_map(|(r, seq)| seq.classes().get(slot).map(|c| (r, c)))
                .flat_map(|(r, c)| c.members().iter().map(move |&i| (r, i)))
                .collect();
            // identical inputs give identical plans; solve each distinct input once
            let inputs: Vec<Vec<(AgentId, Plan)>> =
                tasks.iter().map(|&(r, i)| mailbox.received(i, r)).collect();
            let mut unique: Vec<(AgentId, &[(AgentId, Plan)])> = Vec::new();
            // key: (agent, senders with their primitive chains)
            let mut index: HashMap<InputKey<'_>, usize> = HashMap::new();
            let task_unique: Vec<usize> = tasks
                .iter()
                .zip(&inputs)
                .map(|(&(_, i), input)| {
                    let key = (
                        i,
                        input
                            .iter()
                            .map(|(j, p)| (*j, p.primitives.as_slice()))
                            .collect(),
                    );
                    *index.entry(key).or_insert_with(|| {
                        unique.push((i, input.as_slice()));
                        unique.len() - 1
                    })
                })
                .collect();
            let solved: Vec<Result<(crate::planner::PlanResult, f64)>> = unique
                .par_iter()
                .map(|&(i, input)| self.solve(i, &contexts[i - 1], input))
                .collect();
            let solved = solved.into_iter().collect::<Result<Vec<_>>>()?;

            for ((&(r, i), input), &u) in tasks.iter().zip(&inputs).zip(&task_unique) {
                let (result, seconds) = &solved[u];
                let record = SolveRecord {
                    agent: i,
                    row: r,
                    slot,
                    feasible: result.feasible,
                    cost: result.cost,
                    expansions: result.expansions,
                    seconds: *seconds,
                    obstacle_sources: input.iter().map(|(j, _)| *j).collect(),
                };
                let outgoing = match &result.plan {
                    Some(p) => p.clone(),
                    None => fallback_plan(mpa, &self.world.vehicles[i - 1].plan)?,
                };
                let seq = &sequences[r];
                for j in g.neighbors(i) {
                    if seq.position_of(j) > Some(slot) {
                        mailbox.send(r, i, j, &outgoing);
                    }
                }
                results[r][i - 1] = Some((record, result.plan.clone()));
            }
        }

        let components = g.connected_components();
        let mut rows = Vec::with_capacity(sequences.len());
        for (r, seq) in sequences.iter().enumerate() {
            let mut solves = Vec::with_capacity(n);
            let mut plans = Vec::with_capacity(n);
            for slot in results[r].iter_mut() {
                let (record, plan) = slot.take().expect("every agent solves once per row");
                solves.push(record);
                plans.push(plan);
            }
            // one infeasible agent sends its whole coupled component back to
            // the previous plans, which are mutually consistent
            let mut fallback: Vec<AgentId> = components
                .iter()
                .filter(|c| c.iter().any(|&i| plans[i - 1].is_none()))
                .flatten()
                .copied()
                .collect();
            fallback.sort_unstable();
            let mut final_plans = Vec::with_capacity(n);
            let mut costs = Vec::with_capacity(n);
            for i in 1..=n {
                let plan = if fallback.binary_search(&i).is_ok() {
                    fallback_plan(mpa, &self.world.vehicles[i - 1].plan)?
                } else {
                    plans[i - 1]
                        .clone()
                        .expect("feasible outside fallback components")
                };
                costs.push(trajectory_cost(
                    &plan.positions(),
                    &contexts[i - 1].reference,
                )?);
                final_plans.push(plan);
            }
            rows.push(RowOutcome {
                sequence: seq.clone(),
                plans: final_plans,
                cost: costs.iter().sum(),
                costs,
                solves,
                fallback,
            });
        }
        Ok((rows, mailbox.log().to_vec()))
    }

    fn solve(
        &self,
        agent: AgentId,
        ctx: &AgentContext,
        received: &[(AgentId, Plan)],
    ) -> Result<(crate::planner::PlanResult, f64)> {
        let sc = self.scenario;
        let mpa = &*sc.mpa;
        let v = &self.world.vehicles[agent - 1];
        let mut problem = PlanningProblem::new(v.state, v.pose, ctx.reference.clone());
        for (_, plan) in received {
            for (l, step) in problem.obstacles.iter_mut().enumerate() {
                step.push(plan.occupancy(mpa, l));
            }
        }
        problem.static_obstacles = ctx.walls.clone();
        let seed = derive_seed(&[sc.config.seed, self.world.k as u64, agent as u64]);
        let started = Instant::now();
        let result = mcts_plan(&problem, mpa, sc.config.mcts_budget, seed)?;
        let seconds = match sc.config.timing {
            TimingMode::Synthetic => result.expansions as f64 * sc.config.seconds_per_expansion,
            TimingMode::WallClock => started.elapsed().as_secs_f64(),
        };
        Ok((result, seconds))
    }

    /// Executes the first step of the selected row after auditing it.
    pub fn apply(&mut self, outcome: &StepOutcome) -> Result<StepRecord> {
        let sc = self.scenario;
        let mpa = &*sc.mpa;
        let row = &outcome.rows[outcome.selected];
        audit_step(mpa, &row.plans, self.world.k)?;
        for (idx, plan) in row.plans.iter().enumerate() {
            if !plan.ends_at_standstill(mpa) || !plan.is_gamma_consistent(mpa) {
                return Err(Error::Scenario(format!(
                    "plan of agent {} at step {} is not recursively feasible",
                    idx + 1,
                    self.world.k
                )));
            }
        }

        let mut agents = Vec::with_capacity(row.plans.len());
        for (idx, plan) in row.plans.iter().enumerate() {
            let agent = idx + 1;
            let path = sc.path(agent);
            let v = &mut self.world.vehicles[idx];
            v.state = plan.states[1];
            v.pose = plan.poses[1];
            v.progress = path.project([v.pose.x, v.pose.y], Some(v.progress));
            v.plan = plan.clone();
            let solve = row.solves.iter().find(|s| s.agent == agent);
            agents.push(AgentStep {
                agent,
                primitives: plan.primitives.clone(),
                cost: row.costs[idx],
                feasible: solve.is_some_and(|s| s.feasible),
                fallback: row.fallback.contains(&agent),
                pose: v.pose,
                speed: mpa.states[v.state].speed,
            });
        }
        if outcome.strategy == Strategy::Explore {
            self.world.retained = priorities_from_sequence(&row.sequence, sc.n_agents())?;
        }

        let record = StepRecord {
            k: outcome.k,
            strategy: outcome.strategy,
            coupling_edges: outcome.coupling.edges().collect(),
            n_classes: outcome.n_classes,
            schedule: outcome.schedule.clone(),
            row_costs: outcome.row_costs(),
            selected: outcome.selected,
            cost: outcome.cost(),
            selected_sequence: row.sequence.clone(),
            solve_seconds: outcome
                .rows
                .iter()
                .map(|r| {
                    let mut t = vec![0.0; r.solves.len()];
                    for s in &r.solves {
                        t[s.agent - 1] = s.seconds;
                    }
                    t
                })
                .collect(),
            expansions: outcome
                .rows
                .iter()
                .flat_map(|r| &r.solves)
                .map(|s| s.expansions)
                .sum(),
            fallback: outcome.rows.iter().map(|r| r.fallback.clone()).collect(),
            networked_time: outcome.networked_time,
            messages: outcome.messages.len(),
            message_bytes: outcome.messages.iter().map(|m| m.bytes).sum(),
            collision_free: true,
            agents,
        };
        self.world.k += 1;
        Ok(record)
    }

    pub fn step(&mut self, strategy: Strategy) -> Result<StepRecord> {
        let outcome = self.plan_step(strategy)?;
        self.apply(&outcome)
    }
}

/// Pairwise footprint check of the executed first step at every sample.
pub fn audit_step(mpa: &MotionPrimitiveAutomaton, plans: &[Plan], k: usize) -> Result<()> {
    let samples: Vec<Vec<Polygon>> = plans
        .iter()
        .map(|p| {
            p.samples(mpa, 0)
                .iter()
                .map(|s| mpa.vehicle().footprint(s.pose(), 0.0))
                .collect()
        })
        .collect();
    for a in 0..samples.len() {
        for b in a + 1..samples.len() {
            for (sample, (fa, fb)) in samples[a].iter().zip(&samples[b]).enumerate() {
                if fa.intersects(fb) {
                    return Err(Error::CollisionAudit {
                        step: k,
                        sample,
                        a: a + 1,
                        b: b + 1,
                    });
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub strategy: Strategy,
    pub seed: u64,
    pub n_vehicles: usize,
    pub time_step: f64,
    pub steps: usize,
    /// Sum over steps of the selected networked cost.
    pub total_cost: f64,
    pub total_networked_time: f64,
    pub max_networked_time: f64,
    pub mean_classes: f64,
    pub coupling_edges_max: usize,
    pub records: Vec<StepRecord>,
}

pub fn run_experiment(scenario: &Scenario, strategy: Strategy) -> Result<ExperimentReport> {
    let mut sim = Simulation::new(scenario)?;
    let steps = scenario.config.steps();
    let mut records = Vec::with_capacity(steps);
    for _ in 0..steps {
        let record = sim.step(strategy)?;
        log::debug!(
            "step {} {}: cost {:.4}, classes {}, rows {:?}",
            record.k,
            strategy,
            record.cost,
            record.n_classes,
            record.row_costs
        );
        records.push(record);
    }
    Ok(ExperimentReport {
        strategy,
        seed: scenario.config.seed,
        n_vehicles: scenario.n_agents(),
        time_step: scenario.config.time_step,
        steps,
        total_cost: records.iter().map(|r| r.cost).sum(),
        total_networked_time: records.iter().map(|r| r.networked_time).sum(),
        max_networked_time: records.iter().map(|r| r.networked_time).fold(0.0, f64::max),
        mean_classes: records.iter().map(|r| r.n_classes as f64).sum::<f64>() / steps.max(1) as f64,
        coupling_edges_max: records
            .iter()
            .map(|r| r.coupling_edges.len())
            .max()
            .unwrap_or(0),
        records,
    })
}
