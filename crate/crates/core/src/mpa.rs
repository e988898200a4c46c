//! Motion primitive automaton.
//!
//! Automaton states are pairs of a speed level and a steering level. A
//! transition (motion primitive) moves between two states within one time
//! step and carries the precomputed state trajectory in the local frame of
//! its start pose, together with the convex hull of the swept footprint.
//! The update function depends on the position within the horizon so that
//! every admissible plan can brake to standstill at the horizon end.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon, Pose};
use crate::vehicle::{integrate, ControlInput, VehicleParams, VehicleState};

const LEVEL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpaConfig {
    /// Speed levels [m/s]; must contain 0.
    pub speed_levels: Vec<f64>,
    /// Steering levels [rad].
    pub steering_levels: Vec<f64>,
    /// Primitive duration [s].
    pub time_step: f64,
    /// Prediction horizon in steps.
    pub horizon: usize,
    /// Bound on |acceleration| [m/s²].
    pub max_accel: f64,
    /// Bound on |steering rate| [rad/s].
    pub max_steer_rate: f64,
    /// Poses stored per primitive, including both end points.
    pub n_samples: usize,
    /// Footprint inflation used for occupancy polygons [m].
    pub occupancy_margin: f64,
    /// RK4 substeps per primitive.
    pub substeps: usize,
    pub vehicle: VehicleParams,
}

impl Default for MpaConfig {
    fn default() -> Self {
        Self {
            speed_levels: vec![0.0, 0.4, 0.8, 1.2],
            steering_levels: vec![-0.3, -0.15, 0.0, 0.15, 0.3],
            time_step: 0.2,
            horizon: 6,
            max_accel: 2.0,
            max_steer_rate: 0.75,
            n_samples: 5,
            occupancy_margin: 0.01,
            substeps: 20,
            vehicle: VehicleParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutomatonState {
    pub speed: f64,
    pub steering: f64,
}

impl AutomatonState {
    pub fn is_final(&self) -> bool {
        self.speed.abs() < LEVEL_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    /// Constant input applied over the primitive (linear ramps of speed and
    /// steering angle).
    pub input: ControlInput,
    /// Sampled states relative to the start pose; the first sample is the
    /// local origin with heading 0.
    pub samples: Vec<VehicleState>,
    /// Swept footprint in the local frame.
    pub occupancy: Polygon,
}

impl MotionPrimitive {
    /// End pose relative to the start pose.
    pub fn end_pose(&self) -> Pose {
        self.samples
            .last()
            .map(VehicleState::pose)
            .unwrap_or_default()
    }

    pub fn is_standstill(&self) -> bool {
        self.from == self.to
            && self
                .samples
                .iter()
                .all(|s| s.x == 0.0 && s.y == 0.0 && s.psi == 0.0)
    }

    /// Sample poses in the world frame for a primitive started at `pose`.
    pub fn world_samples(&self, pose: Pose) -> Vec<Pose> {
        self.samples
            .iter()
            .map(|s| pose.compose(s.pose()))
            .collect()
    }
}

pub fn primitive_occupancy(prim: &MotionPrimitive, pose: Pose) -> Polygon {
    prim.occupancy.transformed(pose)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitiveAutomaton {
    pub config: MpaConfig,
    pub states: Vec<AutomatonState>,
    pub primitives: Vec<MotionPrimitive>,
    pub initial_state: usize,
    /// Fewest transitions needed to reach a final state from each state.
    pub steps_to_stop: Vec<usize>,
    outgoing: Vec<Vec<usize>>,
}

impl MotionPrimitiveAutomaton {
    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    pub fn time_step(&self) -> f64 {
        self.config.time_step
    }

    pub fn vehicle(&self) -> &VehicleParams {
        &self.config.vehicle
    }

    pub fn is_final(&self, q: usize) -> bool {
        self.states[q].is_final()
    }

    pub fn final_states(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&q| self.is_final(q))
            .collect()
    }

    /// State index for the given levels.
    pub fn state_index(&self, speed: f64, steering: f64) -> Option<usize> {
        self.states.iter().position(|s| {
            (s.speed - speed).abs() < LEVEL_TOLERANCE
                && (s.steering - steering).abs() < LEVEL_TOLERANCE
        })
    }

    /// All primitives leaving `q`, regardless of the horizon position.
    pub fn outgoing(&self, q: usize) -> impl Iterator<Item = &MotionPrimitive> + '_ {
        self.outgoing[q].iter().map(move |&id| &self.primitives[id])
    }

    /// Update function: the primitive is admissible at horizon position
    /// `step` (0-based) iff its end state can still brake to standstill in
    /// the remaining steps.
    pub fn admissible(&self, prim: &MotionPrimitive, step: usize) -> bool {
        step < self.config.horizon && self.steps_to_stop[prim.to] < self.config.horizon - step
    }

    pub fn successors(&self, q: usize, step: usize) -> impl Iterator<Item = &MotionPrimitive> + '_ {
        self.outgoing(q).filter(move |p| self.admissible(p, step))
    }

    /// The self-loop at a standstill state.
    pub fn standstill(&self, q: usize) -> Option<&MotionPrimitive> {
        self.outgoing(q).find(|p| p.is_standstill())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mpa: Self = serde_json::from_str(text)?;
        if mpa.outgoing.len() != mpa.states.len() || mpa.steps_to_stop.len() != mpa.states.len() {
            return Err(Error::Config(
                vec!["inconsistent automaton document".into()],
            ));
        }
        Ok(mpa)
    }
}

pub fn generate_mpa(config: &MpaConfig) -> Result<MotionPrimitiveAutomaton> {
    let mut problems = Vec::new();
    if !config.vehicle.is_valid() {
        problems
            .push("vehicle parameters: need 0 < rear_to_cg < wheelbase and positive body".into());
    }
    if !config
        .speed_levels
        .iter()
        .any(|v| v.abs() < LEVEL_TOLERANCE)
    {
        problems.push("speed levels must include 0".into());
    }
    if config.speed_levels.iter().any(|&v| v < 0.0) {
        problems.push("speed levels must be nonnegative".into());
    }
    if config.steering_levels.is_empty() {
        problems.push("at least one steering level is required".into());
    }
    if config.time_step <= 0.0 || config.horizon == 0 {
        problems.push("time_step and horizon must be positive".into());
    }
    if config.n_samples < 2 {
        problems.push("n_samples must be at least 2".into());
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }

    let states: Vec<AutomatonState> = config
        .speed_levels
        .iter()
        .flat_map(|&speed| {
            config
                .steering_levels
                .iter()
                .map(move |&steering| AutomatonState { speed, steering })
        })
        .collect();

    let dv_max = config.max_accel * config.time_step + LEVEL_TOLERANCE;
    let dd_max = config.max_steer_rate * config.time_step + LEVEL_TOLERANCE;
    let pairs: Vec<(usize, usize)> = (0..states.len())
        .flat_map(|a| (0..states.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| {
            (states[a].speed - states[b].speed).abs() <= dv_max
                && (states[a].steering - states[b].steering).abs() <= dd_max
        })
        .collect();

    let primitives: Vec<MotionPrimitive> = pairs
        .par_iter()
        .enumerate()
        .map(|(id, &(from, to))| build_primitive(config, id, from, to, &states))
        .collect();

    let mut outgoing = vec![Vec::new(); states.len()];
    for p in &primitives {
        outgoing[p.from].push(p.id);
    }

    let steps_to_stop = braking_distances(&states, &primitives);
    let unreachable: Vec<String> = steps_to_stop
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > config.horizon)
        .map(|(q, _)| {
            format!(
                "state (v={}, delta={}) cannot reach standstill within {} steps",
                states[q].speed, states[q].steering, config.horizon
            )
        })
        .collect();
    if !unreachable.is_empty() {
        return Err(Error::Config(unreachable));
    }

    let initial_state = states
        .iter()
        .position(|s| s.is_final() && s.steering.abs() < LEVEL_TOLERANCE)
        .or_else(|| states.iter().position(AutomatonState::is_final))
        .expect("a final state exists");

    Ok(MotionPrimitiveAutomaton {
        config: config.clone(),
        states,
        primitives,
        initial_state,
        steps_to_stop,
        outgoing,
    })
}

fn build_primitive(
    config: &MpaConfig,
    id: usize,
    from: usize,
    to: usize,
    states: &[AutomatonState],
) -> MotionPrimitive {
    let (a, b) = (states[from], states[to]);
    let t = config.time_step;
    let input = ControlInput {
        accel: (b.speed - a.speed) / t,
        steer_rate: (b.steering - a.steering) / t,
    };
    let start = VehicleState {
        x: 0.0,
        y: 0.0,
        psi: 0.0,
        v: a.speed,
        delta: a.steering,
    };
    let intervals = config.n_samples - 1;
    let substeps = config.substeps.div_ceil(intervals).max(1);
    let mut samples = vec![start];
    let mut s = start;
    for _ in 0..intervals {
        s = integrate(
            &s,
            |_| input,
            t / intervals as f64,
            substeps,
            &config.vehicle,
        );
        samples.push(s);
    }
    // ramp endpoints are exact by construction; remove integration round-off
    if let Some(last) = samples.last_mut() {
        last.v = b.speed;
        last.delta = b.steering;
    }
    let points: Vec<Point> = samples
        .iter()
        .flat_map(|s| {
            config
                .vehicle
                .footprint(s.pose(), config.occupancy_margin)
                .vertices()
                .to_vec()
        })
        .collect();
    let occupancy = Polygon::convex_hull(&points).expect("footprint hull is two-dimensional");
    MotionPrimitive {
        id,
        from,
        to,
        input,
        samples,
        occupancy,
    }
}

fn braking_distances(states: &[AutomatonState], primitives: &[MotionPrimitive]) -> Vec<usize> {
    let mut incoming = vec![Vec::new(); states.len()];
    for p in primitives {
        incoming[p.to].push(p.from);
    }
    let mut dist = vec![usize::MAX; states.len()];
    let mut queue = VecDeque::new();
    for (q, s) in states.iter().enumerate() {
        if s.is_final() {
            dist[q] = 0;
            queue.push_back(q);
        }
    }
    while let Some(q) = queue.pop_front() {
        for &p in &incoming[q] {
            if dist[p] == usize::MAX {
                dist[p] = dist[q] + 1;
                queue.push_back(p);
            }
        }
    }
    dist
}

/// Per automaton state and horizon step, a convex polygon in the vehicle
/// frame containing every occupancy the vehicle can cover during that step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachableSetTable {
    /// `polygons[q][l]`.
    pub polygons: Vec<Vec<Polygon>>,
}

impl ReachableSetTable {
    pub fn compute(mpa: &MotionPrimitiveAutomaton) -> Self {
        let polygons = (0..mpa.states.len())
            .into_par_iter()
            .map(|q| reachable_polygons(mpa, q))
            .collect();
        Self { polygons }
    }

    pub fn get(&self, q: usize) -> &[Polygon] {
        &self.polygons[q]
    }

    /// Step polygons placed at `pose` in the world.
    pub fn world(&self, q: usize, pose: Pose) -> Vec<Polygon> {
        self.polygons[q]
            .iter()
            .map(|p| p.transformed(pose))
            .collect()
    }
}

const HULL_COMPACTION: usize = 1 << 16;

/// Enumerates every admissible primitive chain from `q0` and takes, for each
/// horizon step, the convex hull of the occupancies used in that step.
pub fn reachable_polygons(mpa: &MotionPrimitiveAutomaton, q0: usize) -> Vec<Polygon> {
    let h = mpa.horizon();
    let mut frontier: Vec<(usize, Pose)> = vec![(q0, Pose::default())];
    let mut result = Vec::with_capacity(h);
    for step in 0..h {
        let mut points: Vec<Point> = Vec::new();
        let mut next: HashMap<(usize, [i64; 3]), Pose> = HashMap::new();
        for &(q, pose) in &frontier {
            for prim in mpa.successors(q, step) {
                points.extend(prim.occupancy.vertices().iter().map(|&v| pose.apply(v)));
                if points.len() > HULL_COMPACTION {
                    points = Polygon::convex_hull(&points)
                        .map(|p| p.vertices().to_vec())
                        .unwrap_or(points);
                }
                let child = pose.compose(prim.end_pose());
                next.entry((prim.to, pose_key(child))).or_insert(child);
            }
        }
        result.push(Polygon::convex_hull(&points).expect("occupancies are two-dimensional"));
        let mut nodes: Vec<((usize, [i64; 3]), Pose)> = next.into_iter().collect();
        nodes.sort_unstable_by_key(|(k, _)| *k);
        frontier = nodes.into_iter().map(|((q, _), p)| (q, p)).collect();
    }
    result
}

fn pose_key(p: Pose) -> [i64; 3] {
    const SCALE: f64 = 1e9;
    [
        (p.x * SCALE).round() as i64,
        (p.y * SCALE).round() as i64,
        (p.psi * SCALE).round() as i64,
    ]
}
