//! Single-agent receding-horizon planning over the motion primitive automaton.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon, Pose};
use crate::mpa::MotionPrimitiveAutomaton;
use crate::vehicle::VehicleState;

pub const DEFAULT_BUDGET: usize = 500;

/// A horizon-long chain of primitives anchored at a world pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub primitives: Vec<usize>,
    /// Automaton state at each step boundary (`H + 1` entries).
    pub states: Vec<usize>,
    /// Pose at each step boundary (`H + 1` entries).
    pub poses: Vec<Pose>,
}

impl Plan {
    pub fn from_primitives(
        mpa: &MotionPrimitiveAutomaton,
        start_state: usize,
        start_pose: Pose,
        primitives: Vec<usize>,
    ) -> Result<Self> {
        let mut states = vec![start_state];
        let mut poses = vec![start_pose];
        for &id in &primitives {
            let prim = mpa
                .primitives
                .get(id)
                .ok_or_else(|| Error::Scenario(format!("unknown primitive {id}")))?;
            let (q, pose) = (*states.last().unwrap(), *poses.last().unwrap());
            if prim.from != q {
                return Err(Error::Scenario(format!(
                    "primitive {id} does not start in automaton state {q}"
                )));
            }
            states.push(prim.to);
            poses.push(pose.compose(prim.end_pose()));
        }
        Ok(Self {
            primitives,
            states,
            poses,
        })
    }

    /// `H` repetitions of the standstill loop.
    pub fn standstill(mpa: &MotionPrimitiveAutomaton, state: usize, pose: Pose) -> Result<Self> {
        let stand = mpa.standstill(state).ok_or_else(|| {
            Error::Scenario(format!(
                "automaton state {state} has no standstill primitive"
            ))
        })?;
        Self::from_primitives(mpa, state, pose, vec![stand.id; mpa.horizon()])
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    /// Positions at the end of steps `1..=H`.
    pub fn positions(&self) -> Vec<Point> {
        self.poses[1..].iter().map(|p| [p.x, p.y]).collect()
    }

    pub fn occupancy(&self, mpa: &MotionPrimitiveAutomaton, step: usize) -> Polygon {
        mpa.primitives[self.primitives[step]]
            .occupancy
            .transformed(self.poses[step])
    }

    pub fn occupancies(&self, mpa: &MotionPrimitiveAutomaton) -> Vec<Polygon> {
        (0..self.len()).map(|l| self.occupancy(mpa, l)).collect()
    }

    /// World-frame sampled states of step `step`.
    pub fn samples(&self, mpa: &MotionPrimitiveAutomaton, step: usize) -> Vec<VehicleState> {
        let prim = &mpa.primitives[self.primitives[step]];
        let pose = self.poses[step];
        prim.samples
            .iter()
            .map(|s| {
                let p = pose.compose(s.pose());
                VehicleState {
                    x: p.x,
                    y: p.y,
                    psi: p.psi,
                    v: s.v,
                    delta: s.delta,
                }
            })
            .collect()
    }

    /// Every primitive is admissible at its horizon position.
    pub fn is_gamma_consistent(&self, mpa: &MotionPrimitiveAutomaton) -> bool {
        self.primitives.iter().enumerate().all(|(l, &id)| {
            let p = &mpa.primitives[id];
            p.from == self.states[l] && p.to == self.states[l + 1] && mpa.admissible(p, l)
        })
    }

    pub fn ends_at_standstill(&self, mpa: &MotionPrimitiveAutomaton) -> bool {
        self.states.last().is_some_and(|&q| mpa.is_final(q))
    }
}

/// Sum of squared position errors over the horizon; headings, speeds and
/// steering angles carry zero weight.
pub fn trajectory_cost(positions: &[Point], reference: &[Point]) -> Result<f64> {
    if positions.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            found: positions.len(),
        });
    }
    Ok(positions
        .iter()
        .zip(reference)
        .map(|(p, r)| (p[0] - r[0]).powi(2) + (p[1] - r[1]).powi(2))
        .sum())
}

/// Drops the first primitive and appends a standstill at the final state.
pub fn fallback_plan(mpa: &MotionPrimitiveAutomaton, previous: &Plan) -> Result<Plan> {
    let last_state = *previous
        .states
        .last()
        .expect("plans have at least one state");
    let last_pose = *previous.poses.last().expect("plans have at least one pose");
    if previous.is_empty() {
        return Plan::standstill(mpa, last_state, last_pose);
    }
    let stand = mpa.standstill(last_state).ok_or_else(|| {
        Error::Scenario(format!(
            "previous plan ends in automaton state {last_state}, which is not a standstill"
        ))
    })?;
    let mut primitives = previous.primitives[1..].to_vec();
    primitives.push(stand.id);
    Plan::from_primitives(mpa, previous.states[1], previous.poses[1], primitives)
}

#[derive(Debug, Clone)]
struct Obstacle {
    polygon: Polygon,
    center: Point,
    radius: f64,
}

impl Obstacle {
    fn new(polygon: Polygon) -> Self {
        let (center, radius) = bounding_circle(&polygon);
        Self {
            polygon,
            center,
            radius,
        }
    }

    fn hits(&self, other: &Obstacle) -> bool {
        let d = (self.center[0] - other.center[0]).hypot(self.center[1] - other.center[1]);
        d <= self.radius + other.radius && self.polygon.intersects(&other.polygon)
    }
}

fn bounding_circle(p: &Polygon) -> (Point, f64) {
    let v = p.vertices();
    let n = v.len() as f64;
    let c = [
        v.iter().map(|p| p[0]).sum::<f64>() / n,
        v.iter().map(|p| p[1]).sum::<f64>() / n,
    ];
    let r = v
        .iter()
        .map(|p| (p[0] - c[0]).hypot(p[1] - c[1]))
        .fold(0.0, f64::max);
    (c, r + 1e-9)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningProblem {
    pub start_state: usize,
    pub start_pose: Pose,
    /// Reference positions for steps `1..=H`.
    pub reference: Vec<Point>,
    /// Per-step keep-out polygons, e.g. occupancies of higher-priority plans.
    pub obstacles: Vec<Vec<Polygon>>,
    /// Keep-out polygons valid over the whole horizon, e.g. lane boundaries.
    pub static_obstacles: Vec<Polygon>,
}

impl PlanningProblem {
    pub fn new(start_state: usize, start_pose: Pose, reference: Vec<Point>) -> Self {
        let h = reference.len();
        Self {
            start_state,
            start_pose,
            reference,
            obstacles: vec![Vec::new(); h],
            static_obstacles: Vec::new(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.reference.len()
    }

    fn check(&self, mpa: &MotionPrimitiveAutomaton) -> Result<()> {
        if self.reference.len() != mpa.horizon() {
            return Err(Error::LengthMismatch {
                expected: mpa.horizon(),
                found: self.reference.len(),
            });
        }
        if self.obstacles.len() != mpa.horizon() {
            return Err(Error::LengthMismatch {
                expected: mpa.horizon(),
                found: self.obstacles.len(),
            });
        }
        Ok(())
    }
}

struct CollisionChecker {
    per_step: Vec<Vec<Obstacle>>,
}

impl CollisionChecker {
    fn new(problem: &PlanningProblem) -> Self {
        let statics: Vec<Obstacle> = problem
            .static_obstacles
            .iter()
            .cloned()
            .map(Obstacle::new)
            .collect();
        let per_step = problem
            .obstacles
            .iter()
            .map(|step| {
                step.iter()
                    .cloned()
                    .map(Obstacle::new)
                    .chain(statics.iter().cloned())
                    .collect()
            })
            .collect();
        Self { per_step }
    }

    fn free(&self, step: usize, polygon: Polygon) -> bool {
        let o = Obstacle::new(polygon);
        !self.per_step[step].iter().any(|x| x.hits(&o))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub feasible: bool,
    pub plan: Option<Plan>,
    /// Cost of `plan`; `None` when infeasible.
    pub cost: Option<f64>,
    pub expansions: usize,
}

impl PlanResult {
    fn infeasible(expansions: usize) -> Self {
        Self {
            feasible: false,
            plan: None,
            cost: None,
            expansions,
        }
    }
}

struct Node {
    state: usize,
    pose: Pose,
    depth: usize,
    primitive: Option<usize>,
    parent: Option<usize>,
    cost: f64,
    children: Option<Vec<usize>>,
    exhausted: bool,
}

/// Monte Carlo tree search with uniform random growth.
///
/// Each iteration walks from the root to the horizon, choosing uniformly
/// among children that still have unexplored descendants and expanding every
/// unexpanded vertex on the way. Expanding generates all admissible,
/// collision-free children and costs one unit of budget. The
/// lowest-cost complete chain seen is returned. With a fixed seed the
/// expansions for a budget are a prefix of those for any larger budget, and
/// a budget of at least the number of expandable vertices explores the whole
/// tree.
pub fn mcts_plan(
    problem: &PlanningProblem,
    mpa: &MotionPrimitiveAutomaton,
    budget: usize,
    seed: u64,
) -> Result<PlanResult> {
    problem.check(mpa)?;
    let h = mpa.horizon();
    let checker = CollisionChecker::new(problem);
    let footprint = mpa.vehicle().footprint(problem.start_pose, 0.0);
    if !checker.free(0, footprint) {
        return Ok(PlanResult::infeasible(0));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = vec![Node {
        state: problem.start_state,
        pose: problem.start_pose,
        depth: 0,
        primitive: None,
        parent: None,
        cost: 0.0,
        children: None,
        exhausted: false,
    }];
    let mut best: Option<(f64, usize)> = None;
    let mut expansions = 0;

    while expansions < budget && !nodes[0].exhausted {
        let mut n = 0;
        loop {
            if nodes[n].children.is_none() {
                if expansions == budget {
                    break;
                }
                expansions += 1;
                let children = expand(&mut nodes, n, problem, mpa, &checker, &mut best);
                nodes[n].children = Some(children);
                mark_exhausted(&mut nodes, n);
            }
            let children = nodes[n].children.as_ref().expect("expanded above");
            let open: Vec<usize> = children
                .iter()
                .copied()
                .filter(|&c| !nodes[c].exhausted)
                .collect();
            if open.is_empty() {
                break;
            }
            n = open[rng.random_range(0..open.len())];
        }
    }

    let Some((cost, leaf)) = best else {
        return Ok(PlanResult::infeasible(expansions));
    };
    let mut primitives = Vec::with_capacity(h);
    let mut cur = leaf;
    while let Some(p) = nodes[cur].primitive {
        primitives.push(p);
        cur = nodes[cur].parent.expect("non-root nodes have a parent");
    }
    primitives.reverse();
    let plan = Plan::from_primitives(mpa, problem.start_state, problem.start_pose, primitives)?;
    Ok(PlanResult {
        feasible: true,
        plan: Some(plan),
        cost: Some(cost),
        expansions,
    })
}

fn expand(
    nodes: &mut Vec<Node>,
    n: usize,
    problem: &PlanningProblem,
    mpa: &MotionPrimitiveAutomaton,
    checker: &CollisionChecker,
    best: &mut Option<(f64, usize)>,
) -> Vec<usize> {
    let h = mpa.horizon();
    let (state, pose, depth, cost) = (nodes[n].state, nodes[n].pose, nodes[n].depth, nodes[n].cost);
    let mut children = Vec::new();
    for prim in mpa.successors(state, depth) {
        if !checker.free(depth, prim.occupancy.transformed(pose)) {
            continue;
        }
        let child_pose = pose.compose(prim.end_pose());
        let r = problem.reference[depth];
        let child_cost = cost + (child_pose.x - r[0]).powi(2) + (child_pose.y - r[1]).powi(2);
        let leaf = depth + 1 == h;
        let id = nodes.len();
        nodes.push(Node {
            state: prim.to,
            pose: child_pose,
            depth: depth + 1,
            primitive: Some(prim.id),
            parent: Some(n),
            cost: child_cost,
            children: None,
            exhausted: leaf,
        });
        if leaf && best.is_none_or(|(c, _)| child_cost < c) {
            *best = Some((child_cost, id));
        }
        children.push(id);
    }
    children
}

/// Marks `n` and its ancestors exhausted while all their children are.
fn mark_exhausted(nodes: &mut [Node], n: usize) {
    let mut cur = Some(n);
    while let Some(c) = cur {
        let done = nodes[c]
            .children
            .as_ref()
            .is_some_and(|ch| ch.iter().all(|&x| nodes[x].exhausted));
        if !done {
            break;
        }
        nodes[c].exhausted = true;
        cur = nodes[c].parent;
    }
}

/// Number of vertices `mcts_plan` can expand on `problem`, i.e. the budget
/// needed for an exhaustive search.
pub fn expandable_vertices(
    problem: &PlanningProblem,
    mpa: &MotionPrimitiveAutomaton,
) -> Result<usize> {
    problem.check(mpa)?;
    let checker = CollisionChecker::new(problem);
    if !checker.free(0, mpa.vehicle().footprint(problem.start_pose, 0.0)) {
        return Ok(0);
    }
    fn walk(
        mpa: &MotionPrimitiveAutomaton,
        checker: &CollisionChecker,
        state: usize,
        pose: Pose,
        depth: usize,
    ) -> usize {
        if depth == mpa.horizon() {
            return 0;
        }
        1 + mpa
            .successors(state, depth)
            .filter(|p| checker.free(depth, p.occupancy.transformed(pose)))
            .map(|p| walk(mpa, checker, p.to, pose.compose(p.end_pose()), depth + 1))
            .sum::<usize>()
    }
    Ok(walk(
        mpa,
        &checker,
        problem.start_state,
        problem.start_pose,
        0,
    ))
}

/// Brute-force minimum over every admissible, collision-free chain.
pub fn exhaustive_plan(
    problem: &PlanningProblem,
    mpa: &MotionPrimitiveAutomaton,
) -> Result<PlanResult> {
    problem.check(mpa)?;
    let checker = CollisionChecker::new(problem);
    if !checker.free(0, mpa.vehicle().footprint(problem.start_pose, 0.0)) {
        return Ok(PlanResult::infeasible(0));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut chain = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn walk(
        mpa: &MotionPrimitiveAutomaton,
        problem: &PlanningProblem,
        checker: &CollisionChecker,
        state: usize,
        pose: Pose,
        cost: f64,
        chain: &mut Vec<usize>,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        let depth = chain.len();
        if depth == mpa.horizon() {
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                *best = Some((cost, chain.clone()));
            }
            return;
        }
        for p in mpa.successors(state, depth) {
            if !checker.free(depth, p.occupancy.transformed(pose)) {
                continue;
            }
            let next = pose.compose(p.end_pose());
            let r = problem.reference[depth];
            let c = cost + (next.x - r[0]).powi(2) + (next.y - r[1]).powi(2);
            chain.push(p.id);
            walk(mpa, problem, checker, p.to, next, c, chain, best);
            chain.pop();
        }
    }
    walk(
        mpa,
        problem,
        &checker,
        problem.start_state,
        problem.start_pose,
        0.0,
        &mut chain,
        &mut best,
    );
    match best {
        None => Ok(PlanResult::infeasible(0)),
        Some((cost, primitives)) => Ok(PlanResult {
            feasible: true,
            plan: Some(Plan::from_primitives(
                mpa,
                problem.start_state,
                problem.start_pose,
                primitives,
            )?),
            cost: Some(cost),
            expansions: 0,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpa::{generate_mpa, MpaConfig};

    fn tiny() -> MotionPrimitiveAutomaton {
        generate_mpa(&MpaConfig {
            speed_levels: vec![0.0, 0.4],
            horizon: 3,
            ..MpaConfig::default()
        })
        .unwrap()
    }

    fn straight_reference(h: usize, v: f64, dt: f64) -> Vec<Point> {
        (1..=h).map(|l| [l as f64 * v * dt, 0.0]).collect()
    }

    #[test]
    fn cost_examples() {
        let r = vec![[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]];
        assert_eq!(trajectory_cost(&r, &r).unwrap(), 0.0);
        let shifted: Vec<Point> = r.iter().map(|p| [p[0] + 1.0, p[1]]).collect();
        assert_eq!(trajectory_cost(&shifted, &r).unwrap(), 3.0);
        assert!(matches!(
            trajectory_cost(&r[..2], &r),
            Err(Error::LengthMismatch {
                expected: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn heading_and_speed_do_not_cost() {
        let mpa = tiny();
        let q0 = mpa.initial_state;
        let plan = Plan::standstill(&mpa, q0, Pose::new(1.0, 2.0, 0.7)).unwrap();
        let reference = vec![[1.0, 2.0]; 3];
        assert_eq!(trajectory_cost(&plan.positions(), &reference).unwrap(), 0.0);
    }

    #[test]
    fn empty_world_matches_exhaustive_search() {
        let mpa = tiny();
        let problem = PlanningProblem::new(
            mpa.initial_state,
            Pose::default(),
            straight_reference(3, 0.4, 0.2),
        );
        let size = expandable_vertices(&problem, &mpa).unwrap();
        let oracle = exhaustive_plan(&problem, &mpa).unwrap();
        let result = mcts_plan(&problem, &mpa, size, 3).unwrap();
        assert!(result.feasible);
        assert_eq!(result.cost, oracle.cost);
        assert!(result.expansions <= size);
        let plan = result.plan.unwrap();
        assert!(plan.is_gamma_consistent(&mpa));
        assert!(plan.ends_at_standstill(&mpa));
    }

    #[test]
    fn blocked_first_step_is_infeasible() {
        let mpa = tiny();
        let mut problem = PlanningProblem::new(
            mpa.initial_state,
            Pose::default(),
            straight_reference(3, 0.4, 0.2),
        );
        let wall = Polygon::rectangle([0.0, 0.0], 0.5, 0.5, 0.0).unwrap();
        problem.obstacles[0].push(wall);
        let result = mcts_plan(&problem, &mpa, 1000, 1).unwrap();
        assert!(!result.feasible);
        assert!(result.plan.is_none());
    }

    #[test]
    fn seeded_search_is_deterministic_and_anytime() {
        let mpa = generate_mpa(&MpaConfig::default()).unwrap();
        let problem = PlanningProblem::new(
            mpa.initial_state,
            Pose::default(),
            straight_reference(6, 0.8, 0.2),
        );
        let a = mcts_plan(&problem, &mpa, 200, 9).unwrap();
        assert_eq!(a, mcts_plan(&problem, &mpa, 200, 9).unwrap());
        let mut last = f64::INFINITY;
        for budget in [1, 10, 50, 200, 800] {
            let r = mcts_plan(&problem, &mpa, budget, 9).unwrap();
            let c = r.cost.unwrap_or(f64::INFINITY);
            assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn fallback_shifts_and_stops() {
        let mpa = tiny();
        let problem = PlanningProblem::new(
            mpa.initial_state,
            Pose::default(),
            straight_reference(3, 0.4, 0.2),
        );
        let plan = mcts_plan(&problem, &mpa, 100, 0).unwrap().plan.unwrap();
        let fb = fallback_plan(&mpa, &plan).unwrap();
        assert_eq!(&fb.primitives[..2], &plan.primitives[1..]);
        assert_eq!(fb.poses[0], plan.poses[1]);
        assert!(fb.ends_at_standstill(&mpa));
        assert!(fb.is_gamma_consistent(&mpa));

        let still = Plan::standstill(&mpa, mpa.initial_state, Pose::new(1.0, 1.0, 0.0)).unwrap();
        assert_eq!(fallback_plan(&mpa, &still).unwrap(), still);
        let twice = fallback_plan(&mpa, &fallback_plan(&mpa, &fb).unwrap()).unwrap();
        let thrice = fallback_plan(&mpa, &twice).unwrap();
        assert_eq!(fallback_plan(&mpa, &thrice).unwrap(), thrice);
    }
}
