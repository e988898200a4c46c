//! Grid multi-agent path finding with prioritized planning.
//!
//! Agents move on a 4-connected grid and may wait. A vertex conflict is two
//! agents on one vertex at the same time; an edge conflict is two agents
//! swapping along one edge. Planning is prioritized: each agent plans
//! against the plans of all higher-priority agents and rests on its target
//! after arriving.

use std::collections::{HashSet, VecDeque};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AgentId;

pub type Vertex = usize;

/// Maximum agents for the solvability classification.
pub const MAX_CLASSIFY_AGENTS: usize = 4;
/// Maximum time limit for the solvability classification.
pub const MAX_CLASSIFY_STEPS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    width: usize,
    height: usize,
    free: Vec<bool>,
}

impl Grid {
    /// Parses rows of `.` (free) and `#` (wall).
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .collect();
        let width = rows.first().map_or(0, |r| r.len());
        let mut free = Vec::with_capacity(width * rows.len());
        let mut problems = Vec::new();
        for (y, row) in rows.iter().enumerate() {
            if row.len() != width {
                problems.push(format!(
                    "map row {y} has {} cells, expected {width}",
                    row.len()
                ));
            }
            for (x, c) in row.chars().enumerate() {
                match c {
                    '.' => free.push(true),
                    '#' => free.push(false),
                    other => problems.push(format!("map cell ({x}, {y}): unexpected {other:?}")),
                }
            }
        }
        if width == 0 {
            problems.push("map is empty".into());
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        Ok(Self {
            width,
            height: rows.len(),
            free,
        })
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for y in 0..self.height {
            for x in 0..self.width {
                s.push(if self.free[y * self.width + x] {
                    '.'
                } else {
                    '#'
                });
            }
            s.push('\n');
        }
        s
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn vertex(&self, x: usize, y: usize) -> Option<Vertex> {
        (x < self.width && y < self.height && self.free[y * self.width + x])
            .then_some(y * self.width + x)
    }

    pub fn coords(&self, v: Vertex) -> (usize, usize) {
        (v % self.width, v / self.width)
    }

    pub fn is_free(&self, v: Vertex) -> bool {
        self.free.get(v).copied().unwrap_or(false)
    }

    pub fn set_free(&mut self, v: Vertex, free: bool) {
        self.free[v] = free;
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.free.len()).filter(|&v| self.free[v])
    }

    /// Free 4-neighbors in ascending order.
    pub fn neighbors(&self, v: Vertex) -> Vec<Vertex> {
        let (x, y) = self.coords(v);
        let mut out = Vec::with_capacity(4);
        if y > 0 {
            out.extend(self.vertex(x, y - 1));
        }
        if x > 0 {
            out.extend(self.vertex(x - 1, y));
        }
        out.extend(self.vertex(x + 1, y));
        out.extend(self.vertex(x, y + 1));
        out
    }

    pub fn adjacent_or_equal(&self, a: Vertex, b: Vertex) -> bool {
        a == b || self.neighbors(a).contains(&b)
    }

    /// Breadth-first distances to `target`; `usize::MAX` if unreachable.
    pub fn distances(&self, target: Vertex) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.free.len()];
        if !self.is_free(target) {
            return dist;
        }
        dist[target] = 0;
        let mut queue = VecDeque::from([target]);
        while let Some(v) = queue.pop_front() {
            for u in self.neighbors(v) {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        dist
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridInstance {
    pub grid: Grid,
    pub starts: Vec<Vertex>,
    pub targets: Vec<Vertex>,
    /// Time limit `K`; plans have `K + 1` vertices.
    pub time_limit: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    start: [usize; 2],
    target: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    /// Map file, relative to the sidecar.
    map: String,
    agents: Vec<AgentDoc>,
    time_limit: usize,
}

impl GridInstance {
    pub fn new(
        grid: Grid,
        starts: Vec<Vertex>,
        targets: Vec<Vertex>,
        time_limit: usize,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        if starts.len() != targets.len() {
            problems.push(format!(
                "{} starts but {} targets",
                starts.len(),
                targets.len()
            ));
        }
        for (name, list) in [("start", &starts), ("target", &targets)] {
            for (i, &v) in list.iter().enumerate() {
                if !grid.is_free(v) {
                    problems.push(format!("agent {}: {name} is not a free cell", i + 1));
                }
            }
            let distinct: HashSet<_> = list.iter().collect();
            if distinct.len() != list.len() {
                problems.push(format!("{name}s are not pairwise distinct"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        Ok(Self {
            grid,
            starts,
            targets,
            time_limit,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.starts.len()
    }

    /// Loads a JSON sidecar that names its `.`/`#` map file.
    pub fn load(sidecar: impl AsRef<FsPath>) -> Result<Self> {
        let sidecar = sidecar.as_ref();
        let doc: InstanceDoc = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
        let map_path = sidecar.parent().unwrap_or(FsPath::new(".")).join(&doc.map);
        let grid = Grid::parse(&std::fs::read_to_string(map_path)?)?;
        let cell = |[x, y]: [usize; 2]| grid.vertex(x, y).unwrap_or(usize::MAX);
        let starts = doc.agents.iter().map(|a| cell(a.start)).collect();
        let targets = doc.agents.iter().map(|a| cell(a.target)).collect();
        Self::new(grid.clone(), starts, targets, doc.time_limit)
    }

    /// Writes `<stem>.map` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<FsPath>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::write(dir.join(format!("{stem}.map")), self.grid.render())?;
        let xy = |v: Vertex| {
            let (x, y) = self.grid.coords(v);
            [x, y]
        };
        let doc = InstanceDoc {
            map: format!("{stem}.map"),
            agents: self
                .starts
                .iter()
                .zip(&self.targets)
                .map(|(&s, &t)| AgentDoc {
                    start: xy(s),
                    target: xy(t),
                })
                .collect(),
            time_limit: self.time_limit,
        };
        std::fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&doc)? + "\n",
        )?;
        Ok(())
    }
}

/// Per-agent vertex sequences of equal length, indexed by time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MapfPlan {
    pub paths: Vec<Vec<Vertex>>,
}

impl MapfPlan {
    pub fn reaches_targets(&self, instance: &GridInstance) -> bool {
        self.paths
            .iter()
            .zip(&instance.targets)
            .all(|(p, &t)| p.last() == Some(&t))
    }

    /// Every move is a wait or a step along a grid edge.
    pub fn is_connected(&self, grid: &Grid) -> bool {
        self.paths
            .iter()
            .all(|p| p.windows(2).all(|w| grid.adjacent_or_equal(w[0], w[1])))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Conflict {
    /// Agents `i` and `j` both at `v` at time `k`.
    Vertex {
        i: AgentId,
        j: AgentId,
        v: Vertex,
        k: usize,
    },
    /// Agent `i` moves `u → v` while `j` moves `v → u` between `k` and `k + 1`.
    Edge {
        i: AgentId,
        j: AgentId,
        u: Vertex,
        v: Vertex,
        k: usize,
    },
}

pub fn detect_conflicts(paths: &[Vec<Vertex>]) -> Result<Vec<Conflict>> {
    let len = paths.first().map_or(0, Vec::len);
    if let Some(bad) = paths.iter().find(|p| p.len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            found: bad.len(),
        });
    }
    let mut out = Vec::new();
    for a in 0..paths.len() {
        for b in a + 1..paths.len() {
            let (pa, pb) = (&paths[a], &paths[b]);
            for k in 0..len {
                if pa[k] == pb[k] {
                    out.push(Conflict::Vertex {
                        i: a + 1,
                        j: b + 1,
                        v: pa[k],
                        k,
                    });
                }
                if k + 1 < len && pa[k] != pa[k + 1] && pa[k] == pb[k + 1] && pa[k + 1] == pb[k] {
                    out.push(Conflict::Edge {
                        i: a + 1,
                        j: b + 1,
                        u: pa[k],
                        v: pa[k + 1],
                        k,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Single-agent planning against reserved plans over `[from, K]`.
///
/// Returns the earliest arrival after which the agent can rest on its
/// target until `K`. If the target cannot be reached, the collision-free
/// plan ending closest to the target is returned (best effort), with
/// `reached = false`. `None` means every plan collides.
fn plan_agent(
    grid: &Grid,
    dist: &[usize],
    start: Vertex,
    target: Vertex,
    from: usize,
    horizon: usize,
    reserved: &[&[Vertex]],
) -> Option<(Vec<Vertex>, bool)> {
    let n = grid.free.len();
    let occupied = |v: Vertex, t: usize| reserved.iter().any(|p| p[t] == v);
    let swaps =
        |a: Vertex, b: Vertex, t: usize| reserved.iter().any(|p| p[t] == b && p[t + 1] == a);
    if occupied(start, from) {
        return None;
    }
    let steps = horizon - from;
    // parent[t][v]: predecessor of v at relative time t
    let mut parent: Vec<Vec<Option<Vertex>>> = vec![vec![None; n]; steps + 1];
    let mut layer = vec![start];
    parent[0][start] = Some(start);
    let mut layers = vec![layer.clone()];
    for t in 0..steps {
        let mut next = Vec::new();
        for &v in &layer {
            let mut moves = vec![v];
            moves.extend(grid.neighbors(v));
            for u in moves {
                if parent[t + 1][u].is_some() || occupied(u, from + t + 1) || swaps(v, u, from + t)
                {
                    continue;
                }
                parent[t + 1][u] = Some(v);
                next.push(u);
            }
        }
        next.sort_unstable();
        layer = next;
        layers.push(layer.clone());
    }
    let rest_ok = |t: usize| (t..=steps).all(|s| !occupied(target, from + s));
    let trace = |mut t: usize, mut v: Vertex| {
        let mut path = vec![v];
        while t > 0 {
            v = parent[t][v].expect("reached vertices have parents");
            path.push(v);
            t -= 1;
        }
        path.reverse();
        path
    };
    for (t, layer) in layers.iter().enumerate() {
        if layer.binary_search(&target).is_ok() && rest_ok(t) {
            let mut path = trace(t, target);
            path.resize(steps + 1, target);
            return Some((path, true));
        }
    }
    let end = layers[steps]
        .iter()
        .copied()
        .min_by_key(|&v| (dist[v], v))?;
    Some((trace(steps, end), false))
}

/// Plans all agents in `order` (highest priority first) from `positions` at
/// time `from` until the time limit. Returns full-length paths whose prefix
/// up to `from` is taken from `prefix`.
fn plan_window(
    instance: &GridInstance,
    dists: &[Vec<usize>],
    order: &[AgentId],
    prefix: Option<&MapfPlan>,
    from: usize,
) -> Option<(MapfPlan, bool)> {
    let n = instance.n_agents();
    let horizon = instance.time_limit;
    let mut paths: Vec<Option<Vec<Vertex>>> = vec![None; n];
    let mut all_reached = true;
    for &i in order {
        let start = prefix.map_or(instance.starts[i - 1], |p| p.paths[i - 1][from]);
        let reserved: Vec<&[Vertex]> = paths.iter().flatten().map(Vec::as_slice).collect();
        let (window, reached) = plan_agent(
            &instance.grid,
            &dists[i - 1],
            start,
            instance.targets[i - 1],
            from,
            horizon,
            &reserved,
        )?;
        all_reached &= reached;
        let mut full = prefix.map_or_else(Vec::new, |p| p.paths[i - 1][..from].to_vec());
        full.extend(window);
        paths[i - 1] = Some(full);
    }
    Some((
        MapfPlan {
            paths: paths
                .into_iter()
                .map(|p| p.expect("order covers all agents"))
                .collect(),
        },
        all_reached,
    ))
}

/// A priority ordering per time step (highest priority first).
pub type PrioritySchedule = Vec<Vec<AgentId>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridPriorities {
    Fixed(Vec<AgentId>),
    TimeVariant(PrioritySchedule),
}

/// Prioritized planning. With a fixed ordering, agents plan once over the
/// whole time limit. With a schedule, agents replan from their current
/// positions whenever the ordering changes; the constant schedule thus
/// reproduces the fixed ordering exactly. `None` means infeasible.
pub fn pp_solve_grid(
    instance: &GridInstance,
    priorities: &GridPriorities,
) -> Result<Option<MapfPlan>> {
    let n = instance.n_agents();
    let check = |order: &[AgentId]| -> Result<()> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (1..=n).collect::<Vec<_>>() {
            return Err(Error::NotAPartition {
                n_agents: n,
                reason: format!("ordering {order:?} is not a permutation"),
            });
        }
        Ok(())
    };
    let dists: Vec<Vec<usize>> = instance
        .targets
        .iter()
        .map(|&t| instance.grid.distances(t))
        .collect();
    match priorities {
        GridPriorities::Fixed(order) => {
            check(order)?;
            Ok(plan_window(instance, &dists, order, None, 0)
                .and_then(|(plan, reached)| reached.then_some(plan)))
        }
        GridPriorities::TimeVariant(schedule) => {
            if schedule.len() != instance.time_limit.max(1) {
                return Err(Error::LengthMismatch {
                    expected: instance.time_limit.max(1),
                    found: schedule.len(),
                });
            }
            for order in schedule {
                check(order)?;
            }
            let mut current: Option<MapfPlan> = None;
            for (k, order) in schedule.iter().enumerate() {
                if k > 0 && *order == schedule[k - 1] {
                    continue;
                }
                match plan_window(instance, &dists, order, current.as_ref(), k) {
                    Some((plan, _)) => current = Some(plan),
                    None => return Ok(None),
                }
            }
            Ok(current.filter(|p| p.reaches_targets(instance)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solvability {
    PSolvable,
    TpSolvableOnly,
    PpUnsolvable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub class: Solvability,
    /// Ordering per time step that solves the instance, if any.
    pub schedule: Option<PrioritySchedule>,
    /// Fixed orderings that solve the instance.
    pub fixed_solutions: Vec<Vec<AgentId>>,
}

impl Certificate {
    /// Time steps at which the ordering differs from the previous step.
    pub fn flips(&self) -> Vec<usize> {
        self.schedule
            .as_ref()
            .map(|s| (1..s.len()).filter(|&k| s[k] != s[k - 1]).collect())
            .unwrap_or_default()
    }
}

pub fn permutations(n: usize) -> Vec<Vec<AgentId>> {
    let mut out = Vec::new();
    let mut current: Vec<AgentId> = (1..=n).collect();
    fn heap(k: usize, current: &mut Vec<AgentId>, out: &mut Vec<Vec<AgentId>>) {
        if k <= 1 {
            out.push(current.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, current, out);
            let j = if k.is_multiple_of(2) { i } else { 0 };
            current.swap(j, k - 1);
        }
    }
    heap(n, &mut current, &mut out);
    out.sort();
    out
}

/// Brute force over fixed orderings, then over per-step ordering schedules.
pub fn classify_solvability(instance: &GridInstance) -> Result<Certificate> {
    let n = instance.n_agents();
    if n > MAX_CLASSIFY_AGENTS {
        return Err(Error::Capacity {
            what: "solvability classification (agents)",
            size: n,
            limit: MAX_CLASSIFY_AGENTS,
        });
    }
    if instance.time_limit > MAX_CLASSIFY_STEPS {
        return Err(Error::Capacity {
            what: "solvability classification (time limit)",
            size: instance.time_limit,
            limit: MAX_CLASSIFY_STEPS,
        });
    }
    let orders = permutations(n);
    let mut fixed_solutions = Vec::new();
    for order in &orders {
        if pp_solve_grid(instance, &GridPriorities::Fixed(order.clone()))?.is_some() {
            fixed_solutions.push(order.clone());
        }
    }
    if let Some(first) = fixed_solutions.first() {
        return Ok(Certificate {
            class: Solvability::PSolvable,
            schedule: Some(vec![first.clone(); instance.time_limit.max(1)]),
            fixed_solutions,
        });
    }

    let dists: Vec<Vec<usize>> = instance
        .targets
        .iter()
        .map(|&t| instance.grid.distances(t))
        .collect();
    let mut search = ScheduleSearch {
        instance,
        dists: &dists,
        orders: &orders,
        failed: HashSet::new(),
    };
    let mut schedule = Vec::new();
    let found = orders.iter().any(|order| {
        plan_window(instance, &dists, order, None, 0).is_some_and(|(plan, _)| {
            schedule.push(order.clone());
            let ok = search.extend(&plan, 1, &mut schedule);
            if !ok {
                schedule.pop();
            }
            ok
        })
    });
    Ok(if found {
        schedule.resize(
            instance.time_limit.max(1),
            schedule.last().cloned().unwrap_or_default(),
        );
        Certificate {
            class: Solvability::TpSolvableOnly,
            schedule: Some(schedule),
            fixed_solutions,
        }
    } else {
        Certificate {
            class: Solvability::PpUnsolvable,
            schedule: None,
            fixed_solutions,
        }
    })
}

struct ScheduleSearch<'a> {
    instance: &'a GridInstance,
    dists: &'a [Vec<usize>],
    orders: &'a [Vec<AgentId>],
    /// `(k, current ordering, plan)` states known not to lead to a solution.
    failed: HashSet<(usize, Vec<AgentId>, MapfPlan)>,
}

impl ScheduleSearch<'_> {
    /// Depth-first over the ordering at step `k`, keeping the current
    /// ordering first.
    fn extend(&mut self, plan: &MapfPlan, k: usize, schedule: &mut PrioritySchedule) -> bool {
        if plan.reaches_targets(self.instance) {
            return true;
        }
        if k >= self.instance.time_limit {
            return false;
        }
        let current = schedule.last().expect("schedule starts at step 0").clone();
        let key = (k, current.clone(), plan.clone());
        if self.failed.contains(&key) {
            return false;
        }
        let mut candidates = vec![current.clone()];
        candidates.extend(self.orders.iter().filter(|o| **o != current).cloned());
        for order in candidates {
            let next = if order == current {
                Some(plan.clone())
            } else {
                plan_window(self.instance, self.dists, &order, Some(plan), k).map(|(p, _)| p)
            };
            let Some(next) = next else { continue };
            schedule.push(order);
            if self.extend(&next, k + 1, schedule) {
                return true;
            }
            schedule.pop();
        }
        self.failed.insert(key);
        false
    }
}

/// Joint breadth-first search over all agents (oracle for small instances):
/// whether any conflict-free plan reaches all targets by the time limit.
pub fn centrally_solvable(instance: &GridInstance) -> bool {
    let grid = &instance.grid;
    let n = instance.n_agents();
    let mut frontier: HashSet<Vec<Vertex>> = HashSet::from([instance.starts.clone()]);
    for _ in 0..=instance.time_limit {
        if frontier.contains(&instance.targets) {
            return true;
        }
        let mut next = HashSet::new();
        for config in &frontier {
            let options: Vec<Vec<Vertex>> = config
                .iter()
                .map(|&v| {
                    let mut o = vec![v];
                    o.extend(grid.neighbors(v));
                    o
                })
                .collect();
            let mut choice = vec![0usize; n];
            'product: loop {
                let cand: Vec<Vertex> = (0..n).map(|a| options[a][choice[a]]).collect();
                let ok = (0..n).all(|a| {
                    (a + 1..n).all(|b| {
                        cand[a] != cand[b] && !(cand[a] == config[b] && cand[b] == config[a])
                    })
                });
                if ok {
                    next.insert(cand);
                }
                for a in 0..n {
                    choice[a] += 1;
                    if choice[a] < options[a].len() {
                        continue 'product;
                    }
                    choice[a] = 0;
                }
                break;
            }
        }
        frontier = next;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor(len: usize) -> Grid {
        Grid::parse(&".".repeat(len)).unwrap()
    }

    #[test]
    fn conflict_examples() {
        assert!(detect_conflicts(&[vec![0, 0, 0], vec![1, 1, 1]])
            .unwrap()
            .is_empty());
        let c = detect_conflicts(&[vec![0, 1, 2], vec![4, 3, 2]]).unwrap();
        assert_eq!(
            c,
            vec![Conflict::Vertex {
                i: 1,
                j: 2,
                v: 2,
                k: 2
            }]
        );
        let c = detect_conflicts(&[vec![0, 0, 1], vec![2, 1, 0]]).unwrap();
        assert_eq!(
            c,
            vec![Conflict::Edge {
                i: 1,
                j: 2,
                u: 0,
                v: 1,
                k: 1
            }]
        );
        assert!(matches!(
            detect_conflicts(&[vec![0, 0], vec![1]]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn disjoint_corridors_always_solve() {
        let grid = Grid::parse("....\n####\n....").unwrap();
        let inst = GridInstance::new(grid, vec![0, 8], vec![3, 11], 5).unwrap();
        for order in permutations(2) {
            let plan = pp_solve_grid(&inst, &GridPriorities::Fixed(order))
                .unwrap()
                .unwrap();
            assert!(detect_conflicts(&plan.paths).unwrap().is_empty());
            assert!(plan.reaches_targets(&inst) && plan.is_connected(&inst.grid));
        }
        assert_eq!(
            classify_solvability(&inst).unwrap().class,
            Solvability::PSolvable
        );
    }

    #[test]
    fn head_on_swap_is_infeasible() {
        let inst = GridInstance::new(corridor(4), vec![0, 3], vec![3, 0], 8).unwrap();
        for order in permutations(2) {
            assert_eq!(
                pp_solve_grid(&inst, &GridPriorities::Fixed(order)).unwrap(),
                None
            );
        }
        assert!(!centrally_solvable(&inst));
        assert_eq!(
            classify_solvability(&inst).unwrap().class,
            Solvability::PpUnsolvable
        );
    }

    #[test]
    fn constant_schedule_reproduces_fixed_ordering() {
        let grid = Grid::parse("...\n.#.\n...").unwrap();
        let inst = GridInstance::new(grid, vec![0, 8], vec![8, 0], 6).unwrap();
        for order in permutations(2) {
            let fixed = pp_solve_grid(&inst, &GridPriorities::Fixed(order.clone())).unwrap();
            let tv = pp_solve_grid(&inst, &GridPriorities::TimeVariant(vec![order; 6])).unwrap();
            assert_eq!(fixed, tv);
        }
    }

    #[test]
    fn guards() {
        let inst = GridInstance::new(corridor(14), vec![0], vec![13], 13).unwrap();
        assert!(matches!(
            classify_solvability(&inst),
            Err(Error::Capacity { .. })
        ));
        assert!(GridInstance::new(corridor(3), vec![0, 0], vec![1, 2], 3).is_err());
    }

    #[test]
    fn permutation_list() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(3)[0], vec![1, 2, 3]);
        assert_eq!(permutations(1), vec![vec![1]]);
    }
}
