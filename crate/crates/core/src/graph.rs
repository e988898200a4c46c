//! Coupling graphs between agents.
//!
//! Agents are identified by dense integers `1..=n_agents`. The undirected
//! coupling graph records which agents interact; a prioritization orients
//! each edge towards the agent with lower priority, which yields a DAG whose
//! layering gives the agent classes that can plan in parallel.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prioritization::Prioritization;

pub type AgentId = usize;

/// Enumerating acyclic orientations is exponential in the edge count.
pub const MAX_ENUMERATION_EDGES: usize = 20;

#[derive(Deserialize)]
struct GraphDoc {
    n_agents: usize,
    edges: Vec<(AgentId, AgentId)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphDoc")]
pub struct UndirectedCouplingGraph {
    n_agents: usize,
    /// Stored with the smaller id first.
    edges: BTreeSet<(AgentId, AgentId)>,
}

impl TryFrom<GraphDoc> for UndirectedCouplingGraph {
    type Error = Error;

    fn try_from(doc: GraphDoc) -> Result<Self> {
        Self::from_edges(doc.n_agents, doc.edges)
    }
}

fn check_agent(n_agents: usize, i: AgentId) -> Result<()> {
    if i == 0 || i > n_agents {
        Err(Error::UnknownAgent(i))
    } else {
        Ok(())
    }
}

impl UndirectedCouplingGraph {
    pub fn new(n_agents: usize) -> Self {
        Self {
            n_agents,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(n_agents: usize) -> Self {
        let mut g = Self::new(n_agents);
        for i in 1..=n_agents {
            for j in i + 1..=n_agents {
                g.edges.insert((i, j));
            }
        }
        g
    }

    pub fn from_edges(
        n_agents: usize,
        edges: impl IntoIterator<Item = (AgentId, AgentId)>,
    ) -> Result<Self> {
        let mut g = Self::new(n_agents);
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, i: AgentId, j: AgentId) -> Result<()> {
        check_agent(self.n_agents, i)?;
        check_agent(self.n_agents, j)?;
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        self.edges.insert((i.min(j), i.max(j)));
        Ok(())
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, i: AgentId, j: AgentId) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        1..=self.n_agents
    }

    pub fn degree(&self, i: AgentId) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == i || b == i)
            .count()
    }

    pub fn neighbors(&self, i: AgentId) -> Vec<AgentId> {
        let mut out: Vec<AgentId> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Connected components, each sorted, ordered by their smallest member.
    pub fn connected_components(&self) -> Vec<Vec<AgentId>> {
        let adjacency = self.adjacency();
        let mut seen = vec![false; self.n_agents + 1];
        let mut components = Vec::new();
        for start in 1..=self.n_agents {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            let mut component = Vec::new();
            while let Some(v) = queue.pop_front() {
                component.push(v);
                for &w in &adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            component.sort_unstable();
            components.push(component);
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().len() <= 1
    }

    fn adjacency(&self) -> Vec<Vec<AgentId>> {
        let mut adjacency = vec![Vec::new(); self.n_agents + 1];
        for &(a, b) in &self.edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        adjacency
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DirectedCouplingGraph {
    n_agents: usize,
    arcs: BTreeSet<(AgentId, AgentId)>,
}

impl DirectedCouplingGraph {
    /// Builds a directed graph from raw arcs. Cycles are allowed here so that
    /// callers can feed arbitrary input to [`find_agent_classes`].
    pub fn from_arcs(
        n_agents: usize,
        arcs: impl IntoIterator<Item = (AgentId, AgentId)>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in arcs {
            check_agent(n_agents, i)?;
            check_agent(n_agents, j)?;
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            set.insert((i, j));
        }
        Ok(Self {
            n_agents,
            arcs: set,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn arcs(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.arcs.iter().copied()
    }

    pub fn n_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn has_arc(&self, i: AgentId, j: AgentId) -> bool {
        self.arcs.contains(&(i, j))
    }

    pub fn predecessors(&self, i: AgentId) -> Result<Vec<AgentId>> {
        check_agent(self.n_agents, i)?;
        Ok(self
            .arcs
            .iter()
            .filter(|&&(_, b)| b == i)
            .map(|&(a, _)| a)
            .collect())
    }

    pub fn successors(&self, i: AgentId) -> Result<Vec<AgentId>> {
        check_agent(self.n_agents, i)?;
        Ok(self
            .arcs
            .iter()
            .filter(|&&(a, _)| a == i)
            .map(|&(_, b)| b)
            .collect())
    }

    /// Predecessors and successors combined, sorted.
    pub fn neighbors(&self, i: AgentId) -> Result<Vec<AgentId>> {
        let mut out = self.predecessors(i)?;
        out.extend(self.successors(i)?);
        out.sort_unstable();
        Ok(out)
    }

    pub fn sources(&self) -> Vec<AgentId> {
        (1..=self.n_agents)
            .filter(|&i| !self.arcs.iter().any(|&(_, b)| b == i))
            .collect()
    }

    pub fn sinks(&self) -> Vec<AgentId> {
        (1..=self.n_agents)
            .filter(|&i| !self.arcs.iter().any(|&(a, _)| a == i))
            .collect()
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    /// Kahn's algorithm; smallest ready id first.
    pub fn topological_order(&self) -> Result<Vec<AgentId>> {
        let mut in_degree = vec![0usize; self.n_agents + 1];
        let mut out = vec![Vec::new(); self.n_agents + 1];
        for &(a, b) in &self.arcs {
            in_degree[b] += 1;
            out[a].push(b);
        }
        let mut ready: BTreeSet<AgentId> =
            (1..=self.n_agents).filter(|&i| in_degree[i] == 0).collect();
        let mut order = Vec::with_capacity(self.n_agents);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &w in &out[v] {
                in_degree[w] -= 1;
                if in_degree[w] == 0 {
                    ready.insert(w);
                }
            }
        }
        if order.len() == self.n_agents {
            Ok(order)
        } else {
            Err(Error::NotADag)
        }
    }

    /// Forgets the orientation.
    pub fn undirected(&self) -> UndirectedCouplingGraph {
        let mut g = UndirectedCouplingGraph::new(self.n_agents);
        for &(a, b) in &self.arcs {
            g.edges.insert((a.min(b), a.max(b)));
        }
        g
    }
}

/// Set of mutually uncoupled agents; members are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentClass(Vec<AgentId>);

impl AgentClass {
    pub fn new(mut members: Vec<AgentId>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self(members)
    }

    pub fn members(&self) -> &[AgentId] {
        &self.0
    }

    pub fn contains(&self, i: AgentId) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Ordered list of agent classes; the order in which the classes plan.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComputationSequence {
    classes: Vec<AgentClass>,
}

impl ComputationSequence {
    pub fn new(classes: Vec<AgentClass>) -> Self {
        Self { classes }
    }

    pub fn from_sets(sets: &[&[AgentId]]) -> Self {
        Self::new(sets.iter().map(|s| AgentClass::new(s.to_vec())).collect())
    }

    pub fn classes(&self) -> &[AgentClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// 0-based position of the class containing agent `i`.
    pub fn position_of(&self, i: AgentId) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(i))
    }

    /// Reorders the classes; `order[z]` is the index of the class placed at
    /// position `z`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self::new(order.iter().map(|&c| self.classes[c].clone()).collect())
    }

    pub fn check_partition(&self, n_agents: usize) -> Result<()> {
        let mut seen = vec![false; n_agents + 1];
        for class in &self.classes {
            if class.is_empty() {
                return Err(Error::NotAPartition {
                    n_agents,
                    reason: "empty class".into(),
                });
            }
            for &i in class.members() {
                if i == 0 || i > n_agents {
                    return Err(Error::NotAPartition {
                        n_agents,
                        reason: format!("agent {i} out of range"),
                    });
                }
                if seen[i] {
                    return Err(Error::NotAPartition {
                        n_agents,
                        reason: format!("agent {i} appears twice"),
                    });
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = (1..=n_agents).find(|&i| !seen[i]) {
            return Err(Error::NotAPartition {
                n_agents,
                reason: format!("agent {missing} missing"),
            });
        }
        Ok(())
    }
}

pub fn is_valid_prioritization(g: &UndirectedCouplingGraph, p: &Prioritization) -> Result<bool> {
    for i in g.agents() {
        p.get(i)?;
    }
    for (i, j) in g.edges() {
        if p.get(i)? == p.get(j)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Orients every edge towards the agent with the lower priority (larger
/// priority value).
pub fn orient(g: &UndirectedCouplingGraph, p: &Prioritization) -> Result<DirectedCouplingGraph> {
    let mut arcs = BTreeSet::new();
    for (i, j) in g.edges() {
        let (pi, pj) = (p.get(i)?, p.get(j)?);
        match pi.cmp(&pj) {
            std::cmp::Ordering::Less => arcs.insert((i, j)),
            std::cmp::Ordering::Greater => arcs.insert((j, i)),
            std::cmp::Ordering::Equal => return Err(Error::InvalidPrioritization(i, j)),
        };
    }
    for i in g.agents() {
        p.get(i)?;
    }
    Ok(DirectedCouplingGraph {
        n_agents: g.n_agents(),
        arcs,
    })
}

/// Layers a directed coupling graph into agent classes: each class holds the
/// vertices without incoming arcs once all earlier classes are removed.
pub fn find_agent_classes(g: &DirectedCouplingGraph) -> Result<ComputationSequence> {
    let n = g.n_agents();
    let mut in_degree = vec![0usize; n + 1];
    let mut out = vec![Vec::new(); n + 1];
    for (a, b) in g.arcs() {
        in_degree[b] += 1;
        out[a].push(b);
    }
    let mut todo: Vec<AgentId> = (1..=n).collect();
    let mut classes = Vec::new();
    while !todo.is_empty() {
        let (sources, rest): (Vec<AgentId>, Vec<AgentId>) =
            todo.iter().partition(|&&i| in_degree[i] == 0);
        if sources.is_empty() {
            return Err(Error::NotADag);
        }
        for &i in &sources {
            for &j in &out[i] {
                in_degree[j] -= 1;
            }
        }
        classes.push(AgentClass::new(sources));
        todo = rest;
    }
    Ok(ComputationSequence::new(classes))
}

/// All acyclic orientations, built by extending partial orientations edge by
/// edge and rejecting any arc that closes a directed cycle.
pub fn enumerate_acyclic_orientations(
    g: &UndirectedCouplingGraph,
) -> Result<Vec<DirectedCouplingGraph>> {
    let edges: Vec<(AgentId, AgentId)> = g.edges().collect();
    if edges.len() > MAX_ENUMERATION_EDGES {
        return Err(Error::Capacity {
            what: "acyclic orientation enumeration",
            size: edges.len(),
            limit: MAX_ENUMERATION_EDGES,
        });
    }
    let n = g.n_agents();
    let mut out_adj: Vec<Vec<AgentId>> = vec![Vec::new(); n + 1];
    let mut chosen = Vec::with_capacity(edges.len());
    let mut result = Vec::new();
    extend_orientation(n, &edges, &mut out_adj, &mut chosen, &mut result);
    Ok(result)
}

fn reaches(out_adj: &[Vec<AgentId>], from: AgentId, to: AgentId) -> bool {
    let mut seen = vec![false; out_adj.len()];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        stack.extend(out_adj[v].iter().copied());
    }
    false
}

fn extend_orientation(
    n: usize,
    edges: &[(AgentId, AgentId)],
    out_adj: &mut Vec<Vec<AgentId>>,
    chosen: &mut Vec<(AgentId, AgentId)>,
    result: &mut Vec<DirectedCouplingGraph>,
) {
    let Some(&(a, b)) = edges.get(chosen.len()) else {
        result.push(DirectedCouplingGraph {
            n_agents: n,
            arcs: chosen.iter().copied().collect(),
        });
        return;
    };
    for (from, to) in [(a, b), (b, a)] {
        if reaches(out_adj, to, from) {
            continue;
        }
        out_adj[from].push(to);
        chosen.push((from, to));
        extend_orientation(n, edges, out_adj, chosen, result);
        chosen.pop();
        out_adj[from].pop();
    }
}

/// Upper bound on the number of acyclic orientations: the product of
/// `degree + 1` over all vertices.
pub fn orientation_count_bound(g: &UndirectedCouplingGraph) -> u128 {
    g.agents().map(|i| g.degree(i) as u128 + 1).product()
}
