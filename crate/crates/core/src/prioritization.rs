//! Prioritization functions.
//!
//! A prioritization maps every agent to a natural number; a lower number
//! means a higher priority. Ties are always broken by ascending agent id so
//! that every agent computes the same result without communication.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AgentId, ComputationSequence, UndirectedCouplingGraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Prioritization {
    priority: BTreeMap<AgentId, u64>,
}

impl Prioritization {
    pub fn new(priority: BTreeMap<AgentId, u64>) -> Self {
        Self { priority }
    }

    /// `values[i - 1]` is the priority of agent `i`.
    pub fn from_values(values: &[u64]) -> Self {
        Self {
            priority: values
                .iter()
                .enumerate()
                .map(|(k, &p)| (k + 1, p))
                .collect(),
        }
    }

    pub fn get(&self, i: AgentId) -> Result<u64> {
        self.priority
            .get(&i)
            .copied()
            .ok_or(Error::MissingPriority(i))
    }

    pub fn len(&self) -> usize {
        self.priority.len()
    }

    pub fn is_empty(&self) -> bool {
        self.priority.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, u64)> + '_ {
        self.priority.iter().map(|(&i, &p)| (i, p))
    }

    /// Agents sorted from highest to lowest priority, ties by id.
    pub fn order(&self) -> Vec<AgentId> {
        let mut agents: Vec<(u64, AgentId)> = self.iter().map(|(i, p)| (p, i)).collect();
        agents.sort_unstable();
        agents.into_iter().map(|(_, i)| i).collect()
    }

    pub fn all_distinct(&self) -> bool {
        let mut values: Vec<u64> = self.priority.values().copied().collect();
        values.sort_unstable();
        values.windows(2).all(|w| w[0] != w[1])
    }
}

/// Unique priorities `Z * n_agents + i` for agent `i` in the `Z`-th class
/// (1-based) of the sequence.
pub fn priorities_from_sequence(
    s: &ComputationSequence,
    n_agents: usize,
) -> Result<Prioritization> {
    s.check_partition(n_agents)?;
    let mut priority = BTreeMap::new();
    for (z, class) in s.classes().iter().enumerate() {
        for &i in class.members() {
            priority.insert(i, ((z + 1) * n_agents + i) as u64);
        }
    }
    Ok(Prioritization { priority })
}

pub fn p_constant(n_agents: usize) -> Prioritization {
    Prioritization {
        priority: (1..=n_agents).map(|i| (i, i as u64)).collect(),
    }
}

/// Uniformly random permutation of `1..=n_agents`; the same seed gives the
/// same permutation everywhere.
pub fn p_random(n_agents: usize, seed: u64) -> Prioritization {
    let mut values: Vec<u64> = (1..=n_agents as u64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    values.shuffle(&mut rng);
    Prioritization::from_values(&values)
}

/// Agents with more couplings (potential collisions) get higher priority.
pub fn p_constraint(g: &UndirectedCouplingGraph) -> Prioritization {
    let mut agents: Vec<AgentId> = g.agents().collect();
    agents.sort_by_key(|&i| (std::cmp::Reverse(g.degree(i)), i));
    let mut priority = BTreeMap::new();
    for (rank, i) in agents.into_iter().enumerate() {
        priority.insert(i, rank as u64 + 1);
    }
    Prioritization { priority }
}

/// Greedy vertex coloring in ascending id order; colors start at 1.
/// `colors[i]` is the color of agent `i`, index 0 is unused.
pub fn greedy_coloring(g: &UndirectedCouplingGraph) -> Vec<usize> {
    let n = g.n_agents();
    let mut colors = vec![0usize; n + 1];
    for i in 1..=n {
        let used: Vec<usize> = g
            .neighbors(i)
            .into_iter()
            .filter(|&j| j < i)
            .map(|j| colors[j])
            .collect();
        colors[i] = (1..).find(|c| !used.contains(c)).unwrap_or(1);
    }
    colors
}

/// Priority `color(i) * n_agents + i`; agents sharing a color end up in the
/// same agent class.
pub fn p_color(g: &UndirectedCouplingGraph) -> Prioritization {
    let n = g.n_agents();
    let colors = greedy_coloring(g);
    Prioritization {
        priority: (1..=n).map(|i| (i, (colors[i] * n + i) as u64)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Constant,
    Random,
    Constraint,
    Color,
    Optimal,
    Explore,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Constant,
        Strategy::Random,
        Strategy::Constraint,
        Strategy::Color,
        Strategy::Optimal,
        Strategy::Explore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Constant => "constant",
            Strategy::Random => "random",
            Strategy::Constraint => "constraint",
            Strategy::Color => "color",
            Strategy::Optimal => "optimal",
            Strategy::Explore => "explore",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Strategy::name).join("|")
    }

    /// The prioritization of a heuristic strategy; `None` for `optimal` and
    /// `explore`, which are not a single function of the coupling graph.
    pub fn heuristic(
        self,
        g: &UndirectedCouplingGraph,
        random_seed: u64,
    ) -> Option<Prioritization> {
        match self {
            Strategy::Constant => Some(p_constant(g.n_agents())),
            Strategy::Random => Some(p_random(g.n_agents(), random_seed)),
            Strategy::Constraint => Some(p_constraint(g)),
            Strategy::Color => Some(p_color(g)),
            Strategy::Optimal | Strategy::Explore => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown strategy {s:?}, expected one of {}",
                    Self::valid_names()
                )
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{find_agent_classes, is_valid_prioritization, orient};

    fn path3() -> UndirectedCouplingGraph {
        UndirectedCouplingGraph::from_edges(3, [(1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn from_sequence_worked_example() {
        let s = ComputationSequence::from_sets(&[&[1], &[2, 3], &[4]]);
        let p = priorities_from_sequence(&s, 4).unwrap();
        assert_eq!(p, Prioritization::from_values(&[5, 10, 11, 16]));

        let s = ComputationSequence::from_sets(&[&[1, 2]]);
        let p = priorities_from_sequence(&s, 2).unwrap();
        assert_eq!(p, Prioritization::from_values(&[3, 4]));
        assert!(p.all_distinct());
    }

    #[test]
    fn from_sequence_rejects_non_partition() {
        let s = ComputationSequence::from_sets(&[&[1], &[1, 2]]);
        assert!(matches!(
            priorities_from_sequence(&s, 2),
            Err(Error::NotAPartition { .. })
        ));
        let s = ComputationSequence::from_sets(&[&[1]]);
        assert!(priorities_from_sequence(&s, 2).is_err());
    }

    #[test]
    fn constant() {
        assert_eq!(p_constant(3), Prioritization::from_values(&[1, 2, 3]));
        assert_eq!(p_constant(1), Prioritization::from_values(&[1]));
        let k4 = UndirectedCouplingGraph::complete(4);
        assert!(is_valid_prioritization(&k4, &p_constant(4)).unwrap());
    }

    #[test]
    fn random_is_seeded_permutation() {
        let a = p_random(7, 12);
        assert_eq!(a, p_random(7, 12));
        let mut values: Vec<u64> = a.iter().map(|(_, p)| p).collect();
        values.sort_unstable();
        assert_eq!(values, (1..=7).collect::<Vec<_>>());
        for k in 0..10 {
            assert_eq!(p_random(1, k), Prioritization::from_values(&[1]));
        }
    }

    #[test]
    fn constraint_heuristic() {
        // star centered at 3
        let star = UndirectedCouplingGraph::from_edges(4, [(3, 1), (3, 2), (3, 4)]).unwrap();
        let p = p_constraint(&star);
        assert_eq!(p.get(3).unwrap(), 1);
        assert_eq!(p.order(), vec![3, 1, 2, 4]);
        assert_eq!(
            p_constraint(&UndirectedCouplingGraph::new(3)),
            p_constant(3)
        );
        assert_eq!(
            p_constraint(&UndirectedCouplingGraph::complete(3)).order(),
            vec![1, 2, 3]
        );
    }

    #[test]
    fn color_heuristic() {
        let k3 = UndirectedCouplingGraph::complete(3);
        let classes = find_agent_classes(&orient(&k3, &p_color(&k3)).unwrap()).unwrap();
        assert_eq!(classes.len(), 3);

        let colors = greedy_coloring(&path3());
        assert_eq!(&colors[1..], &[1, 2, 1]);
        let classes = find_agent_classes(&orient(&path3(), &p_color(&path3())).unwrap()).unwrap();
        assert_eq!(classes, ComputationSequence::from_sets(&[&[1, 3], &[2]]));

        let empty = UndirectedCouplingGraph::new(4);
        let classes = find_agent_classes(&orient(&empty, &p_color(&empty)).unwrap()).unwrap();
        assert_eq!(classes.len(), 1);
    }

    #[test]
    fn strategy_names() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
            assert_eq!(
                serde_json::to_string(&s).unwrap(),
                format!("\"{}\"", s.name())
            );
        }
        let err = "optimaal".parse::<Strategy>().unwrap_err();
        assert!(err.contains("optimaal") && err.contains("optimal"));
    }
}
