//! Computation graph and networked computation time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AgentId, ComputationSequence, DirectedCouplingGraph, UndirectedCouplingGraph};
use crate::schedule::ComputationScheduleMatrix;

/// Solve tasks `(agent, row)` with durations, plus virtual source and sink.
///
/// Arcs carry the duration of their tail task, so the longest source-to-sink
/// path is the time until every task of every row is finished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputationGraph {
    /// `(agent, row, seconds)` per task.
    pub tasks: Vec<(AgentId, usize, f64)>,
    /// Precedence between task indices.
    pub arcs: Vec<(usize, usize)>,
}

impl ComputationGraph {
    /// One prioritization: coupling arcs only.
    pub fn single(dag: &DirectedCouplingGraph, times: &[f64]) -> Result<Self> {
        let mut builder = Builder::default();
        builder.row(0, dag.n_agents(), |i| times.get(i - 1).copied(), dag.arcs())?;
        Ok(builder.finish(|_, r| r as f64))
    }

    /// Several computation sequences solved at once. `slot[r][i - 1]` orders
    /// agent `i`'s own tasks; an agent works on one row at a time.
    pub fn rows(
        g: &UndirectedCouplingGraph,
        sequences: &[ComputationSequence],
        times: &[Vec<f64>],
        slot: impl Fn(usize, AgentId) -> f64,
    ) -> Result<Self> {
        let mut builder = Builder::default();
        for (r, seq) in sequences.iter().enumerate() {
            let arcs = g.edges().map(|(a, b)| {
                if seq.position_of(a) < seq.position_of(b) {
                    (a, b)
                } else {
                    (b, a)
                }
            });
            let row_times = times.get(r).ok_or(Error::LengthMismatch {
                expected: sequences.len(),
                found: times.len(),
            })?;
            builder.row(r, g.n_agents(), |i| row_times.get(i - 1).copied(), arcs)?;
        }
        Ok(builder.finish(slot))
    }

    /// Rows of a computation schedule matrix over the classes of `initial`.
    pub fn schedule(
        g: &UndirectedCouplingGraph,
        initial: &ComputationSequence,
        matrix: &ComputationScheduleMatrix,
        times: &[Vec<f64>],
    ) -> Result<Self> {
        let n_rows = times.len().min(matrix.order());
        let sequences: Vec<ComputationSequence> = (0..n_rows)
            .map(|q| matrix.row_sequence(initial, q))
            .collect();
        Self::rows(g, &sequences, times, |r, i| {
            let class = initial
                .position_of(i)
                .expect("partition covers every agent");
            matrix.slot_of(r, class).unwrap_or(usize::MAX) as f64
        })
    }
}

#[derive(Default)]
struct Builder {
    tasks: Vec<(AgentId, usize, f64)>,
    arcs: Vec<(usize, usize)>,
}

impl Builder {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN
    fn row(
        &mut self,
        r: usize,
        n: usize,
        time: impl Fn(AgentId) -> Option<f64>,
        arcs: impl Iterator<Item = (AgentId, AgentId)>,
    ) -> Result<()> {
        let base = self.tasks.len();
        for i in 1..=n {
            let t = time(i).ok_or(Error::MissingPriority(i))?;
            if !(t >= 0.0) {
                return Err(Error::Scenario(format!(
                    "negative solve time {t} for agent {i}"
                )));
            }
            self.tasks.push((i, r, t));
        }
        self.arcs
            .extend(arcs.map(|(a, b)| (base + a - 1, base + b - 1)));
        Ok(())
    }

    fn finish(mut self, slot: impl Fn(usize, AgentId) -> f64) -> ComputationGraph {
        let mut per_agent: std::collections::BTreeMap<AgentId, Vec<(f64, usize, usize)>> =
            Default::default();
        for (idx, &(i, r, _)) in self.tasks.iter().enumerate() {
            per_agent.entry(i).or_default().push((slot(r, i), r, idx));
        }
        for tasks in per_agent.values_mut() {
            tasks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            self.arcs.extend(tasks.windows(2).map(|w| (w[0].2, w[1].2)));
        }
        ComputationGraph {
            tasks: self.tasks,
            arcs: self.arcs,
        }
    }
}

/// Weight of the longest source-to-sink path.
pub fn networked_computation_time(graph: &ComputationGraph) -> Result<f64> {
    let n = graph.tasks.len();
    let mut indegree = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &graph.arcs {
        out[a].push(b);
        indegree[b] += 1;
    }
    // start[v]: latest finish time among the tasks preceding v
    let mut start = vec![0.0f64; n];
    let mut queue: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut done = 0;
    let mut longest: f64 = 0.0;
    while let Some(v) = queue.pop() {
        done += 1;
        let finish = start[v] + graph.tasks[v].2;
        longest = longest.max(finish);
        for &w in &out[v] {
            start[w] = start[w].max(finish);
            indegree[w] -= 1;
            if indegree[w] == 0 {
                queue.push(w);
            }
        }
    }
    if done != n {
        return Err(Error::NotADag);
    }
    Ok(longest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::build_schedule;

    #[test]
    fn chain_and_parallel() {
        let chain = DirectedCouplingGraph::from_arcs(3, [(1, 2), (2, 3)]).unwrap();
        let g = ComputationGraph::single(&chain, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(networked_computation_time(&g).unwrap(), 6.0);
        let pair = DirectedCouplingGraph::from_arcs(2, []).unwrap();
        let g = ComputationGraph::single(&pair, &[2.0, 3.0]).unwrap();
        assert_eq!(networked_computation_time(&g).unwrap(), 3.0);
    }

    #[test]
    fn explore_has_no_overhead_with_equal_times() {
        for n in 2..=4 {
            let g = UndirectedCouplingGraph::complete(n);
            let initial = ComputationSequence::new(
                (1..=n)
                    .map(|i| crate::graph::AgentClass::new(vec![i]))
                    .collect(),
            );
            let m = build_schedule(n, 5).matrix;
            let times = vec![vec![1.0; n]; n];
            let cg = ComputationGraph::schedule(&g, &initial, &m, &times).unwrap();
            assert_eq!(networked_computation_time(&cg).unwrap(), n as f64);
        }
    }

    #[test]
    fn cycle_is_integrity_error() {
        let g = ComputationGraph {
            tasks: vec![(1, 0, 1.0), (2, 0, 1.0)],
            arcs: vec![(0, 1), (1, 0)],
        };
        assert!(matches!(
            networked_computation_time(&g),
            Err(Error::NotADag)
        ));
    }
}
