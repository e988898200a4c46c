//! Time-variant coupling from reachable sets.

use crate::geometry::Pose;
use crate::graph::UndirectedCouplingGraph;
use crate::mpa::ReachableSetTable;

/// Agents `i` and `j` (1-based) are coupled iff, at some horizon step, their
/// reachable polygons placed at the current poses intersect. `agents[k]` is
/// the automaton state and pose of agent `k + 1`.
pub fn compute_coupling(
    agents: &[(usize, Pose)],
    table: &ReachableSetTable,
) -> UndirectedCouplingGraph {
    let world: Vec<_> = agents
        .iter()
        .map(|&(q, pose)| table.world(q, pose))
        .collect();
    let reach: Vec<f64> = agents
        .iter()
        .map(|&(q, _)| {
            table
                .get(q)
                .iter()
                .map(|p| p.bounding_radius())
                .fold(0.0, f64::max)
        })
        .collect();
    let mut g = UndirectedCouplingGraph::new(agents.len());
    for a in 0..agents.len() {
        for b in a + 1..agents.len() {
            let (pa, pb) = (agents[a].1, agents[b].1);
            if (pa.x - pb.x).hypot(pa.y - pb.y) > reach[a] + reach[b] + 1e-9 {
                continue;
            }
            if world[a].iter().zip(&world[b]).any(|(x, y)| x.intersects(y)) {
                g.add_edge(a + 1, b + 1).expect("distinct agents in range");
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpa::generate_mpa;

    #[test]
    fn far_apart_and_identical() {
        let mpa = generate_mpa(&Default::default()).unwrap();
        let table = ReachableSetTable::compute(&mpa);
        let q = mpa.state_index(1.2, 0.0).unwrap();
        let far = compute_coupling(
            &[(q, Pose::default()), (q, Pose::new(100.0, 0.0, 0.0))],
            &table,
        );
        assert_eq!(far.n_edges(), 0);
        let same = compute_coupling(&[(q, Pose::default()), (q, Pose::default())], &table);
        assert!(same.has_edge(1, 2));
    }
}
