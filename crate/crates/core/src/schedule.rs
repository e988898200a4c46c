//! Computation schedule matrices.
//!
//! A schedule is an `N_L x N_L` Latin square over class indices: each row is
//! a computation sequence (a permutation of the classes) and each column is a
//! time slot in which every class solves exactly one planning problem.
//! Entries are 0-based indices into a fixed initial [`ComputationSequence`].

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ComputationSequence, UndirectedCouplingGraph};

/// Exhaustive Latin-square enumeration is only feasible for tiny orders.
pub const MAX_ENUMERATION_ORDER: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComputationScheduleMatrix {
    rows: Vec<Vec<usize>>,
}

impl ComputationScheduleMatrix {
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn order(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, row: usize, slot: usize) -> usize {
        self.rows[row][slot]
    }

    /// Row `q` as a computation sequence over the classes of `initial`.
    pub fn row_sequence(&self, initial: &ComputationSequence, q: usize) -> ComputationSequence {
        initial.permuted(&self.rows[q])
    }

    /// True iff no row and no column repeats a class and all entries are
    /// class indices.
    pub fn validate(&self) -> Result<bool> {
        let n = self.rows.len();
        for (row, r) in self.rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NonSquare {
                    rows: n,
                    row,
                    cols: r.len(),
                });
            }
        }
        let is_permutation = |values: Vec<usize>| {
            let mut seen = vec![false; n];
            values
                .into_iter()
                .all(|v| v < n && !std::mem::replace(&mut seen[v], true))
        };
        let rows_ok = self.rows.iter().all(|r| is_permutation(r.clone()));
        let cols_ok = (0..n).all(|m| is_permutation(self.rows.iter().map(|r| r[m]).collect()));
        Ok(rows_ok && cols_ok)
    }

    /// The unique row whose entry in `slot` is `class`.
    pub fn row_for_slot(&self, class: usize, slot: usize) -> Result<usize> {
        self.rows
            .iter()
            .position(|r| r.get(slot) == Some(&class))
            .ok_or(Error::ScheduleIntegrity { class, slot })
    }

    /// The slot in which `class` works on row `q`.
    pub fn slot_of(&self, q: usize, class: usize) -> Option<usize> {
        self.rows[q].iter().position(|&c| c == class)
    }
}

pub fn validate_schedule(m: &ComputationScheduleMatrix) -> Result<bool> {
    m.validate()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleBuild {
    pub matrix: ComputationScheduleMatrix,
    /// Number of rows discarded because some column ran out of options.
    pub restarts: usize,
}

/// Builds a schedule row by row. The first row is the identity (the initial
/// sequence); every further row fills the most constrained column first and
/// draws its entry uniformly from the remaining options. A row that runs out
/// of options is discarded and redrawn. The generator is keyed by `seed`
/// only, so every agent derives the same matrix.
pub fn build_schedule(n_levels: usize, seed: u64) -> ScheduleBuild {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(n_levels);
    if n_levels > 0 {
        rows.push((0..n_levels).collect());
    }
    let mut restarts = 0;
    while rows.len() < n_levels {
        match draw_row(&rows, n_levels, &mut rng) {
            Some(row) => rows.push(row),
            None => restarts += 1,
        }
    }
    if restarts > 0 {
        log::debug!("schedule of order {n_levels} needed {restarts} restarts");
    }
    ScheduleBuild {
        matrix: ComputationScheduleMatrix { rows },
        restarts,
    }
}

fn draw_row(rows: &[Vec<usize>], n: usize, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let mut row: Vec<Option<usize>> = vec![None; n];
    for _ in 0..n {
        let mut best: Option<(usize, Vec<usize>)> = None;
        for m in (0..n).filter(|&m| row[m].is_none()) {
            let options: Vec<usize> = (0..n)
                .filter(|c| !row.contains(&Some(*c)) && !rows.iter().any(|r| r[m] == *c))
                .collect();
            if best.as_ref().is_none_or(|(_, b)| options.len() < b.len()) {
                best = Some((m, options));
            }
        }
        let (m, options) = best?;
        if options.is_empty() {
            return None;
        }
        row[m] = Some(options[rng.random_range(0..options.len())]);
    }
    row.into_iter().collect()
}

/// A set of rows; two schedules are the same up to row reordering iff their
/// row sets are equal. Rows are kept sorted.
pub type RowSet = Vec<Vec<usize>>;

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ENUMERATION_ORDER {
        Err(Error::Capacity {
            what: "Latin square enumeration",
            size: n,
            limit: MAX_ENUMERATION_ORDER,
        })
    } else {
        Ok(())
    }
}

/// Calls `visit` on every Latin square of order `n`.
pub fn for_each_latin_square(n: usize, mut visit: impl FnMut(&[Vec<usize>])) -> Result<()> {
    check_order(n)?;
    let mut grid = vec![vec![usize::MAX; n]; n];
    let mut row_used = vec![0u32; n];
    let mut col_used = vec![0u32; n];
    fill_cell(n, 0, &mut grid, &mut row_used, &mut col_used, &mut visit);
    Ok(())
}

fn fill_cell(
    n: usize,
    cell: usize,
    grid: &mut Vec<Vec<usize>>,
    row_used: &mut [u32],
    col_used: &mut [u32],
    visit: &mut impl FnMut(&[Vec<usize>]),
) {
    if cell == n * n {
        visit(grid);
        return;
    }
    let (r, c) = (cell / n, cell % n);
    for v in 0..n {
        let bit = 1 << v;
        if row_used[r] & bit != 0 || col_used[c] & bit != 0 {
            continue;
        }
        grid[r][c] = v;
        row_used[r] |= bit;
        col_used[c] |= bit;
        fill_cell(n, cell + 1, grid, row_used, col_used, visit);
        row_used[r] &= !bit;
        col_used[c] &= !bit;
    }
}

pub fn count_latin_squares(n: usize) -> Result<usize> {
    let mut count = 0;
    for_each_latin_square(n, |_| count += 1)?;
    Ok(count)
}

/// One representative row set per class of Latin squares that differ only
/// by the order of their rows, in lexicographic order.
pub fn unique_schedule_sets(n: usize) -> Result<Vec<RowSet>> {
    let mut sets = BTreeSet::new();
    for_each_latin_square(n, |square| {
        let mut rows = square.to_vec();
        rows.sort();
        sets.insert(rows);
    })?;
    Ok(sets.into_iter().collect())
}

#[derive(Debug, Clone)]
pub struct ScheduleGraph {
    /// Vertex `v` (1-based in `graph`) is `sets[v - 1]`.
    pub sets: Vec<RowSet>,
    pub graph: UndirectedCouplingGraph,
}

impl ScheduleGraph {
    /// 1-based vertex ids of all schedules that contain `row`.
    pub fn vertices_with_row(&self, row: &[usize]) -> Vec<usize> {
        self.sets
            .iter()
            .enumerate()
            .filter(|(_, s)| s.binary_search_by(|r| r.as_slice().cmp(row)).is_ok())
            .map(|(v, _)| v + 1)
            .collect()
    }
}

/// Graph over the unique schedules of order `n`; two schedules are adjacent
/// iff they share a row.
pub fn schedule_graph(n: usize) -> Result<ScheduleGraph> {
    let sets = unique_schedule_sets(n)?;
    let mut by_row: BTreeMap<&[usize], Vec<usize>> = BTreeMap::new();
    for (v, set) in sets.iter().enumerate() {
        for row in set {
            by_row.entry(row.as_slice()).or_default().push(v + 1);
        }
    }
    let mut graph = UndirectedCouplingGraph::new(sets.len());
    for members in by_row.values() {
        for (k, &a) in members.iter().enumerate() {
            for &b in &members[k + 1..] {
                graph.add_edge(a, b)?;
            }
        }
    }
    Ok(ScheduleGraph { sets, graph })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[usize]]) -> ComputationScheduleMatrix {
        ComputationScheduleMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect())
    }

    #[test]
    fn small_orders() {
        assert_eq!(build_schedule(1, 3).matrix, m(&[&[0]]));
        for seed in 0..5 {
            assert_eq!(build_schedule(2, seed).matrix, m(&[&[0, 1], &[1, 0]]));
        }
        let four = build_schedule(4, 7).matrix;
        assert!(four.validate().unwrap());
        assert_eq!(four.rows()[0], vec![0, 1, 2, 3]);
        assert!(build_schedule(0, 1).matrix.rows().is_empty());
    }

    #[test]
    fn validation() {
        assert!(m(&[&[0, 1], &[1, 0]]).validate().unwrap());
        assert!(!m(&[&[0, 0], &[1, 1]]).validate().unwrap());
        assert!(!m(&[&[0, 1], &[0, 1]]).validate().unwrap());
        assert!(!m(&[&[0, 2], &[2, 0]]).validate().unwrap());
        assert!(matches!(
            m(&[&[0, 1], &[1]]).validate(),
            Err(Error::NonSquare { row: 1, .. })
        ));
    }

    #[test]
    fn slot_lookup() {
        let s = m(&[&[0, 1], &[1, 0]]);
        assert_eq!(s.row_for_slot(1, 0).unwrap(), 1);
        assert_eq!(s.row_for_slot(0, 0).unwrap(), 0);
        assert_eq!(s.row_for_slot(1, 1).unwrap(), 0);
        assert!(matches!(
            s.row_for_slot(2, 0),
            Err(Error::ScheduleIntegrity { class: 2, slot: 0 })
        ));
        assert_eq!(s.slot_of(1, 0), Some(1));
    }

    #[test]
    fn row_sequences_follow_initial_classes() {
        let initial = ComputationSequence::from_sets(&[&[1], &[2, 3], &[4]]);
        let s = m(&[&[0, 1, 2], &[2, 0, 1], &[1, 2, 0]]);
        assert_eq!(s.row_sequence(&initial, 0), initial);
        assert_eq!(
            s.row_sequence(&initial, 1),
            ComputationSequence::from_sets(&[&[4], &[1], &[2, 3]])
        );
    }

    #[test]
    fn json_rows() {
        let s = m(&[&[0, 1], &[1, 0]]);
        assert_eq!(serde_json::to_string(&s).unwrap(), "[[0,1],[1,0]]");
    }

    #[test]
    fn latin_square_counts() {
        assert_eq!(count_latin_squares(1).unwrap(), 1);
        assert_eq!(count_latin_squares(2).unwrap(), 2);
        assert_eq!(count_latin_squares(3).unwrap(), 12);
        assert_eq!(count_latin_squares(4).unwrap(), 576);
        assert!(matches!(
            count_latin_squares(6),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn unique_sets() {
        let counts: Vec<usize> = (1..=4)
            .map(|n| unique_schedule_sets(n).unwrap().len())
            .collect();
        assert_eq!(counts, vec![1, 1, 2, 24]);
    }

    #[test]
    fn order_three_schedules_share_no_row() {
        let g = schedule_graph(3).unwrap();
        assert_eq!(g.sets.len(), 2);
        assert_eq!(g.graph.n_edges(), 0);
        assert_eq!(g.graph.connected_components().len(), 2);
        let single = schedule_graph(1).unwrap();
        assert!(single.graph.is_connected());
    }

    /// Brute-force completion of a partial schedule given by its first rows.
    fn completable(prefix: &[Vec<usize>], n: usize) -> bool {
        if prefix.len() == n {
            return true;
        }
        let mut found = false;
        permutations(n, &mut |perm| {
            if found {
                return;
            }
            if (0..n).all(|c| prefix.iter().all(|r| r[c] != perm[c])) {
                let mut next = prefix.to_vec();
                next.push(perm.to_vec());
                found = completable(&next, n);
            }
        });
        found
    }

    fn permutations(n: usize, visit: &mut dyn FnMut(&[usize])) {
        fn rec(cur: &mut Vec<usize>, n: usize, visit: &mut dyn FnMut(&[usize])) {
            if cur.len() == n {
                visit(cur);
                return;
            }
            for v in 0..n {
                if !cur.contains(&v) {
                    cur.push(v);
                    rec(cur, n, visit);
                    cur.pop();
                }
            }
        }
        rec(&mut Vec::new(), n, visit);
    }

    #[test]
    fn every_valid_prefix_completes() {
        for n in 1..=4 {
            // all valid prefixes of every length, obtained from full squares
            let mut prefixes = BTreeSet::new();
            for_each_latin_square(n, |sq| {
                for len in 1..=n {
                    prefixes.insert(sq[..len].to_vec());
                }
            })
            .unwrap();
            // and every row-distinct, column-distinct prefix built directly
            let mut direct = Vec::new();
            permutations(n, &mut |p| direct.push(p.to_vec()));
            for a in &direct {
                for b in &direct {
                    if (0..n).all(|c| a[c] != b[c]) {
                        prefixes.insert(vec![a.clone(), b.clone()]);
                    }
                }
            }
            for prefix in prefixes {
                assert!(
                    completable(&prefix, n),
                    "prefix {prefix:?} cannot be completed"
                );
            }
        }
    }
}
