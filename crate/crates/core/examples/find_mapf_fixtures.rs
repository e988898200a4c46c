//! Random search for small grid instances with given solvability classes.
//! Writes the first hit per kind into the fixture directory.
//!
//! cargo run --release -p multiprio --example find_mapf_fixtures -- <dir>

use multiprio::mapf::{
    centrally_solvable, classify_solvability, permutations, pp_solve_grid, Grid, GridInstance,
    GridPriorities, Solvability,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(rng: &mut ChaCha8Rng, n_agents: usize) -> Option<GridInstance> {
    let (w, h) = (rng.random_range(3..=6), rng.random_range(2..=4));
    let text: String = (0..h)
        .map(|_| {
            (0..w)
                .map(|_| if rng.random_bool(0.3) { '#' } else { '.' })
                .collect::<String>()
                + "\n"
        })
        .collect();
    let grid = Grid::parse(&text).ok()?;
    let mut cells: Vec<_> = grid.vertices().collect();
    if cells.len() < n_agents + 2 {
        return None;
    }
    cells.shuffle(rng);
    let starts = cells[..n_agents].to_vec();
    cells.shuffle(rng);
    let targets = cells[..n_agents].to_vec();
    let k = rng.random_range(4..=10);
    GridInstance::new(grid, starts, targets, k).ok()
}

fn fixed_feasible(inst: &GridInstance) -> Vec<Vec<usize>> {
    permutations(inst.n_agents())
        .into_iter()
        .filter(|o| {
            pp_solve_grid(inst, &GridPriorities::Fixed(o.clone()))
                .unwrap()
                .is_some()
        })
        .collect()
}

fn main() {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/core/tests/fixtures/mapf".into());
    std::fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut found = [false; 4];
    for trial in 0..2_000_000u64 {
        if found.iter().all(|&f| f) {
            break;
        }
        let n = if trial % 2 == 0 { 2 } else { 3 };
        let Some(mut inst) = random_instance(&mut rng, n) else {
            continue;
        };
        if !centrally_solvable(&inst) {
            continue;
        }
        let cert = classify_solvability(&inst).unwrap();
        if !found[0] && n == 3 && cert.class == Solvability::PSolvable {
            let ok = fixed_feasible(&inst);
            if ok.len() == 2 && ok[0][2] == ok[1][2] {
                // relabel so that the agent that must go last is agent 2
                let last = ok[0][2] - 1;
                inst.starts.swap(last, 1);
                inst.targets.swap(last, 1);
                inst.save(&dir, "bottleneck").unwrap();
                println!(
                    "bottleneck: {:?}\n{}",
                    fixed_feasible(&inst),
                    inst.grid.render()
                );
                found[0] = true;
            }
        }
        if !found[1]
            && n == 2
            && cert.class == Solvability::PSolvable
            && fixed_feasible(&inst).len() == 1
        {
            inst.save(&dir, "p_solvable").unwrap();
            println!("p_solvable\n{}", inst.grid.render());
            found[1] = true;
        }
        if !found[2] && cert.class == Solvability::TpSolvableOnly && cert.flips() == vec![2] {
            inst.save(&dir, "tp_only").unwrap();
            println!("tp_only: {:?}\n{}", cert.schedule, inst.grid.render());
            found[2] = true;
        }
        if !found[3] && n == 2 && cert.class == Solvability::PpUnsolvable {
            inst.save(&dir, "pp_unsolvable").unwrap();
            println!("pp_unsolvable\n{}", inst.grid.render());
            found[3] = true;
        }
    }
    println!("found {found:?}");
}
