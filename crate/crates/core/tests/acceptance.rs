//! Acceptance criteria 1-12, one pass/fail line each (written straight to
//! stderr so the lines show up without `--nocapture`).

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use multiprio::config::{parse_config, ScenarioConfig};
use multiprio::geometry::Pose;
use multiprio::graph::{
    enumerate_acyclic_orientations, find_agent_classes, orient, orientation_count_bound,
    AgentClass, UndirectedCouplingGraph,
};
use multiprio::mapf::{classify_solvability, GridInstance, Solvability};
use multiprio::mpa::{generate_mpa, MpaConfig};
use multiprio::planner::{exhaustive_plan, expandable_vertices, mcts_plan, PlanningProblem};
use multiprio::prioritization::{p_constant, priorities_from_sequence, Prioritization, Strategy};
use multiprio::schedule::{build_schedule, schedule_graph, unique_schedule_sets};
use multiprio::sim::{
    audit_step, networked_computation_time, run_experiment, ComputationGraph, Scenario, Simulation,
};
use multiprio::vehicle::{integrate, ControlInput, VehicleParams, VehicleState};

const SEEDS: std::ops::Range<u64> = 0..10;
/// Criterion 6: explore must not be worse than constant on at least this many seeds.
const MIN_SEEDS_EXPLORE_LE_CONSTANT: usize = 9;
/// Criterion 7: per-step comparisons are exact up to float summation noise.
const COST_TOL: f64 = 1e-9;
/// Criterion 11: relative error against the analytic solutions.
const DYNAMICS_REL_TOL: f64 = 1e-6;

struct Verdict {
    pass: bool,
    detail: String,
}

fn line(id: usize, name: &str, verdict: &Verdict, elapsed: Duration, limit: Duration) -> bool {
    let in_time = elapsed <= limit;
    let ok = verdict.pass && in_time;
    let text = format!(
        "criterion {id:>2} {} {name}: {} ({:.3} s, limit {:.3} s{})\n",
        if ok { "PASS" } else { "FAIL" },
        verdict.detail,
        elapsed.as_secs_f64(),
        limit.as_secs_f64(),
        if in_time { "" } else { ", too slow" }
    );
    std::io::stderr().write_all(text.as_bytes()).unwrap();
    ok
}

fn timed(f: impl FnOnce() -> Verdict) -> (Verdict, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn crossing() -> ScenarioConfig {
    let path: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "tests",
        "fixtures",
        "crossing3.json",
    ]
    .iter()
    .collect();
    parse_config(path).unwrap()
}

fn with_seed(base: &Scenario, seed: u64) -> Scenario {
    let mut config = base.config.clone();
    config.seed = seed;
    Scenario::with_automaton(config, Arc::clone(&base.mpa), Arc::clone(&base.table)).unwrap()
}

fn c1_diamond() -> Verdict {
    let g = UndirectedCouplingGraph::from_edges(4, [(1, 2), (1, 3), (2, 4), (3, 4)]).unwrap();
    let seq = find_agent_classes(&orient(&g, &p_constant(4)).unwrap()).unwrap();
    let p = priorities_from_sequence(&seq, 4).unwrap();
    let classes_ok = seq.classes()
        == [
            AgentClass::new(vec![1]),
            AgentClass::new(vec![2, 3]),
            AgentClass::new(vec![4]),
        ];
    let prio_ok = p == Prioritization::from_values(&[5, 10, 11, 16]);
    Verdict {
        pass: classes_ok && prio_ok,
        detail: format!(
            "classes {:?}, priorities {:?}",
            seq.classes(),
            p.iter().map(|(_, v)| v).collect::<Vec<_>>()
        ),
    }
}

fn c2_latin() -> Verdict {
    let mut bad = 0;
    for n in 1..=8 {
        for seed in 0..100 {
            let m = build_schedule(n, seed).matrix;
            if !m.validate().unwrap() || m.rows()[0] != (0..n).collect::<Vec<_>>() {
                bad += 1;
            }
        }
    }
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_multiprio"))
            .args(["schedule", "--classes", "8", "--seed", "1234"])
            .output()
            .unwrap()
            .stdout
    };
    let (a, b) = (run(), run());
    let doc: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let in_process = serde_json::to_value(build_schedule(8, 1234).matrix).unwrap();
    let deterministic = a == b && doc["rows"] == in_process;
    Verdict {
        pass: bad == 0 && deterministic,
        detail: format!("{bad} invalid of 800, two processes agree: {deterministic}"),
    }
}

fn c3_counts() -> Verdict {
    let counts: Vec<usize> = (1..=4)
        .map(|n| unique_schedule_sets(n).unwrap().len())
        .collect();
    Verdict {
        pass: counts == [1, 1, 2, 24],
        detail: format!("N=1..4 -> {counts:?}"),
    }
}

fn c4_connectivity() -> Verdict {
    let g3 = schedule_graph(3).unwrap();
    let comps3 = g3.graph.connected_components().len();
    let g4 = schedule_graph(4).unwrap();
    let start = g4.vertices_with_row(&[0, 1, 2, 3]);
    let component = g4
        .graph
        .connected_components()
        .into_iter()
        .find(|c| c.contains(&start[0]))
        .unwrap();
    let mut rows: Vec<Vec<usize>> = component
        .iter()
        .flat_map(|&v| g4.sets[v - 1].clone())
        .collect();
    rows.sort();
    rows.dedup();
    let pass = comps3 == 2 && g4.graph.is_connected() && rows.len() == 24;
    Verdict {
        pass,
        detail: format!(
            "N=3: {comps3} components; N=4: connected {}, {} of 24 sequences reachable",
            g4.graph.is_connected(),
            rows.len()
        ),
    }
}

fn c5_orientations() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=7);
        let density = rng.random_range(0.1..0.9);
        let edges: Vec<_> = (1..=n)
            .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
            .filter(|_| rng.random_bool(density))
            .collect();
        let g = UndirectedCouplingGraph::from_edges(n, edges).unwrap();
        if enumerate_acyclic_orientations(&g).unwrap().len() as u128 > orientation_count_bound(&g) {
            violations += 1;
        }
    }
    let factorial = |n: usize| (1..=n).product::<usize>();
    let complete_ok = (2..=5).all(|n| {
        let g = UndirectedCouplingGraph::complete(n);
        enumerate_acyclic_orientations(&g).unwrap().len() == factorial(n)
    });
    Verdict {
        pass: violations == 0 && complete_ok,
        detail: format!(
            "{violations} bound violations on 200 graphs, K2..K5 count N!: {complete_ok}"
        ),
    }
}

/// Shared state for criterion 9, filled by criteria 6 and 7.
#[derive(Default)]
struct SafetyLog {
    runs: usize,
    steps_audited: usize,
    failures: Vec<String>,
}

fn c6_improve_or_maintain(base: &Scenario, safety: &mut SafetyLog) -> Verdict {
    let mut row1_violations = 0;
    let mut wins = 0;
    let mut totals = Vec::new();
    for seed in SEEDS {
        let sc = with_seed(base, seed);
        let explore = run_experiment(&sc, Strategy::Explore);
        let constant = run_experiment(&sc, Strategy::Constant);
        safety.runs += 2;
        let (Ok(explore), Ok(constant)) = (explore, constant) else {
            safety.failures.push(format!("seed {seed}: run aborted"));
            continue;
        };
        row1_violations += explore
            .records
            .iter()
            .filter(|r| r.row_costs[r.selected] > r.row_costs[0])
            .count();
        if explore.total_cost <= constant.total_cost {
            wins += 1;
        }
        totals.push(format!(
            "{:.2}/{:.2}",
            explore.total_cost, constant.total_cost
        ));
    }
    Verdict {
        pass: row1_violations == 0 && wins >= MIN_SEEDS_EXPLORE_LE_CONSTANT,
        detail: format!(
            "{row1_violations} row-1 violations; explore <= constant on {wins}/10 seeds [{}]",
            totals.join(" ")
        ),
    }
}

fn c7_sandwich(base: &Scenario, safety: &mut SafetyLog) -> Verdict {
    let (mut steps, mut low, mut high, mut max_orientations) = (0, 0, 0, 0);
    for seed in SEEDS {
        let sc = with_seed(base, seed);
        let mut sim = Simulation::new(&sc).unwrap();
        safety.runs += 1;
        for _ in 0..sc.config.steps() {
            let explore = sim.plan_step(Strategy::Explore).unwrap();
            let constant = sim.plan_step(Strategy::Constant).unwrap();
            let optimal = sim.plan_step(Strategy::Optimal).unwrap();
            max_orientations = max_orientations.max(optimal.rows.len());
            steps += 1;
            low += usize::from(optimal.cost() > explore.cost() + COST_TOL);
            high += usize::from(explore.cost() > constant.cost() + COST_TOL);

            let row = &explore.rows[explore.selected];
            if let Err(e) = audit_step(&sc.mpa, &row.plans, explore.k) {
                safety.failures.push(e.to_string());
            }
            for (idx, plan) in row.plans.iter().enumerate() {
                if !plan.ends_at_standstill(&sc.mpa) {
                    safety.failures.push(format!(
                        "seed {seed} step {}: agent {} plan does not stop",
                        explore.k,
                        idx + 1
                    ));
                }
            }
            safety.steps_audited += 1;
            if let Err(e) = sim.apply(&explore) {
                safety.failures.push(e.to_string());
                break;
            }
        }
    }
    Verdict {
        pass: low == 0 && high == 0 && max_orientations <= 12,
        detail: format!(
            "{steps} steps: optimal > explore {low}x, explore > constant {high}x, max orientations {max_orientations}"
        ),
    }
}

fn c8_timing() -> Verdict {
    let mut ok = true;
    for n in 2..=4 {
        // chain coupling gives n classes of one agent each
        let g = UndirectedCouplingGraph::from_edges(n, (1..n).map(|i| (i, i + 1))).unwrap();
        let initial = find_agent_classes(&orient(&g, &p_constant(n)).unwrap()).unwrap();
        let matrix = build_schedule(n, 11).matrix;
        let times = vec![vec![1.0; n]; n];
        let explore = networked_computation_time(
            &ComputationGraph::schedule(&g, &initial, &matrix, &times).unwrap(),
        )
        .unwrap();
        let single = networked_computation_time(
            &ComputationGraph::single(&orient(&g, &p_constant(n)).unwrap(), &vec![1.0; n]).unwrap(),
        )
        .unwrap();
        ok &= explore == n as f64 && single == n as f64;
    }
    let chain = UndirectedCouplingGraph::from_edges(3, [(1, 2), (2, 3)]).unwrap();
    let chain_t = networked_computation_time(
        &ComputationGraph::single(&orient(&chain, &p_constant(3)).unwrap(), &[1.0, 2.0, 3.0])
            .unwrap(),
    )
    .unwrap();
    let parallel = UndirectedCouplingGraph::new(2);
    let parallel_t = networked_computation_time(
        &ComputationGraph::single(&orient(&parallel, &p_constant(2)).unwrap(), &[2.0, 3.0])
            .unwrap(),
    )
    .unwrap();
    Verdict {
        pass: ok && chain_t == 6.0 && parallel_t == 3.0,
        detail: format!(
            "explore = single = N_L for N_L 2..4: {ok}; chain {chain_t}, parallel {parallel_t}"
        ),
    }
}

fn c9_safety(base: &Scenario, safety: &mut SafetyLog) -> Verdict {
    for strategy in [
        Strategy::Random,
        Strategy::Constraint,
        Strategy::Color,
        Strategy::Optimal,
    ] {
        for seed in 0..3 {
            safety.runs += 1;
            if let Err(e) = run_experiment(&with_seed(base, seed), strategy) {
                safety.failures.push(format!("{strategy} seed {seed}: {e}"));
            }
        }
    }
    Verdict {
        pass: safety.failures.is_empty(),
        detail: format!(
            "{} runs, {} steps re-audited, failures: {:?}",
            safety.runs, safety.steps_audited, safety.failures
        ),
    }
}

fn c10_planner_oracle() -> Verdict {
    let mpa = generate_mpa(&MpaConfig {
        speed_levels: vec![0.0, 0.4],
        horizon: 3,
        ..MpaConfig::default()
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut mismatches = 0;
    for trial in 0..50 {
        let start = rng.random_range(0..mpa.states.len());
        let reference = (1..=3)
            .map(|l| {
                [
                    l as f64 * rng.random_range(0.0..0.12),
                    rng.random_range(-0.05..0.05),
                ]
            })
            .collect();
        let problem = PlanningProblem::new(start, Pose::default(), reference);
        let size = expandable_vertices(&problem, &mpa).unwrap();
        let oracle = exhaustive_plan(&problem, &mpa).unwrap();
        let result = mcts_plan(&problem, &mpa, size, trial).unwrap();
        if result.cost != oracle.cost || result.feasible != oracle.feasible {
            mismatches += 1;
        }
    }
    Verdict {
        pass: mismatches == 0,
        detail: format!("{mismatches} cost mismatches on 50 references"),
    }
}

fn c11_dynamics() -> Verdict {
    let p = VehicleParams::default();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);

    let straight = integrate(
        &VehicleState {
            v: 0.9,
            psi: 0.4,
            ..Default::default()
        },
        |_| ControlInput::default(),
        2.0,
        40,
        &p,
    );
    let straight_err = rel(straight.x, 1.8 * 0.4f64.cos()).max(rel(straight.y, 1.8 * 0.4f64.sin()));

    let delta: f64 = 0.3;
    let beta = p.slip_angle(delta);
    let radius = p.wheelbase / (delta.tan() * beta.cos());
    let center = [-radius * beta.sin(), radius * beta.cos()];
    let mut s = VehicleState {
        v: 0.6,
        delta,
        ..Default::default()
    };
    let mut turn_err: f64 = 0.0;
    for _ in 0..30 {
        s = integrate(&s, |_| ControlInput::default(), 0.1, 10, &p);
        turn_err = turn_err.max(rel((s.x - center[0]).hypot(s.y - center[1]), radius));
    }
    let yaw_rate = 0.6 * beta.cos() * delta.tan() / p.wheelbase;
    turn_err = turn_err.max(rel(s.psi, yaw_rate * 3.0));

    let rest = VehicleState {
        x: 0.3,
        y: -1.0,
        psi: 2.0,
        v: 0.0,
        delta: 0.2,
    };
    let still = integrate(&rest, |_| ControlInput::default(), 5.0, 50, &p);
    let equilibrium = still == rest;
    let beta0 = p.slip_angle(0.0) == 0.0;
    Verdict {
        pass: straight_err < DYNAMICS_REL_TOL && turn_err < DYNAMICS_REL_TOL && equilibrium && beta0,
        detail: format!(
            "straight rel err {straight_err:.1e}, turn rel err {turn_err:.1e}, beta(0)=0 {beta0}, v=0 exact {equilibrium}"
        ),
    }
}

fn c12_mapf() -> Verdict {
    let load = |name: &str| {
        let path: PathBuf = [
            env!("CARGO_MANIFEST_DIR"),
            "tests",
            "fixtures",
            "mapf",
            name,
        ]
        .iter()
        .collect();
        classify_solvability(&GridInstance::load(path).unwrap()).unwrap()
    };
    let p = load("p_solvable.json");
    let tp = load("tp_only.json");
    let pp = load("pp_unsolvable.json");
    let pass = p.class == Solvability::PSolvable
        && tp.class == Solvability::TpSolvableOnly
        && tp.flips() == vec![2]
        && pp.class == Solvability::PpUnsolvable;
    Verdict {
        pass,
        detail: format!(
            "{:?} / {:?} with flips at {:?} / {:?}",
            p.class,
            tp.class,
            tp.flips(),
            pp.class
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let secs = Duration::from_secs_f64;
    let mut failed = Vec::new();
    let mut check = |id: usize, name: &str, limit: Duration, result: (Verdict, Duration)| {
        if !line(id, name, &result.0, result.1, limit) {
            failed.push(id);
        }
    };

    check(
        1,
        "agent classes of the diamond",
        secs(0.001),
        timed(c1_diamond),
    );
    check(2, "Latin-square construction", secs(5.0), timed(c2_latin));
    check(3, "unique schedule counts", secs(30.0), timed(c3_counts));
    check(
        4,
        "schedule graph connectivity",
        secs(60.0),
        timed(c4_connectivity),
    );
    check(5, "orientation bound", secs(30.0), timed(c5_orientations));

    let setup = Instant::now();
    let base = Scenario::new(crossing()).unwrap();
    let setup = setup.elapsed();
    let mut safety = SafetyLog::default();
    let (v6, t6) = timed(|| c6_improve_or_maintain(&base, &mut safety));
    check(6, "improve-or-maintain", secs(180.0), (v6, t6 + setup));
    let (v7, t7) = timed(|| c7_sandwich(&base, &mut safety));
    check(7, "optimal <= explore <= constant", secs(180.0), (v7, t7));
    let (v9, t9) = timed(|| c9_safety(&base, &mut safety));
    check(8, "zero-overhead timing", secs(1.0), timed(c8_timing));
    check(9, "safety audit", secs(360.0), (v9, t6 + t7 + t9));
    check(
        10,
        "planner oracle equivalence",
        secs(30.0),
        timed(c10_planner_oracle),
    );
    check(11, "dynamics", secs(1.0), timed(c11_dynamics));
    check(12, "MAPF fixtures", secs(120.0), timed(c12_mapf));
    std::io::stderr()
        .write_all(b"criterion 13 N/A  large distributed-hardware results: not reproducible at desk scale (declared)\n")
        .unwrap();

    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
