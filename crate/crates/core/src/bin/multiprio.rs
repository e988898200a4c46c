use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use multiprio::config::parse_config;
use multiprio::mapf::{classify_solvability, GridInstance};
use multiprio::mpa::generate_mpa;
use multiprio::prioritization::Strategy;
use multiprio::report::{compare, comparison_table, plot_series_csv, write_outputs};
use multiprio::schedule::{build_schedule, unique_schedule_sets};
use multiprio::sim::{run_experiment, ExperimentReport, Scenario};
use multiprio::{Error, Result};

#[derive(Parser)]
#[command(
    name = "multiprio",
    version,
    about = "Networked prioritized motion planning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write report.json, steps.jsonl, summary.csv, plans.jsonl.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run several strategies on one scenario; costs are normalized by `constant`.
    Compare {
        config: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "constant,random,constraint,color,optimal,explore"
        )]
        strategies: Vec<Strategy>,
        #[arg(long)]
        seed: Option<u64>,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Build a computation schedule, or count unique schedules of an order.
    Schedule {
        #[arg(long, required_unless_present = "enumerate")]
        classes: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, conflicts_with = "classes")]
        enumerate: Option<usize>,
    },
    /// Classify a grid instance (JSON sidecar next to its map file).
    Mapf { instance: PathBuf },
    /// Per-step cost, networked time and class count from a report.json.
    PlotData {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the motion primitive automaton of a scenario as JSON.
    Mpa { config: PathBuf },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            strategy,
            out,
        } => {
            let mut config = parse_config(config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let strategy = strategy.unwrap_or(config.strategy);
            let scenario = Scenario::new(config)?;
            let report = run_experiment(&scenario, strategy)?;
            write_outputs(&report, &out)?;
            println!(
                "{} steps, strategy {}, total cost {:.4}, max networked time {:.6} s -> {}",
                report.steps,
                strategy,
                report.total_cost,
                report.max_networked_time,
                out.display()
            );
        }
        Command::Compare {
            config,
            mut strategies,
            seed,
            json,
        } => {
            let mut config = parse_config(config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let scenario = Scenario::new(config)?;
            if !strategies.contains(&Strategy::Constant) {
                strategies.insert(0, Strategy::Constant);
            }
            let reports = strategies
                .iter()
                .map(|&s| run_experiment(&scenario, s))
                .collect::<Result<Vec<_>>>()?;
            let baseline = reports
                .iter()
                .find(|r| r.strategy == Strategy::Constant)
                .expect("constant is always run");
            let rows = compare(&reports, baseline);
            if json {
                println!("{}", serde_json::to_string_pretty(&rows)?);
            } else {
                print!("{}", comparison_table(&rows));
            }
        }
        Command::Schedule {
            classes,
            seed,
            enumerate,
        } => {
            if let Some(n) = enumerate {
                println!("{}", unique_schedule_sets(n)?.len());
            } else {
                let n = classes.expect("clap requires --classes");
                let build = build_schedule(n, seed);
                let doc = json!({
                    "classes": n,
                    "seed": seed,
                    "rows": build.matrix,
                    "valid": build.matrix.validate()?,
                    "restarts": build.restarts,
                });
                println!("{}", serde_json::to_string_pretty(&doc)?);
            }
        }
        Command::Mapf { instance } => {
            let instance = GridInstance::load(instance)?;
            let cert = classify_solvability(&instance)?;
            println!("{}", serde_json::to_string_pretty(&cert)?);
        }
        Command::PlotData { report, out } => {
            let report: ExperimentReport = serde_json::from_str(&std::fs::read_to_string(report)?)?;
            let csv = plot_series_csv(&report)?;
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Mpa { config } => {
            let config = parse_config(config)?;
            println!("{}", generate_mpa(&config.mpa_config())?.to_json()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"kind": e.kind(), "message": e.to_string()}));
            match e {
                Error::CollisionAudit { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
