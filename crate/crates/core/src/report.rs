//! Output files for experiment reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path as FsPath;

use serde::Serialize;

use crate::error::Result;
use crate::graph::AgentId;
use crate::prioritization::Strategy;
use crate::sim::{ExperimentReport, StepRecord};

#[derive(Debug, Clone, Serialize)]
struct SummaryRow {
    k: usize,
    strategy: Strategy,
    cost: f64,
    networked_time: f64,
    n_classes: usize,
    coupling_edges: usize,
    rows: usize,
    selected: usize,
    expansions: usize,
    fallback_agents: usize,
    messages: usize,
    message_bytes: usize,
}

impl From<&StepRecord> for SummaryRow {
    fn from(r: &StepRecord) -> Self {
        Self {
            k: r.k,
            strategy: r.strategy,
            cost: r.cost,
            networked_time: r.networked_time,
            n_classes: r.n_classes,
            coupling_edges: r.coupling_edges.len(),
            rows: r.row_costs.len(),
            selected: r.selected,
            expansions: r.expansions,
            fallback_agents: r.fallback.get(r.selected).map_or(0, Vec::len),
            messages: r.messages,
            message_bytes: r.message_bytes,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct PlanLine<'a> {
    k: usize,
    agent: AgentId,
    primitives: &'a [usize],
    cost: f64,
    fallback: bool,
    x: f64,
    y: f64,
    psi: f64,
    speed: f64,
}

/// Per-step series for plotting: cost, networked time, class count.
#[derive(Debug, Clone, Serialize)]
struct SeriesRow {
    k: usize,
    time: f64,
    cost: f64,
    cumulative_cost: f64,
    networked_time: f64,
    n_classes: usize,
}

pub fn summary_csv(records: &[StepRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(SummaryRow::from(r)).map_err(csv_err)?;
    }
    into_string(w)
}

pub fn plot_series_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut total = 0.0;
    for r in &report.records {
        total += r.cost;
        w.serialize(SeriesRow {
            k: r.k,
            time: r.k as f64 * report.time_step,
            cost: r.cost,
            cumulative_cost: total,
            networked_time: r.networked_time,
            n_classes: r.n_classes,
        })
        .map_err(csv_err)?;
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e.to_string())
}

/// Writes `report.json`, `steps.jsonl`, `summary.csv` and `plans.jsonl`.
pub fn write_outputs(report: &ExperimentReport, dir: impl AsRef<FsPath>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(report)? + "\n",
    )?;

    let mut steps = BufWriter::new(File::create(dir.join("steps.jsonl"))?);
    for r in &report.records {
        serde_json::to_writer(&mut steps, r)?;
        steps.write_all(b"\n")?;
    }
    steps.flush()?;

    std::fs::write(dir.join("summary.csv"), summary_csv(&report.records)?)?;

    let mut plans = BufWriter::new(File::create(dir.join("plans.jsonl"))?);
    for r in &report.records {
        for a in &r.agents {
            let line = PlanLine {
                k: r.k,
                agent: a.agent,
                primitives: &a.primitives,
                cost: a.cost,
                fallback: a.fallback,
                x: a.pose.x,
                y: a.pose.y,
                psi: a.pose.psi,
                speed: a.speed,
            };
            serde_json::to_writer(&mut plans, &line)?;
            plans.write_all(b"\n")?;
        }
    }
    plans.flush()?;
    Ok(())
}

/// One row of a strategy comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub strategy: Strategy,
    pub total_cost: f64,
    /// Total cost divided by the total cost of `constant`.
    pub normalized_cost: f64,
    pub mean_networked_time: f64,
    pub max_networked_time: f64,
}

pub fn compare(reports: &[ExperimentReport], baseline: &ExperimentReport) -> Vec<ComparisonRow> {
    reports
        .iter()
        .map(|r| ComparisonRow {
            strategy: r.strategy,
            total_cost: r.total_cost,
            normalized_cost: if baseline.total_cost > 0.0 {
                r.total_cost / baseline.total_cost
            } else {
                f64::NAN
            },
            mean_networked_time: r.total_networked_time / r.steps.max(1) as f64,
            max_networked_time: r.max_networked_time,
        })
        .collect()
}

pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let mut out = format!(
        "{:<11} {:>12} {:>10} {:>14} {:>14}\n",
        "strategy", "total_cost", "vs_const", "mean_time_s", "max_time_s"
    );
    for r in rows {
        out += &format!(
            "{:<11} {:>12.4} {:>10.4} {:>14.6} {:>14.6}\n",
            r.strategy.name(),
            r.total_cost,
            r.normalized_cost,
            r.mean_networked_time,
            r.max_networked_time
        );
    }
    out
}
