//! Scenario configuration files (JSON, `"schema": 1`).

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{Path, PathSpec};
use crate::mpa::MpaConfig;
use crate::planner::DEFAULT_BUDGET;
use crate::prioritization::Strategy;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingMode {
    /// Solve time = expansions × `seconds_per_expansion`; reproducible.
    Synthetic,
    /// Measured solve durations.
    WallClock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    #[serde(default = "default_lane_width")]
    pub lane_width: f64,
    pub paths: BTreeMap<String, PathSpec>,
}

fn default_lane_width() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub path: String,
    /// Arc length of the start position along the path [m].
    #[serde(default)]
    pub start_s: f64,
    /// Reference speed [m/s]; must be one of the speed levels.
    pub ref_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub schema: u32,
    pub map: MapSpec,
    pub vehicles: Vec<VehicleSpec>,
    pub time_step: f64,
    pub horizon: usize,
    pub duration: f64,
    pub strategy: Strategy,
    pub seed: u64,
    pub mcts_budget: usize,
    pub max_classes: Option<usize>,
    pub timing: TimingMode,
    pub seconds_per_expansion: f64,
    /// Upper bound on orientations solved by the `optimal` strategy.
    pub optimal_cap: usize,
    pub speed_levels: Vec<f64>,
    pub steering_levels: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: Option<u32>,
    map: MapSpec,
    vehicles: Vec<VehicleSpec>,
    time_step: Option<f64>,
    horizon: Option<usize>,
    duration: Option<f64>,
    strategy: Option<String>,
    seed: Option<u64>,
    mcts_budget: Option<usize>,
    max_classes: Option<usize>,
    timing: Option<TimingMode>,
    seconds_per_expansion: Option<f64>,
    optimal_cap: Option<usize>,
    speed_levels: Option<Vec<f64>>,
    steering_levels: Option<Vec<f64>>,
}

impl ScenarioConfig {
    pub fn n_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    /// Number of simulated time steps, `duration / time_step`.
    pub fn steps(&self) -> usize {
        (self.duration / self.time_step).round() as usize
    }

    pub fn mpa_config(&self) -> MpaConfig {
        MpaConfig {
            speed_levels: self.speed_levels.clone(),
            steering_levels: self.steering_levels.clone(),
            time_step: self.time_step,
            horizon: self.horizon,
            ..MpaConfig::default()
        }
    }

    pub fn build_paths(&self) -> Result<BTreeMap<String, Path>> {
        let mut out = BTreeMap::new();
        let mut problems = Vec::new();
        for (name, spec) in &self.map.paths {
            match Path::new(name.clone(), spec.clone()) {
                Ok(p) => {
                    out.insert(name.clone(), p);
                }
                Err(Error::Config(v)) => problems.extend(v),
                Err(e) => problems.push(e.to_string()),
            }
        }
        if problems.is_empty() {
            Ok(out)
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn parse_config(path: impl AsRef<FsPath>) -> Result<ScenarioConfig> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

/// Parses and validates; every violation found is reported at once.
// negated comparisons so that NaN values are rejected as well
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig = serde_json::from_str(text)?;
    let defaults = MpaConfig::default();
    let mut problems = Vec::new();

    let schema = raw.schema.unwrap_or(SCHEMA_VERSION);
    if schema != SCHEMA_VERSION {
        problems.push(format!(
            "schema: unsupported version {schema}, expected {SCHEMA_VERSION}"
        ));
    }
    let strategy = match raw
        .strategy
        .as_deref()
        .unwrap_or("explore")
        .parse::<Strategy>()
    {
        Ok(s) => s,
        Err(msg) => {
            problems.push(format!("strategy: {msg}"));
            Strategy::Explore
        }
    };

    let time_step = raw.time_step.unwrap_or(defaults.time_step);
    let horizon = raw.horizon.unwrap_or(defaults.horizon);
    let duration = raw.duration.unwrap_or(7.0);
    if !(time_step > 0.0) {
        problems.push("time_step: must be positive".into());
    }
    if horizon == 0 {
        problems.push("horizon: must be positive".into());
    }
    if !(duration > 0.0) {
        problems.push("duration: must be positive".into());
    } else if time_step > 0.0 {
        let ratio = duration / time_step;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            problems.push(format!(
                "duration: {duration} s is not an integral number of {time_step} s time steps"
            ));
        }
    }

    let speed_levels = raw.speed_levels.unwrap_or(defaults.speed_levels);
    let steering_levels = raw.steering_levels.unwrap_or(defaults.steering_levels);
    if raw.vehicles.is_empty() {
        problems.push("vehicles: at least one vehicle is required".into());
    }
    for (k, v) in raw.vehicles.iter().enumerate() {
        if !raw.map.paths.contains_key(&v.path) {
            problems.push(format!("vehicles[{k}].path: unknown path {:?}", v.path));
        }
        if !speed_levels.iter().any(|&s| (s - v.ref_speed).abs() < 1e-9) {
            problems.push(format!(
                "vehicles[{k}].ref_speed: {} is not a speed level (levels: {:?})",
                v.ref_speed, speed_levels
            ));
        }
    }
    if !(raw.map.lane_width > 0.0) {
        problems.push("map.lane_width: must be positive".into());
    }
    let mcts_budget = raw.mcts_budget.unwrap_or(DEFAULT_BUDGET);
    if mcts_budget == 0 {
        problems.push("mcts_budget: must be at least 1".into());
    }
    if raw.max_classes == Some(0) {
        problems.push("max_classes: must be at least 1".into());
    }
    let seconds_per_expansion = raw.seconds_per_expansion.unwrap_or(1e-4);
    if !(seconds_per_expansion >= 0.0) {
        problems.push("seconds_per_expansion: must be nonnegative".into());
    }

    let config = ScenarioConfig {
        schema,
        map: raw.map,
        vehicles: raw.vehicles,
        time_step,
        horizon,
        duration,
        strategy,
        seed: raw.seed.unwrap_or(0),
        mcts_budget,
        max_classes: raw.max_classes,
        timing: raw.timing.unwrap_or(TimingMode::Synthetic),
        seconds_per_expansion,
        optimal_cap: raw.optimal_cap.unwrap_or(5040),
        speed_levels,
        steering_levels,
    };
    if let Err(Error::Config(v)) = config.build_paths() {
        problems.extend(v);
    }
    if problems.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config(problems))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "map": {"paths": {"loop": {"start": {"x": -2.0, "y": 0.0, "psi": 0.0},
            "segments": [{"line": 4.0}, {"arc": {"radius": 1.0, "degrees": 180.0}},
                         {"line": 4.0}, {"arc": {"radius": 1.0, "degrees": 180.0}}]}}},
        "vehicles": [{"path": "loop", "ref_speed": 0.8}]
    }"#;

    #[test]
    fn minimal_gets_defaults() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.schema, 1);
        assert_eq!(c.time_step, 0.2);
        assert_eq!(c.horizon, 6);
        assert_eq!(c.steps(), 35);
        assert_eq!(c.strategy, Strategy::Explore);
        assert_eq!(c.mcts_budget, DEFAULT_BUDGET);
        assert_eq!(c.map.lane_width, 0.5);
        assert_eq!(c.timing, TimingMode::Synthetic);
    }

    #[test]
    fn all_violations_reported() {
        let text = MINIMAL
            .replace(r#""ref_speed": 0.8"#, r#""ref_speed": 0.7"#)
            .replace(
                r#""vehicles""#,
                r#""strategy": "optimaal", "duration": 7.1, "vehicles""#,
            );
        let Err(Error::Config(problems)) = parse_config_str(&text) else {
            panic!("expected config error");
        };
        assert_eq!(problems.len(), 3, "{problems:?}");
        let strategy = problems.iter().find(|p| p.starts_with("strategy")).unwrap();
        assert!(strategy.contains("optimaal") && strategy.contains("constant|random"));
    }

    #[test]
    fn open_path_is_a_violation() {
        let text = MINIMAL.replacen(r#"{"line": 4.0}"#, r#"{"line": 3.0}"#, 1);
        assert!(matches!(parse_config_str(&text), Err(Error::Config(_))));
    }
}
