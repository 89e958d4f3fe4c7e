//! Run and sweep requests, shared by the command line and the service.

use healthgrid_core::grid::{validate_scenario, Scenario};
use healthgrid_core::policy::PolicyConfig;
use healthgrid_core::scenarios::builtin;
use healthgrid_core::sim::{run_episode, run_episode_traced, sweep, Metrics, SweepAxis, SweepPoint};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::AppError;

pub const DEFAULT_HORIZON: usize = 10_000;

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

/// A scenario given inline or by name. Names are built-ins (`figure1`) or
/// ids returned by `POST /api/scenarios`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioRef {
    Named(String),
    Inline(Box<Scenario>),
}

impl Serialize for ScenarioRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ScenarioRef::Named(name) => s.serialize_str(name),
            ScenarioRef::Inline(scenario) => scenario.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ScenarioRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(name) => Ok(ScenarioRef::Named(name)),
            v @ serde_json::Value::Object(_) => serde_json::from_value(v).map(|s| ScenarioRef::Inline(Box::new(s))).map_err(D::Error::custom),
            _ => Err(D::Error::custom("scenario must be a name or a scenario document")),
        }
    }
}

impl ScenarioRef {
    /// Look the scenario up and validate it. `stored` resolves names that are
    /// not built-ins.
    pub fn resolve(&self, stored: &dyn Fn(&str) -> Option<Scenario>) -> Result<Scenario, AppError> {
        let raw = match self {
            ScenarioRef::Inline(s) => (**s).clone(),
            ScenarioRef::Named(name) => builtin(name)
                .or_else(|| stored(name))
                .ok_or_else(|| AppError::not_found(format!("no scenario named '{name}'")))?,
        };
        Ok(validate_scenario(raw)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRequest {
    pub scenario: ScenarioRef,
    #[serde(default)]
    pub policy_config: PolicyConfig,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: usize,
    /// Defaults to the scenario's `rng_seed`.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub include_trajectory: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub scenario: ScenarioRef,
    #[serde(default)]
    pub policy_config: PolicyConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn check_horizon(horizon: usize) -> Result<(), AppError> {
    if horizon == 0 {
        return Err(AppError::invalid("invalid_request", "T must be at least 1"));
    }
    Ok(())
}

/// A run whose inputs have all been checked.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub scenario: Scenario,
    pub config: PolicyConfig,
    pub horizon: usize,
    pub seed: u64,
    pub include_trajectory: bool,
}

impl RunRequest {
    pub fn prepare(&self, stored: &dyn Fn(&str) -> Option<Scenario>) -> Result<PreparedRun, AppError> {
        let scenario = self.scenario.resolve(stored)?;
        self.policy_config.check()?;
        check_horizon(self.horizon)?;
        Ok(PreparedRun {
            seed: self.seed.unwrap_or(scenario.rng_seed),
            scenario,
            config: self.policy_config.clone(),
            horizon: self.horizon,
            include_trajectory: self.include_trajectory,
        })
    }
}

impl PreparedRun {
    pub fn run(&self) -> Result<Metrics, AppError> {
        let f = if self.include_trajectory { run_episode_traced } else { run_episode };
        Ok(f(&self.scenario, &self.config, self.horizon, self.seed)?)
    }
}

#[derive(Debug, Clone)]
pub struct PreparedSweep {
    pub scenario: Scenario,
    pub config: PolicyConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub horizon: usize,
    pub seed: u64,
}

impl SweepRequest {
    pub fn prepare(&self, stored: &dyn Fn(&str) -> Option<Scenario>) -> Result<PreparedSweep, AppError> {
        let scenario = self.scenario.resolve(stored)?;
        self.policy_config.check()?;
        check_horizon(self.horizon)?;
        // Reject bad axis values up front instead of failing inside the job.
        for &value in &self.values {
            let mut s = scenario.clone();
            let mut c = self.policy_config.clone();
            match self.axis {
                SweepAxis::CapCo2 => s.caps.co2 = value,
                SweepAxis::CapHap => s.caps.hap = value,
                SweepAxis::V => c.v = value,
            }
            validate_scenario(s)?;
            c.check()?;
        }
        Ok(PreparedSweep {
            seed: self.seed.unwrap_or(scenario.rng_seed),
            scenario,
            config: self.policy_config.clone(),
            axis: self.axis,
            values: self.values.clone(),
            horizon: self.horizon,
        })
    }
}

impl PreparedSweep {
    pub fn run(&self) -> Result<Vec<SweepPoint>, AppError> {
        Ok(sweep(&self.scenario, &self.config, self.axis, &self.values, self.horizon, self.seed)?)
    }
}
