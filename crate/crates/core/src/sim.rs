//! Episode harness.
//!
//! Every slot runs observe -> decide -> dispatch -> emit -> disperse ->
//! health -> queues, in that order. Finite-horizon averages stand in for
//! the long-run averages of the allocation problem.
//!
//! Environment draws do not depend on decisions, so policies compared on the
//! same seed see byte-identical sample streams. [`compare_policies`],
//! [`sweep`] and [`replicate`] generate the stream once and run their jobs
//! through an [`Execution`].

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{dispatch_plants, DispatchError, PlantSetpoint};
use crate::env::{sample_stream, EnvSample};
use crate::exec::Execution;
use crate::grid::{validate_scenario, Direction, EmissionCaps, Scenario, ValidationError};
use crate::health::hospitalizations_unchecked;
use crate::policy::{Controller, PolicyConfig, PolicyError, PolicyKind};
use crate::transport::{build_transport_matrix, disperse};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("dispatch failed in subregion {subregion} at slot {t}: {source}")]
    Dispatch {
        t: usize,
        subregion: usize,
        source: DispatchError,
    },
    #[error("horizon must be at least 1")]
    EmptyHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueSnapshot {
    pub q_co2: f64,
    pub q_hap: f64,
}

/// Everything observed and decided in one slot; one line of the trajectory
/// export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub t: usize,
    pub demand: Vec<f64>,
    pub weather: Vec<Direction>,
    pub mix: Vec<Vec<f64>>,
    pub energy: Vec<Vec<f64>>,
    pub shortfall: Vec<f64>,
    pub co2: Vec<f64>,
    pub hap_emitted: Vec<f64>,
    pub concentration: Vec<f64>,
    pub hospitalizations: Vec<f64>,
    pub setpoints: Vec<PlantSetpoint>,
    /// Queue backlogs after this slot's update.
    pub q_co2: f64,
    pub q_hap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub policy: PolicyConfig,
    pub horizon: usize,
    pub seed: u64,
    pub avg_hospitalizations: f64,
    pub avg_co2: f64,
    pub avg_hap: f64,
    /// `max(avg - cap, 0)` per pollutant.
    pub cap_violation: EmissionCaps,
    pub total_shortfall: f64,
    pub terminal_queues: QueueSnapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<SlotRecord>>,
}

impl Metrics {
    pub fn avg_emissions(&self) -> f64 {
        self.avg_co2 + self.avg_hap
    }
}

/// Run one policy over a pre-generated stream.
pub fn run_on_stream(
    scenario: &Scenario,
    config: &PolicyConfig,
    stream: &[EnvSample],
    seed: u64,
    record: bool,
) -> Result<Metrics, SimError> {
    if stream.is_empty() {
        return Err(SimError::EmptyHorizon);
    }
    let mut controller = Controller::new(config.clone(), scenario, stream.len())?;
    let co2_f = scenario.co2_factors();
    let hap_f = scenario.hap_factors();
    let mut sum_h = 0.0;
    let mut sum_co2 = 0.0;
    let mut sum_hap = 0.0;
    let mut shortfall = 0.0;
    let mut trajectory = record.then(|| Vec::with_capacity(stream.len()));

    for sample in stream {
        let transport = build_transport_matrix(&sample.weather, scenario.grid_dims, &scenario.transport_params);
        let decision = controller.decide(sample, &transport, scenario)?;

        let mut setpoints = Vec::new();
        for (i, region) in scenario.subregions.iter().enumerate() {
            let row = decision.per_fuel_energy.row(i).to_vec();
            let sp = dispatch_plants(&row, &region.plants, &sample.plant_availability[i]).map_err(|source| SimError::Dispatch {
                t: sample.t,
                subregion: i,
                source,
            })?;
            setpoints.extend(sp);
        }

        let co2 = decision.emissions(&co2_f);
        let hap = decision.emissions(&hap_f);
        let concentration = disperse(&hap, &transport);
        let health = hospitalizations_unchecked(&concentration, scenario);
        let co2_total: f64 = co2.iter().sum();
        let hap_total: f64 = hap.iter().sum();
        controller.observe(co2_total, hap_total);

        sum_h += health.iter().sum::<f64>();
        sum_co2 += co2_total;
        sum_hap += hap_total;
        shortfall += decision.total_shortfall();

        if let Some(traj) = trajectory.as_mut() {
            let q = controller.queues();
            traj.push(SlotRecord {
                t: sample.t,
                demand: sample.demand.clone(),
                weather: sample.weather.clone(),
                mix: decision.mixes.iter().map(|m| m.weights().to_vec()).collect(),
                energy: decision.per_fuel_energy.rows().into_iter().map(|r| r.to_vec()).collect(),
                shortfall: decision.shortfall.clone(),
                co2,
                hap_emitted: hap,
                concentration,
                hospitalizations: health,
                setpoints,
                q_co2: q.q_co2,
                q_hap: q.q_hap,
            });
        }
    }

    let t = stream.len() as f64;
    let avg_co2 = sum_co2 / t;
    let avg_hap = sum_hap / t;
    let q = controller.queues();
    Ok(Metrics {
        policy: config.clone(),
        horizon: stream.len(),
        seed,
        avg_hospitalizations: sum_h / t,
        avg_co2,
        avg_hap,
        cap_violation: EmissionCaps {
            co2: (avg_co2 - scenario.caps.co2).max(0.0),
            hap: (avg_hap - scenario.caps.hap).max(0.0),
        },
        total_shortfall: shortfall,
        terminal_queues: QueueSnapshot {
            q_co2: q.q_co2,
            q_hap: q.q_hap,
        },
        trajectory,
    })
}

fn prepare(scenario: &Scenario, horizon: usize, seed: u64) -> Result<(Scenario, Vec<EnvSample>), SimError> {
    if horizon == 0 {
        return Err(SimError::EmptyHorizon);
    }
    let scenario = validate_scenario(scenario.clone())?;
    let stream = sample_stream(&scenario, seed, horizon);
    Ok((scenario, stream))
}

pub fn run_episode(scenario: &Scenario, config: &PolicyConfig, horizon: usize, seed: u64) -> Result<Metrics, SimError> {
    let (scenario, stream) = prepare(scenario, horizon, seed)?;
    run_on_stream(&scenario, config, &stream, seed, false)
}

/// [`run_episode`] keeping the per-slot trajectory.
pub fn run_episode_traced(scenario: &Scenario, config: &PolicyConfig, horizon: usize, seed: u64) -> Result<Metrics, SimError> {
    let (scenario, stream) = prepare(scenario, horizon, seed)?;
    run_on_stream(&scenario, config, &stream, seed, true)
}

pub fn compare_policies(scenario: &Scenario, configs: &[PolicyConfig], horizon: usize, seed: u64) -> Result<Vec<Metrics>, SimError> {
    compare_policies_with(Execution::default(), scenario, configs, horizon, seed)
}

/// Run every policy on the same stream, one job per policy.
pub fn compare_policies_with(
    exec: Execution,
    scenario: &Scenario,
    configs: &[PolicyConfig],
    horizon: usize,
    seed: u64,
) -> Result<Vec<Metrics>, SimError> {
    let (scenario, stream) = prepare(scenario, horizon, seed)?;
    exec.map(configs, |c| run_on_stream(&scenario, c, &stream, seed, false))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    CapCo2,
    CapHap,
    V,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "cap_co2" | "co2" => Ok(SweepAxis::CapCo2),
            "cap_hap" | "hap" => Ok(SweepAxis::CapHap),
            "v" => Ok(SweepAxis::V),
            other => Err(format!("unknown sweep axis '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: f64,
    pub metrics: Metrics,
}

pub fn sweep(
    scenario: &Scenario,
    base: &PolicyConfig,
    axis: SweepAxis,
    values: &[f64],
    horizon: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>, SimError> {
    sweep_with(Execution::default(), scenario, base, axis, values, horizon, seed)
}

/// One episode per axis value, all on the same stream.
pub fn sweep_with(
    exec: Execution,
    scenario: &Scenario,
    base: &PolicyConfig,
    axis: SweepAxis,
    values: &[f64],
    horizon: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>, SimError> {
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let (scenario, stream) = prepare(scenario, horizon, seed)?;
    exec.map(values, |&value| {
        let mut s = scenario.clone();
        let mut config = base.clone();
        match axis {
            SweepAxis::CapCo2 => s.caps.co2 = value,
            SweepAxis::CapHap => s.caps.hap = value,
            SweepAxis::V => config.v = value,
        }
        let s = validate_scenario(s)?;
        let metrics = run_on_stream(&s, &config, &stream, seed, false)?;
        Ok(SweepPoint { axis, value, metrics })
    })
    .into_iter()
    .collect()
}

pub fn replicate(scenario: &Scenario, config: &PolicyConfig, horizon: usize, seeds: &[u64]) -> Result<Vec<Metrics>, SimError> {
    replicate_with(Execution::default(), scenario, config, horizon, seeds)
}

/// Independent replicas of one policy, one job per seed.
pub fn replicate_with(
    exec: Execution,
    scenario: &Scenario,
    config: &PolicyConfig,
    horizon: usize,
    seeds: &[u64],
) -> Result<Vec<Metrics>, SimError> {
    let scenario = validate_scenario(scenario.clone())?;
    exec.map(seeds, |&seed| run_episode(&scenario, config, horizon, seed))
        .into_iter()
        .collect()
}

/// Caps a fraction of the way from the emission-minimizing policy's
/// averages towards the health-only policy's averages, on the stream for
/// `(horizon, seed)`.
///
/// The gap is widened to at least `MIN_CAP_MARGIN` of the minimum so the caps
/// stay strictly feasible when both baselines emit about the same.
pub fn calibrated_caps(scenario: &Scenario, horizon: usize, seed: u64, fraction: f64) -> Result<EmissionCaps, SimError> {
    let rows = compare_policies(
        scenario,
        &[PolicyConfig::of(PolicyKind::MinEmission), PolicyConfig::of(PolicyKind::MinHealth)],
        horizon,
        seed,
    )?;
    let (a, b) = (&rows[0], &rows[1]);
    let between = |lo: f64, hi: f64| lo + fraction * (hi - lo).max(MIN_CAP_MARGIN * lo).max(1e-6);
    Ok(EmissionCaps {
        co2: between(a.avg_co2, b.avg_co2),
        hap: between(a.avg_hap, b.avg_hap),
    })
}

pub const MIN_CAP_MARGIN: f64 = 0.1;

/// JSON Lines: one [`SlotRecord`] per line.
pub fn write_trajectory<W: Write>(records: &[SlotRecord], mut out: W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn trajectory_jsonl(records: &[SlotRecord]) -> String {
    let mut buf = Vec::new();
    write_trajectory(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
