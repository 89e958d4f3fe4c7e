//! Spatial grid-world system model: fuels, subregions, plants and scenarios.
//!
//! A [`Scenario`] tessellates a rectangular region into `rows * cols`
//! subregions. Each subregion carries a population, a health-response slope,
//! a stochastic demand process and a list of plants. Every plant burns one of
//! the `N` fuels declared in the scenario. Scenarios coming from files or
//! built programmatically go through [`validate_scenario`] before use; after
//! that they are treated as immutable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance on `sum(w) == 1` for a fuel mix.
pub const MIX_SUM_TOLERANCE: f64 = 1e-9;

/// One of the `N` ways plants can be fueled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuelType {
    pub id: usize,
    pub name: String,
    /// t CO2 per MWh.
    pub co2_factor: f64,
    /// kg HAP per MWh.
    pub hap_factor: f64,
}

impl FuelType {
    pub fn new(id: usize, name: impl Into<String>, co2_factor: f64, hap_factor: f64) -> Self {
        Self {
            id,
            name: name.into(),
            co2_factor,
            hap_factor,
        }
    }
}

/// Fraction of a subregion's energy produced by each fuel.
///
/// Construct through [`FuelMix::new`] to get the box and simplex checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FuelMix {
    weights: Vec<f64>,
}

impl FuelMix {
    pub fn new(weights: Vec<f64>) -> Result<Self, MixError> {
        if weights.is_empty() {
            return Err(MixError::Empty);
        }
        for (n, &w) in weights.iter().enumerate() {
            if !w.is_finite() || !(0.0..=1.0).contains(&w) {
                return Err(MixError::OutOfBox { index: n, value: w });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > MIX_SUM_TOLERANCE {
            return Err(MixError::NotOnSimplex { sum });
        }
        Ok(Self { weights })
    }

    /// All energy from fuel `n`.
    pub fn pure(n_fuels: usize, n: usize) -> Self {
        let mut weights = vec![0.0; n_fuels];
        weights[n] = 1.0;
        Self { weights }
    }

    /// Production shares of a per-fuel allocation. A zero allocation maps to
    /// the first fuel (the mix is payoff-irrelevant but must stay on the
    /// simplex).
    pub fn from_allocation(energy: &[f64]) -> Self {
        let total: f64 = energy.iter().sum();
        if total <= 0.0 {
            return Self::pure(energy.len(), 0);
        }
        let mut weights: Vec<f64> = energy.iter().map(|&x| (x / total).clamp(0.0, 1.0)).collect();
        // Push rounding into the largest entry so the sum lands on 1.
        let drift = 1.0 - weights.iter().sum::<f64>();
        if let Some(k) = argmax(&weights) {
            weights[k] = (weights[k] + drift).clamp(0.0, 1.0);
        }
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(k, _)| k)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixError {
    #[error("fuel mix is empty")]
    Empty,
    #[error("mix entry {index} = {value} outside [0, 1]")]
    OutOfBox { index: usize, value: f64 },
    #[error("mix entries sum to {sum}, expected 1")]
    NotOnSimplex { sum: f64 },
    #[error("mix has {got} entries, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("demand {0} must be finite and nonnegative")]
    InvalidDemand(f64),
}

/// Split `demand` across fuels according to `mix`.
///
/// The last fuel with nonzero weight absorbs rounding so the entries sum to
/// `demand` exactly.
pub fn mix_allocation(mix: &FuelMix, demand: f64) -> Result<Vec<f64>, MixError> {
    if !demand.is_finite() || demand < 0.0 {
        return Err(MixError::InvalidDemand(demand));
    }
    let w = mix.weights();
    let mut x: Vec<f64> = w.iter().map(|&wn| wn * demand).collect();
    if let Some(last) = w.iter().rposition(|&wn| wn > 0.0) {
        let others: f64 = x
            .iter()
            .enumerate()
            .filter(|&(n, _)| n != last)
            .map(|(_, v)| v)
            .sum();
        x[last] = (demand - others).max(0.0);
    }
    Ok(x)
}

/// AR(1) demand parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandVolatility {
    /// rho_d in [0, 1).
    pub persistence: f64,
    /// sigma_d >= 0, MWh.
    pub noise: f64,
}

impl DemandVolatility {
    pub const DETERMINISTIC: Self = Self {
        persistence: 0.0,
        noise: 0.0,
    };
}

fn default_availability_noise() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub plant_id: usize,
    pub fuel: usize,
    /// MWh per slot.
    pub capacity: f64,
    /// Mean fraction of capacity available, in [0, 1].
    pub availability_factor: f64,
    /// Standard deviation of the per-slot availability fraction.
    #[serde(default = "default_availability_noise")]
    pub availability_noise: f64,
}

impl PlantSpec {
    /// Plant that always delivers its full capacity.
    pub fn firm(plant_id: usize, fuel: usize, capacity: f64) -> Self {
        Self {
            plant_id,
            fuel,
            capacity,
            availability_factor: 1.0,
            availability_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subregion {
    pub id: usize,
    /// (row, col).
    pub coords: (usize, usize),
    pub population: f64,
    /// beta_i: excess hospitalizations per person per unit concentration.
    pub health_slope: f64,
    /// Mean demand, MWh per slot.
    pub baseline_demand: f64,
    pub demand_volatility: DemandVolatility,
    #[serde(default)]
    pub plants: Vec<PlantSpec>,
}

/// Time-average (or per-slot, for marginal caps) emission limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionCaps {
    /// t CO2 per slot.
    pub co2: f64,
    /// kg HAP per slot.
    pub hap: f64,
}

/// Fractions of a cell's HAP emission deposited around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportKernelParams {
    pub sigma_self: f64,
    pub sigma_down: f64,
    pub sigma_lat: f64,
}

impl TransportKernelParams {
    pub fn total(&self) -> f64 {
        self.sigma_self + self.sigma_down + 2.0 * self.sigma_lat
    }
}

/// Compass direction of the wind in a cell, or calm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
    #[serde(rename = "CALM")]
    Calm,
}

impl Direction {
    /// Draw order used by the weather process.
    pub const ALL: [Direction; 9] = [
        Direction::N,
        Direction::NE,
        Direction::E,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::W,
        Direction::NW,
        Direction::Calm,
    ];

    /// (d_row, d_col) of the downwind neighbour. Row index grows southwards.
    pub fn offset(self) -> Option<(isize, isize)> {
        match self {
            Direction::N => Some((-1, 0)),
            Direction::NE => Some((-1, 1)),
            Direction::E => Some((0, 1)),
            Direction::SE => Some((1, 1)),
            Direction::S => Some((1, 0)),
            Direction::SW => Some((1, -1)),
            Direction::W => Some((0, -1)),
            Direction::NW => Some((-1, -1)),
            Direction::Calm => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Direction::N => "N",
            Direction::NE => "NE",
            Direction::E => "E",
            Direction::SE => "SE",
            Direction::S => "S",
            Direction::SW => "SW",
            Direction::W => "W",
            Direction::NW => "NW",
            Direction::Calm => "CALM",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherParams {
    /// pi_stay: probability a cell keeps its direction between slots.
    pub transition_stickiness: f64,
    /// Row-major initial direction per cell; drawn uniformly when absent.
    #[serde(default)]
    pub initial_field: Option<Vec<Direction>>,
}

/// Concentration-response form. Slopes come from each subregion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase", deny_unknown_fields)]
pub enum HealthModel {
    Linear,
    Loglinear { r0: f64 },
}

/// Where a subregion's demand may be served from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Balancing {
    /// Each subregion serves its own demand from its own plants.
    #[default]
    Local,
    /// One interconnected pool: total demand is served by any plant.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// (rows, cols).
    pub grid_dims: (usize, usize),
    pub subregions: Vec<Subregion>,
    pub fuels: Vec<FuelType>,
    pub caps: EmissionCaps,
    #[serde(default)]
    pub marginal_caps: Option<EmissionCaps>,
    pub transport_params: TransportKernelParams,
    pub weather_params: WeatherParams,
    pub health_model: HealthModel,
    pub rng_seed: u64,
    #[serde(default)]
    pub balancing: Balancing,
}

impl Scenario {
    pub fn n_subregions(&self) -> usize {
        self.subregions.len()
    }

    pub fn n_fuels(&self) -> usize {
        self.fuels.len()
    }

    /// Row-major cell index of `(row, col)`.
    pub fn cell_index(&self, row: usize, col: usize) -> usize {
        row * self.grid_dims.1 + col
    }

    pub fn total_baseline_demand(&self) -> f64 {
        self.subregions.iter().map(|s| s.baseline_demand).sum()
    }

    /// Installed capacity per (subregion, fuel).
    pub fn installed_capacity(&self) -> Vec<Vec<f64>> {
        self.subregions
            .iter()
            .map(|s| {
                let mut cap = vec![0.0; self.n_fuels()];
                for p in &s.plants {
                    cap[p.fuel] += p.capacity;
                }
                cap
            })
            .collect()
    }

    pub fn co2_factors(&self) -> Vec<f64> {
        self.fuels.iter().map(|f| f.co2_factor).collect()
    }

    pub fn hap_factors(&self) -> Vec<f64> {
        self.fuels.iter().map(|f| f.hap_factor).collect()
    }

    /// True when demand, availability and weather are all non-random.
    pub fn is_deterministic(&self) -> bool {
        let demand_fixed = self.subregions.iter().all(|s| {
            s.demand_volatility.noise == 0.0
        });
        let supply_fixed = self
            .subregions
            .iter()
            .flat_map(|s| &s.plants)
            .all(|p| p.availability_noise == 0.0);
        let weather_fixed = self.weather_params.transition_stickiness == 1.0
            && self.weather_params.initial_field.is_some();
        demand_fixed && supply_fixed && weather_fixed
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Parse and validate a scenario document.
    pub fn from_json(text: &str) -> Result<Self, ScenarioParseError> {
        let raw: Scenario = serde_json::from_str(text)?;
        Ok(validate_scenario(raw)?)
    }
}

/// One violated scenario invariant.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "code")]
pub enum Violation {
    #[error("DuplicateCoords: subregions {first} and {second} both sit at {coords:?}")]
    DuplicateCoords {
        coords: (usize, usize),
        first: usize,
        second: usize,
    },
    #[error("UnknownFuelId: plant {plant_id} in subregion {subregion} references fuel {fuel}")]
    UnknownFuelId {
        subregion: usize,
        plant_id: usize,
        fuel: usize,
    },
    #[error("NegativeFactor: fuel {fuel} has {factor} = {value}")]
    NegativeFactor {
        fuel: usize,
        factor: String,
        value: f64,
    },
    #[error("InconsistentCaps: {reason}")]
    InconsistentCaps { reason: String },
    #[error("GridMismatch: {reason}")]
    GridMismatch { reason: String },
    #[error("DuplicateId: {kind} id {id} appears more than once")]
    DuplicateId { kind: String, id: usize },
    #[error("FuelIdGap: fuel ids must be 0..{n}, found {found:?}")]
    FuelIdGap { n: usize, found: Vec<usize> },
    #[error("InvalidParameter: {field} = {value} ({reason})")]
    InvalidParameter {
        field: String,
        value: f64,
        reason: String,
    },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::DuplicateCoords { .. } => "DuplicateCoords",
            Violation::UnknownFuelId { .. } => "UnknownFuelId",
            Violation::NegativeFactor { .. } => "NegativeFactor",
            Violation::InconsistentCaps { .. } => "InconsistentCaps",
            Violation::GridMismatch { .. } => "GridMismatch",
            Violation::DuplicateId { .. } => "DuplicateId",
            Violation::FuelIdGap { .. } => "FuelIdGap",
            Violation::InvalidParameter { .. } => "InvalidParameter",
        }
    }
}

/// Every invariant a raw scenario violated.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl ValidationError {
    pub fn has(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code() == code)
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "scenario has {} violation(s)", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ScenarioParseError {
    #[error("malformed scenario document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn param(&mut self, field: impl Into<String>, value: f64, ok: bool, reason: &str) {
        if !ok {
            self.violations.push(Violation::InvalidParameter {
                field: field.into(),
                value,
                reason: reason.to_string(),
            });
        }
    }

    fn nonneg(&mut self, field: impl Into<String>, value: f64) {
        self.param(field, value, value.is_finite() && value >= 0.0, "must be finite and >= 0");
    }

    fn fraction(&mut self, field: impl Into<String>, value: f64) {
        self.param(field, value, (0.0..=1.0).contains(&value), "must lie in [0, 1]");
    }
}

/// Check every scenario invariant and return the normalized scenario
/// (fuels sorted by id, subregions sorted row-major).
pub fn validate_scenario(mut raw: Scenario) -> Result<Scenario, ValidationError> {
    let mut ck = Checker {
        violations: Vec::new(),
    };

    raw.fuels.sort_by_key(|f| f.id);
    raw.subregions.sort_by_key(|s| s.coords);

    let (rows, cols) = raw.grid_dims;
    if rows * cols != raw.subregions.len() {
        ck.violations.push(Violation::GridMismatch {
            reason: format!(
                "grid {rows}x{cols} needs {} subregions, found {}",
                rows * cols,
                raw.subregions.len()
            ),
        });
    }

    // Fuels.
    let n_fuels = raw.fuels.len();
    if n_fuels == 0 {
        ck.violations.push(Violation::FuelIdGap {
            n: 0,
            found: Vec::new(),
        });
    }
    let ids: Vec<usize> = raw.fuels.iter().map(|f| f.id).collect();
    let mut seen = BTreeSet::new();
    for &id in &ids {
        if !seen.insert(id) {
            ck.violations.push(Violation::DuplicateId {
                kind: "fuel".into(),
                id,
            });
        }
    }
    if n_fuels > 0 && ids.iter().enumerate().any(|(k, &id)| k != id) && seen.len() == n_fuels {
        ck.violations.push(Violation::FuelIdGap {
            n: n_fuels,
            found: ids.clone(),
        });
    }
    for f in &raw.fuels {
        for (name, value) in [("co2_factor", f.co2_factor), ("hap_factor", f.hap_factor)] {
            if !value.is_finite() || value < 0.0 {
                ck.violations.push(Violation::NegativeFactor {
                    fuel: f.id,
                    factor: name.into(),
                    value,
                });
            }
        }
    }
    if n_fuels > 1 {
        let min_hap = raw.fuels.iter().map(|f| f.hap_factor).fold(f64::INFINITY, f64::min);
        let max_hap = raw.fuels.iter().map(|f| f.hap_factor).fold(0.0, f64::max);
        if min_hap > 0.0 && min_hap >= max_hap {
            log::warn!("all fuels share hap_factor {min_hap}; the health objective cannot discriminate");
        }
    }

    // Subregions and plants.
    let mut by_coords: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut subregion_ids = BTreeSet::new();
    let mut plant_ids = BTreeSet::new();
    for s in &raw.subregions {
        if let Some(&first) = by_coords.get(&s.coords) {
            ck.violations.push(Violation::DuplicateCoords {
                coords: s.coords,
                first,
                second: s.id,
            });
        } else {
            by_coords.insert(s.coords, s.id);
        }
        if !subregion_ids.insert(s.id) {
            ck.violations.push(Violation::DuplicateId {
                kind: "subregion".into(),
                id: s.id,
            });
        }
        if s.coords.0 >= rows || s.coords.1 >= cols {
            ck.violations.push(Violation::GridMismatch {
                reason: format!("subregion {} at {:?} lies outside the {rows}x{cols} grid", s.id, s.coords),
            });
        }
        let tag = |field: &str| format!("subregions[{}].{field}", s.id);
        ck.nonneg(tag("population"), s.population);
        ck.nonneg(tag("health_slope"), s.health_slope);
        ck.nonneg(tag("baseline_demand"), s.baseline_demand);
        let rho = s.demand_volatility.persistence;
        ck.param(
            tag("demand_volatility.persistence"),
            rho,
            (0.0..1.0).contains(&rho),
            "must lie in [0, 1)",
        );
        ck.nonneg(tag("demand_volatility.noise"), s.demand_volatility.noise);
        for p in &s.plants {
            if !plant_ids.insert(p.plant_id) {
                ck.violations.push(Violation::DuplicateId {
                    kind: "plant".into(),
                    id: p.plant_id,
                });
            }
            if !seen.contains(&p.fuel) {
                ck.violations.push(Violation::UnknownFuelId {
                    subregion: s.id,
                    plant_id: p.plant_id,
                    fuel: p.fuel,
                });
            }
            let ptag = |field: &str| format!("plants[{}].{field}", p.plant_id);
            ck.nonneg(ptag("capacity"), p.capacity);
            ck.fraction(ptag("availability_factor"), p.availability_factor);
            ck.nonneg(ptag("availability_noise"), p.availability_noise);
        }
    }

    // Caps.
    for (name, value) in [("co2", raw.caps.co2), ("hap", raw.caps.hap)] {
        if value.is_nan() || value <= 0.0 {
            ck.violations.push(Violation::InconsistentCaps {
                reason: format!("average cap {name} = {value} must be > 0"),
            });
        }
    }
    if let Some(m) = raw.marginal_caps {
        for (name, avg, marginal) in [("co2", raw.caps.co2, m.co2), ("hap", raw.caps.hap, m.hap)] {
            if marginal.is_nan() || marginal < avg {
                ck.violations.push(Violation::InconsistentCaps {
                    reason: format!("marginal cap {name} = {marginal} is tighter than average cap {avg}"),
                });
            }
        }
    }

    // Transport kernel.
    let k = raw.transport_params;
    ck.fraction("transport_params.sigma_self", k.sigma_self);
    ck.fraction("transport_params.sigma_down", k.sigma_down);
    ck.fraction("transport_params.sigma_lat", k.sigma_lat);
    ck.param(
        "transport_params (sigma_self + sigma_down + 2 sigma_lat)",
        k.total(),
        k.total() <= 1.0 + 1e-12,
        "kernel fractions must sum to at most 1",
    );

    // Weather.
    ck.fraction(
        "weather_params.transition_stickiness",
        raw.weather_params.transition_stickiness,
    );
    if let Some(field) = &raw.weather_params.initial_field {
        if field.len() != rows * cols {
            ck.violations.push(Violation::GridMismatch {
                reason: format!(
                    "initial_field has {} cells, grid has {}",
                    field.len(),
                    rows * cols
                ),
            });
        }
    }

    if let HealthModel::Loglinear { r0 } = raw.health_model {
        ck.nonneg("health_model.r0", r0);
    }

    if ck.violations.is_empty() {
        Ok(raw)
    } else {
        Err(ValidationError {
            violations: ck.violations,
        })
    }
}
