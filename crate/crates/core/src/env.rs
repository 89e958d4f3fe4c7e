//! Stochastic environment: demand, per-fuel availability and weather, one
//! draw per slot.
//!
//! Draw order within a slot is fixed so streams are portable:
//! 1. for each subregion in row-major order, one normal for demand;
//! 2. for each subregion, for each of its plants in list order, one normal
//!    for the plant's availability;
//! 3. for each cell, one uniform for "keep direction"; when the draw is not
//!    below `transition_stickiness`, one `index(9)` picking the new
//!    direction from [`Direction::ALL`].
//!
//! Normals are drawn even when the matching noise scale is zero.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::grid::{Direction, Scenario};
use crate::rng::SimRng;

/// One slot of randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSample {
    pub t: usize,
    /// P_i(t), MWh.
    pub demand: Vec<f64>,
    /// p_i^n(t), S x N, MWh.
    pub availability: Array2<f64>,
    /// Realized availability of each plant, aligned with `Subregion::plants`.
    pub plant_availability: Vec<Vec<f64>>,
    /// W_i(t), row-major.
    pub weather: Vec<Direction>,
}

impl EnvSample {
    pub fn n_subregions(&self) -> usize {
        self.demand.len()
    }

    pub fn total_demand(&self) -> f64 {
        self.demand.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    rng: SimRng,
    t: usize,
    demand: Vec<f64>,
    weather: Vec<Direction>,
}

impl EnvState {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn weather(&self) -> &[Direction] {
        &self.weather
    }
}

pub fn env_init(scenario: &Scenario, seed: u64) -> EnvState {
    let mut rng = SimRng::new(seed);
    let weather = match &scenario.weather_params.initial_field {
        Some(field) => field.clone(),
        None => (0..scenario.n_subregions())
            .map(|_| Direction::ALL[rng.index(Direction::ALL.len())])
            .collect(),
    };
    EnvState {
        rng,
        t: 0,
        demand: scenario.subregions.iter().map(|s| s.baseline_demand).collect(),
        weather,
    }
}

/// Advance one slot and return the realized sample for it.
pub fn env_step(state: &mut EnvState, scenario: &Scenario) -> EnvSample {
    let n_fuels = scenario.n_fuels();
    let rng = &mut state.rng;

    for (p, s) in state.demand.iter_mut().zip(&scenario.subregions) {
        let xi = rng.normal();
        let vol = s.demand_volatility;
        let next = s.baseline_demand + vol.persistence * (*p - s.baseline_demand) + vol.noise * xi;
        *p = next.max(0.0);
    }

    let mut availability = Array2::zeros((scenario.n_subregions(), n_fuels));
    let mut plant_availability = Vec::with_capacity(scenario.n_subregions());
    for (i, s) in scenario.subregions.iter().enumerate() {
        let mut per_plant = Vec::with_capacity(s.plants.len());
        for plant in &s.plants {
            let xi = rng.normal();
            let fraction = (plant.availability_factor + plant.availability_noise * xi).clamp(0.0, 1.0);
            let avail = plant.capacity * fraction;
            availability[[i, plant.fuel]] += avail;
            per_plant.push(avail);
        }
        plant_availability.push(per_plant);
    }

    let stay = scenario.weather_params.transition_stickiness;
    for w in state.weather.iter_mut() {
        if rng.uniform() >= stay {
            *w = Direction::ALL[rng.index(Direction::ALL.len())];
        }
    }

    let sample = EnvSample {
        t: state.t,
        demand: state.demand.clone(),
        availability,
        plant_availability,
        weather: state.weather.clone(),
    };
    state.t += 1;
    sample
}

/// The first `horizon` samples of the stream for `(scenario, seed)`.
pub fn sample_stream(scenario: &Scenario, seed: u64, horizon: usize) -> Vec<EnvSample> {
    let mut state = env_init(scenario, seed);
    (0..horizon).map(|_| env_step(&mut state, scenario)).collect()
}
