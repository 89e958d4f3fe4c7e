use ndarray::Array2;

use crate::env::EnvSample;
use crate::grid::Scenario;
use crate::health::marginal_health;
use crate::transport::build_transport_matrix;

use super::coefficients::health_coupling;
use super::knapsack::{solve_slot_linear, Pool};
use super::SlotDecision;

/// Emission-based allocation: cost `co2_n + hap_n` per MWh, no health term
/// and no queues.
pub fn min_emission_policy(sample: &EnvSample, scenario: &Scenario) -> SlotDecision {
    let per_fuel: Vec<f64> = scenario.fuels.iter().map(|f| f.co2_factor + f.hap_factor).collect();
    let costs = Array2::from_shape_fn(sample.availability.dim(), |(_, n)| per_fuel[n]);
    solve_slot_linear(&costs, sample, scenario.balancing)
}

/// Health-only allocation: cost `H_i * hap_n` per MWh with the slot's
/// transport, emission caps ignored. Nonlinear health models use the
/// zero-exposure marginal rate.
pub fn min_health_policy(sample: &EnvSample, scenario: &Scenario) -> SlotDecision {
    let transport = build_transport_matrix(&sample.weather, scenario.grid_dims, &scenario.transport_params);
    let marginal = marginal_health(&vec![0.0; scenario.n_subregions()], scenario);
    let coupling = health_coupling(&transport, &marginal);
    let hap = scenario.hap_factors();
    let costs = Array2::from_shape_fn(sample.availability.dim(), |(i, n)| coupling[i] * hap[n]);
    solve_slot_linear(&costs, sample, scenario.balancing)
}

/// Each pool's demand split in proportion to the available energy of its
/// sources.
pub fn proportional_policy(sample: &EnvSample, scenario: &Scenario) -> SlotDecision {
    let availability = &sample.availability;
    let mut energy = Array2::zeros(availability.dim());
    let mut shortfall = vec![0.0; sample.n_subregions()];
    for pool in Pool::for_sample(sample, scenario.balancing) {
        let supply = pool.available(availability);
        let share = if supply > 0.0 { (pool.demand / supply).min(1.0) } else { 0.0 };
        for &idx in &pool.members {
            energy[idx] = availability[idx] * share;
        }
        pool.attribute_shortfall((pool.demand - supply).max(0.0), &sample.demand, &mut shortfall);
    }
    SlotDecision::from_allocation(energy, shortfall)
}
