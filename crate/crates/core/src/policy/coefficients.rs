use ndarray::Array2;

use crate::env::EnvSample;
use crate::grid::Scenario;
use crate::health::{hospitalizations_unchecked, marginal_health};
use crate::transport::{build_transport_matrix, disperse};

use super::VirtualQueues;

/// Health cost of one kg of HAP emitted in each cell: `H_i = sum_j T[i][j] * m_j`
/// where `m_j` is the marginal hospitalization rate of cell `j`.
pub fn health_coupling(transport: &Array2<f64>, marginal: &[f64]) -> Vec<f64> {
    transport
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(marginal).map(|(t, m)| t * m).sum())
        .collect()
}

/// `kappa[i][n] = V * H_i * hap_n + q_co2 * co2_n + q_hap * hap_n`.
pub fn cost_coefficients(queues: &VirtualQueues, coupling: &[f64], scenario: &Scenario, v: f64) -> Array2<f64> {
    let s = scenario.n_subregions();
    let n = scenario.n_fuels();
    Array2::from_shape_fn((s, n), |(i, k)| {
        let f = &scenario.fuels[k];
        v * coupling[i] * f.hap_factor + queues.q_co2 * f.co2_factor + queues.q_hap * f.hap_factor
    })
}

/// Marginal drift-plus-penalty cost of one MWh of each fuel in each
/// subregion under the slot's observed weather.
///
/// Exact for LINEAR health. For LOGLINEAR this is the small-exposure
/// linearization (marginals taken at zero concentration).
pub fn slot_cost_coefficients(queues: &VirtualQueues, sample: &EnvSample, scenario: &Scenario, v: f64) -> Array2<f64> {
    let transport = build_transport_matrix(&sample.weather, scenario.grid_dims, &scenario.transport_params);
    let marginal = marginal_health(&vec![0.0; scenario.n_subregions()], scenario);
    cost_coefficients(queues, &health_coupling(&transport, &marginal), scenario, v)
}

/// `sum_{i,n} kappa[i][n] * x[i][n]`.
pub fn linear_objective(costs: &Array2<f64>, energy: &Array2<f64>) -> f64 {
    costs.iter().zip(energy.iter()).map(|(k, x)| k * x).sum()
}

/// `V * sum h + q_co2 * sum e_co2 + q_hap * sum e_hap` evaluated by pushing the
/// allocation through emissions, transport and the health model.
pub fn drift_plus_penalty(
    energy: &Array2<f64>,
    transport: &Array2<f64>,
    scenario: &Scenario,
    queues: &VirtualQueues,
    v: f64,
) -> f64 {
    let co2 = scenario.co2_factors();
    let hap = scenario.hap_factors();
    let mut co2_total = 0.0;
    let mut hap_emitted = Vec::with_capacity(scenario.n_subregions());
    for row in energy.rows() {
        co2_total += row.iter().zip(&co2).map(|(x, f)| x * f).sum::<f64>();
        hap_emitted.push(row.iter().zip(&hap).map(|(x, f)| x * f).sum::<f64>());
    }
    let hap_total: f64 = hap_emitted.iter().sum();
    let concentration = disperse(&hap_emitted, transport);
    let health: f64 = hospitalizations_unchecked(&concentration, scenario).iter().sum();
    v * health + queues.q_co2 * co2_total + queues.q_hap * hap_total
}
