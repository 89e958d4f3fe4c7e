//! Concentration-response: expected HAP-related hospitalizations per cell.

use thiserror::Error;

use crate::grid::{HealthModel, Scenario};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HealthError {
    #[error("negative concentration {value} in cell {cell}")]
    NegativeConcentration { cell: usize, value: f64 },
}

/// Expected hospitalizations `h_i` for a deposited concentration field.
///
/// LINEAR: `pop_i * beta_i * c_i`. LOGLINEAR: `pop_i * r0 * (exp(beta_i * c_i) - 1)`.
pub fn hospitalizations(concentration: &[f64], scenario: &Scenario) -> Result<Vec<f64>, HealthError> {
    if let Some((cell, &value)) = concentration.iter().enumerate().find(|(_, &c)| !(c >= 0.0)) {
        return Err(HealthError::NegativeConcentration { cell, value });
    }
    Ok(hospitalizations_unchecked(concentration, scenario))
}

pub(crate) fn hospitalizations_unchecked(concentration: &[f64], scenario: &Scenario) -> Vec<f64> {
    scenario
        .subregions
        .iter()
        .zip(concentration)
        .map(|(s, &c)| match scenario.health_model {
            HealthModel::Linear => s.population * s.health_slope * c,
            HealthModel::Loglinear { r0 } => s.population * r0 * (s.health_slope * c).exp_m1(),
        })
        .collect()
}

/// `dh_i / dc_i` at the given field.
pub fn marginal_health(concentration: &[f64], scenario: &Scenario) -> Vec<f64> {
    scenario
        .subregions
        .iter()
        .zip(concentration)
        .map(|(s, &c)| match scenario.health_model {
            HealthModel::Linear => s.population * s.health_slope,
            HealthModel::Loglinear { r0 } => s.population * r0 * s.health_slope * (s.health_slope * c).exp(),
        })
        .collect()
}
