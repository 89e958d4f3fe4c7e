//! Inner loop: per-fuel subregion energy to per-plant setpoints.
//!
//! Plants of each fuel are filled in ascending `plant_id` order. No per-plant
//! cost data exists, so merit order is id order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::PlantSpec;
use crate::policy::AVAILABILITY_TOLERANCE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantSetpoint {
    pub plant_id: usize,
    /// MWh this slot.
    pub output: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DispatchError {
    #[error("fuel {fuel}: allocation {requested} exceeds plant availability {available}")]
    InsufficientAvailability { fuel: usize, requested: f64, available: f64 },
}

/// Setpoints for one subregion, in the order of `plants`.
///
/// `per_fuel_energy[n]` is the subregion's allocation to fuel `n`;
/// `availability[k]` is plant `k`'s realized availability this slot.
pub fn dispatch_plants(
    per_fuel_energy: &[f64],
    plants: &[PlantSpec],
    availability: &[f64],
) -> Result<Vec<PlantSetpoint>, DispatchError> {
    debug_assert_eq!(plants.len(), availability.len());
    let mut setpoints: Vec<PlantSetpoint> = plants
        .iter()
        .map(|p| PlantSetpoint {
            plant_id: p.plant_id,
            output: 0.0,
        })
        .collect();
    for (fuel, &requested) in per_fuel_energy.iter().enumerate() {
        let mut order: Vec<usize> = (0..plants.len()).filter(|&k| plants[k].fuel == fuel).collect();
        order.sort_by_key(|&k| plants[k].plant_id);
        let available: f64 = order.iter().map(|&k| availability[k]).sum();
        if requested > available + AVAILABILITY_TOLERANCE {
            return Err(DispatchError::InsufficientAvailability {
                fuel,
                requested,
                available,
            });
        }
        let mut remaining = requested;
        let mut last = None;
        for &k in &order {
            if remaining <= 0.0 {
                break;
            }
            let out = remaining.min(availability[k]);
            setpoints[k].output = out;
            remaining -= out;
            last = Some(k);
        }
        // Residual within tolerance goes to the last plant used.
        if remaining > 0.0 {
            if let Some(k) = last.or(order.last().copied()) {
                setpoints[k].output += remaining;
            }
        }
    }
    Ok(setpoints)
}
