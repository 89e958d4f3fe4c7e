//! CO2 and HAP emissions per subregion, and HAP transport to a deposited
//! concentration field.
//!
//! Transport is a one-step kernel driven by each source cell's wind
//! direction: `sigma_self` stays in the source cell, `sigma_down` lands on the
//! downwind neighbour and `sigma_lat` on each of the two neighbours
//! perpendicular to the wind. Whatever points off the grid is lost. Under
//! CALM the whole kernel mass stays in the source cell. Concentration is
//! memoryless: each slot's field depends only on that slot's emissions.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::grid::{Direction, FuelMix, FuelType, MixError, TransportKernelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionRecord {
    pub t: usize,
    /// t CO2 per subregion.
    pub co2: Vec<f64>,
    /// kg HAP emitted at each source.
    pub hap_emitted: Vec<f64>,
    /// kg HAP deposited per cell.
    pub concentration: Vec<f64>,
}

fn emission(mix: &FuelMix, demand: f64, fuels: &[FuelType], factor: impl Fn(&FuelType) -> f64) -> Result<f64, MixError> {
    if mix.len() != fuels.len() {
        return Err(MixError::WrongLength {
            expected: fuels.len(),
            got: mix.len(),
        });
    }
    if !demand.is_finite() || demand < 0.0 {
        return Err(MixError::InvalidDemand(demand));
    }
    let per_unit: f64 = mix.weights().iter().zip(fuels).map(|(w, f)| w * factor(f)).sum();
    Ok(demand * per_unit)
}

/// e^CO2_i = demand * sum_n w_n * co2_factor_n.
pub fn co2_emissions(mix: &FuelMix, demand: f64, fuels: &[FuelType]) -> Result<f64, MixError> {
    emission(mix, demand, fuels, |f| f.co2_factor)
}

/// HAP emitted at the source, before transport.
pub fn hap_emissions_at_source(mix: &FuelMix, demand: f64, fuels: &[FuelType]) -> Result<f64, MixError> {
    emission(mix, demand, fuels, |f| f.hap_factor)
}

/// Emission from a per-fuel energy vector: `sum_n x_n * factor_n`.
pub fn emission_from_energy(energy: &[f64], factors: &[f64]) -> f64 {
    energy.iter().zip(factors).map(|(x, f)| x * f).sum()
}

/// `T[[j, i]]` is the fraction of cell `j`'s emission deposited in cell `i`.
pub fn build_transport_matrix(weather: &[Direction], grid_dims: (usize, usize), kernel: &TransportKernelParams) -> Array2<f64> {
    let (rows, cols) = grid_dims;
    let s = rows * cols;
    assert_eq!(weather.len(), s, "weather field must cover every cell");
    let mut t = Array2::zeros((s, s));
    let neighbour = |r: usize, c: usize, (dr, dc): (isize, isize)| -> Option<usize> {
        let nr = r as isize + dr;
        let nc = c as isize + dc;
        (nr >= 0 && nc >= 0 && (nr as usize) < rows && (nc as usize) < cols).then(|| nr as usize * cols + nc as usize)
    };
    for (j, &dir) in weather.iter().enumerate() {
        let (r, c) = (j / cols, j % cols);
        match dir.offset() {
            None => t[[j, j]] += kernel.total(),
            Some((dr, dc)) => {
                t[[j, j]] += kernel.sigma_self;
                if let Some(i) = neighbour(r, c, (dr, dc)) {
                    t[[j, i]] += kernel.sigma_down;
                }
                for lateral in [(-dc, dr), (dc, -dr)] {
                    if let Some(i) = neighbour(r, c, lateral) {
                        t[[j, i]] += kernel.sigma_lat;
                    }
                }
            }
        }
    }
    t
}

/// `c = T^T * hap_emitted`.
pub fn disperse(hap_emitted: &[f64], transport: &Array2<f64>) -> Vec<f64> {
    let s = hap_emitted.len();
    debug_assert_eq!(transport.dim(), (s, s));
    let mut c = vec![0.0; s];
    for (j, &e) in hap_emitted.iter().enumerate() {
        if e == 0.0 {
            continue;
        }
        for (i, ci) in c.iter_mut().enumerate() {
            *ci += transport[[j, i]] * e;
        }
    }
    c
}
