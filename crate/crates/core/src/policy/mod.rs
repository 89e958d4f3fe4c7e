//! Online fuel-mix allocation policies.
//!
//! The constrained controller is the Lyapunov drift-plus-penalty rule: each
//! slot it minimizes
//!
//! ```text
//!   V * sum_i h_i(t) + q_co2(t) * sum_i e_co2_i(t) + q_hap(t) * sum_i e_hap_i(t)
//! ```
//!
//! over the allocations allowed by the observed demand and availability,
//! then feeds the realized totals into two virtual queues, one per
//! time-average cap. With LINEAR health the slot objective is linear in the
//! per-fuel energies, so the slot problem is a fractional knapsack per
//! balancing pool ([`solve_slot_linear`]). LOGLINEAR health is convex and is
//! handled by projected gradient descent ([`solve_slot_nonlinear`]).
//!
//! The baselines are the emission-minimizing allocation
//! ([`min_emission_policy`]) and the health-only allocation that ignores
//! caps ([`min_health_policy`]). [`oracle_fixed_mix`] enumerates stationary
//! mixes on a simplex grid and serves as ground truth on small instances.

mod baselines;
mod coefficients;
mod controller;
mod knapsack;
mod marginal;
mod oracle;
mod projected;
mod queues;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::FuelMix;

pub use baselines::{min_emission_policy, min_health_policy, proportional_policy};
pub use coefficients::{
    cost_coefficients, drift_plus_penalty, health_coupling, linear_objective, slot_cost_coefficients,
};
pub use controller::Controller;
pub use knapsack::{solve_slot_linear, Pool};
pub use marginal::marginal_cap_filter;
pub use oracle::{oracle_fixed_mix, simplex_grid, OracleMode, OracleOutcome, OracleSolution, MAX_ORACLE_CANDIDATES};
pub use projected::{project_capped_simplex, solve_slot_nonlinear};
pub use queues::{update_queues, VirtualQueues};

/// Slack allowed on the availability constraint `x <= p`.
pub const AVAILABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    Lyapunov,
    MinEmission,
    MinHealth,
    Proportional,
    OracleFixed,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Lyapunov => "lyapunov",
            PolicyKind::MinEmission => "min_emission",
            PolicyKind::MinHealth => "min_health",
            PolicyKind::Proportional => "proportional",
            PolicyKind::OracleFixed => "oracle_fixed",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "lyapunov" | "c" => Ok(PolicyKind::Lyapunov),
            "min_emission" | "a" => Ok(PolicyKind::MinEmission),
            "min_health" | "b" => Ok(PolicyKind::MinHealth),
            "proportional" => Ok(PolicyKind::Proportional),
            "oracle_fixed" | "oracle" => Ok(PolicyKind::OracleFixed),
            other => Err(format!("unknown policy '{other}'")),
        }
    }
}

fn default_v() -> f64 {
    10.0
}
fn default_gradient_steps() -> usize {
    500
}
fn default_step_size() -> f64 {
    1.0
}
fn default_tolerance() -> f64 {
    1e-12
}
fn default_resolution() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    #[serde(default)]
    pub kind: PolicyKind,
    /// Penalty weight on the health term.
    #[serde(rename = "V", default = "default_v")]
    pub v: f64,
    #[serde(default = "default_gradient_steps")]
    pub gradient_steps: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    /// Relative objective decrease below which the gradient loop stops.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Simplex grid spacing for the fixed-mix oracle.
    #[serde(default = "default_resolution")]
    pub oracle_resolution: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Lyapunov,
            v: default_v(),
            gradient_steps: default_gradient_steps(),
            step_size: default_step_size(),
            tolerance: default_tolerance(),
            oracle_resolution: default_resolution(),
        }
    }
}

impl PolicyConfig {
    pub fn of(kind: PolicyKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn lyapunov(v: f64) -> Self {
        Self {
            v,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<(), PolicyError> {
        if !(self.v >= 0.0) || !self.v.is_finite() {
            return Err(PolicyError::InvalidConfig(format!("V = {} must be finite and >= 0", self.v)));
        }
        if !(self.step_size > 0.0) {
            return Err(PolicyError::InvalidConfig(format!("step_size = {} must be > 0", self.step_size)));
        }
        resolution_steps(self.oracle_resolution)?;
        Ok(())
    }
}

/// Number of grid steps `1 / delta`, which must be integral.
pub(crate) fn resolution_steps(delta: f64) -> Result<usize, PolicyError> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(PolicyError::InvalidResolution(delta));
    }
    let steps = (1.0 / delta).round();
    if (steps * delta - 1.0).abs() > 1e-9 {
        return Err(PolicyError::InvalidResolution(delta));
    }
    Ok(steps as usize)
}

/// Allocation chosen for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotDecision {
    /// Production shares per subregion.
    pub mixes: Vec<FuelMix>,
    /// x_{i,n}, MWh, S x N.
    pub per_fuel_energy: Array2<f64>,
    /// Unserved demand per subregion, MWh.
    pub shortfall: Vec<f64>,
}

impl SlotDecision {
    pub fn from_allocation(per_fuel_energy: Array2<f64>, shortfall: Vec<f64>) -> Self {
        let mixes = per_fuel_energy
            .rows()
            .into_iter()
            .map(|row| FuelMix::from_allocation(&row.to_vec()))
            .collect();
        Self {
            mixes,
            per_fuel_energy,
            shortfall,
        }
    }

    pub fn total_shortfall(&self) -> f64 {
        self.shortfall.iter().sum()
    }

    /// Energy produced in subregion `i`.
    pub fn generation(&self, i: usize) -> f64 {
        self.per_fuel_energy.row(i).sum()
    }

    /// Emission per subregion for the given per-fuel factors.
    pub fn emissions(&self, factors: &[f64]) -> Vec<f64> {
        self.per_fuel_energy
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(factors).map(|(x, f)| x * f).sum())
            .collect()
    }

    /// Largest amount by which any `x_{i,n}` exceeds its availability.
    pub fn availability_excess(&self, availability: &Array2<f64>) -> f64 {
        self.per_fuel_energy
            .iter()
            .zip(availability.iter())
            .map(|(x, p)| x - p)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("invalid policy configuration: {0}")]
    InvalidConfig(String),
    #[error("oracle resolution {0} must lie in (0, 1] with 1/resolution integral")]
    InvalidResolution(f64),
    #[error("oracle instance needs {candidates} candidates (limit {limit})")]
    InstanceTooLarge { candidates: u128, limit: u128 },
    #[error("oracle requires {0}")]
    OracleUnsupported(String),
    #[error("oracle found no feasible stationary mix")]
    OracleInfeasible,
    #[error("gradient solver diverged: objective went from {start} to {end}")]
    NonConvergence { start: f64, end: f64 },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_defaults() {
        let c: PolicyConfig = serde_json::from_str(r#"{"kind":"min_health"}"#).unwrap();
        assert_eq!(c.kind, PolicyKind::MinHealth);
        assert_eq!(c.v, 10.0);
        assert_eq!(c.oracle_resolution, 0.05);
        let c: PolicyConfig = serde_json::from_str(r#"{"V": 3}"#).unwrap();
        assert_eq!(c.kind, PolicyKind::Lyapunov);
        assert_eq!(c.v, 3.0);
        assert!(serde_json::from_str::<PolicyConfig>(r#"{"v": 3}"#).is_err());
    }

    #[test]
    fn config_checks() {
        assert!(PolicyConfig::lyapunov(-1.0).check().is_err());
        let mut c = PolicyConfig::default();
        c.oracle_resolution = 0.3;
        assert!(matches!(c.check(), Err(PolicyError::InvalidResolution(_))));
        c.oracle_resolution = 0.25;
        assert!(c.check().is_ok());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("min-emission".parse::<PolicyKind>().unwrap(), PolicyKind::MinEmission);
        assert_eq!("B".parse::<PolicyKind>().unwrap(), PolicyKind::MinHealth);
        assert!("greedy".parse::<PolicyKind>().is_err());
    }
}
