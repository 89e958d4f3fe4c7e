use ndarray::Array2;

use crate::env::EnvSample;
use crate::exec::Execution;
use crate::grid::{FuelMix, HealthModel, Scenario};
use crate::health::marginal_health;
use crate::transport::disperse;

use super::baselines::{min_emission_policy, min_health_policy, proportional_policy};
use super::coefficients::{cost_coefficients, health_coupling};
use super::knapsack::solve_slot_linear;
use super::marginal::marginal_cap_filter;
use super::oracle::oracle_fixed_mix;
use super::projected::solve_slot_nonlinear;
use super::{update_queues, PolicyConfig, PolicyError, PolicyKind, SlotDecision, VirtualQueues};

/// Per-replica policy state: the configuration, the virtual queues and,
/// for the fixed-mix oracle policy, the precomputed mixes.
#[derive(Debug, Clone)]
pub struct Controller {
    config: PolicyConfig,
    queues: VirtualQueues,
    fixed: Option<Vec<FuelMix>>,
}

impl Controller {
    pub fn new(config: PolicyConfig, scenario: &Scenario, horizon: usize) -> Result<Self, PolicyError> {
        config.check()?;
        let fixed = if config.kind == PolicyKind::OracleFixed {
            let outcome = oracle_fixed_mix(scenario, horizon, config.oracle_resolution, Execution::default())?;
            Some(outcome.solution.ok_or(PolicyError::OracleInfeasible)?.mixes)
        } else {
            None
        };
        Ok(Self {
            config,
            queues: VirtualQueues::new(scenario.caps),
            fixed,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn queues(&self) -> &VirtualQueues {
        &self.queues
    }

    /// Allocation for one observed slot. `transport` is the slot's
    /// transport matrix.
    pub fn decide(&self, sample: &EnvSample, transport: &Array2<f64>, scenario: &Scenario) -> Result<SlotDecision, PolicyError> {
        Ok(match self.config.kind {
            PolicyKind::MinEmission => min_emission_policy(sample, scenario),
            PolicyKind::MinHealth => min_health_policy(sample, scenario),
            PolicyKind::Proportional => proportional_policy(sample, scenario),
            PolicyKind::OracleFixed => self.apply_fixed(sample),
            PolicyKind::Lyapunov => self.lyapunov(sample, transport, scenario)?,
        })
    }

    fn lyapunov(&self, sample: &EnvSample, transport: &Array2<f64>, scenario: &Scenario) -> Result<SlotDecision, PolicyError> {
        let v = self.config.v;
        let linear_costs = |concentration: &[f64]| {
            let coupling = health_coupling(transport, &marginal_health(concentration, scenario));
            cost_coefficients(&self.queues, &coupling, scenario, v)
        };
        let (decision, costs) = match scenario.health_model {
            HealthModel::Linear => {
                let costs = linear_costs(&vec![0.0; scenario.n_subregions()]);
                (solve_slot_linear(&costs, sample, scenario.balancing), costs)
            }
            HealthModel::Loglinear { .. } => {
                let d = solve_slot_nonlinear(&self.queues, sample, scenario, v, &self.config)?;
                let hap = d.emissions(&scenario.hap_factors());
                let costs = linear_costs(&disperse(&hap, transport));
                (d, costs)
            }
        };
        Ok(match scenario.marginal_caps {
            Some(_) => marginal_cap_filter(&decision, sample, scenario, &costs),
            None => decision,
        })
    }

    fn apply_fixed(&self, sample: &EnvSample) -> SlotDecision {
        let mixes = self.fixed.as_ref().expect("oracle mixes computed at construction");
        let mut energy = Array2::zeros(sample.availability.dim());
        let mut shortfall = vec![0.0; sample.n_subregions()];
        for (i, mix) in mixes.iter().enumerate() {
            for (n, &w) in mix.weights().iter().enumerate() {
                let want = w * sample.demand[i];
                let got = want.min(sample.availability[[i, n]]);
                energy[[i, n]] = got;
                shortfall[i] += want - got;
            }
        }
        SlotDecision::from_allocation(energy, shortfall)
    }

    /// Feed the slot's realized totals into the virtual queues.
    pub fn observe(&mut self, co2_total: f64, hap_total: f64) {
        self.queues = update_queues(&self.queues, co2_total, hap_total);
    }
}
