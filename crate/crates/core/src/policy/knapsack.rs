use ndarray::Array2;

use crate::env::EnvSample;
use crate::grid::Balancing;

use super::SlotDecision;

/// A set of (subregion, fuel) sources that must jointly serve a demand.
///
/// Under local balancing each subregion is its own pool; under pooled
/// balancing every source serves the region-wide demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    /// (subregion, fuel) in tie-break order: fuel id, then subregion id.
    pub members: Vec<(usize, usize)>,
    /// Subregions whose demand this pool serves.
    pub consumers: Vec<usize>,
    pub demand: f64,
}

impl Pool {
    pub fn for_sample(sample: &EnvSample, balancing: Balancing) -> Vec<Pool> {
        let (s, n) = sample.availability.dim();
        match balancing {
            Balancing::Local => (0..s)
                .map(|i| Pool {
                    members: (0..n).map(|k| (i, k)).collect(),
                    consumers: vec![i],
                    demand: sample.demand[i],
                })
                .collect(),
            Balancing::Pooled => {
                let members = (0..n).flat_map(|k| (0..s).map(move |i| (i, k))).collect();
                vec![Pool {
                    members,
                    consumers: (0..s).collect(),
                    demand: sample.total_demand(),
                }]
            }
        }
    }

    pub fn available(&self, availability: &Array2<f64>) -> f64 {
        self.members.iter().map(|&(i, n)| availability[[i, n]]).sum()
    }

    /// Split an unserved amount across the pool's consumers by demand share.
    pub(crate) fn attribute_shortfall(&self, amount: f64, demand: &[f64], shortfall: &mut [f64]) {
        if amount <= 0.0 {
            return;
        }
        if let [only] = self.consumers[..] {
            shortfall[only] += amount;
            return;
        }
        if self.demand > 0.0 {
            for &i in &self.consumers {
                shortfall[i] += amount * demand[i] / self.demand;
            }
        }
    }
}

/// Greedy fill of one pool: cheapest sources first, ties by member order.
pub(crate) fn fill_pool(pool: &Pool, costs: &Array2<f64>, availability: &Array2<f64>, energy: &mut Array2<f64>) -> f64 {
    let mut order: Vec<usize> = (0..pool.members.len()).collect();
    order.sort_by(|&a, &b| {
        let ka = costs[pool.members[a]];
        let kb = costs[pool.members[b]];
        ka.total_cmp(&kb).then(a.cmp(&b))
    });
    let mut remaining = pool.demand;
    for k in order {
        if remaining <= 0.0 {
            break;
        }
        let idx = pool.members[k];
        let take = remaining.min(availability[idx]);
        if take > 0.0 {
            energy[idx] += take;
            remaining -= take;
        }
    }
    remaining.max(0.0)
}

/// Exact minimizer of `sum kappa * x` subject to demand balance and
/// `0 <= x <= p` in every pool.
///
/// Demand beyond the pool's availability is served up to availability and
/// the rest recorded as shortfall.
pub fn solve_slot_linear(costs: &Array2<f64>, sample: &EnvSample, balancing: Balancing) -> SlotDecision {
    let mut energy = Array2::zeros(sample.availability.dim());
    let mut shortfall = vec![0.0; sample.n_subregions()];
    for pool in Pool::for_sample(sample, balancing) {
        let unmet = fill_pool(&pool, costs, &sample.availability, &mut energy);
        pool.attribute_shortfall(unmet, &sample.demand, &mut shortfall);
    }
    SlotDecision::from_allocation(energy, shortfall)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Direction;
    use ndarray::array;

    pub(crate) fn one_cell(availability: &[f64], demand: f64) -> EnvSample {
        EnvSample {
            t: 0,
            demand: vec![demand],
            availability: Array2::from_shape_vec((1, availability.len()), availability.to_vec()).unwrap(),
            plant_availability: vec![availability.to_vec()],
            weather: vec![Direction::Calm],
        }
    }

    #[test]
    fn greedy_on_sorted_costs() {
        let sample = one_cell(&[20.0, 40.0, 40.0], 60.0);
        let d = solve_slot_linear(&array![[3.0, 1.0, 2.0]], &sample, Balancing::Local);
        assert_eq!(d.per_fuel_energy, array![[0.0, 40.0, 20.0]]);
        let w = d.mixes[0].weights();
        approx::assert_abs_diff_eq!(w[1], 2.0 / 3.0, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(w[2], 1.0 / 3.0, epsilon = 1e-12);
        assert_eq!(d.shortfall, vec![0.0]);
    }

    #[test]
    fn zero_demand_defaults_to_first_fuel() {
        let sample = one_cell(&[20.0, 40.0, 40.0], 0.0);
        let d = solve_slot_linear(&array![[3.0, 1.0, 2.0]], &sample, Balancing::Local);
        assert!(d.per_fuel_energy.iter().all(|&x| x == 0.0));
        assert_eq!(d.mixes[0].weights(), &[1.0, 0.0, 0.0]);
        assert_eq!(d.shortfall, vec![0.0]);
    }

    #[test]
    fn shortfall_when_supply_short() {
        let sample = one_cell(&[10.0, 5.0, 5.0], 30.0);
        let d = solve_slot_linear(&array![[0.0, 1.0, 2.0]], &sample, Balancing::Local);
        assert_eq!(d.per_fuel_energy, array![[10.0, 5.0, 5.0]]);
        assert_eq!(d.shortfall, vec![10.0]);
    }

    #[test]
    fn ties_break_by_fuel_id() {
        let sample = one_cell(&[20.0, 40.0, 40.0], 30.0);
        let d = solve_slot_linear(&array![[1.0, 1.0, 1.0]], &sample, Balancing::Local);
        assert_eq!(d.per_fuel_energy, array![[20.0, 10.0, 0.0]]);
    }

    #[test]
    fn pooled_fill_crosses_cells() {
        let sample = EnvSample {
            t: 0,
            demand: vec![30.0, 0.0],
            availability: array![[10.0, 0.0], [0.0, 40.0]],
            plant_availability: vec![vec![10.0], vec![40.0]],
            weather: vec![Direction::Calm; 2],
        };
        let d = solve_slot_linear(&array![[1.0, 5.0], [5.0, 2.0]], &sample, Balancing::Pooled);
        assert_eq!(d.per_fuel_energy, array![[10.0, 0.0], [0.0, 20.0]]);
        assert_eq!(d.shortfall, vec![0.0, 0.0]);
        // Local balancing cannot move energy between cells.
        let d = solve_slot_linear(&array![[1.0, 5.0], [5.0, 2.0]], &sample, Balancing::Local);
        assert_eq!(d.shortfall, vec![20.0, 0.0]);
    }
}
