use ndarray::Array2;

use crate::env::EnvSample;
use crate::grid::Scenario;
use crate::health::marginal_health;
use crate::transport::{build_transport_matrix, disperse};

use super::coefficients::{cost_coefficients, drift_plus_penalty, health_coupling};
use super::knapsack::Pool;
use super::{PolicyConfig, PolicyError, SlotDecision, VirtualQueues};

/// Euclidean projection of `y` onto `{z : sum z = total, 0 <= z <= upper}`.
///
/// The solution is `z_k = clamp(y_k - tau, 0, upper_k)`; `tau` is found by
/// walking the sorted breakpoints of the piecewise-linear map
/// `tau -> sum_k clamp(y_k - tau, 0, upper_k)`. Requires
/// `0 <= total <= sum(upper)`.
pub fn project_capped_simplex(y: &[f64], upper: &[f64], total: f64) -> Vec<f64> {
    debug_assert_eq!(y.len(), upper.len());
    let capacity: f64 = upper.iter().sum();
    if total >= capacity {
        return upper.to_vec();
    }
    if total <= 0.0 {
        return vec![0.0; y.len()];
    }
    let mass = |tau: f64| -> f64 { y.iter().zip(upper).map(|(&v, &u)| (v - tau).clamp(0.0, u)).sum() };
    let mut breaks: Vec<f64> = y.iter().zip(upper).flat_map(|(&v, &u)| [v - u, v]).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // mass(breaks[0]) = capacity >= total and mass(last) = 0 < total.
    let mut tau = breaks[0];
    let mut prev_tau = breaks[0];
    let mut prev_mass = mass(prev_tau);
    for &b in &breaks[1..] {
        let m = mass(b);
        if m <= total {
            tau = if prev_mass > m {
                prev_tau + (prev_mass - total) * (b - prev_tau) / (prev_mass - m)
            } else {
                b
            };
            break;
        }
        prev_tau = b;
        prev_mass = m;
    }
    let mut z: Vec<f64> = y.iter().zip(upper).map(|(&v, &u)| (v - tau).clamp(0.0, u)).collect();

    // Land the sum exactly on `total` using interior coordinates.
    let mut residual = total - z.iter().sum::<f64>();
    for (zk, &u) in z.iter_mut().zip(upper) {
        if residual == 0.0 {
            break;
        }
        let room = if residual > 0.0 { u - *zk } else { -*zk };
        let step = if residual > 0.0 { residual.min(room) } else { residual.max(room) };
        *zk += step;
        residual -= step;
    }
    z
}

struct Feasible {
    pools: Vec<Pool>,
    feasible_pool: Vec<bool>,
}

impl Feasible {
    fn project(&self, y: &Array2<f64>, availability: &Array2<f64>) -> Array2<f64> {
        let mut z = Array2::zeros(y.dim());
        for (pool, &ok) in self.pools.iter().zip(&self.feasible_pool) {
            if !ok {
                for &idx in &pool.members {
                    z[idx] = availability[idx];
                }
                continue;
            }
            let yv: Vec<f64> = pool.members.iter().map(|&idx| y[idx]).collect();
            let uv: Vec<f64> = pool.members.iter().map(|&idx| availability[idx]).collect();
            for (&idx, v) in pool.members.iter().zip(project_capped_simplex(&yv, &uv, pool.demand)) {
                z[idx] = v;
            }
        }
        z
    }
}

fn concentration_of(energy: &Array2<f64>, transport: &Array2<f64>, hap: &[f64]) -> Vec<f64> {
    let emitted: Vec<f64> = energy
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(hap).map(|(x, f)| x * f).sum())
        .collect();
    disperse(&emitted, transport)
}

/// Projected gradient descent on the slot's drift-plus-penalty objective
/// for a nonlinear (convex) health model.
///
/// Starts from the capacity-proportional allocation, uses a backtracking
/// step that doubles after every accepted move, and returns the best
/// iterate after `gradient_steps` iterations or once the relative decrease
/// drops below `tolerance`.
pub fn solve_slot_nonlinear(
    queues: &VirtualQueues,
    sample: &EnvSample,
    scenario: &Scenario,
    v: f64,
    config: &PolicyConfig,
) -> Result<SlotDecision, PolicyError> {
    let transport = build_transport_matrix(&sample.weather, scenario.grid_dims, &scenario.transport_params);
    let hap = scenario.hap_factors();
    let availability = &sample.availability;
    let pools = Pool::for_sample(sample, scenario.balancing);
    let feasible_pool: Vec<bool> = pools.iter().map(|p| p.available(availability) >= p.demand).collect();
    let set = Feasible { pools, feasible_pool };

    let mut shortfall = vec![0.0; sample.n_subregions()];
    for (pool, &ok) in set.pools.iter().zip(&set.feasible_pool) {
        if !ok {
            pool.attribute_shortfall(pool.demand - pool.available(availability), &sample.demand, &mut shortfall);
        }
    }

    let objective = |x: &Array2<f64>| drift_plus_penalty(x, &transport, scenario, queues, v);
    let gradient = |x: &Array2<f64>| {
        let c = concentration_of(x, &transport, &hap);
        let coupling = health_coupling(&transport, &marginal_health(&c, scenario));
        cost_coefficients(queues, &coupling, scenario, v)
    };

    // Capacity-proportional start, projected for exactness.
    let mut x = set.project(availability, availability);
    let mut fx = objective(&x);
    let start = fx;
    let mut step = config.step_size;

    for _ in 0..config.gradient_steps {
        let g = gradient(&x);
        let mut accepted = None;
        while step > 1e-18 {
            let y = set.project(&(&x - &(&g * step)), availability);
            let fy = objective(&y);
            let d = &y - &x;
            let model = fx + (&g * &d).sum() + d.mapv(|e| e * e).sum() / (2.0 * step);
            if fy <= model + 1e-12 * fx.abs().max(1.0) {
                accepted = Some((y, fy));
                break;
            }
            step *= 0.5;
        }
        let Some((y, fy)) = accepted else { break };
        let decrease = fx - fy;
        let moved = (&y - &x).iter().any(|&e| e != 0.0);
        if fy <= fx {
            x = y;
            fx = fy;
        }
        if !moved || decrease <= config.tolerance * fx.abs().max(1.0) {
            break;
        }
        step *= 2.0;
    }

    if !fx.is_finite() || fx > start + 1e-9 * start.abs().max(1.0) {
        return Err(PolicyError::NonConvergence { start, end: fx });
    }
    Ok(SlotDecision::from_allocation(x, shortfall))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::sample_stream;
    use crate::grid::HealthModel;
    use crate::policy::{slot_cost_coefficients, solve_slot_linear};
    use crate::rng::SimRng;
    use crate::scenarios::{oracle_testbed, random_grid};

    #[test]
    fn projection_respects_constraints() {
        let mut rng = SimRng::new(17);
        for _ in 0..2_000 {
            let n = 1 + rng.index(8);
            let y: Vec<f64> = (0..n).map(|_| rng.uniform_range(-50.0, 50.0)).collect();
            let u: Vec<f64> = (0..n).map(|_| rng.uniform_range(0.0, 30.0)).collect();
            let total = rng.uniform() * u.iter().sum::<f64>();
            let z = project_capped_simplex(&y, &u, total);
            assert!((z.iter().sum::<f64>() - total).abs() <= 1e-9);
            for (zk, uk) in z.iter().zip(&u) {
                assert!(*zk >= 0.0 && *zk <= uk + 1e-12);
            }
        }
    }

    #[test]
    fn projection_is_closest_point() {
        // First-order optimality: no feasible pairwise exchange brings z closer to y.
        let mut rng = SimRng::new(5);
        for _ in 0..500 {
            let n = 2 + rng.index(5);
            let y: Vec<f64> = (0..n).map(|_| rng.uniform_range(-10.0, 10.0)).collect();
            let u: Vec<f64> = (0..n).map(|_| rng.uniform_range(0.5, 10.0)).collect();
            let total = rng.uniform() * u.iter().sum::<f64>();
            let z = project_capped_simplex(&y, &u, total);
            let dist = |z: &[f64]| z.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let base = dist(&z);
            for a in 0..n {
                for b in 0..n {
                    let eps = 1e-4;
                    if a == b || z[a] + eps > u[a] || z[b] - eps < 0.0 {
                        continue;
                    }
                    let mut w = z.clone();
                    w[a] += eps;
                    w[b] -= eps;
                    assert!(dist(&w) >= base - 1e-9);
                }
            }
        }
    }

    #[test]
    fn singleton_feasible_set() {
        let mut s = oracle_testbed();
        s.health_model = HealthModel::Loglinear { r0: 0.1 };
        s.fuels.truncate(1);
        s.grid_dims = (1, 1);
        s.subregions.truncate(1);
        s.subregions[0].plants.truncate(1);
        s.subregions[0].plants[0].capacity = 80.0;
        s.weather_params.initial_field = Some(vec![crate::grid::Direction::Calm]);
        let s = crate::grid::validate_scenario(s).unwrap();
        let sample = &sample_stream(&s, 0, 1)[0];
        let d = solve_slot_nonlinear(&VirtualQueues::new(s.caps), sample, &s, 10.0, &PolicyConfig::default()).unwrap();
        assert_eq!(d.per_fuel_energy[[0, 0]], 50.0);
    }

    #[test]
    fn small_exposure_matches_linear() {
        let mut s = oracle_testbed();
        s.health_model = HealthModel::Loglinear { r0: 0.1 };
        for r in &mut s.subregions {
            r.health_slope *= 1e-4;
        }
        let sample = &sample_stream(&s, 0, 1)[0];
        let q = VirtualQueues {
            q_co2: 0.0,
            q_hap: 0.0,
            caps: s.caps,
        };
        let v = 1e4;
        let nonlinear = solve_slot_nonlinear(&q, sample, &s, v, &PolicyConfig::default()).unwrap();
        let kappa = slot_cost_coefficients(&q, sample, &s, v);
        let linear = solve_slot_linear(&kappa, sample, s.balancing);
        for (a, b) in nonlinear.mixes.iter().zip(&linear.mixes) {
            let l1: f64 = a.weights().iter().zip(b.weights()).map(|(x, y)| (x - y).abs()).sum();
            assert!(l1 <= 0.01, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn beats_random_feasible_points() {
        let mut s = random_grid(11);
        s.health_model = HealthModel::Loglinear { r0: 0.01 };
        let sample = &sample_stream(&s, 3, 1)[0];
        let q = VirtualQueues {
            q_co2: 2.0,
            q_hap: 1.0,
            caps: s.caps,
        };
        let v = 20.0;
        let d = solve_slot_nonlinear(&q, sample, &s, v, &PolicyConfig::default()).unwrap();
        let t = build_transport_matrix(&sample.weather, s.grid_dims, &s.transport_params);
        let best = drift_plus_penalty(&d.per_fuel_energy, &t, &s, &q, v);
        let pools = Pool::for_sample(sample, s.balancing);
        let set = Feasible {
            feasible_pool: pools.iter().map(|p| p.available(&sample.availability) >= p.demand).collect(),
            pools,
        };
        let mut rng = SimRng::new(99);
        for _ in 0..100 {
            let y = Array2::from_shape_fn(sample.availability.dim(), |_| rng.uniform_range(0.0, 40.0));
            let x = set.project(&y, &sample.availability);
            assert!(best <= drift_plus_penalty(&x, &t, &s, &q, v) + 1e-9);
        }
    }
}
