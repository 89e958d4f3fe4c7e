//! Built-in scenarios.
//!
//! * [`figure1_scenario`]: the 3x3 clean/hybrid/dirty toy grid.
//! * [`oracle_testbed`]: a deterministic 1x2 grid small enough for
//!   exhaustive fixed-mix enumeration.
//! * [`random_grid`]: seeded random 3x3 instances for property checks.

use crate::grid::{
    validate_scenario, Balancing, DemandVolatility, Direction, EmissionCaps, FuelType, HealthModel,
    PlantSpec, Scenario, Subregion, TransportKernelParams, WeatherParams,
};
use crate::rng::SimRng;

pub const CLEAN: usize = 0;
pub const HYBRID: usize = 1;
pub const DIRTY: usize = 2;

/// Names accepted wherever a built-in scenario can be referenced.
pub const BUILTIN_NAMES: [&str; 2] = ["figure1", "oracle-testbed"];

pub fn builtin(name: &str) -> Option<Scenario> {
    match name {
        "figure1" => Some(figure1_scenario()),
        "oracle-testbed" | "oracle_testbed" => Some(oracle_testbed()),
        _ => None,
    }
}

/// Clean / hybrid / dirty with the default factors (t CO2 and kg HAP per MWh).
pub fn default_fuels() -> Vec<FuelType> {
    vec![
        FuelType::new(CLEAN, "clean", 0.0, 0.0),
        FuelType::new(HYBRID, "hybrid", 0.5, 0.5),
        FuelType::new(DIRTY, "dirty", 1.0, 1.0),
    ]
}

/// Fixed wind arrows of the toy grid, row-major.
///
/// Row 0: dirty (plume leaves NW), population, clean.
/// Row 1: population, hybrid (plume blows north onto a populated cell),
///        hybrid (plume leaves east, laterals land on plant cells).
/// Row 2: clean, population, dirty (plume leaves SE).
pub fn figure1_wind_field() -> Vec<Direction> {
    use Direction::*;
    vec![NW, Calm, Calm, Calm, N, E, Calm, Calm, SE]
}

fn cell(id: usize, coords: (usize, usize)) -> Subregion {
    Subregion {
        id,
        coords,
        population: 0.0,
        health_slope: 0.0,
        baseline_demand: 0.0,
        demand_volatility: DemandVolatility::DETERMINISTIC,
        plants: Vec::new(),
    }
}

fn populated(id: usize, coords: (usize, usize), population: f64, slope: f64, demand: f64) -> Subregion {
    Subregion {
        population,
        health_slope: slope,
        baseline_demand: demand,
        ..cell(id, coords)
    }
}

fn plant_cell(id: usize, coords: (usize, usize), plant_id: usize, fuel: usize) -> Subregion {
    let capacity = if fuel == CLEAN { 20.0 } else { 40.0 };
    Subregion {
        plants: vec![PlantSpec::firm(plant_id, fuel, capacity)],
        ..cell(id, coords)
    }
}

/// The 3x3 toy grid.
///
/// Layout (row-major): `[dirty, pop, clean / pop, hybrid, hybrid /
/// clean, pop, dirty]`. Plants are 20 (clean), 40 (hybrid) and 40 (dirty)
/// MWh each, two per type; the three populated cells carry demand 40/30/30.
/// The grid is one pooled balancing area. Average caps of 35 sit between
/// the emission-minimizing allocation (30) and the health-minimizing one (40).
pub fn figure1_scenario() -> Scenario {
    let subregions = vec![
        plant_cell(0, (0, 0), 0, DIRTY),
        populated(1, (0, 1), 1000.0, 0.002, 40.0),
        plant_cell(2, (0, 2), 1, CLEAN),
        populated(3, (1, 0), 800.0, 0.001, 30.0),
        plant_cell(4, (1, 1), 2, HYBRID),
        plant_cell(5, (1, 2), 3, HYBRID),
        plant_cell(6, (2, 0), 4, CLEAN),
        populated(7, (2, 1), 600.0, 0.0015, 30.0),
        plant_cell(8, (2, 2), 5, DIRTY),
    ];
    let raw = Scenario {
        grid_dims: (3, 3),
        subregions,
        fuels: default_fuels(),
        caps: EmissionCaps { co2: 35.0, hap: 35.0 },
        marginal_caps: None,
        transport_params: TransportKernelParams {
            sigma_self: 0.4,
            sigma_down: 0.4,
            sigma_lat: 0.1,
        },
        weather_params: WeatherParams {
            transition_stickiness: 1.0,
            initial_field: Some(figure1_wind_field()),
        },
        health_model: HealthModel::Linear,
        rng_seed: 7,
        balancing: Balancing::Pooled,
    };
    validate_scenario(raw).expect("built-in figure1 scenario is valid")
}

/// Deterministic two-cell testbed with a CO2/health trade-off.
///
/// Fuels: clean (0, 0), gas (0.6, 0.1) and biomass (0.1, 0.8). Each cell has
/// 20 clean, 40 gas and 40 biomass MWh and demand 50. Cell 0 blows east onto
/// cell 1; cell 1 is calm. Health prefers gas, the CO2 cap forces biomass.
/// The best stationary mix is `[0.4, 0.3, 0.3]` in cell 0 and `[0.4, 0.6, 0]`
/// in cell 1, with 13.8 hospitalizations per slot at CO2 = 28.5.
pub fn oracle_testbed() -> Scenario {
    let fuels = vec![
        FuelType::new(0, "clean", 0.0, 0.0),
        FuelType::new(1, "gas", 0.6, 0.1),
        FuelType::new(2, "biomass", 0.1, 0.8),
    ];
    let plants = |base: usize| {
        vec![
            PlantSpec::firm(base, 0, 20.0),
            PlantSpec::firm(base + 1, 1, 40.0),
            PlantSpec::firm(base + 2, 2, 40.0),
        ]
    };
    let subregions = vec![
        Subregion {
            plants: plants(0),
            ..populated(0, (0, 0), 1000.0, 0.001, 50.0)
        },
        Subregion {
            plants: plants(3),
            ..populated(1, (0, 1), 500.0, 0.002, 50.0)
        },
    ];
    let raw = Scenario {
        grid_dims: (1, 2),
        subregions,
        fuels,
        caps: EmissionCaps { co2: 28.5, hap: 20.0 },
        marginal_caps: None,
        transport_params: TransportKernelParams {
            sigma_self: 0.5,
            sigma_down: 0.3,
            sigma_lat: 0.1,
        },
        weather_params: WeatherParams {
            transition_stickiness: 1.0,
            initial_field: Some(vec![Direction::E, Direction::Calm]),
        },
        health_model: HealthModel::Linear,
        rng_seed: 0,
        balancing: Balancing::Local,
    };
    validate_scenario(raw).expect("built-in oracle testbed is valid")
}

/// Seeded random 3x3 pooled grid with stochastic demand, supply and weather.
///
/// Caps are set very loose; pair with
/// [`calibrated_caps`](crate::sim::calibrated_caps) for a binding instance.
pub fn random_grid(seed: u64) -> Scenario {
    let mut rng = SimRng::new(seed ^ 0x5eed_0f_9e1d);
    let mut subregions = Vec::with_capacity(9);
    let mut plant_id = 0;
    let mut expected_supply = 0.0;
    for k in 0..9 {
        let coords = (k / 3, k % 3);
        let mut s = cell(k, coords);
        if rng.uniform() < 0.6 {
            s.population = rng.uniform_range(200.0, 2000.0);
            s.health_slope = rng.uniform_range(0.0005, 0.003);
            s.baseline_demand = rng.uniform_range(5.0, 20.0);
            s.demand_volatility = DemandVolatility {
                persistence: 0.7,
                noise: 0.1 * s.baseline_demand,
            };
        }
        let n_plants = rng.index(3);
        for _ in 0..n_plants {
            let fuel = rng.index(3);
            let plant = PlantSpec {
                plant_id,
                fuel,
                capacity: rng.uniform_range(10.0, 50.0),
                availability_factor: rng.uniform_range(0.7, 1.0),
                availability_noise: 0.1,
            };
            expected_supply += plant.capacity * plant.availability_factor;
            plant_id += 1;
            s.plants.push(plant);
        }
        subregions.push(s);
    }
    // Guarantee every fuel type is present once so all trade-offs exist.
    for (fuel, k) in [(CLEAN, 0usize), (HYBRID, 4), (DIRTY, 8)] {
        let plant = PlantSpec {
            plant_id,
            fuel,
            capacity: 30.0,
            availability_factor: 0.9,
            availability_noise: 0.1,
        };
        expected_supply += plant.capacity * plant.availability_factor;
        plant_id += 1;
        subregions[k].plants.push(plant);
    }
    // Keep expected demand at half the expected supply so shortfalls are rare.
    let demand: f64 = subregions.iter().map(|s| s.baseline_demand).sum();
    if demand == 0.0 {
        subregions[1].population = 1000.0;
        subregions[1].health_slope = 0.001;
        subregions[1].baseline_demand = 10.0;
        subregions[1].demand_volatility = DemandVolatility {
            persistence: 0.7,
            noise: 1.0,
        };
    }
    let demand: f64 = subregions.iter().map(|s| s.baseline_demand).sum();
    let scale = 0.5 * expected_supply / demand;
    for s in &mut subregions {
        s.baseline_demand *= scale;
        s.demand_volatility.noise *= scale;
    }
    let raw = Scenario {
        grid_dims: (3, 3),
        subregions,
        fuels: default_fuels(),
        caps: EmissionCaps { co2: 1e9, hap: 1e9 },
        marginal_caps: None,
        transport_params: TransportKernelParams {
            sigma_self: 0.4,
            sigma_down: 0.3,
            sigma_lat: 0.1,
        },
        weather_params: WeatherParams {
            transition_stickiness: 0.8,
            initial_field: None,
        },
        health_model: HealthModel::Linear,
        rng_seed: seed,
        balancing: Balancing::Pooled,
    };
    validate_scenario(raw).expect("random grid is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure1_shape() {
        let s = figure1_scenario();
        assert_eq!(s.n_subregions(), 9);
        assert_eq!(s.total_baseline_demand(), 100.0);
        let mut per_type = [Vec::new(), Vec::new(), Vec::new()];
        for p in s.subregions.iter().flat_map(|r| &r.plants) {
            per_type[p.fuel].push(p.capacity);
        }
        assert_eq!(per_type[CLEAN], vec![20.0, 20.0]);
        assert_eq!(per_type[HYBRID], vec![40.0, 40.0]);
        assert_eq!(per_type[DIRTY], vec![40.0, 40.0]);
        assert_eq!(s.subregions.iter().filter(|r| r.population > 0.0).count(), 3);
        assert!(s.is_deterministic());
    }

    #[test]
    fn figure1_is_byte_identical() {
        assert_eq!(figure1_scenario().to_json(), figure1_scenario().to_json());
    }

    #[test]
    fn random_grids_are_seeded() {
        assert_eq!(random_grid(5), random_grid(5));
        assert_ne!(random_grid(5), random_grid(6));
    }

    #[test]
    fn builtins_resolve() {
        for name in BUILTIN_NAMES {
            assert!(builtin(name).is_some());
        }
        assert!(builtin("nope").is_none());
    }
}
