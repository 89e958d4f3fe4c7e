use healthgrid_core::env::{env_init, env_step, sample_stream};
use healthgrid_core::scenarios::{figure1_scenario, random_grid};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samples_stay_physical(scenario_seed in 0u64..1000, seed in any::<u64>()) {
        let s = random_grid(scenario_seed);
        let installed = s.installed_capacity();
        for x in sample_stream(&s, seed, 50) {
            prop_assert!(x.demand.iter().all(|&d| d >= 0.0));
            for (i, region) in s.subregions.iter().enumerate() {
                for (k, plant) in region.plants.iter().enumerate() {
                    let a = x.plant_availability[i][k];
                    prop_assert!((0.0..=plant.capacity).contains(&a));
                }
                for n in 0..s.n_fuels() {
                    prop_assert!(x.availability[[i, n]] <= installed[i][n] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn full_stickiness_freezes_weather(scenario_seed in 0u64..1000, seed in any::<u64>()) {
        let mut s = random_grid(scenario_seed);
        s.weather_params.transition_stickiness = 1.0;
        let mut state = env_init(&s, seed);
        let first = state.weather().to_vec();
        for _ in 0..100 {
            prop_assert_eq!(&env_step(&mut state, &s).weather, &first);
        }
    }

    #[test]
    fn stream_is_a_function_of_seed(scenario_seed in 0u64..1000, seed in any::<u64>()) {
        let s = random_grid(scenario_seed);
        prop_assert_eq!(sample_stream(&s, seed, 20), sample_stream(&s, seed, 20));
    }
}

#[test]
fn stream_prefixes_agree() {
    let s = random_grid(12);
    let long = sample_stream(&s, 5, 300);
    let short = sample_stream(&s, 5, 100);
    assert_eq!(&long[..100], &short[..]);
}

#[test]
fn figure1_environment_is_constant() {
    let s = figure1_scenario();
    let stream = sample_stream(&s, 7, 50);
    assert!(stream.windows(2).all(|w| w[0].demand == w[1].demand && w[0].availability == w[1].availability));
    assert_eq!(stream[0].total_demand(), 100.0);
}
