mod common;

use healthgrid_core::env::sample_stream;
use healthgrid_core::grid::{validate_scenario, Balancing, EmissionCaps, HealthModel, Scenario};
use healthgrid_core::policy::{
    linear_objective, min_emission_policy, min_health_policy, proportional_policy, solve_slot_linear, Controller,
    PolicyConfig, PolicyKind, SlotDecision, AVAILABILITY_TOLERANCE,
};
use healthgrid_core::rng::SimRng;
use healthgrid_core::scenarios::{figure1_scenario, oracle_testbed, random_grid};
use healthgrid_core::transport::build_transport_matrix;
use proptest::prelude::*;

#[test]
fn knapsack_matches_vertex_enumeration() {
    let mut rng = SimRng::new(2024);
    for case in 0..1000 {
        let (costs, sample) = common::random_slot(&mut rng, 3);
        let d = solve_slot_linear(&costs, &sample, Balancing::Local);
        let got = linear_objective(&costs, &d.per_fuel_energy);
        let k = costs.row(0).to_vec();
        let p = sample.availability.row(0).to_vec();
        let want = common::vertex_optimum(&k, &p, sample.demand[0]);
        assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "case {case}: {got} vs {want}");
    }
}

#[test]
fn knapsack_never_worse_than_grid() {
    let mut rng = SimRng::new(99);
    let mut compared = 0;
    for case in 0..300 {
        let (costs, sample) = common::random_slot(&mut rng, 3);
        let d = solve_slot_linear(&costs, &sample, Balancing::Local);
        let got = linear_objective(&costs, &d.per_fuel_energy);
        let k = costs.row(0).to_vec();
        let p = sample.availability.row(0).to_vec();
        if let Some(grid) = common::grid_optimum(&k, &p, sample.demand[0], 100) {
            assert!(got <= grid + 1e-9, "case {case}: {got} > {grid}");
            compared += 1;
        }
    }
    assert!(compared > 50);
}

fn check_decision(d: &SlotDecision, sample: &healthgrid_core::EnvSample, balancing: Balancing) {
    assert!(d.availability_excess(&sample.availability) <= AVAILABILITY_TOLERANCE);
    assert!(d.per_fuel_energy.iter().all(|&x| x >= 0.0));
    for (i, mix) in d.mixes.iter().enumerate() {
        let w = mix.weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        assert!(w.iter().all(|&x| x >= 0.0));
        if balancing == Balancing::Local && d.shortfall[i] == 0.0 && sample.demand[i] > 0.0 {
            assert!((d.generation(i) - sample.demand[i]).abs() <= 1e-9 * sample.demand[i].max(1.0));
        }
    }
    let served: f64 = (0..sample.n_subregions()).map(|i| d.generation(i)).sum();
    let want = sample.total_demand() - d.total_shortfall();
    assert!((served - want).abs() <= 1e-9 * want.max(1.0), "{served} vs {want}");
}

fn every_policy_respects_availability(scenario: &Scenario, horizon: usize, seed: u64) {
    let stream = sample_stream(scenario, seed, horizon);
    for sample in &stream {
        check_decision(&min_emission_policy(sample, scenario), sample, scenario.balancing);
        check_decision(&min_health_policy(sample, scenario), sample, scenario.balancing);
        check_decision(&proportional_policy(sample, scenario), sample, scenario.balancing);
    }
    let mut kinds = vec![PolicyKind::Lyapunov];
    if scenario.balancing == Balancing::Local && scenario.is_deterministic() {
        kinds.push(PolicyKind::OracleFixed);
    }
    for kind in kinds {
        let mut c = Controller::new(PolicyConfig::of(kind), scenario, horizon).unwrap();
        for sample in &stream {
            let t = build_transport_matrix(&sample.weather, scenario.grid_dims, &scenario.transport_params);
            let d = c.decide(sample, &t, scenario).unwrap();
            check_decision(&d, sample, scenario.balancing);
            let co2: f64 = d.emissions(&scenario.co2_factors()).iter().sum();
            let hap: f64 = d.emissions(&scenario.hap_factors()).iter().sum();
            c.observe(co2, hap);
        }
    }
}

#[test]
fn availability_and_simplex_hold_for_every_policy() {
    every_policy_respects_availability(&figure1_scenario(), 50, 7);
    every_policy_respects_availability(&oracle_testbed(), 50, 0);
    for seed in 0..5 {
        let mut s = random_grid(seed);
        s.caps = EmissionCaps { co2: 5.0, hap: 5.0 };
        every_policy_respects_availability(&s, 200, seed);
        s.balancing = Balancing::Local;
        every_policy_respects_availability(&s, 100, seed);
        s.health_model = HealthModel::Loglinear { r0: 1.0 };
        every_policy_respects_availability(&validate_scenario(s).unwrap(), 30, seed);
    }
}

proptest! {
    #[test]
    fn scaling_costs_keeps_decision(seed in any::<u64>(), lambda in 1e-3f64..1e3, pooled in any::<bool>()) {
        let mut rng = SimRng::new(seed);
        let s = random_grid(seed);
        let sample = &sample_stream(&s, seed, 1)[0];
        let costs = ndarray::Array2::from_shape_fn(sample.availability.dim(), |_| rng.uniform_range(0.0, 5.0));
        let mode = if pooled { Balancing::Pooled } else { Balancing::Local };
        let a = solve_slot_linear(&costs, sample, mode);
        let b = solve_slot_linear(&costs.mapv(|k| k * lambda), sample, mode);
        prop_assert_eq!(a, b);
    }
}
