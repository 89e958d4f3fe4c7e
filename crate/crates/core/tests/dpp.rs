mod common;

use healthgrid_core::env::sample_stream;
use healthgrid_core::grid::EmissionCaps;
use healthgrid_core::policy::{drift_plus_penalty, linear_objective, slot_cost_coefficients, VirtualQueues};
use healthgrid_core::rng::SimRng;
use healthgrid_core::scenarios::{figure1_scenario, oracle_testbed, random_grid};
use healthgrid_core::transport::build_transport_matrix;

fn random_queues(rng: &mut SimRng, caps: EmissionCaps) -> VirtualQueues {
    VirtualQueues {
        q_co2: rng.uniform_range(0.0, 100.0),
        q_hap: rng.uniform_range(0.0, 100.0),
        caps,
    }
}

#[test]
fn linear_objective_equals_direct_evaluation() {
    let mut rng = SimRng::new(11);
    let mut worst: f64 = 0.0;
    for case in 0..1000u64 {
        let s = match case % 5 {
            0 => figure1_scenario(),
            1 => oracle_testbed(),
            _ => random_grid(case),
        };
        let sample = sample_stream(&s, case, 1 + rng.index(5)).pop().unwrap();
        let q = random_queues(&mut rng, s.caps);
        let v = rng.uniform_range(0.0, 200.0);
        let x = common::random_allocation(&mut rng, &sample.availability);
        let costs = slot_cost_coefficients(&q, &sample, &s, v);
        let t = build_transport_matrix(&sample.weather, s.grid_dims, &s.transport_params);
        let a = linear_objective(&costs, &x);
        let b = drift_plus_penalty(&x, &t, &s, &q, v);
        worst = worst.max((a - b).abs());
        assert!((a - b).abs() <= 1e-9, "case {case}: {a} vs {b}");
    }
    assert!(worst.is_finite());
}

#[test]
fn zero_queues_zero_v_cost_nothing() {
    let s = figure1_scenario();
    let sample = &sample_stream(&s, 1, 1)[0];
    let q = VirtualQueues::new(s.caps);
    let t = build_transport_matrix(&sample.weather, s.grid_dims, &s.transport_params);
    let x = sample.availability.clone();
    assert_eq!(drift_plus_penalty(&x, &t, &s, &q, 0.0), 0.0);
}
