//! Instance generators and brute-force references shared by the
//! integration tests.
#![allow(dead_code)]

use healthgrid_core::env::EnvSample;
use healthgrid_core::grid::Direction;
use healthgrid_core::policy::simplex_grid;
use healthgrid_core::rng::SimRng;
use ndarray::Array2;

/// One-subregion slot with `n` fuels: (costs, sample).
///
/// A fifth of the instances use integer costs so ties come up.
pub fn random_slot(rng: &mut SimRng, n: usize) -> (Array2<f64>, EnvSample) {
    let ties = rng.uniform() < 0.2;
    let costs = Array2::from_shape_fn((1, n), |_| {
        let k = rng.uniform_range(0.0, 10.0);
        if ties {
            k.floor()
        } else {
            k
        }
    });
    let availability = Array2::from_shape_fn((1, n), |_| rng.uniform_range(0.0, 60.0));
    let demand = rng.uniform_range(0.0, 100.0);
    let sample = EnvSample {
        t: 0,
        demand: vec![demand],
        plant_availability: vec![availability.row(0).to_vec()],
        availability,
        weather: vec![Direction::Calm],
    };
    (costs, sample)
}

/// Exact LP optimum of `min k.x  s.t.  0 <= x <= p, sum x = min(d, sum p)`
/// by enumerating vertices: every fuel but one sits at a bound.
pub fn vertex_optimum(k: &[f64], p: &[f64], d: f64) -> f64 {
    let n = k.len();
    let supply: f64 = p.iter().sum();
    if supply <= d {
        return k.iter().zip(p).map(|(a, b)| a * b).sum();
    }
    let mut best = f64::INFINITY;
    for free in 0..n {
        for mask in 0u32..(1 << n) {
            if mask & (1 << free) != 0 {
                continue;
            }
            let mut x = vec![0.0; n];
            let mut used = 0.0;
            for j in 0..n {
                if mask & (1 << j) != 0 {
                    x[j] = p[j];
                    used += p[j];
                }
            }
            let rest = d - used;
            if rest < -1e-12 || rest > p[free] + 1e-12 {
                continue;
            }
            x[free] = rest.clamp(0.0, p[free]);
            best = best.min(k.iter().zip(&x).map(|(a, b)| a * b).sum());
        }
    }
    best
}

/// Best objective among `1/steps`-grid mixes that respect availability.
pub fn grid_optimum(k: &[f64], p: &[f64], d: f64, steps: usize) -> Option<f64> {
    simplex_grid(k.len(), steps)
        .into_iter()
        .filter_map(|w| {
            let x: Vec<f64> = w.iter().map(|&j| j as f64 / steps as f64 * d).collect();
            x.iter()
                .zip(p)
                .all(|(a, b)| *a <= b + 1e-9)
                .then(|| k.iter().zip(&x).map(|(a, b)| a * b).sum())
        })
        .min_by(f64::total_cmp)
}

/// A random allocation within availability.
pub fn random_allocation(rng: &mut SimRng, availability: &Array2<f64>) -> Array2<f64> {
    availability.mapv(|a| a * rng.uniform())
}

pub fn random_field(rng: &mut SimRng, cells: usize) -> Vec<Direction> {
    (0..cells).map(|_| Direction::ALL[rng.index(Direction::ALL.len())]).collect()
}
