//! Exhaustive search over stationary fuel mixes.

use serde::{Deserialize, Serialize};

use crate::env::{sample_stream, EnvSample};
use crate::exec::Execution;
use crate::grid::{Balancing, FuelMix, Scenario};
use crate::health::hospitalizations_unchecked;
use crate::transport::{build_transport_matrix, disperse};

use super::{resolution_steps, PolicyError, AVAILABILITY_TOLERANCE};

pub const MAX_ORACLE_CANDIDATES: u128 = 10_000_000;

/// Cells whose mixes are enumerated independently before falling back to a
/// single mix shared by every cell.
const PER_SUBREGION_LIMIT: usize = 2;

/// Feasibility slack on the time-average caps.
const CAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    PerSubregion,
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub mixes: Vec<FuelMix>,
    pub avg_hospitalizations: f64,
    pub avg_co2: f64,
    pub avg_hap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub mode: OracleMode,
    pub candidates: usize,
    /// `None` when no candidate meets both caps and availability every slot.
    pub solution: Option<OracleSolution>,
}

impl OracleOutcome {
    pub fn is_feasible(&self) -> bool {
        self.solution.is_some()
    }
}

/// Every point of the `1/steps`-spaced simplex in `n` dimensions, as integer
/// numerators, in lexicographic order.
pub fn simplex_grid(n: usize, steps: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(n - 1, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, steps, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, j| acc * (n - j) / (j + 1))
}

struct Evaluation {
    health: f64,
    co2: f64,
    hap: f64,
}

/// Best stationary mix on the `resolution`-spaced simplex grid.
///
/// Each candidate assigns a fixed mix to every demand-carrying cell
/// (independently when there are at most two such cells, otherwise one
/// shared mix), is simulated over the first `horizon` slots of the
/// scenario's own stream, and is feasible when it never exceeds
/// availability and its time-average emissions stay within the caps.
/// Returns the feasible candidate with the lowest time-average
/// hospitalizations, earliest candidate on ties.
pub fn oracle_fixed_mix(
    scenario: &Scenario,
    horizon: usize,
    resolution: f64,
    exec: Execution,
) -> Result<OracleOutcome, PolicyError> {
    let steps = resolution_steps(resolution)?;
    if scenario.balancing != Balancing::Local {
        return Err(PolicyError::OracleUnsupported("local balancing".into()));
    }
    if !scenario.is_deterministic() {
        return Err(PolicyError::OracleUnsupported(
            "a deterministic environment (no demand or supply noise, fixed weather)".into(),
        ));
    }
    if horizon == 0 {
        return Err(PolicyError::OracleUnsupported("horizon >= 1".into()));
    }
    let n = scenario.n_fuels();
    let s = scenario.n_subregions();

    let stream = sample_stream(scenario, scenario.rng_seed, horizon);
    let same = |a: &EnvSample, b: &EnvSample| {
        a.demand == b.demand && a.availability == b.availability && a.weather == b.weather
    };
    let distinct: Vec<&EnvSample> = if stream.iter().all(|x| same(x, &stream[0])) {
        vec![&stream[0]]
    } else {
        stream.iter().collect()
    };
    let transports: Vec<_> = distinct
        .iter()
        .map(|x| build_transport_matrix(&x.weather, scenario.grid_dims, &scenario.transport_params))
        .collect();

    let decision_cells: Vec<usize> = (0..s)
        .filter(|&i| distinct.iter().any(|x| x.demand[i] > 0.0))
        .collect();
    let mode = if decision_cells.len() <= PER_SUBREGION_LIMIT {
        OracleMode::PerSubregion
    } else {
        OracleMode::Shared
    };
    let grid_size = binomial((steps + n - 1) as u128, (n - 1) as u128);
    let slots = match mode {
        OracleMode::PerSubregion => decision_cells.len() as u32,
        OracleMode::Shared => 1,
    };
    let candidates = grid_size.checked_pow(slots).unwrap_or(u128::MAX);
    if candidates > MAX_ORACLE_CANDIDATES {
        return Err(PolicyError::InstanceTooLarge {
            candidates,
            limit: MAX_ORACLE_CANDIDATES,
        });
    }
    let grid = simplex_grid(n, steps);
    let weights: Vec<Vec<f64>> = grid
        .iter()
        .map(|p| p.iter().map(|&k| k as f64 / steps as f64).collect())
        .collect();
    let co2 = scenario.co2_factors();
    let hap = scenario.hap_factors();

    let choice = |index: usize| -> Vec<Option<usize>> {
        let mut out = vec![None; s];
        match mode {
            OracleMode::Shared => decision_cells.iter().for_each(|&i| out[i] = Some(index)),
            OracleMode::PerSubregion => {
                let mut rest = index;
                for &i in &decision_cells {
                    out[i] = Some(rest % grid.len());
                    rest /= grid.len();
                }
            }
        }
        out
    };

    let evaluate = |index: usize| -> Option<Evaluation> {
        let picks = choice(index);
        let mut total = Evaluation {
            health: 0.0,
            co2: 0.0,
            hap: 0.0,
        };
        let mut emitted = vec![0.0; s];
        for (sample, transport) in distinct.iter().zip(&transports) {
            for i in 0..s {
                emitted[i] = 0.0;
                let Some(g) = picks[i] else { continue };
                for k in 0..n {
                    let x = weights[g][k] * sample.demand[i];
                    if x > sample.availability[[i, k]] + AVAILABILITY_TOLERANCE {
                        return None;
                    }
                    total.co2 += x * co2[k];
                    emitted[i] += x * hap[k];
                }
                total.hap += emitted[i];
            }
            let c = disperse(&emitted, transport);
            total.health += hospitalizations_unchecked(&c, scenario).iter().sum::<f64>();
        }
        let slots = distinct.len() as f64;
        let avg = Evaluation {
            health: total.health / slots,
            co2: total.co2 / slots,
            hap: total.hap / slots,
        };
        (avg.co2 <= scenario.caps.co2 + CAP_TOLERANCE && avg.hap <= scenario.caps.hap + CAP_TOLERANCE).then_some(avg)
    };

    let count = candidates as usize;
    let results = exec.map_range(count, evaluate);
    let best = results
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.as_ref().map(|e| (k, e)))
        .min_by(|a, b| a.1.health.total_cmp(&b.1.health).then(a.0.cmp(&b.0)));

    let solution = best.map(|(k, e)| OracleSolution {
        mixes: choice(k)
            .into_iter()
            .map(|g| match g {
                Some(g) => FuelMix::new(weights[g].clone()).expect("grid points lie on the simplex"),
                None => FuelMix::pure(n, 0),
            })
            .collect(),
        avg_hospitalizations: e.health,
        avg_co2: e.co2,
        avg_hap: e.hap,
    });
    Ok(OracleOutcome {
        mode,
        candidates: count,
        solution,
    })
}
