use ndarray::Array2;

use crate::env::EnvSample;
use crate::grid::{EmissionCaps, Scenario};

use super::knapsack::Pool;
use super::SlotDecision;

const MAX_MOVES: usize = 100_000;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pollutant {
    Co2,
    Hap,
}

struct Factors {
    co2: Vec<f64>,
    hap: Vec<f64>,
}

impl Factors {
    fn of(&self, p: Pollutant, n: usize) -> f64 {
        match p {
            Pollutant::Co2 => self.co2[n],
            Pollutant::Hap => self.hap[n],
        }
    }
}

fn tolerance(cap: f64) -> f64 {
    1e-12 * cap.abs().max(1.0)
}

fn totals(energy: &Array2<f64>, f: &Factors) -> (f64, f64) {
    let mut co2 = 0.0;
    let mut hap = 0.0;
    for ((_, n), &x) in energy.indexed_iter() {
        co2 += x * f.co2[n];
        hap += x * f.hap[n];
    }
    (co2, hap)
}

/// Enforce the per-slot (marginal) emission caps on a decision.
///
/// While a cap is exceeded, energy is shifted inside a balancing pool from a
/// source with a higher factor on the violated pollutant to one with a lower
/// factor and spare availability, cheapest per unit of reduction under
/// `costs` first, never pushing the other pollutant over its cap. When no
/// such shift exists, output is curtailed from the highest-factor sources
/// and the curtailed energy is recorded as shortfall.
pub fn marginal_cap_filter(decision: &SlotDecision, sample: &EnvSample, scenario: &Scenario, costs: &Array2<f64>) -> SlotDecision {
    let Some(caps) = scenario.marginal_caps else {
        return decision.clone();
    };
    let f = Factors {
        co2: scenario.co2_factors(),
        hap: scenario.hap_factors(),
    };
    let (co2, hap) = totals(&decision.per_fuel_energy, &f);
    if co2 <= caps.co2 && hap <= caps.hap {
        return decision.clone();
    }
    let pools = Pool::for_sample(sample, scenario.balancing);
    let mut energy = decision.per_fuel_energy.clone();
    let mut shortfall = decision.shortfall.clone();
    enforce(&mut energy, &mut shortfall, &pools, sample, &f, caps, costs);
    SlotDecision::from_allocation(energy, shortfall)
}

fn cap_of(caps: EmissionCaps, p: Pollutant) -> f64 {
    match p {
        Pollutant::Co2 => caps.co2,
        Pollutant::Hap => caps.hap,
    }
}

fn enforce(
    energy: &mut Array2<f64>,
    shortfall: &mut [f64],
    pools: &[Pool],
    sample: &EnvSample,
    f: &Factors,
    caps: EmissionCaps,
    costs: &Array2<f64>,
) {
    let availability = &sample.availability;
    for iteration in 0.. {
        let (co2, hap) = totals(energy, f);
        let excess = |p: Pollutant| match p {
            Pollutant::Co2 => co2 - caps.co2,
            Pollutant::Hap => hap - caps.hap,
        };
        let violated = |p: Pollutant| excess(p) > tolerance(cap_of(caps, p));
        let relative = |p: Pollutant| {
            let cap = cap_of(caps, p);
            if cap > 0.0 {
                excess(p) / cap
            } else {
                f64::INFINITY
            }
        };
        let target = match (violated(Pollutant::Co2), violated(Pollutant::Hap)) {
            (false, false) => return,
            (true, false) => Pollutant::Co2,
            (false, true) => Pollutant::Hap,
            (true, true) => {
                if relative(Pollutant::Hap) > relative(Pollutant::Co2) {
                    Pollutant::Hap
                } else {
                    Pollutant::Co2
                }
            }
        };
        let other = match target {
            Pollutant::Co2 => Pollutant::Hap,
            Pollutant::Hap => Pollutant::Co2,
        };
        let need = excess(target);
        let other_violated = violated(other);
        let other_slack = -excess(other);

        // (ratio, src, dst, amount)
        let mut best: Option<(f64, (usize, usize), (usize, usize), f64)> = None;
        if iteration < MAX_MOVES {
            for pool in pools {
                for &src in &pool.members {
                    let held = energy[src];
                    if held <= 0.0 {
                        continue;
                    }
                    for &dst in &pool.members {
                        let gain = f.of(target, src.1) - f.of(target, dst.1);
                        let room = availability[dst] - energy[dst];
                        if gain <= 0.0 || room <= 0.0 {
                            continue;
                        }
                        let other_delta = f.of(other, dst.1) - f.of(other, src.1);
                        let mut amount = held.min(room).min(need / gain);
                        if other_delta > 0.0 {
                            if other_violated || other_slack <= tolerance(cap_of(caps, other)) {
                                continue;
                            }
                            amount = amount.min(other_slack / other_delta);
                        }
                        if amount <= 0.0 {
                            continue;
                        }
                        let ratio = (costs[dst] - costs[src]) / gain;
                        if best.is_none_or(|b| ratio < b.0) {
                            best = Some((ratio, src, dst, amount));
                        }
                    }
                }
            }
        }

        if let Some((_, src, dst, amount)) = best {
            energy[src] -= amount;
            energy[dst] += amount;
            continue;
        }

        // No admissible shift: curtail the dirtiest source for the target.
        let mut worst: Option<(usize, (usize, usize))> = None;
        for (p, pool) in pools.iter().enumerate() {
            for &src in &pool.members {
                if energy[src] <= 0.0 || f.of(target, src.1) <= 0.0 {
                    continue;
                }
                let key = (f.of(target, src.1), costs[src]);
                let better = match worst {
                    None => true,
                    Some((_, w)) => {
                        let wkey = (f.of(target, w.1), costs[w]);
                        key.0 > wkey.0 || (key.0 == wkey.0 && key.1 > wkey.1)
                    }
                };
                if better {
                    worst = Some((p, src));
                }
            }
        }
        let Some((p, src)) = worst else { return };
        let cut = energy[src].min(need / f.of(target, src.1));
        energy[src] -= cut;
        pools[p].attribute_shortfall(cut, &sample.demand, shortfall);
    }
}
