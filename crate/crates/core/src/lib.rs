//! Health-aware fuel-mix allocation on a grid-world power system.
//!
//! A scenario ([`Scenario`]) places populations and plants on a rectangular
//! grid. Each slot the environment ([`env`]) draws demand, plant availability
//! and a wind field; a policy ([`policy`]) splits each subregion's demand
//! over fuels; plants are dispatched ([`dispatch`]); the hazardous air
//! pollutant (HAP) emissions are carried downwind ([`transport`]) and turned
//! into hospitalizations ([`health`]). [`sim`] runs whole episodes, policy
//! comparisons and parameter sweeps.
//!
//! ```
//! use healthgrid_core::{run_episode, scenarios, PolicyConfig};
//!
//! let scenario = scenarios::figure1_scenario();
//! let m = run_episode(&scenario, &PolicyConfig::lyapunov(10.0), 200, 7).unwrap();
//! assert!(m.avg_co2 <= scenario.caps.co2 * 1.05);
//! ```

pub mod dispatch;
pub mod env;
pub mod exec;
pub mod grid;
pub mod health;
pub mod policy;
pub mod rng;
pub mod scenarios;
pub mod sim;
pub mod transport;

pub use dispatch::{dispatch_plants, PlantSetpoint};
pub use env::{env_init, env_step, sample_stream, EnvSample, EnvState};
pub use exec::Execution;
pub use grid::{
    validate_scenario, Balancing, Direction, EmissionCaps, FuelMix, FuelType, HealthModel, PlantSpec, Scenario, Subregion,
    ValidationError, Violation,
};
pub use health::{hospitalizations, marginal_health};
pub use policy::{PolicyConfig, PolicyError, PolicyKind};
pub use sim::{
    compare_policies, replicate, run_episode, run_episode_traced, sweep, Metrics, SimError, SlotRecord, SweepAxis, SweepPoint,
};
pub use transport::{build_transport_matrix, disperse};
