//! Fixtures shared by the benchmarks.

use pathway_core::sim::ScenarioConfig;
use pathway_core::{Amount, LpHolding, PoolState};

const FRONT_RUNNER: &str = include_str!("../../../scenarios/front_runner.json");
const ARBITRAGE: &str = include_str!("../../../scenarios/arbitrage.json");

/// The 10 G / 20 U pool from the worked example, with the DAO owning all LP.
pub fn example_pool(fee_bps: u32) -> (PoolState, LpHolding) {
    let pool = PoolState::seeded(Amount::from_tokens(10), Amount::from_tokens(20), fee_bps).unwrap();
    let dao = LpHolding::new("dao", pool.lp_supply());
    (pool, dao)
}

pub fn front_runner() -> ScenarioConfig {
    ScenarioConfig::from_json(FRONT_RUNNER).unwrap()
}

pub fn arbitrage() -> ScenarioConfig {
    ScenarioConfig::from_json(ARBITRAGE).unwrap()
}

/// `config` with its step count replaced.
pub fn with_steps(mut config: ScenarioConfig, steps: u64) -> ScenarioConfig {
    config.run.steps = steps;
    config
}
