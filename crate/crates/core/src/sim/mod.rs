//! Discrete-time agent-based market around one pool.
//!
//! Each step runs a fixed action order (see [`step`]); all randomness comes
//! from [`SimRng`], so a scenario is a pure function of its config and seed.

pub mod agents;
pub mod config;
pub mod defense;
pub mod events;
pub mod scenario;
pub mod world;

pub use agents::{optimal_arbitrage, AgentSpec, ReferencePrice, Wallet};
pub use config::{ConfigError, PegModelConfig, PegSource, PoolConfig, RunConfig, ScenarioConfig};
pub use defense::{
    apply_probabilistic_execution, apply_slippage_guard, DefenseConfig, ExecutionDecision, GuardDecision,
};
pub use events::{write_events_csv, Action, EventRecord, EVENTS_HEADER};
pub use scenario::{
    run_batch, run_scenario, run_scenario_with_seed, ScenarioOutput, SimError, StepRecord, SummaryMetrics,
};
pub use world::{step, SimRng, WorldState};
