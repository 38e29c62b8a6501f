use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::peg::PegError;
use crate::pool::{PoolError, PoolState};

use super::agents::AgentSpec;
use super::config::{ConfigError, ScenarioConfig};
use super::events::EventRecord;
use super::world::{step, SimRng, WorldState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("pool: {0}")]
    Pool(#[from] PoolError),
    #[error("peg at t={t}: {source}")]
    Peg { t: u64, source: PegError },
    #[error("peg at t={t} is {peg}, expected a positive price")]
    NonPositivePeg { t: u64, peg: f64 },
    #[error("thread pool: {0}")]
    Threads(String),
}

/// Per-step snapshot taken after all actions of the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: u64,
    pub price: f64,
    pub peg: f64,
    pub pol_share: f64,
}

pub const SERIES_HEADER: &str = "t,price,peg,pol_share";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SummaryMetrics {
    pub steps: u64,
    /// `sqrt(mean(((price_t - peg_t) / peg_t)^2))` over steps.
    pub peg_tracking_rmse: f64,
    pub interventions: u64,
    /// Slippage aborts plus probabilistic rejections.
    pub aborted_interventions: u64,
    pub slippage_aborts: u64,
    pub probabilistic_rejects: u64,
    pub final_price: f64,
    pub final_peg: f64,
    /// DAO wallet change valued in U at the final price.
    pub dao_wallet_pnl: f64,
    /// Summed front-runner wallet change valued in U at the final price.
    pub frontrunner_pnl: f64,
    pub frontrunner_attempts: u64,
    pub pol_share_initial: f64,
    pub pol_share_final: f64,
    pub pol_share_min: f64,
    /// Largest per-step change of total G (tokens) across pool and wallets.
    pub max_conservation_error_g: f64,
    pub max_conservation_error_u: f64,
}

impl SummaryMetrics {
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("steps", self.steps.to_string()),
            ("peg_tracking_rmse", self.peg_tracking_rmse.to_string()),
            ("interventions", self.interventions.to_string()),
            ("aborted_interventions", self.aborted_interventions.to_string()),
            ("slippage_aborts", self.slippage_aborts.to_string()),
            ("probabilistic_rejects", self.probabilistic_rejects.to_string()),
            ("final_price", self.final_price.to_string()),
            ("final_peg", self.final_peg.to_string()),
            ("dao_wallet_pnl", self.dao_wallet_pnl.to_string()),
            ("frontrunner_pnl", self.frontrunner_pnl.to_string()),
            ("frontrunner_attempts", self.frontrunner_attempts.to_string()),
            ("pol_share_initial", self.pol_share_initial.to_string()),
            ("pol_share_final", self.pol_share_final.to_string()),
            ("pol_share_min", self.pol_share_min.to_string()),
            ("max_conservation_error_g", self.max_conservation_error_g.to_string()),
            ("max_conservation_error_u", self.max_conservation_error_u.to_string()),
        ]
    }

    pub fn write_flat<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (k, v) in self.key_values() {
            writeln!(out, "{k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub seed: u64,
    pub events: Vec<EventRecord>,
    pub series: Vec<StepRecord>,
    pub metrics: SummaryMetrics,
    pub world: WorldState,
}

impl ScenarioOutput {
    pub fn write_series<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{SERIES_HEADER}")?;
        for r in &self.series {
            writeln!(out, "{},{},{},{}", r.t, r.price, r.peg, r.pol_share)?;
        }
        Ok(())
    }
}

fn raw_tokens(diff: u128) -> f64 {
    diff as f64 / crate::amount::SCALE as f64
}

/// Runs `config.run.steps` steps with `config.run.seed`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput, SimError> {
    run_scenario_with_seed(config, config.run.seed)
}

pub fn run_scenario_with_seed(config: &ScenarioConfig, seed: u64) -> Result<ScenarioOutput, SimError> {
    config.validate()?;
    let peg_source = config.peg_source()?;
    let pool = PoolState::seeded(config.pool.reserve_g, config.pool.reserve_u, config.pool.fee_bps)?;
    let mut world = WorldState::new(
        pool,
        config.pool.pol_share,
        config.agents.clone(),
        config.defense,
        config.policy,
    );
    let mut rng = SimRng::new(seed);
    let initial_agents: Vec<_> = world.agents.iter().map(|a| a.wallet).collect();
    let initial_dao = world.dao_wallet;
    let pol_share_initial = world.pol_share();

    let mut series = Vec::with_capacity(config.run.steps as usize);
    let mut metrics = SummaryMetrics {
        pol_share_initial,
        pol_share_min: pol_share_initial,
        ..SummaryMetrics::default()
    };
    let mut sq_sum = 0.0;
    let mut totals = world.token_totals();
    for t in 0..config.run.steps {
        let peg = peg_source
            .peg_at(t, &mut rng.peg)
            .map_err(|source| SimError::Peg { t, source })?;
        if !(peg > 0.0) {
            return Err(SimError::NonPositivePeg { t, peg });
        }
        step(&mut world, peg, &mut rng);

        let now = world.token_totals();
        metrics.max_conservation_error_g = metrics
            .max_conservation_error_g
            .max(raw_tokens(now.0.abs_diff(totals.0)));
        metrics.max_conservation_error_u = metrics
            .max_conservation_error_u
            .max(raw_tokens(now.1.abs_diff(totals.1)));
        totals = now;

        let price = world.pool.spot_price().unwrap_or(f64::NAN);
        sq_sum += ((price - peg) / peg).powi(2);
        let pol_share = world.pol_share();
        metrics.pol_share_min = metrics.pol_share_min.min(pol_share);
        series.push(StepRecord {
            t,
            price,
            peg,
            pol_share,
        });
    }

    let final_price = world.pool.spot_price().unwrap_or(f64::NAN);
    metrics.steps = config.run.steps;
    if let Some(last) = series.last() {
        metrics.peg_tracking_rmse = (sq_sum / series.len() as f64).sqrt();
        metrics.final_price = last.price;
        metrics.final_peg = last.peg;
        metrics.pol_share_final = last.pol_share;
        metrics.dao_wallet_pnl = world.dao_wallet.value_at(final_price) - initial_dao.value_at(final_price);
        metrics.frontrunner_pnl = world
            .agents
            .iter()
            .zip(&initial_agents)
            .filter(|(a, _)| matches!(a.spec, AgentSpec::FrontRunner { .. }))
            .map(|(a, init)| a.wallet.value_at(final_price) - init.value_at(final_price))
            .fold(0.0, |acc, x| acc + x);
    } else {
        metrics.pol_share_final = pol_share_initial;
    }
    metrics.interventions = world.counters.interventions;
    metrics.slippage_aborts = world.counters.slippage_aborts;
    metrics.probabilistic_rejects = world.counters.probabilistic_rejects;
    metrics.aborted_interventions = metrics.slippage_aborts + metrics.probabilistic_rejects;
    metrics.frontrunner_attempts = world
        .agents
        .iter()
        .filter(|a| matches!(a.spec, AgentSpec::FrontRunner { .. }))
        .map(|a| a.attempts)
        .sum();

    Ok(ScenarioOutput {
        seed,
        events: world.log.clone(),
        series,
        metrics,
        world,
    })
}

/// Runs one scenario per seed on at most `threads` workers (all cores when
/// `None`). Results come back in seed order.
pub fn run_batch(
    config: &ScenarioConfig,
    seeds: &[u64],
    threads: Option<usize>,
) -> Result<Vec<Result<ScenarioOutput, SimError>>, SimError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| SimError::Threads(e.to_string()))?;
    Ok(pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| run_scenario_with_seed(config, seed))
            .collect()
    }))
}
