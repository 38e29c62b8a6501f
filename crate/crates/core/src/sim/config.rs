//! Scenario configuration: a JSON tree with sections `pool`, `peg_model`,
//! `agents`, `defense`, `policy` and `run`.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::Amount;
use crate::intervention::TriggerPolicy;
use crate::peg::{
    compute_peg_linear, compute_peg_portfolio, FactorSeries, LinearPegModel, LinearPegParams, PegError,
    PortfolioHolding, PortfolioPegModel, SupplySchedule,
};
use crate::pool::BPS_DENOMINATOR;

use super::agents::AgentSpec;
use super::defense::DefenseConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolConfig {
    pub reserve_g: Amount,
    pub reserve_u: Amount,
    #[serde(default)]
    pub fee_bps: u32,
    /// Share of the initial LP supply owned by the DAO.
    #[serde(default = "one")]
    pub pol_share: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSeriesConfig {
    pub factor_id: String,
    pub samples: Vec<(i64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PegModelConfig {
    Constant {
        price: f64,
    },
    /// One price per step; the last value holds past the end.
    Series {
        prices: Vec<f64>,
    },
    Portfolio {
        holdings: Vec<PortfolioHolding>,
        supply: SupplySchedule,
    },
    Linear {
        model: LinearPegParams,
        factors: Vec<FactorSeriesConfig>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub steps: u64,
    #[serde(default)]
    pub seed: u64,
    /// Independent runs with seeds `seed, seed + 1, ...`.
    #[serde(default = "one_u32")]
    pub replicates: u32,
}

fn one_u32() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub pool: PoolConfig,
    pub peg_model: PegModelConfig,
    #[serde(default)]
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub defense: DefenseConfig,
    #[serde(default)]
    pub policy: TriggerPolicy,
    pub run: RunConfig,
}

impl ScenarioConfig {
    /// Parses and validates a JSON scenario.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let pool = &self.pool;
        if pool.reserve_g.is_zero() {
            return Err(ConfigError::invalid("pool.reserve_g", "must be positive"));
        }
        if pool.reserve_u.is_zero() {
            return Err(ConfigError::invalid("pool.reserve_u", "must be positive"));
        }
        if pool.fee_bps > BPS_DENOMINATOR {
            return Err(ConfigError::invalid("pool.fee_bps", "must be in 0..=10000"));
        }
        if !(0.0..=1.0).contains(&pool.pol_share) {
            return Err(ConfigError::invalid("pool.pol_share", "must be in [0, 1]"));
        }
        self.peg_source()?;

        let mut ids = BTreeSet::new();
        for (i, agent) in self.agents.iter().enumerate() {
            agent
                .validate()
                .map_err(|message| ConfigError::invalid(format!("agents[{i}]"), message))?;
            if !ids.insert(agent.id()) {
                return Err(ConfigError::invalid(format!("agents[{i}].id"), "duplicate agent id"));
            }
        }
        self.defense
            .validate()
            .map_err(|(field, message)| ConfigError::invalid(format!("defense.{field}"), message))?;
        if !(self.policy.deviation_threshold >= 0.0) {
            return Err(ConfigError::invalid("policy.deviation_threshold", "must be >= 0"));
        }
        if self.run.replicates == 0 {
            return Err(ConfigError::invalid("run.replicates", "must be at least 1"));
        }
        Ok(())
    }

    /// Builds the validated peg source.
    pub fn peg_source(&self) -> Result<PegSource, ConfigError> {
        let field = "peg_model";
        let peg_err = |e: PegError| ConfigError::invalid(field, e.to_string());
        match &self.peg_model {
            PegModelConfig::Constant { price } => {
                if !(*price > 0.0 && price.is_finite()) {
                    return Err(ConfigError::invalid("peg_model.price", "must be positive"));
                }
                Ok(PegSource::Constant(*price))
            }
            PegModelConfig::Series { prices } => {
                if prices.is_empty() {
                    return Err(ConfigError::invalid("peg_model.prices", "must not be empty"));
                }
                if let Some(i) = prices.iter().position(|p| !(*p > 0.0 && p.is_finite())) {
                    return Err(ConfigError::invalid(
                        format!("peg_model.prices[{i}]"),
                        "must be positive",
                    ));
                }
                Ok(PegSource::Series(prices.clone()))
            }
            PegModelConfig::Portfolio { holdings, supply } => {
                let model = PortfolioPegModel {
                    holdings: holdings.clone(),
                    supply: supply.clone(),
                };
                model.validate().map_err(peg_err)?;
                Ok(PegSource::Portfolio(model))
            }
            PegModelConfig::Linear { model, factors } => {
                let model = LinearPegModel::new(model.clone())
                    .map_err(|e| ConfigError::invalid("peg_model.model.weights", e.to_string()))?;
                let factors = factors
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        FactorSeries::new(f.factor_id.clone(), f.samples.clone())
                            .map_err(|e| ConfigError::invalid(format!("peg_model.factors[{i}]"), e.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                for w in &model.params().weights {
                    if !factors.iter().any(|f| f.factor_id == w.factor_id) {
                        return Err(ConfigError::invalid(
                            "peg_model.factors",
                            format!("missing factor {}", w.factor_id),
                        ));
                    }
                }
                Ok(PegSource::Linear { model, factors })
            }
        }
    }
}

/// Runtime peg model used by the simulator.
#[derive(Debug, Clone)]
pub enum PegSource {
    Constant(f64),
    Series(Vec<f64>),
    Portfolio(PortfolioPegModel),
    Linear {
        model: LinearPegModel,
        factors: Vec<FactorSeries>,
    },
}

impl PegSource {
    pub fn peg_at<R: Rng + ?Sized>(&self, t: u64, rng: &mut R) -> Result<f64, PegError> {
        match self {
            PegSource::Constant(p) => Ok(*p),
            PegSource::Series(prices) => Ok(prices[(t as usize).min(prices.len() - 1)]),
            PegSource::Portfolio(model) => compute_peg_portfolio(model, t as i64),
            PegSource::Linear { model, factors } => compute_peg_linear(model, factors, t as i64, rng),
        }
    }
}
