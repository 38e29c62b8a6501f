//! Front-running defenses applied when a pending intervention executes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::intervention::InterventionPlan;
use crate::pool::PoolState;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DefenseConfig {
    #[default]
    None,
    /// Abort when the pool price moved more than `slippage_tolerance`
    /// (relative) since planning.
    SlippageThreshold { slippage_tolerance: f64 },
    /// Execute with probability `execution_probability`, decided only at
    /// execution time.
    Probabilistic { execution_probability: f64 },
}

impl DefenseConfig {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, String)> {
        match *self {
            DefenseConfig::None => Ok(()),
            DefenseConfig::SlippageThreshold { slippage_tolerance } => {
                if slippage_tolerance > 0.0 && slippage_tolerance.is_finite() {
                    Ok(())
                } else {
                    Err(("slippage_tolerance", format!("{slippage_tolerance} must be positive")))
                }
            }
            DefenseConfig::Probabilistic { execution_probability } => {
                check_probability(execution_probability).map_err(|m| ("execution_probability", m))
            }
        }
    }
}

fn check_probability(p: f64) -> Result<(), String> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(format!("{p} is outside the range (0, 1]"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardDecision {
    Proceed,
    Abort,
}

/// Aborts iff `|price_now - plan.p1| / plan.p1 > tolerance`; the bound is
/// closed, so a move of exactly `tolerance` proceeds.
pub fn apply_slippage_guard(plan: &InterventionPlan, pool_now: &PoolState, tolerance: f64) -> GuardDecision {
    match pool_now.spot_price() {
        Ok(now) if (now - plan.p1).abs() / plan.p1 <= tolerance => GuardDecision::Proceed,
        _ => GuardDecision::Abort,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecutionDecision {
    Execute,
    Reject,
}

/// Seeded Bernoulli draw standing in for a verifiable random function.
pub fn apply_probabilistic_execution<R: Rng + ?Sized>(rng: &mut R, p: f64) -> Result<ExecutionDecision, String> {
    check_probability(p)?;
    Ok(if rng.gen_bool(p) {
        ExecutionDecision::Execute
    } else {
        ExecutionDecision::Reject
    })
}
