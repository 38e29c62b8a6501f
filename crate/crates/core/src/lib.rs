//! Constant-product pool simulation with protocol-owned-liquidity
//! interventions that steer the pool price to a peg.
//!
//! - [`pool`]: constant-product pool state machine with LP accounting.
//! - [`peg`]: portfolio and linear weighted-factor peg models.
//! - [`intervention`]: burn-and-swap planning and execution.
//! - [`sim`]: seeded agent-based market around one pool.

// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amount;
pub mod intervention;
pub mod peg;
pub mod pool;
pub mod sim;

pub use amount::{Amount, AmountError, SignedAmount};
pub use intervention::{
    burn_and_swap, delta_g, delta_u, execute_intervention, plan_intervention, plan_paper_approx, verify_invariance,
    Direction, InterventionError, InterventionPlan, InterventionReport, InvarianceCheck, Method, TokenDelta,
    TriggerPolicy,
};
pub use peg::{
    compute_peg_linear, compute_peg_portfolio, future_value, normalize_factor, read_factor_csv, FactorSeries,
    LinearPegModel, NormalizationMode, PegError, PortfolioPegModel,
};
pub use pool::{LpHolding, PoolError, PoolState, Side};
