//! Up/Down interventions: burn protocol-owned LP, swap the freed quote side
//! back through the pool, and land the price on the peg while keeping the
//! pool's liquidity value.
//!
//! Two planners are provided. [`Method::Exact`] burns the fraction
//! `f = 1 - sqrt(p1 / p2)` (Up) or `f = 1 - sqrt(p2 / p1)` (Down) of the LP
//! supply; at zero fee, burning `f` and swapping the whole freed side back
//! restores the untouched reserve and lands the price on the target. With a
//! fee the fraction is found by bisection on the simulated outcome.
//! [`Method::PaperApprox`] withdraws LP whose G share is `|Δg| / 2` and swaps
//! the freed U, which undershoots the target because the swap yields
//! `f(1 - f) g` rather than `f g`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::Amount;
use crate::pool::{LpHolding, PoolError, PoolState, Side};

pub const DEFAULT_DEVIATION_THRESHOLD: f64 = 0.005;
pub const BISECTION_MAX_ITERATIONS: usize = 200;
pub const BISECTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterventionError {
    #[error("peg must be positive, got {0}")]
    InvalidPeg(f64),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error("stale plan: pool changed since planning")]
    StalePlan,
    #[error("insufficient DAO LP: plan burns {required}, DAO holds {held}")]
    InsufficientDaoLp { required: Amount, held: Amount },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Raise the price: remove excess G.
    Up,
    /// Lower the price: remove excess U.
    Down,
    None,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Exact,
    #[serde(alias = "paper-approx")]
    PaperApprox,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::None => "none",
        })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::PaperApprox => "paper-approx",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Method::Exact),
            "paper-approx" | "paper_approx" => Ok(Method::PaperApprox),
            other => Err(format!("unknown method {other:?}, expected exact or paper-approx")),
        }
    }
}

/// When to intervene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TriggerPolicy {
    /// Minimum relative deviation `|peg - price| / price` that triggers a plan.
    pub deviation_threshold: f64,
    /// Minimum number of steps between two executed interventions.
    pub min_interval: u64,
    pub method: Method,
}

impl Default for TriggerPolicy {
    fn default() -> Self {
        TriggerPolicy {
            deviation_threshold: DEFAULT_DEVIATION_THRESHOLD,
            min_interval: 0,
            method: Method::Exact,
        }
    }
}

/// Token amounts gained by a wallet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TokenDelta {
    pub g: Amount,
    pub u: Amount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionPlan {
    pub direction: Direction,
    pub method: Method,
    /// Spot price when planned.
    pub p1: f64,
    /// Target (peg) price.
    pub p2: f64,
    /// Share of LP supply to burn.
    pub burn_fraction: f64,
    pub lp_to_burn: Amount,
    /// `(X_g, X_u)` released by the burn.
    pub expected_extract: (Amount, Amount),
    /// G out of the U→G swap (Up), or U out of the G→U swap (Down).
    pub expected_swap_out: Amount,
    /// Δg for Up, Δu for Down; zero for no-op plans.
    pub delta: f64,
    pub expected_final: PoolState,
    /// True when the DAO's LP holding limited the burn.
    pub capped: bool,
    snapshot: PoolState,
}

impl InterventionPlan {
    /// The U extracted, expressed in G at the planning price.
    pub fn extracted_u_in_g(&self) -> f64 {
        self.expected_extract.1.to_f64() / self.p1
    }

    pub fn snapshot(&self) -> &PoolState {
        &self.snapshot
    }
}

/// Relative errors of a realized pool against a target peg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceCheck {
    pub price_error: f64,
    /// Relative change of the liquidity value, in U for an Up move and in G
    /// for a Down move.
    pub liquidity_value_error: f64,
    pub quote_reserve_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterventionReport {
    pub direction: Direction,
    pub method: Method,
    pub before: PoolState,
    pub realized_final: PoolState,
    pub realized_price: f64,
    pub target_price: f64,
    pub lp_burned: Amount,
    pub extracted: (Amount, Amount),
    pub swap_out: Amount,
    pub dao_balance_change: TokenDelta,
    pub price_error: f64,
    pub liquidity_value_error: f64,
    pub quote_reserve_error: f64,
}

/// `Δg = g * (p1 / p2 - 1)`; negative when the price must rise.
pub fn delta_g(pool: &PoolState, p2: f64) -> Result<f64, InterventionError> {
    check_peg(p2)?;
    let p1 = pool.spot_price()?;
    Ok(pool.reserve_g().to_f64() * (p1 / p2 - 1.0))
}

/// `Δu = u * (p2 / p1 - 1)`; the Down-side mirror of [`delta_g`].
pub fn delta_u(pool: &PoolState, p2: f64) -> Result<f64, InterventionError> {
    check_peg(p2)?;
    let p1 = pool.spot_price()?;
    Ok(pool.reserve_u().to_f64() * (p2 / p1 - 1.0))
}

fn check_peg(peg: f64) -> Result<(), InterventionError> {
    if peg > 0.0 && peg.is_finite() {
        Ok(())
    } else {
        Err(InterventionError::InvalidPeg(peg))
    }
}

fn direction_for(p1: f64, peg: f64) -> Direction {
    if peg > p1 {
        Direction::Up
    } else if peg < p1 {
        Direction::Down
    } else {
        Direction::None
    }
}

/// Amounts moved by [`burn_and_swap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BurnSwap {
    pub extracted_g: Amount,
    pub extracted_u: Amount,
    pub swap_out: Amount,
}

impl BurnSwap {
    /// What the burner's wallet gains net of the swap input.
    pub fn gain(&self, direction: Direction) -> TokenDelta {
        match direction {
            Direction::Up => TokenDelta {
                g: self.extracted_g.checked_add(self.swap_out).expect("G gain overflow"),
                u: Amount::ZERO,
            },
            Direction::Down => TokenDelta {
                g: Amount::ZERO,
                u: self.extracted_u.checked_add(self.swap_out).expect("U gain overflow"),
            },
            Direction::None => TokenDelta::default(),
        }
    }
}

/// Burns `lp_amount` and swaps the whole freed quote side (U for Up, G for
/// Down) back into the pool. Performs no staleness or ownership checks.
pub fn burn_and_swap(pool: &mut PoolState, lp_amount: Amount, direction: Direction) -> Result<BurnSwap, PoolError> {
    if direction == Direction::None || lp_amount.is_zero() {
        return Ok(BurnSwap::default());
    }
    let (extracted_g, extracted_u) = pool.remove_liquidity(lp_amount)?;
    let swap_out = match direction {
        Direction::Up => pool.swap_exact_in(Side::UToG, extracted_u)?,
        Direction::Down => pool.swap_exact_in(Side::GToU, extracted_g)?,
        Direction::None => unreachable!(),
    };
    Ok(BurnSwap {
        extracted_g,
        extracted_u,
        swap_out,
    })
}

fn simulate(pool: &PoolState, lp_amount: Amount, direction: Direction) -> Result<(PoolState, BurnSwap), PoolError> {
    let mut trial = *pool;
    let moved = burn_and_swap(&mut trial, lp_amount, direction)?;
    Ok((trial, moved))
}

fn realized_price(pool: &PoolState, fraction: f64, direction: Direction) -> Result<f64, PoolError> {
    let (after, _) = simulate(pool, pool.lp_supply().scale_by(fraction), direction)?;
    after.spot_price()
}

/// Burn fraction that lands the price exactly on `p2`.
fn exact_fraction(pool: &PoolState, p1: f64, p2: f64, direction: Direction) -> Result<f64, PoolError> {
    let closed = match direction {
        Direction::Up => 1.0 - (p1 / p2).sqrt(),
        Direction::Down => 1.0 - (p2 / p1).sqrt(),
        Direction::None => return Ok(0.0),
    };
    if pool.fee_bps() == 0 {
        return Ok(closed);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..BISECTION_MAX_ITERATIONS {
        if hi - lo <= BISECTION_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let price = realized_price(pool, mid, direction)?;
        let short = match direction {
            Direction::Up => price < p2,
            _ => price > p2,
        };
        if short {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn build_plan(
    pool: &PoolState,
    peg: f64,
    dao_lp: Amount,
    method: Method,
) -> Result<InterventionPlan, InterventionError> {
    check_peg(peg)?;
    let p1 = pool.spot_price()?;
    let direction = direction_for(p1, peg);
    let (fraction, delta) = match (method, direction) {
        (_, Direction::None) => (0.0, 0.0),
        (Method::Exact, Direction::Up) => (exact_fraction(pool, p1, peg, direction)?, delta_g(pool, peg)?),
        (Method::Exact, Direction::Down) => (exact_fraction(pool, p1, peg, direction)?, delta_u(pool, peg)?),
        // X_g = |Δg| / 2 is the fraction |Δg| / (2g) of the pool.
        (Method::PaperApprox, Direction::Up) => ((1.0 - p1 / peg) / 2.0, delta_g(pool, peg)?),
        (Method::PaperApprox, Direction::Down) => ((1.0 - peg / p1) / 2.0, delta_u(pool, peg)?),
    };
    let mut lp_to_burn = pool.lp_supply().scale_by(fraction);
    let capped = lp_to_burn > dao_lp;
    if capped {
        lp_to_burn = dao_lp;
    }
    let (expected_final, moved) = simulate(pool, lp_to_burn, direction)?;
    let burn_fraction = if capped {
        lp_to_burn.to_f64() / pool.lp_supply().to_f64()
    } else {
        fraction
    };
    Ok(InterventionPlan {
        direction,
        method,
        p1,
        p2: peg,
        burn_fraction,
        lp_to_burn,
        expected_extract: (moved.extracted_g, moved.extracted_u),
        expected_swap_out: moved.swap_out,
        delta,
        expected_final,
        capped,
        snapshot: *pool,
    })
}

/// Plans an intervention toward `peg`, or `None` when the relative deviation
/// is zero or below the policy threshold. The burn is capped at `dao_lp`.
pub fn plan_intervention(
    pool: &PoolState,
    peg: f64,
    dao_lp: &LpHolding,
    policy: &TriggerPolicy,
) -> Result<Option<InterventionPlan>, InterventionError> {
    check_peg(peg)?;
    let p1 = pool.spot_price()?;
    let deviation = (peg - p1).abs() / p1;
    if deviation == 0.0 || deviation < policy.deviation_threshold {
        return Ok(None);
    }
    build_plan(pool, peg, dao_lp.lp_amount, policy.method).map(Some)
}

/// The literal half-from-burn, half-from-swap procedure, assuming the DAO
/// owns the whole pool. Always returns a plan; a zero deviation yields a
/// no-op plan with direction `None`.
pub fn plan_paper_approx(pool: &PoolState, peg: f64) -> Result<InterventionPlan, InterventionError> {
    build_plan(pool, peg, pool.lp_supply(), Method::PaperApprox)
}

/// Executes a plan against the pool it was made for and debits the DAO's LP.
pub fn execute_intervention(
    pool: &mut PoolState,
    plan: &InterventionPlan,
    dao: &mut LpHolding,
) -> Result<InterventionReport, InterventionError> {
    if *pool != plan.snapshot {
        return Err(InterventionError::StalePlan);
    }
    if dao.lp_amount < plan.lp_to_burn {
        return Err(InterventionError::InsufficientDaoLp {
            required: plan.lp_to_burn,
            held: dao.lp_amount,
        });
    }
    let before = *pool;
    let moved = burn_and_swap(pool, plan.lp_to_burn, plan.direction)?;
    dao.lp_amount = dao.lp_amount.saturating_sub(plan.lp_to_burn);
    let check = verify_invariance(&before, pool, plan.p2);
    Ok(InterventionReport {
        direction: plan.direction,
        method: plan.method,
        before,
        realized_final: *pool,
        realized_price: pool.spot_price().unwrap_or(f64::NAN),
        target_price: plan.p2,
        lp_burned: plan.lp_to_burn,
        extracted: (moved.extracted_g, moved.extracted_u),
        swap_out: moved.swap_out,
        dao_balance_change: moved.gain(plan.direction),
        price_error: check.price_error,
        liquidity_value_error: check.liquidity_value_error,
        quote_reserve_error: check.quote_reserve_error,
    })
}

fn rel_change(before: f64, after: f64) -> f64 {
    if before == 0.0 {
        if after == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((after - before) / before).abs()
    }
}

/// Compares two pool states against a target peg.
///
/// The untouched side is U when the peg sits above the starting price and G
/// when it sits below. Errors are infinite when either pool is empty.
pub fn verify_invariance(before: &PoolState, after: &PoolState, peg: f64) -> InvarianceCheck {
    let (Ok(p_before), Ok(p_after), Ok(v_before), Ok(v_after)) = (
        before.spot_price(),
        after.spot_price(),
        before.liquidity_value(),
        after.liquidity_value(),
    ) else {
        return InvarianceCheck {
            price_error: f64::INFINITY,
            liquidity_value_error: f64::INFINITY,
            quote_reserve_error: f64::INFINITY,
        };
    };
    // A Down intervention keeps G fixed, so its value is compared in G units.
    let (quote_reserve_error, liquidity_value_error) = if peg < p_before {
        (
            rel_change(before.reserve_g().to_f64(), after.reserve_g().to_f64()),
            rel_change(v_before.to_f64() / p_before, v_after.to_f64() / p_after),
        )
    } else {
        (
            rel_change(before.reserve_u().to_f64(), after.reserve_u().to_f64()),
            rel_change(v_before.to_f64(), v_after.to_f64()),
        )
    };
    InvarianceCheck {
        price_error: rel_change(peg, p_after),
        liquidity_value_error,
        quote_reserve_error,
    }
}
