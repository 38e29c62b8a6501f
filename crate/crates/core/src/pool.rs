//! Constant-product pool with LP-share accounting.

use primitive_types::U256;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::{isqrt, wide_mul, Amount};

pub const BPS_DENOMINATOR: u32 = 10_000;

/// Relative tolerance for the reserve ratio of a non-initial deposit.
pub const ADD_RATIO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoolError {
    #[error("empty pool")]
    EmptyPool,
    #[error("fee of {0} bps exceeds 10000")]
    InvalidFee(u32),
    #[error("deposit amounts must both be positive")]
    ZeroDeposit,
    #[error("ratio mismatch: deposit ratio {deposit} U/G, pool price {pool} U/G")]
    RatioMismatch { deposit: f64, pool: f64 },
    #[error("insufficient LP: requested {requested}, supply {supply}")]
    InsufficientLp { requested: Amount, supply: Amount },
    #[error("arithmetic overflow")]
    Overflow,
}

/// Swap direction, named by what goes in and what comes out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Sell G into the pool, receive U.
    GToU,
    /// Sell U into the pool, receive G.
    UToG,
}

/// Reserves of G (governance token) and U (quote token), LP supply and swap fee.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolState {
    reserve_g: Amount,
    reserve_u: Amount,
    lp_supply: Amount,
    fee_bps: u32,
}

impl PoolState {
    /// An uninitialized pool.
    pub fn empty(fee_bps: u32) -> Result<Self, PoolError> {
        if fee_bps > BPS_DENOMINATOR {
            return Err(PoolError::InvalidFee(fee_bps));
        }
        Ok(PoolState {
            reserve_g: Amount::ZERO,
            reserve_u: Amount::ZERO,
            lp_supply: Amount::ZERO,
            fee_bps,
        })
    }

    /// A pool seeded by a single first deposit of `reserve_g` and `reserve_u`.
    pub fn seeded(reserve_g: Amount, reserve_u: Amount, fee_bps: u32) -> Result<Self, PoolError> {
        let mut pool = PoolState::empty(fee_bps)?;
        pool.add_liquidity(reserve_g, reserve_u)?;
        Ok(pool)
    }

    pub fn reserve_g(&self) -> Amount {
        self.reserve_g
    }

    pub fn reserve_u(&self) -> Amount {
        self.reserve_u
    }

    pub fn lp_supply(&self) -> Amount {
        self.lp_supply
    }

    pub fn fee_bps(&self) -> u32 {
        self.fee_bps
    }

    pub fn is_initialized(&self) -> bool {
        !self.lp_supply.is_zero()
    }

    /// The product `reserve_g * reserve_u` in raw units.
    pub fn k(&self) -> U256 {
        wide_mul(self.reserve_g, self.reserve_u)
    }

    fn ensure_initialized(&self) -> Result<(), PoolError> {
        if self.is_initialized() {
            Ok(())
        } else {
            Err(PoolError::EmptyPool)
        }
    }

    /// Price of one G in U.
    pub fn spot_price(&self) -> Result<f64, PoolError> {
        self.ensure_initialized()?;
        Ok(self.reserve_u.raw() as f64 / self.reserve_g.raw() as f64)
    }

    /// Pool value in U: `reserve_g * price + reserve_u`.
    pub fn liquidity_value(&self) -> Result<Amount, PoolError> {
        self.ensure_initialized()?;
        let g_in_u = self
            .reserve_g
            .mul_div_floor(self.reserve_u, self.reserve_g)
            .ok_or(PoolError::Overflow)?;
        g_in_u.checked_add(self.reserve_u).ok_or(PoolError::Overflow)
    }

    /// Output of a swap without mutating the pool.
    pub fn quote_exact_in(&self, side: Side, amount_in: Amount) -> Result<Amount, PoolError> {
        self.ensure_initialized()?;
        if amount_in.is_zero() {
            return Ok(Amount::ZERO);
        }
        let (reserve_in, reserve_out) = match side {
            Side::GToU => (self.reserve_g, self.reserve_u),
            Side::UToG => (self.reserve_u, self.reserve_g),
        };
        let fee_keep = Amount::from_raw((BPS_DENOMINATOR - self.fee_bps) as u128);
        let effective = amount_in
            .mul_div_floor(fee_keep, Amount::from_raw(BPS_DENOMINATOR as u128))
            .ok_or(PoolError::Overflow)?;
        let denom = reserve_in.checked_add(effective).ok_or(PoolError::Overflow)?;
        // reserve_out - k / (reserve_in + effective), written without the subtraction
        let out = reserve_out.mul_div_floor(effective, denom).ok_or(PoolError::Overflow)?;
        assert!(out < reserve_out, "swap would drain the output reserve");
        Ok(out)
    }

    /// Swaps `amount_in` of the input token; the full input (fee included)
    /// stays in the pool.
    pub fn swap_exact_in(&mut self, side: Side, amount_in: Amount) -> Result<Amount, PoolError> {
        let out = self.quote_exact_in(side, amount_in)?;
        if amount_in.is_zero() {
            return Ok(out);
        }
        let (reserve_in, reserve_out) = match side {
            Side::GToU => (&mut self.reserve_g, &mut self.reserve_u),
            Side::UToG => (&mut self.reserve_u, &mut self.reserve_g),
        };
        *reserve_in = reserve_in.checked_add(amount_in).ok_or(PoolError::Overflow)?;
        *reserve_out = reserve_out.checked_sub(out).ok_or(PoolError::Overflow)?;
        Ok(out)
    }

    /// Deposits both tokens and returns the LP minted.
    ///
    /// The first deposit mints `sqrt(g * u)`; later deposits must match the
    /// pool ratio and mint pro rata to the G share.
    pub fn add_liquidity(&mut self, amount_g: Amount, amount_u: Amount) -> Result<Amount, PoolError> {
        if amount_g.is_zero() || amount_u.is_zero() {
            return Err(PoolError::ZeroDeposit);
        }
        let minted = if !self.is_initialized() {
            Amount::from_raw(isqrt(wide_mul(amount_g, amount_u)))
        } else {
            let deposit = amount_u.to_f64() / amount_g.to_f64();
            let pool = self.spot_price()?;
            if ((deposit - pool) / pool).abs() > ADD_RATIO_TOLERANCE {
                return Err(PoolError::RatioMismatch { deposit, pool });
            }
            self.lp_supply
                .mul_div_floor(amount_g, self.reserve_g)
                .ok_or(PoolError::Overflow)?
        };
        if minted.is_zero() {
            return Err(PoolError::ZeroDeposit);
        }
        self.reserve_g = self.reserve_g.checked_add(amount_g).ok_or(PoolError::Overflow)?;
        self.reserve_u = self.reserve_u.checked_add(amount_u).ok_or(PoolError::Overflow)?;
        self.lp_supply = self.lp_supply.checked_add(minted).ok_or(PoolError::Overflow)?;
        Ok(minted)
    }

    /// Burns `lp_amount` and releases the pro-rata share of both reserves.
    pub fn remove_liquidity(&mut self, lp_amount: Amount) -> Result<(Amount, Amount), PoolError> {
        if lp_amount > self.lp_supply {
            return Err(PoolError::InsufficientLp {
                requested: lp_amount,
                supply: self.lp_supply,
            });
        }
        if lp_amount.is_zero() {
            return Ok((Amount::ZERO, Amount::ZERO));
        }
        let (g_out, u_out) = if lp_amount == self.lp_supply {
            (self.reserve_g, self.reserve_u)
        } else {
            let g = self
                .reserve_g
                .mul_div_floor(lp_amount, self.lp_supply)
                .ok_or(PoolError::Overflow)?;
            let u = self
                .reserve_u
                .mul_div_floor(lp_amount, self.lp_supply)
                .ok_or(PoolError::Overflow)?;
            (g, u)
        };
        self.reserve_g = self.reserve_g.saturating_sub(g_out);
        self.reserve_u = self.reserve_u.saturating_sub(u_out);
        self.lp_supply = self.lp_supply.saturating_sub(lp_amount);
        Ok((g_out, u_out))
    }

    /// Pro-rata claim of `lp_amount` on the reserves, without burning.
    pub fn lp_claim(&self, lp_amount: Amount) -> (Amount, Amount) {
        if self.lp_supply.is_zero() {
            return (Amount::ZERO, Amount::ZERO);
        }
        let g = self
            .reserve_g
            .mul_div_floor(lp_amount, self.lp_supply)
            .unwrap_or(Amount::ZERO);
        let u = self
            .reserve_u
            .mul_div_floor(lp_amount, self.lp_supply)
            .unwrap_or(Amount::ZERO);
        (g, u)
    }
}

/// LP tokens held by one participant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpHolding {
    pub holder_id: String,
    pub lp_amount: Amount,
}

impl LpHolding {
    pub fn new(holder_id: impl Into<String>, lp_amount: Amount) -> Self {
        LpHolding {
            holder_id: holder_id.into(),
            lp_amount,
        }
    }
}
