use serde::{Deserialize, Serialize};

use crate::amount::Amount;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wallet {
    #[serde(default)]
    pub g: Amount,
    #[serde(default)]
    pub u: Amount,
}

impl Wallet {
    pub fn new(g: Amount, u: Amount) -> Self {
        Wallet { g, u }
    }

    /// Value in U at `price`.
    pub fn value_at(&self, price: f64) -> f64 {
        self.g.to_f64() * price + self.u.to_f64()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferencePrice {
    #[default]
    Peg,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentSpec {
    /// Trades a random direction with probability `trade_probability` per
    /// step; sizes are log-uniform in `[min_size, max_size]` U.
    NoiseTrader {
        id: String,
        trade_probability: f64,
        min_size: f64,
        max_size: f64,
        #[serde(default)]
        wallet: Wallet,
    },
    /// Trades toward its reference price with the profit-maximizing size.
    Arbitrageur {
        id: String,
        #[serde(default)]
        reference: ReferencePrice,
        /// Indexed by step; the last value holds past the end.
        #[serde(default)]
        external_prices: Vec<f64>,
        #[serde(default)]
        profit_threshold: f64,
        #[serde(default)]
        wallet: Wallet,
    },
    /// Sandwiches every pending intervention with a fixed front leg.
    FrontRunner {
        id: String,
        /// Front-leg size in U.
        sandwich_size: f64,
        /// U paid per attempt.
        #[serde(default)]
        gas_cost: f64,
        #[serde(default)]
        wallet: Wallet,
    },
}

impl AgentSpec {
    pub fn id(&self) -> &str {
        match self {
            AgentSpec::NoiseTrader { id, .. }
            | AgentSpec::Arbitrageur { id, .. }
            | AgentSpec::FrontRunner { id, .. } => id,
        }
    }

    pub fn wallet(&self) -> Wallet {
        match self {
            AgentSpec::NoiseTrader { wallet, .. }
            | AgentSpec::Arbitrageur { wallet, .. }
            | AgentSpec::FrontRunner { wallet, .. } => *wallet,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        match self {
            AgentSpec::NoiseTrader {
                trade_probability,
                min_size,
                max_size,
                ..
            } => {
                if !(0.0..=1.0).contains(trade_probability) {
                    return Err("trade_probability must be in [0, 1]".into());
                }
                if !(*min_size > 0.0 && max_size >= min_size && max_size.is_finite()) {
                    return Err("sizes must satisfy 0 < min_size <= max_size".into());
                }
            }
            AgentSpec::Arbitrageur {
                reference,
                external_prices,
                profit_threshold,
                ..
            } => {
                if !(*profit_threshold >= 0.0) {
                    return Err("profit_threshold must be >= 0".into());
                }
                if *reference == ReferencePrice::External && external_prices.is_empty() {
                    return Err("external reference requires external_prices".into());
                }
                if external_prices.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
                    return Err("external_prices must be positive".into());
                }
            }
            AgentSpec::FrontRunner {
                sandwich_size,
                gas_cost,
                ..
            } => {
                if !(*sandwich_size > 0.0 && sandwich_size.is_finite()) {
                    return Err("sandwich_size must be positive".into());
                }
                if !(*gas_cost >= 0.0 && gas_cost.is_finite()) {
                    return Err("gas_cost must be >= 0".into());
                }
            }
        }
        Ok(())
    }
}

/// Profit-maximizing trade against a constant-product pool for a trader who
/// values G at `reference`. Returns `(side_buys_g, amount_in)`; `None` when
/// the pool already sits at the reference (fee-adjusted).
///
/// Buying G with U: `a = (sqrt(γ k P) - u) / γ`. Selling G for U:
/// `b = (sqrt(γ k / P) - g) / γ`, with `γ = 1 - fee`.
pub fn optimal_arbitrage(reserve_g: f64, reserve_u: f64, fee_bps: u32, reference: f64) -> Option<(bool, f64)> {
    let gamma = 1.0 - fee_bps as f64 / 10_000.0;
    if gamma <= 0.0 || reference <= 0.0 {
        return None;
    }
    let k = reserve_g * reserve_u;
    let buy = ((gamma * k * reference).sqrt() - reserve_u) / gamma;
    if buy > 0.0 {
        return Some((true, buy));
    }
    let sell = ((gamma * k / reference).sqrt() - reserve_g) / gamma;
    if sell > 0.0 {
        return Some((false, sell));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arbitrage_moves_price_to_reference_at_zero_fee() {
        let (buys, a) = optimal_arbitrage(10.0, 20.0, 0, 3.0).unwrap();
        assert!(buys);
        // k = 200, u' = sqrt(600)
        assert!((a - (600f64.sqrt() - 20.0)).abs() < 1e-12);
        let (buys, b) = optimal_arbitrage(10.0, 20.0, 0, 1.0).unwrap();
        assert!(!buys);
        assert!((b - (200f64.sqrt() - 10.0)).abs() < 1e-12);
        assert_eq!(optimal_arbitrage(10.0, 20.0, 0, 2.0), None);
    }

    #[test]
    fn fee_band_suppresses_small_gaps() {
        // 0.3% fee: a 0.1% gap is inside the no-arbitrage band
        assert_eq!(optimal_arbitrage(10.0, 20.0, 30, 2.002), None);
        assert!(optimal_arbitrage(10.0, 20.0, 30, 2.1).is_some());
    }

    #[test]
    fn validation() {
        let nt = |p: f64, lo: f64, hi: f64| AgentSpec::NoiseTrader {
            id: "n".into(),
            trade_probability: p,
            min_size: lo,
            max_size: hi,
            wallet: Wallet::default(),
        };
        assert!(nt(0.5, 1.0, 2.0).validate().is_ok());
        assert!(nt(1.5, 1.0, 2.0).validate().is_err());
        assert!(nt(0.5, 0.0, 2.0).validate().is_err());
        assert!(nt(0.5, 3.0, 2.0).validate().is_err());
        let fr = AgentSpec::FrontRunner {
            id: "f".into(),
            sandwich_size: 0.0,
            gas_cost: 0.0,
            wallet: Wallet::default(),
        };
        assert!(fr.validate().is_err());
    }
}
