//! World state and the per-step action order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amount::Amount;
use crate::intervention::{
    burn_and_swap, execute_intervention, plan_intervention, Direction, InterventionPlan, TokenDelta, TriggerPolicy,
};
use crate::pool::{LpHolding, PoolState, Side};

use super::agents::{optimal_arbitrage, AgentSpec, ReferencePrice, Wallet};
use super::defense::{
    apply_probabilistic_execution, apply_slippage_guard, DefenseConfig, ExecutionDecision, GuardDecision,
};
use super::events::{Action, EventRecord};

pub const DAO_ID: &str = "dao";
pub const PASSIVE_LP_ID: &str = "passive_lp";

/// Independent random streams, one per purpose, all derived from one seed.
/// Separate streams keep e.g. the defense draws from shifting trader
/// randomness, so paired-seed runs see the same market noise.
#[derive(Debug, Clone)]
pub struct SimRng {
    pub peg: ChaCha8Rng,
    pub traders: ChaCha8Rng,
    pub defense: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        SimRng {
            peg: stream(1),
            traders: stream(2),
            defense: stream(3),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AgentState {
    pub spec: AgentSpec,
    pub wallet: Wallet,
    pub attempts: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorldCounters {
    pub interventions: u64,
    pub slippage_aborts: u64,
    pub probabilistic_rejects: u64,
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub pool: PoolState,
    pub dao_lp: LpHolding,
    pub passive_lp: LpHolding,
    pub dao_wallet: Wallet,
    pub agents: Vec<AgentState>,
    /// Collects front-runner gas payments.
    pub gas_sink: Wallet,
    pub defense: DefenseConfig,
    pub policy: TriggerPolicy,
    pub t: u64,
    pub last_intervention: Option<u64>,
    pub counters: WorldCounters,
    pub log: Vec<EventRecord>,
    next_seq: u64,
}

impl WorldState {
    /// The DAO owns `pol_share` of the pool's LP supply; the rest sits with
    /// a passive provider that never trades.
    pub fn new(
        pool: PoolState,
        pol_share: f64,
        agents: Vec<AgentSpec>,
        defense: DefenseConfig,
        policy: TriggerPolicy,
    ) -> Self {
        let dao = pool.lp_supply().scale_by(pol_share);
        let passive = pool.lp_supply().saturating_sub(dao);
        WorldState {
            pool,
            dao_lp: LpHolding::new(DAO_ID, dao),
            passive_lp: LpHolding::new(PASSIVE_LP_ID, passive),
            dao_wallet: Wallet::default(),
            agents: agents
                .into_iter()
                .map(|spec| AgentState {
                    wallet: spec.wallet(),
                    spec,
                    attempts: 0,
                })
                .collect(),
            gas_sink: Wallet::default(),
            defense,
            policy,
            t: 0,
            last_intervention: None,
            counters: WorldCounters::default(),
            log: Vec::new(),
            next_seq: 0,
        }
    }

    /// Total G and U across the pool and every wallet.
    pub fn token_totals(&self) -> (u128, u128) {
        let wallets = std::iter::once(&self.dao_wallet)
            .chain(std::iter::once(&self.gas_sink))
            .chain(self.agents.iter().map(|a| &a.wallet));
        wallets.fold(
            (self.pool.reserve_g().raw(), self.pool.reserve_u().raw()),
            |(g, u), w| (g + w.g.raw(), u + w.u.raw()),
        )
    }

    /// DAO-owned share of the LP supply; zero for an empty pool.
    pub fn pol_share(&self) -> f64 {
        if self.pool.lp_supply().is_zero() {
            0.0
        } else {
            self.dao_lp.lp_amount.to_f64() / self.pool.lp_supply().to_f64()
        }
    }
}

fn credit(wallet: &mut Wallet, delta: TokenDelta) {
    wallet.g = wallet.g.checked_add(delta.g).expect("wallet overflow");
    wallet.u = wallet.u.checked_add(delta.u).expect("wallet overflow");
}

struct StepCtx<'w> {
    world: &'w mut WorldState,
    peg: f64,
    events: Vec<EventRecord>,
}

impl StepCtx<'_> {
    fn record(&mut self, actor: &str, action: Action, before: &PoolState, plan_price: Option<f64>) {
        let after = &self.world.pool;
        self.events.push(EventRecord {
            t: self.world.t,
            seq: self.world.next_seq,
            actor: actor.to_string(),
            action,
            amount_g: after.reserve_g().diff(before.reserve_g()),
            amount_u: after.reserve_u().diff(before.reserve_u()),
            price_pre: before.spot_price().unwrap_or(f64::NAN),
            price_post: after.spot_price().unwrap_or(f64::NAN),
            peg: self.peg,
            plan_price,
        });
        self.world.next_seq += 1;
    }

    /// Swaps from an agent wallet; `amount_in` is clamped to the balance.
    fn agent_swap(&mut self, idx: usize, side: Side, amount_in: Amount) -> Amount {
        let wallet = self.world.agents[idx].wallet;
        let amount_in = match side {
            Side::GToU => amount_in.min(wallet.g),
            Side::UToG => amount_in.min(wallet.u),
        };
        if amount_in.is_zero() {
            return Amount::ZERO;
        }
        let before = self.world.pool;
        let Ok(out) = self.world.pool.swap_exact_in(side, amount_in) else {
            return Amount::ZERO;
        };
        let wallet = &mut self.world.agents[idx].wallet;
        match side {
            Side::GToU => {
                wallet.g = wallet.g.saturating_sub(amount_in);
                wallet.u = wallet.u.checked_add(out).expect("wallet overflow");
            }
            Side::UToG => {
                wallet.u = wallet.u.saturating_sub(amount_in);
                wallet.g = wallet.g.checked_add(out).expect("wallet overflow");
            }
        }
        let actor = self.world.agents[idx].spec.id().to_string();
        self.record(&actor, Action::Swap, &before, None);
        out
    }

    fn noise_trades(&mut self, rng: &mut ChaCha8Rng) {
        for idx in 0..self.world.agents.len() {
            let AgentSpec::NoiseTrader {
                trade_probability,
                min_size,
                max_size,
                ..
            } = self.world.agents[idx].spec
            else {
                continue;
            };
            // every draw happens whether or not the trade goes through
            let trades = rng.gen::<f64>() < trade_probability;
            let buys_g = rng.gen_bool(0.5);
            let size_u = rng.gen_range(min_size.ln()..=max_size.ln()).exp();
            if !trades {
                continue;
            }
            let Ok(price) = self.world.pool.spot_price() else {
                continue;
            };
            if buys_g {
                let amount = Amount::from_f64(size_u).unwrap_or(Amount::ZERO);
                self.agent_swap(idx, Side::UToG, amount);
            } else {
                let amount = Amount::from_f64(size_u / price).unwrap_or(Amount::ZERO);
                self.agent_swap(idx, Side::GToU, amount);
            }
        }
    }

    fn pending_plan(&self) -> Option<InterventionPlan> {
        let w = &self.world;
        if let Some(last) = w.last_intervention {
            if w.t - last < w.policy.min_interval {
                return None;
            }
        }
        plan_intervention(&w.pool, self.peg, &w.dao_lp, &w.policy)
            .ok()
            .flatten()
            .filter(|p| !p.lp_to_burn.is_zero())
    }

    /// Front legs of every front-runner; returns `(agent, tokens bought)`.
    fn front_run(&mut self, plan: &InterventionPlan) -> Vec<(usize, Amount)> {
        let mut legs = Vec::new();
        for idx in 0..self.world.agents.len() {
            let AgentSpec::FrontRunner {
                sandwich_size,
                gas_cost,
                ..
            } = self.world.agents[idx].spec
            else {
                continue;
            };
            let gas = Amount::from_f64(gas_cost).unwrap_or(Amount::ZERO);
            let agent = &mut self.world.agents[idx];
            if agent.wallet.u < gas {
                continue;
            }
            agent.wallet.u = agent.wallet.u.saturating_sub(gas);
            agent.attempts += 1;
            self.world.gas_sink.u = self.world.gas_sink.u.checked_add(gas).expect("gas overflow");
            let got = match plan.direction {
                Direction::Up => {
                    let amount = Amount::from_f64(sandwich_size).unwrap_or(Amount::ZERO);
                    self.agent_swap(idx, Side::UToG, amount)
                }
                Direction::Down => {
                    let price = self.world.pool.spot_price().unwrap_or(plan.p1);
                    let amount = Amount::from_f64(sandwich_size / price).unwrap_or(Amount::ZERO);
                    self.agent_swap(idx, Side::GToU, amount)
                }
                Direction::None => Amount::ZERO,
            };
            legs.push((idx, got));
        }
        legs
    }

    fn dao_execute(&mut self, plan: &InterventionPlan, rng: &mut ChaCha8Rng) {
        let before = self.world.pool;
        let proceed = match self.world.defense {
            DefenseConfig::None => true,
            DefenseConfig::SlippageThreshold { slippage_tolerance } => {
                let ok = apply_slippage_guard(plan, &before, slippage_tolerance) == GuardDecision::Proceed;
                if !ok {
                    self.world.counters.slippage_aborts += 1;
                }
                ok
            }
            DefenseConfig::Probabilistic { execution_probability } => {
                let ok = apply_probabilistic_execution(rng, execution_probability)
                    .map(|d| d == ExecutionDecision::Execute)
                    .unwrap_or(false);
                if !ok {
                    self.world.counters.probabilistic_rejects += 1;
                }
                ok
            }
        };
        if !proceed {
            self.record(DAO_ID, Action::DefenseAbort, &before, Some(plan.p1));
            return;
        }
        let w = &mut *self.world;
        let gain = if w.pool == *plan.snapshot() {
            match execute_intervention(&mut w.pool, plan, &mut w.dao_lp) {
                Ok(report) => report.dao_balance_change,
                Err(_) => return,
            }
        } else {
            // the transaction lands on a pool that moved after planning
            let lp = plan.lp_to_burn.min(w.dao_lp.lp_amount);
            match burn_and_swap(&mut w.pool, lp, plan.direction) {
                Ok(moved) => {
                    w.dao_lp.lp_amount = w.dao_lp.lp_amount.saturating_sub(lp);
                    moved.gain(plan.direction)
                }
                Err(_) => return,
            }
        };
        credit(&mut w.dao_wallet, gain);
        w.counters.interventions += 1;
        w.last_intervention = Some(w.t);
        self.record(DAO_ID, Action::Intervene, &before, Some(plan.p1));
    }

    fn back_run(&mut self, direction: Direction, legs: Vec<(usize, Amount)>) {
        for (idx, got) in legs {
            match direction {
                Direction::Up => self.agent_swap(idx, Side::GToU, got),
                Direction::Down => self.agent_swap(idx, Side::UToG, got),
                Direction::None => Amount::ZERO,
            };
        }
    }

    fn arbitrage(&mut self) {
        for idx in 0..self.world.agents.len() {
            let AgentSpec::Arbitrageur {
                reference,
                ref external_prices,
                profit_threshold,
                ..
            } = self.world.agents[idx].spec
            else {
                continue;
            };
            let target = match reference {
                ReferencePrice::Peg => self.peg,
                ReferencePrice::External => external_prices[(self.world.t as usize).min(external_prices.len() - 1)],
            };
            let pool = self.world.pool;
            if !pool.is_initialized() {
                continue;
            }
            let wallet = self.world.agents[idx].wallet;
            let Some((buys_g, size)) = optimal_arbitrage(
                pool.reserve_g().to_f64(),
                pool.reserve_u().to_f64(),
                pool.fee_bps(),
                target,
            ) else {
                continue;
            };
            let size = Amount::from_f64(size).unwrap_or(Amount::ZERO);
            let (side, amount) = if buys_g {
                (Side::UToG, size.min(wallet.u))
            } else {
                (Side::GToU, size.min(wallet.g))
            };
            let Ok(out) = pool.quote_exact_in(side, amount) else {
                continue;
            };
            let profit = if buys_g {
                out.to_f64() * target - amount.to_f64()
            } else {
                out.to_f64() - amount.to_f64() * target
            };
            if profit > 0.0 && profit >= profit_threshold {
                self.agent_swap(idx, side, amount);
            }
        }
    }
}

/// Advances the world by one step at peg `peg`:
/// (1) noise trades, (2) front-runners see the DAO's pending plan and place
/// their front legs, (3) the DAO executes under the configured defense and
/// front-runners close their legs, (4) arbitrageurs trade toward their
/// reference. Returns the events of this step, which are also appended to
/// the world log.
pub fn step(world: &mut WorldState, peg: f64, rng: &mut SimRng) -> Vec<EventRecord> {
    let mut ctx = StepCtx {
        world,
        peg,
        events: Vec::new(),
    };
    ctx.noise_trades(&mut rng.traders);
    if let Some(plan) = ctx.pending_plan() {
        let legs = ctx.front_run(&plan);
        ctx.dao_execute(&plan, &mut rng.defense);
        ctx.back_run(plan.direction, legs);
    }
    ctx.arbitrage();
    let events = ctx.events;
    world.log.extend(events.iter().cloned());
    world.t += 1;
    events
}
