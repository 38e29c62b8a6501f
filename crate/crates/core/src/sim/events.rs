use std::fmt;
use std::io::{self, Write};

use crate::amount::SignedAmount;

pub const EVENTS_HEADER: &str = "t,actor,action,amount_g,amount_u,price_pre,price_post,peg";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Swap,
    Burn,
    Mint,
    Intervene,
    DefenseAbort,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Swap => "swap",
            Action::Burn => "burn",
            Action::Mint => "mint",
            Action::Intervene => "intervene",
            Action::DefenseAbort => "defense_abort",
        })
    }
}

/// One logged action. `amount_g` and `amount_u` are the signed changes of
/// the pool reserves caused by the action.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub t: u64,
    pub seq: u64,
    pub actor: String,
    pub action: Action,
    pub amount_g: SignedAmount,
    pub amount_u: SignedAmount,
    pub price_pre: f64,
    pub price_post: f64,
    pub peg: f64,
    /// Spot price the intervention was planned at (intervene and
    /// defense_abort events only).
    pub plan_price: Option<f64>,
}

impl EventRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.t, self.actor, self.action, self.amount_g, self.amount_u, self.price_pre, self.price_post, self.peg
        )
    }
}

pub fn write_events_csv<W: Write>(events: &[EventRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{EVENTS_HEADER}")?;
    for e in events {
        writeln!(out, "{}", e.csv_row())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amount::Amount;

    #[test]
    fn csv_layout() {
        let e = EventRecord {
            t: 0,
            seq: 0,
            actor: "dao".into(),
            action: Action::Intervene,
            amount_g: Amount::ZERO.diff(Amount::from_tokens(3)),
            amount_u: SignedAmount::ZERO,
            price_pre: 2.0,
            price_post: 3.0,
            peg: 3.0,
            plan_price: Some(2.0),
        };
        let mut buf = Vec::new();
        write_events_csv(&[e], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{EVENTS_HEADER}\n0,dao,intervene,-3,0,2,3,3\n")
        );
    }
}
