//! Reconfiguration bookkeeping: reports, transfer cost, and the switch rule.

use geokv_core::{Configuration, DcId, Key, Model, Protocol};
use serde::{Deserialize, Serialize};

use crate::effect::Nanos;
use crate::message::Sizing;

/// Timeline of one completed reconfiguration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconfigReport {
    pub key: Key,
    pub from_epoch: u64,
    pub to_epoch: u64,
    pub from_protocol: Protocol,
    pub to_protocol: Protocol,
    pub from_servers: Vec<DcId>,
    pub to_servers: Vec<DcId>,
    pub started: Nanos,
    pub query_done: Nanos,
    /// Only coded sources need the chunk-gathering step.
    pub get_done: Option<Nanos>,
    pub write_done: Nanos,
    /// When the old servers were told to retire.
    pub finished: Nanos,
}

impl ReconfigReport {
    pub fn duration_ms(&self) -> f64 {
        (self.finished - self.started) as f64 / 1e6
    }
}

/// A reconfiguration the controller has been asked to perform.
#[derive(Clone, Debug)]
pub struct ReconfigPlan {
    pub key: Key,
    /// Target layout; its epoch is assigned when the plan starts.
    pub target: Configuration,
}

/// Dollar cost of the controller traffic for moving one key from `old` to `new`,
/// assuming every server answers.
pub fn recost(model: &Model, old: &Configuration, new: &Configuration, controller: DcId, value_size: f64, sizing: &Sizing) -> f64 {
    let c = controller;
    let p = |a: DcId, b: DcId| model.price(a, b);
    let mut dollars = 0.0;
    let query_reply = match old.protocol {
        Protocol::Abd => value_size,
        Protocol::Cas => sizing.meta,
    };
    for &s in &old.servers {
        dollars += sizing.control * p(c, s) + query_reply * p(s, c);
        if old.protocol == Protocol::Cas {
            dollars += sizing.meta * p(c, s) + value_size / old.k as f64 * p(s, c);
        }
        dollars += sizing.meta * p(c, s);
    }
    let written = match new.protocol {
        Protocol::Abd => value_size,
        Protocol::Cas => value_size / new.k as f64,
    };
    for &s in &new.servers {
        dollars += written * p(c, s) + sizing.control * p(s, c);
    }
    for d in model.dcs() {
        dollars += sizing.meta * p(c, d);
    }
    dollars
}

/// Whether switching pays off: the saving accumulated over `horizon` must beat
/// the transfer cost with margin `alpha`.
pub fn should_reconfigure(cost_old: f64, cost_new: f64, horizon: f64, recost: f64, alpha: f64) -> bool {
    horizon * (cost_old - cost_new) > recost * (1.0 + alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switch_rule() {
        // Saving of 1 per unit time over 10 units against a transfer of 5.
        assert!(should_reconfigure(3.0, 2.0, 10.0, 5.0, 0.5));
        assert!(!should_reconfigure(3.0, 2.0, 10.0, 5.0, 1.0));
        assert!(!should_reconfigure(2.0, 3.0, 10.0, 0.0, 0.1));
        assert!(!should_reconfigure(2.0, 2.0, 1e9, 0.0, 0.1));
    }

    #[test]
    fn recost_matches_hand_count() {
        let model = Model::uniform(4, 100.0, 1.0, 0.0);
        let mut model = model;
        for a in 0..4 {
            for b in 0..4 {
                model.net_price[a][b] = if a == b { 0.0 } else { 1.0 + a as f64 + 10.0 * b as f64 };
            }
        }
        let old = Configuration::new(Protocol::Cas, vec![DcId(1), DcId(2), DcId(3)], 1, vec![2, 2, 2, 2]);
        let new = Configuration::new(Protocol::Abd, vec![DcId(0), DcId(1)], 1, vec![1, 2]);
        let sizing = Sizing { meta: 2.0, control: 1.0 };
        let p = |a: usize, b: usize| model.net_price[a][b];
        let mut want = 0.0;
        for s in 1..4 {
            // query, tag reply, get, chunk, finish
            want += 1.0 * p(0, s) + 2.0 * p(s, 0) + 2.0 * p(0, s) + 50.0 * p(s, 0) + 2.0 * p(0, s);
        }
        for s in 0..2 {
            want += 50.0 * p(0, s) + 1.0 * p(s, 0);
        }
        for d in 0..4 {
            want += 2.0 * p(0, d);
        }
        let got = recost(&model, &old, &new, DcId(0), 50.0, &sizing);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}
