//! Detection and delivery metrics. Every rate is a percentage, or `None`
//! when its denominator is zero.

use alloc::collections::BTreeMap;

use crate::types::NodeId;

/// Per-node classification tallies at the end of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    /// Attackers quarantined.
    pub tp: u32,
    /// Honest nodes never quarantined.
    pub tn: u32,
    /// Honest nodes quarantined.
    pub fp: u32,
    /// Attackers never quarantined.
    pub fn_: u32,
}

fn pct(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

pub fn detection_rate(c: &ConfusionCounts) -> Option<f64> {
    pct(c.tp.into(), u64::from(c.tp) + u64::from(c.fn_))
}

pub fn false_positive_rate(c: &ConfusionCounts) -> Option<f64> {
    pct(c.fp.into(), u64::from(c.fp) + u64::from(c.tn))
}

pub fn false_negative_rate(c: &ConfusionCounts) -> Option<f64> {
    pct(c.fn_.into(), u64::from(c.fn_) + u64::from(c.tp))
}

/// Data packets originated and delivered, per source.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeliveryTallies {
    pub sent: BTreeMap<NodeId, u64>,
    pub delivered: BTreeMap<NodeId, u64>,
}

impl DeliveryTallies {
    pub fn record_sent(&mut self, n: NodeId) {
        *self.sent.entry(n).or_default() += 1;
    }

    pub fn record_delivered(&mut self, n: NodeId) {
        *self.delivered.entry(n).or_default() += 1;
    }

    pub fn total_sent(&self) -> u64 {
        self.sent.values().sum()
    }

    pub fn total_delivered(&self) -> u64 {
        self.delivered.values().sum()
    }

    pub fn pdr(&self) -> Option<f64> {
        pct(self.total_delivered(), self.total_sent())
    }
}

pub fn packet_delivery_rate(sent: &[u64], delivered: &[u64]) -> Option<f64> {
    pct(delivered.iter().sum(), sent.iter().sum())
}
