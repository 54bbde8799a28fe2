//! Monitoring tables and the reliability calculus.
//!
//! A node's reliability score for a neighbor is a weighted sum of three
//! components (residual energy, trust, veracity), each smoothed against its
//! previous value. Scores from several observers are averaged.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::types::{EnergyLevel, NodeId, SimTime};
use crate::wire::{Ack, AckKind, ReqpR, TableClaim, FIXED_POINT_ONE};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrustError {
    #[error("`{0}` must lie in [0, 1]")]
    Domain(&'static str),
    #[error("weights must be in [0, 1] and sum to 1 (got {0}, {1}, {2})")]
    InvalidWeights(f64, f64, f64),
    #[error("no reliability values to average")]
    InsufficientEvidence,
    #[error("malformed source route")]
    MalformedRoute,
}

/// Weights of the three reliability components, the history mixing factor
/// and the update period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub alpha: f64,
    pub delta_t: SimTime,
}

impl Default for ReliabilityWeights {
    fn default() -> Self {
        ReliabilityWeights {
            w1: 0.3,
            w2: 0.4,
            w3: 0.3,
            alpha: 0.7,
            delta_t: SimTime::from_secs(10),
        }
    }
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl ReliabilityWeights {
    pub fn validate(&self) -> Result<(), TrustError> {
        let ok = unit(self.w1)
            && unit(self.w2)
            && unit(self.w3)
            && libm::fabs(self.w1 + self.w2 + self.w3 - 1.0) <= 1e-9;
        if !ok {
            return Err(TrustError::InvalidWeights(self.w1, self.w2, self.w3));
        }
        if !unit(self.alpha) {
            return Err(TrustError::Domain("alpha"));
        }
        Ok(())
    }
}

/// `alpha * direct + (1 - alpha) * previous`.
pub fn component_reliability(direct: f64, previous: f64, alpha: f64) -> Result<f64, TrustError> {
    if !unit(direct) {
        return Err(TrustError::Domain("direct"));
    }
    if !unit(previous) {
        return Err(TrustError::Domain("previous"));
    }
    if !unit(alpha) {
        return Err(TrustError::Domain("alpha"));
    }
    let v = alpha * direct + (1.0 - alpha) * previous;
    // Rounding can push the blend a hair outside its inputs.
    Ok(v.clamp(direct.min(previous), direct.max(previous)))
}

/// `w1 * energy + w2 * trust + w3 * veracity`, in `[0, 1]`.
pub fn weighted_reliability(
    energy: f64,
    trust: f64,
    veracity: f64,
    w: &ReliabilityWeights,
) -> Result<f64, TrustError> {
    w.validate()?;
    for (v, name) in [(energy, "energy"), (trust, "trust"), (veracity, "veracity")] {
        if !unit(v) {
            return Err(TrustError::Domain(name));
        }
    }
    Ok((w.w1 * energy + w.w2 * trust + w.w3 * veracity).clamp(0.0, 1.0))
}

fn mean_unit(values: &[f64]) -> Result<f64, TrustError> {
    if values.is_empty() {
        return Err(TrustError::InsufficientEvidence);
    }
    if values.iter().any(|&v| !unit(v)) {
        return Err(TrustError::Domain("reliability"));
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    Ok(m.clamp(0.0, 1.0))
}

/// Mean of the reliability values reported for one neighbor by the observers
/// that know it.
pub fn final_reliability(received_values: &[f64]) -> Result<f64, TrustError> {
    mean_unit(received_values)
}

/// Mean of the reliability values the neighbors report about this node.
pub fn self_reliability(received_about_self: &[f64]) -> Result<f64, TrustError> {
    mean_unit(received_about_self)
}

/// Parameters of a node's trust engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustConfig {
    pub weights: ReliabilityWeights,
    /// Trust count at which the trust component saturates.
    pub trust_cap: u32,
    /// Battery capacity every node starts with, milli-units.
    pub initial_energy: u32,
}

impl Default for TrustConfig {
    fn default() -> Self {
        TrustConfig {
            weights: ReliabilityWeights::default(),
            trust_cap: 20,
            initial_energy: 2_000_000,
        }
    }
}

impl TrustConfig {
    pub fn trust_component(&self, count: u32) -> f64 {
        if self.trust_cap == 0 {
            return 1.0;
        }
        (f64::from(count) / f64::from(self.trust_cap)).min(1.0)
    }

    pub fn energy_component(&self, milli: u32) -> f64 {
        if self.initial_energy == 0 {
            return 0.0;
        }
        (f64::from(milli) / f64::from(self.initial_energy)).min(1.0)
    }

    /// Reliability implied by one claimed table row.
    pub fn claim_reliability(&self, c: &TableClaim) -> f64 {
        let v = f64::from(c.veracity.min(FIXED_POINT_ONE)) / f64::from(FIXED_POINT_ONE);
        let w = &self.weights;
        (w.w1 * self.energy_component(c.energy) + w.w2 * self.trust_component(c.trust) + w.w3 * v)
            .clamp(0.0, 1.0)
    }
}

/// Energy, trust, veracity.
pub type Components = [f64; 3];

/// What a node knows about one neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitoringEntry {
    pub neighbor: NodeId,
    pub trust_count: u32,
    pub observed_energy: EnergyLevel,
    pub veracity: f64,
    /// Smoothed components after the last update; `None` before the first.
    pub last_component_reliability: Option<Components>,
    /// Weighted reliability after the last update.
    pub reliability: Option<f64>,
    pub last_update: SimTime,
}

impl MonitoringEntry {
    fn new(neighbor: NodeId, energy: EnergyLevel, now: SimTime) -> Self {
        MonitoringEntry {
            neighbor,
            trust_count: 0,
            observed_energy: energy,
            veracity: 0.5,
            last_component_reliability: None,
            reliability: None,
            last_update: now,
        }
    }

    pub fn claim(&self) -> TableClaim {
        TableClaim {
            neighbor: self.neighbor,
            trust: self.trust_count,
            energy: self.observed_energy.residual(),
            veracity: to_fixed(self.veracity),
        }
    }
}

/// Converts a `[0, 1]` real to ten-thousandths, rounding half up.
pub fn to_fixed(x: f64) -> u16 {
    libm::floor(x.clamp(0.0, 1.0) * f64::from(FIXED_POINT_ONE) + 0.5) as u16
}

/// Whether a claimed row agrees with a local observation of the same neighbor.
pub fn claim_agrees(own: &MonitoringEntry, claim: &TableClaim) -> bool {
    let trust_ok = own.trust_count.abs_diff(claim.trust) <= 1;
    let own_e = u64::from(own.observed_energy.residual());
    let diff = own_e.abs_diff(u64::from(claim.energy));
    // |claimed - own| <= 5% of own, in integers.
    let energy_ok = diff * 100 <= own_e * 5;
    trust_ok && energy_ok
}

/// Fraction of the peer's claims about neighbors this node also observes that
/// agree with the local observation; 0.5 when nothing overlaps.
pub fn veracity_score(own_table: &[MonitoringEntry], peer_claims: &[TableClaim]) -> f64 {
    let mut overlap = 0u32;
    let mut agree = 0u32;
    for c in peer_claims {
        if let Some(e) = own_table.iter().find(|e| e.neighbor == c.neighbor) {
            overlap += 1;
            if claim_agrees(e, c) {
                agree += 1;
            }
        }
    }
    if overlap == 0 {
        0.5
    } else {
        f64::from(agree) / f64::from(overlap)
    }
}

/// One append-only record of the tamper-proof store.
#[derive(Debug, Clone, PartialEq)]
pub struct TpmRecord {
    pub time: SimTime,
    pub neighbor: NodeId,
    pub components: Components,
    pub reliability: f64,
}

/// Per-node tamper-proof observation history. Records can be appended and
/// read, never changed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TpmStore {
    records: Vec<TpmRecord>,
}

impl TpmStore {
    pub fn append(&mut self, r: TpmRecord) {
        self.records.push(r);
    }

    pub fn records(&self) -> &[TpmRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Outcome of handling one REQP_R.
#[derive(Debug, Clone, PartialEq)]
pub enum ReqpOutcome {
    /// Own id already on the route, or this (source, sequence) was already
    /// forwarded. Trust of the sender may still have been updated.
    Dropped { trust_updated: bool },
    /// First copy: rebroadcast `forward` and answer with `ack`.
    Forward { forward: ReqpR, ack: Ack },
}

/// A node's monitoring table and the state needed to maintain it.
#[derive(Debug, Clone)]
pub struct TrustEngine {
    id: NodeId,
    cfg: TrustConfig,
    table: BTreeMap<NodeId, MonitoringEntry>,
    counted: BTreeSet<(NodeId, [u8; 16], u32)>,
    forwarded: BTreeSet<([u8; 16], u32)>,
    /// Latest table overheard from each neighbor.
    claims: BTreeMap<NodeId, Vec<TableClaim>>,
    tpm: TpmStore,
    /// Distinct REQP_R packets this node has rebroadcast.
    own_forwards: u32,
    /// Energy this node put into its last rebroadcast.
    advertised_energy: Option<u32>,
}

impl TrustEngine {
    pub fn new(id: NodeId, cfg: TrustConfig) -> Self {
        TrustEngine {
            id,
            cfg,
            table: BTreeMap::new(),
            counted: BTreeSet::new(),
            forwarded: BTreeSet::new(),
            claims: BTreeMap::new(),
            tpm: TpmStore::default(),
            own_forwards: 0,
            advertised_energy: None,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn config(&self) -> &TrustConfig {
        &self.cfg
    }

    pub fn entry(&self, n: NodeId) -> Option<&MonitoringEntry> {
        self.table.get(&n)
    }

    pub fn entries(&self) -> impl Iterator<Item = &MonitoringEntry> {
        self.table.values()
    }

    pub fn tpm(&self) -> &TpmStore {
        &self.tpm
    }

    pub fn claims_from(&self, k: NodeId) -> Option<&[TableClaim]> {
        self.claims.get(&k).map(Vec::as_slice)
    }

    /// The table as carried in an ACK.
    pub fn table_claims(&self) -> Vec<TableClaim> {
        self.table.values().map(MonitoringEntry::claim).collect()
    }

    fn check_route(&self, pkt: &ReqpR) -> Result<(), TrustError> {
        match (pkt.route.first(), pkt.route.last()) {
            (Some(&first), Some(&last)) if first.is_border_router() && last == pkt.node => {}
            _ => return Err(TrustError::MalformedRoute),
        }
        if pkt.node == self.id {
            return Err(TrustError::MalformedRoute);
        }
        Ok(())
    }

    /// Processes a REQP_R heard from `pkt.node`.
    pub fn handle_reqp_r(
        &mut self,
        pkt: &ReqpR,
        own_energy: EnergyLevel,
        now: SimTime,
    ) -> Result<ReqpOutcome, TrustError> {
        self.check_route(pkt)?;
        let sender = pkt.node;
        let observed = EnergyLevel::with_residual(pkt.energy, self.cfg.initial_energy.max(1))
            .ok_or(TrustError::Domain("energy"))?;
        let entry = self
            .table
            .entry(sender)
            .or_insert_with(|| MonitoringEntry::new(sender, observed, now));
        entry.observed_energy = observed;
        let trust_updated = self.counted.insert((sender, pkt.source, pkt.sequence));
        if trust_updated {
            entry.trust_count = entry.trust_count.saturating_add(1);
        }

        if pkt.route.contains(&self.id) || !self.forwarded.insert((pkt.source, pkt.sequence)) {
            return Ok(ReqpOutcome::Dropped { trust_updated });
        }
        let mut route = pkt.route.clone();
        route.push(self.id);
        self.own_forwards += 1;
        self.advertised_energy = Some(own_energy.residual());
        let forward = ReqpR {
            node: self.id,
            energy: own_energy.residual(),
            source: pkt.source,
            sequence: pkt.sequence,
            route,
        };
        let ack = Ack {
            kind: AckKind::Reliability,
            node: self.id,
            sequence: pkt.sequence,
            return_route: pkt.route.iter().rev().copied().collect(),
            table: self.table_claims(),
        };
        Ok(ReqpOutcome::Forward { forward, ack })
    }

    /// What this node knows first-hand about itself, in table form.
    fn self_entry(&self) -> Option<MonitoringEntry> {
        let e = self.advertised_energy?;
        let energy = EnergyLevel::with_residual(e, self.cfg.initial_energy.max(1))?;
        let mut m = MonitoringEntry::new(self.id, energy, SimTime::ZERO);
        m.trust_count = self.own_forwards;
        Some(m)
    }

    /// Records a neighbor's table overheard in its ACK and scores its veracity
    /// against local observations, including this node's knowledge of itself.
    /// Returns the new veracity, or `None` if `from` is not a known neighbor.
    pub fn handle_claims(&mut self, from: NodeId, claims: &[TableClaim]) -> Option<f64> {
        if from == self.id {
            return None;
        }
        let mut own: Vec<MonitoringEntry> = self
            .table
            .values()
            .filter(|e| e.neighbor != from)
            .cloned()
            .collect();
        own.extend(self.self_entry());
        let score = veracity_score(&own, claims);
        self.claims.insert(from, claims.to_vec());
        let e = self.table.get_mut(&from)?;
        e.veracity = score;
        Some(score)
    }

    /// Periodic update: recomputes the smoothed components and weighted
    /// reliability of every neighbor.
    pub fn update_reliability(&mut self, now: SimTime) {
        let w = self.cfg.weights;
        for e in self.table.values_mut() {
            let direct = [
                e.observed_energy.ratio().clamp(0.0, 1.0),
                self.cfg.trust_component(e.trust_count),
                e.veracity.clamp(0.0, 1.0),
            ];
            let prev = e.last_component_reliability.unwrap_or(direct);
            let mut comp = [0.0; 3];
            for i in 0..3 {
                comp[i] = component_reliability(direct[i], prev[i], w.alpha).unwrap_or(direct[i]);
            }
            let r = weighted_reliability(comp[0], comp[1], comp[2], &w).unwrap_or(0.0);
            e.last_component_reliability = Some(comp);
            e.reliability = Some(r);
            e.last_update = now;
            self.tpm.append(TpmRecord {
                time: now,
                neighbor: e.neighbor,
                components: comp,
                reliability: r,
            });
        }
    }

    /// Own reliability value for `j` followed by the values recomputed from the
    /// overheard tables of every other neighbor that lists `j`.
    pub fn reliability_reports(&self, j: NodeId) -> Vec<f64> {
        let mut v = Vec::new();
        if let Some(r) = self.table.get(&j).and_then(|e| e.reliability) {
            v.push(r);
        }
        for (&k, claims) in &self.claims {
            if k == j {
                continue;
            }
            for c in claims.iter().filter(|c| c.neighbor == j) {
                v.push(self.cfg.claim_reliability(c));
            }
        }
        v
    }

    /// Final reliability of neighbor `j`.
    pub fn final_reliability_of(&self, j: NodeId) -> Result<f64, TrustError> {
        final_reliability(&self.reliability_reports(j))
    }

    /// Values the neighbors report about this node.
    pub fn reports_about_self(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for claims in self.claims.values() {
            for c in claims.iter().filter(|c| c.neighbor == self.id) {
                v.push(self.cfg.claim_reliability(c));
            }
        }
        v
    }

    pub fn self_reliability(&self) -> Result<f64, TrustError> {
        self_reliability(&self.reports_about_self())
    }

    /// One `neighbor trust energy veracity` line per entry.
    pub fn dump_table(&self) -> String {
        let mut out = String::new();
        for e in self.table.values() {
            let _ = writeln!(
                out,
                "{} {} {} {:.4}",
                e.neighbor,
                e.trust_count,
                e.observed_energy.residual(),
                e.veracity
            );
        }
        out
    }
}
