//! Two-stage sinkhole detection: a rank rule applied to every DIO, then
//! route probing by the root against a PDR threshold.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::types::{NodeId, Rank};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DetectError {
    #[error("node has no parent")]
    NoParent,
    #[error("no probe was sent through the suspect; probe again")]
    Indeterminate,
    #[error("no clean-route samples to derive a threshold from")]
    NoHistory,
    #[error("probe route unreachable from the root at hop {0}")]
    Unreachable(usize),
    #[error("at least one probe is required")]
    NoProbes,
}

/// Ranks as recorded when the observer's routing table was last updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankObservation {
    pub node_rank: Rank,
    pub parent_rank: Option<Rank>,
    pub sender_rank: Rank,
    pub sender: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DioVerdict {
    Benign,
    Suspicious,
}

/// Distance between a node's rank and its parent's.
pub fn dnr_p(node_rank: Rank, parent_rank: Option<Rank>) -> Result<u16, DetectError> {
    let p = parent_rank.ok_or(DetectError::NoParent)?;
    Ok(p.0.abs_diff(node_rank.0))
}

/// Distance between a DIO sender's advertised rank and the receiver's rank.
pub fn dsn_ni(sender_rank: Rank, node_rank: Rank) -> u16 {
    sender_rank.0.abs_diff(node_rank.0)
}

/// Suspicious iff the sender's rank distance strictly exceeds the parent's.
/// A node without a parent has no reference and judges nothing.
pub fn classify_dio(obs: &RankObservation) -> DioVerdict {
    match dnr_p(obs.node_rank, obs.parent_rank) {
        Ok(d) if dsn_ni(obs.sender_rank, obs.node_rank) > d => DioVerdict::Suspicious,
        _ => DioVerdict::Benign,
    }
}

/// Probes sent through a suspicious route and the ACKs that came back.
#[derive(Debug, Clone, PartialEq)]
pub struct PdrProbeRecord {
    pub route: Vec<NodeId>,
    pub mc_sent: u32,
    pub acks_received: u32,
    pub pdr: f64,
}

impl PdrProbeRecord {
    /// `acks` is clamped to `mc_sent`.
    pub fn new(route: Vec<NodeId>, mc_sent: u32, acks: u32) -> Self {
        let acks_received = acks.min(mc_sent);
        let pdr = if mc_sent == 0 {
            0.0
        } else {
            f64::from(acks_received) / f64::from(mc_sent)
        };
        PdrProbeRecord {
            route,
            mc_sent,
            acks_received,
            pdr,
        }
    }
}

/// Clean-route PDR history and the threshold derived from it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PdrThresholdState {
    pub samples: Vec<f64>,
    pub pdr_a: f64,
    pub sd: f64,
    pub pdr_t: f64,
    pub lt_p: f64,
    pub ut_p: f64,
}

/// Appends a sample and recomputes mean, population SD, threshold
/// (`mean - sd`) and the `mean -/+ 2 sd` band clamped to `[0, 1]`.
pub fn update_threshold(mut state: PdrThresholdState, new_sample: f64) -> PdrThresholdState {
    state.samples.push(new_sample.clamp(0.0, 1.0));
    let n = state.samples.len() as f64;
    let mean = state.samples.iter().sum::<f64>() / n;
    let var = state
        .samples
        .iter()
        .map(|s| (s - mean) * (s - mean))
        .sum::<f64>()
        / n;
    let sd = libm::sqrt(var);
    state.pdr_a = mean;
    state.sd = sd;
    state.pdr_t = mean - sd;
    state.lt_p = (mean - 2.0 * sd).clamp(0.0, 1.0);
    state.ut_p = (mean + 2.0 * sd).clamp(0.0, 1.0);
    state
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Confirmation {
    Confirmed,
    Cleared,
}

/// Confirmed iff the probe PDR is strictly below the threshold.
pub fn confirm_sinkhole(
    record: &PdrProbeRecord,
    state: &PdrThresholdState,
) -> Result<Confirmation, DetectError> {
    if record.mc_sent == 0 {
        return Err(DetectError::Indeterminate);
    }
    if state.samples.is_empty() {
        return Err(DetectError::NoHistory);
    }
    Ok(if record.pdr < state.pdr_t {
        Confirmation::Confirmed
    } else {
        Confirmation::Cleared
    })
}

/// Outside the `[lt_p, ut_p]` band. Informational only.
pub fn is_abnormal(pdr: f64, state: &PdrThresholdState) -> bool {
    !state.samples.is_empty() && (pdr < state.lt_p || pdr > state.ut_p)
}

/// What happened to one probe in [`probe_route`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeFate {
    Delivered,
    /// Dropped by the node at this route index.
    DroppedAt(usize),
}

/// Sends `n_probes` along `route` (root first, destination last). `forwards(node, i)`
/// decides whether transit node `node` relays probe `i`; the destination always
/// answers. Returns the record and the fate of each probe.
pub fn probe_route<F>(
    root: NodeId,
    route: &[NodeId],
    n_probes: u32,
    links: &BTreeSet<(NodeId, NodeId)>,
    mut forwards: F,
) -> Result<(PdrProbeRecord, Vec<ProbeFate>), DetectError>
where
    F: FnMut(NodeId, u32) -> bool,
{
    if n_probes == 0 {
        return Err(DetectError::NoProbes);
    }
    if route.first() != Some(&root) || route.len() < 2 {
        return Err(DetectError::Unreachable(0));
    }
    for (i, w) in route.windows(2).enumerate() {
        if !links.contains(&(w[0], w[1])) && !links.contains(&(w[1], w[0])) {
            return Err(DetectError::Unreachable(i + 1));
        }
    }
    let mut fates = Vec::with_capacity(n_probes as usize);
    let mut acks = 0;
    for i in 0..n_probes {
        let mut fate = ProbeFate::Delivered;
        for (hop, &n) in route.iter().enumerate().take(route.len() - 1).skip(1) {
            if !forwards(n, i) {
                fate = ProbeFate::DroppedAt(hop);
                break;
            }
        }
        if fate == ProbeFate::Delivered {
            acks += 1;
        }
        fates.push(fate);
    }
    Ok((PdrProbeRecord::new(route.to_vec(), n_probes, acks), fates))
}
