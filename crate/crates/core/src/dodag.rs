//! Parent selection, rank computation and a wave-based DODAG builder.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::graph::DodagGraph;
use crate::types::{NodeId, Rank};
use crate::wire::FIXED_POINT_ONE;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DodagError {
    #[error("no candidate meets the reliability threshold")]
    Unattached,
    #[error("rank overflows 16 bits")]
    RankOverflow,
    #[error("invalid rank parameters: {0}")]
    InvalidParams(&'static str),
    #[error("reliability must lie in [0, 1]")]
    Domain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankParams {
    /// Minimum rank increase per hop.
    pub min_h: u16,
    /// Upper bound used only for validation.
    pub max_h: u16,
    pub root_base: u16,
    pub reliability_threshold: f64,
    /// Multiplier of the reliability term (100 normally, 0 for unit-rank fixtures).
    pub reliability_scale: u16,
}

impl Default for RankParams {
    fn default() -> Self {
        RankParams {
            min_h: 128,
            max_h: 1024,
            root_base: 128,
            reliability_threshold: 0.5,
            reliability_scale: 100,
        }
    }
}

impl RankParams {
    /// Unit ranks: root at 1, +1 per hop, reliability ignored.
    pub fn unit() -> Self {
        RankParams {
            min_h: 1,
            max_h: 1,
            root_base: 1,
            reliability_threshold: 0.0,
            reliability_scale: 0,
        }
    }

    pub fn validate(&self) -> Result<(), DodagError> {
        if self.min_h == 0 {
            return Err(DodagError::InvalidParams("min_h must be positive"));
        }
        if self.min_h > self.max_h {
            return Err(DodagError::InvalidParams("min_h exceeds max_h"));
        }
        if !(0.0..=1.0).contains(&self.reliability_threshold) {
            return Err(DodagError::InvalidParams("threshold outside [0, 1]"));
        }
        if self.root_base == u16::MAX {
            return Err(DodagError::InvalidParams("root_base is the infinite rank"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParentCandidate {
    pub neighbor: NodeId,
    pub final_reliability: f64,
    pub advertised_rank: Rank,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParentSelection {
    /// Candidates meeting the threshold, ascending id.
    pub parent_set: Vec<NodeId>,
    pub chosen: NodeId,
}

/// Keeps candidates at or above the threshold and picks the most reliable,
/// then the lowest advertised rank, then the lowest id.
pub fn select_parents(
    candidates: &[ParentCandidate],
    params: &RankParams,
) -> Result<ParentSelection, DodagError> {
    let mut set: Vec<&ParentCandidate> = candidates
        .iter()
        .filter(|c| {
            c.final_reliability >= params.reliability_threshold && !c.advertised_rank.is_infinite()
        })
        .collect();
    if set.is_empty() {
        return Err(DodagError::Unattached);
    }
    let best = set
        .iter()
        .copied()
        .min_by(|a, b| {
            b.final_reliability
                .total_cmp(&a.final_reliability)
                .then(a.advertised_rank.cmp(&b.advertised_rank))
                .then(a.neighbor.cmp(&b.neighbor))
        })
        .expect("non-empty");
    let chosen = best.neighbor;
    set.sort_by_key(|c| c.neighbor);
    let mut parent_set: Vec<NodeId> = set.iter().map(|c| c.neighbor).collect();
    parent_set.dedup();
    Ok(ParentSelection { parent_set, chosen })
}

/// `round_half_up(reliability * scale)`, computed on the reliability's
/// ten-thousandths representation so the rounding is exact.
pub fn reliability_term(reliability: f64, scale: u16) -> Result<u32, DodagError> {
    if !(0.0..=1.0).contains(&reliability) {
        return Err(DodagError::Domain);
    }
    let q = u64::from(crate::trust::to_fixed(reliability));
    let one = u64::from(FIXED_POINT_ONE);
    Ok(((q * u64::from(scale) + one / 2) / one) as u32)
}

/// `parent_rank + round(reliability * scale) + min_h`.
pub fn compute_rank(
    parent_rank: Rank,
    parent_final_reliability: f64,
    params: &RankParams,
) -> Result<Rank, DodagError> {
    let term = reliability_term(parent_final_reliability, params.reliability_scale)?;
    let r = u32::from(parent_rank.0) + term + u32::from(params.min_h);
    if r >= u32::from(Rank::INFINITE.0) {
        return Err(DodagError::RankOverflow);
    }
    Ok(Rank(r as u16))
}

/// Static description of a network for [`build_dodag`].
#[derive(Debug, Clone, Default)]
pub struct NetworkView {
    pub links: BTreeMap<NodeId, BTreeSet<NodeId>>,
    /// (observer, neighbor) -> observer's final reliability of the neighbor.
    pub reliability: BTreeMap<(NodeId, NodeId), f64>,
    pub quarantined: BTreeSet<NodeId>,
}

impl NetworkView {
    pub fn add_link(&mut self, a: NodeId, b: NodeId) {
        self.links.entry(a).or_default().insert(b);
        self.links.entry(b).or_default().insert(a);
    }

    pub fn neighbors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.links.get(&n).into_iter().flatten().copied()
    }

    pub fn nodes(&self) -> BTreeSet<NodeId> {
        let mut s: BTreeSet<NodeId> = self.links.keys().copied().collect();
        s.insert(NodeId::BORDER_ROUTER);
        s
    }
}

/// Attaches `pending` nodes in synchronous waves: in each wave a node picks among
/// neighbors attached before the wave began. Returns the attached nodes in order.
pub(crate) fn attach_in_waves(
    graph: &mut DodagGraph,
    net: &NetworkView,
    params: &RankParams,
    mut pending: BTreeSet<NodeId>,
) -> Vec<NodeId> {
    let mut attached_order = Vec::new();
    loop {
        let mut wave = Vec::new();
        for &n in &pending {
            let cands: Vec<ParentCandidate> = net
                .neighbors(n)
                .filter(|m| !net.quarantined.contains(m) && !pending.contains(m))
                .filter_map(|m| {
                    let rank = graph.rank(m)?;
                    let rel = *net.reliability.get(&(n, m))?;
                    Some(ParentCandidate {
                        neighbor: m,
                        final_reliability: rel,
                        advertised_rank: rank,
                    })
                })
                .collect();
            let Ok(sel) = select_parents(&cands, params) else {
                continue;
            };
            let cand = cands
                .iter()
                .find(|c| c.neighbor == sel.chosen)
                .expect("chosen from cands");
            if let Ok(rank) = compute_rank(cand.advertised_rank, cand.final_reliability, params) {
                wave.push((n, sel.chosen, rank));
            }
        }
        if wave.is_empty() {
            return attached_order;
        }
        for (n, p, r) in wave {
            graph.set_parent(n, p, r);
            pending.remove(&n);
            attached_order.push(n);
        }
    }
}

/// Builds the DODAG from the root outwards until no further node can attach.
pub fn build_dodag(net: &NetworkView, params: &RankParams) -> DodagGraph {
    let mut g = DodagGraph::with_root(Rank(params.root_base));
    g.nodes = net.nodes();
    g.quarantined = net.quarantined.clone();
    let pending: BTreeSet<NodeId> = g
        .nodes
        .iter()
        .copied()
        .filter(|n| !n.is_border_router() && !net.quarantined.contains(n))
        .collect();
    attach_in_waves(&mut g, net, params, pending);
    g
}
