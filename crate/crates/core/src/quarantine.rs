//! Isolation of confirmed sinkholes and repair of the orphaned subgraph.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::dodag::{attach_in_waves, NetworkView, RankParams};
use crate::graph::DodagGraph;
use crate::types::{NodeId, Rank, SimTime};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuarantineError {
    #[error("the border router cannot be quarantined")]
    BorderRouter,
}

/// Root-issued notice that a node is isolated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WarningMessage {
    pub malicious: NodeId,
    pub malicious_rank: Rank,
    pub issue_time: SimTime,
}

/// Nodes a single node refuses as parent, forwarder or DIO source.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuarantineList {
    nodes: BTreeSet<NodeId>,
    seen: BTreeSet<(SimTime, NodeId)>,
}

impl QuarantineList {
    /// Applies a warning. Returns false for duplicates (same issue time and node).
    pub fn apply(&mut self, w: &WarningMessage) -> bool {
        if !self.seen.insert((w.issue_time, w.malicious)) {
            return false;
        }
        self.nodes.insert(w.malicious);
        true
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.contains(&n)
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuarantineOutcome {
    /// The id is not part of the graph; nothing changed.
    UnknownNode,
    Applied {
        /// Former descendants that found a new parent.
        reattached: Vec<NodeId>,
        /// Former descendants left without a path to the root.
        unattached: Vec<NodeId>,
    },
}

/// Removes `malicious` from the graph and re-runs parent selection for every
/// node that lost its path to the root. Nodes outside the orphaned subtree
/// keep their parents.
pub fn quarantine_node(
    graph: &mut DodagGraph,
    net: &NetworkView,
    params: &RankParams,
    malicious: NodeId,
) -> Result<QuarantineOutcome, QuarantineError> {
    if malicious.is_border_router() {
        return Err(QuarantineError::BorderRouter);
    }
    if !graph.nodes.contains(&malicious) {
        return Ok(QuarantineOutcome::UnknownNode);
    }
    let orphans = graph.descendants(malicious);
    graph.detach(malicious);
    graph.quarantined.insert(malicious);
    for &o in &orphans {
        graph.detach(o);
    }
    let mut view = net.clone();
    view.quarantined.extend(graph.quarantined.iter().copied());
    let mut reattached = attach_in_waves(graph, &view, params, orphans.clone());
    reattached.sort();
    let unattached = orphans
        .into_iter()
        .filter(|o| graph.parent(*o).is_none())
        .collect();
    Ok(QuarantineOutcome::Applied {
        reattached,
        unattached,
    })
}

/// `time malicious reattached unattached` log line.
pub fn log_line(time: SimTime, malicious: NodeId, reattached: usize, unattached: usize) -> String {
    let mut s = String::new();
    let _ = write!(s, "{}\t{}\t{}\t{}", time, malicious, reattached, unattached);
    s
}
