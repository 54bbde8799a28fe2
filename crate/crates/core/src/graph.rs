//! Observer-side view of the DODAG.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::types::{NodeId, Rank};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("parent cycle through node {0}")]
    Cycle(NodeId),
    #[error("border router has a parent")]
    RootHasParent,
    #[error("edge {child}->{parent} touches a quarantined node")]
    QuarantinedEdge { child: NodeId, parent: NodeId },
    #[error("edge {child}->{parent} references an unknown node")]
    UnknownNode { child: NodeId, parent: NodeId },
    #[error("rank of {child} does not exceed rank of its parent {parent}")]
    RankNotMonotone { child: NodeId, parent: NodeId },
    #[error("attached node {0} has no rank")]
    MissingRank(NodeId),
}

/// Parent edges, ranks and quarantine status of every node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DodagGraph {
    pub nodes: BTreeSet<NodeId>,
    /// child -> selected parent
    pub parents: BTreeMap<NodeId, NodeId>,
    pub ranks: BTreeMap<NodeId, Rank>,
    pub quarantined: BTreeSet<NodeId>,
}

impl DodagGraph {
    /// A graph holding only the border router at `root_rank`.
    pub fn with_root(root_rank: Rank) -> Self {
        let mut g = DodagGraph::default();
        g.nodes.insert(NodeId::BORDER_ROUTER);
        g.ranks.insert(NodeId::BORDER_ROUTER, root_rank);
        g
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.parents.get(&n).copied()
    }

    pub fn rank(&self, n: NodeId) -> Option<Rank> {
        self.ranks.get(&n).copied()
    }

    pub fn set_parent(&mut self, child: NodeId, parent: NodeId, rank: Rank) {
        self.nodes.insert(child);
        self.parents.insert(child, parent);
        self.ranks.insert(child, rank);
    }

    pub fn detach(&mut self, n: NodeId) {
        self.parents.remove(&n);
        if !n.is_border_router() {
            self.ranks.remove(&n);
        }
    }

    /// Parent chain from `n` up to the border router, `n` first.
    /// `None` if the chain does not reach the root.
    pub fn path_to_root(&self, n: NodeId) -> Option<Vec<NodeId>> {
        let mut path = Vec::new();
        let mut cur = n;
        loop {
            if path.contains(&cur) {
                return None;
            }
            path.push(cur);
            if cur.is_border_router() {
                return Some(path);
            }
            cur = self.parent(cur)?;
        }
    }

    pub fn is_attached(&self, n: NodeId) -> bool {
        !self.quarantined.contains(&n) && self.path_to_root(n).is_some()
    }

    /// Non-quarantined nodes with no path to the root.
    pub fn unattached(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .copied()
            .filter(|&n| !self.quarantined.contains(&n) && !self.is_attached(n))
            .collect()
    }

    /// All nodes whose parent chain passes through `n` (excluding `n`).
    pub fn descendants(&self, n: NodeId) -> BTreeSet<NodeId> {
        let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (&c, &p) in &self.parents {
            children.entry(p).or_default().push(c);
        }
        let mut out = BTreeSet::new();
        let mut stack = alloc::vec![n];
        while let Some(x) = stack.pop() {
            for &c in children.get(&x).map(Vec::as_slice).unwrap_or(&[]) {
                if out.insert(c) {
                    stack.push(c);
                }
            }
        }
        out.remove(&n);
        out
    }

    /// Forest check: no cycles, root parentless, no edge touches a quarantined
    /// node, every edge endpoint is known.
    pub fn check_forest(&self) -> Result<(), GraphError> {
        if self.parents.contains_key(&NodeId::BORDER_ROUTER) {
            return Err(GraphError::RootHasParent);
        }
        for (&c, &p) in &self.parents {
            if !self.nodes.contains(&c) || !self.nodes.contains(&p) {
                return Err(GraphError::UnknownNode {
                    child: c,
                    parent: p,
                });
            }
            if self.quarantined.contains(&c) || self.quarantined.contains(&p) {
                return Err(GraphError::QuarantinedEdge {
                    child: c,
                    parent: p,
                });
            }
        }
        // Colour walk: 1 = on current chain, 2 = known acyclic.
        let mut state: BTreeMap<NodeId, u8> = BTreeMap::new();
        for &start in self.parents.keys() {
            let mut chain = Vec::new();
            let mut cur = start;
            loop {
                match state.get(&cur) {
                    Some(1) => return Err(GraphError::Cycle(cur)),
                    Some(_) => break,
                    None => {}
                }
                state.insert(cur, 1);
                chain.push(cur);
                match self.parent(cur) {
                    Some(p) => cur = p,
                    None => break,
                }
            }
            for n in chain {
                state.insert(n, 2);
            }
        }
        Ok(())
    }

    /// Every edge strictly increases rank going away from the root.
    pub fn check_monotone_ranks(&self) -> Result<(), GraphError> {
        for (&c, &p) in &self.parents {
            let rc = self.rank(c).ok_or(GraphError::MissingRank(c))?;
            let rp = self.rank(p).ok_or(GraphError::MissingRank(p))?;
            if rc <= rp {
                return Err(GraphError::RankNotMonotone {
                    child: c,
                    parent: p,
                });
            }
        }
        Ok(())
    }

    /// One `child parent rank` line per node. The root and unattached nodes
    /// print `-` as parent; unattached and quarantined nodes print `inf`.
    pub fn edge_list(&self) -> String {
        let mut out = String::new();
        for &n in &self.nodes {
            let parent = match self.parent(n) {
                Some(p) => p.to_string(),
                None => String::from("-"),
            };
            let rank = if self.quarantined.contains(&n) {
                Rank::INFINITE
            } else {
                self.rank(n).unwrap_or(Rank::INFINITE)
            };
            let _ = writeln!(out, "{} {} {}", n, parent, rank);
        }
        out
    }
}
