//! Node placement and unit-disk connectivity.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ScenarioConfig, TopologySpec};
use crate::types::NodeId;

const MAX_ATTEMPTS: u64 = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("no connected placement after {0} attempts")]
    Disconnected(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    /// Meters; empty for explicit topologies.
    pub positions: Vec<(f64, f64)>,
    /// Sorted neighbor lists indexed by node id.
    pub adjacency: Vec<Vec<NodeId>>,
    /// Sub-seed offset that produced this placement.
    pub attempt: u64,
}

impl Topology {
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, n: NodeId) -> &[NodeId] {
        self.adjacency
            .get(n.0 as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn linked(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Hop distance from the border router, `None` if unreachable.
    pub fn hops_from_root(&self) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        if self.is_empty() {
            return dist;
        }
        dist[0] = Some(0);
        let mut q = VecDeque::from([NodeId::BORDER_ROUTER]);
        while let Some(n) = q.pop_front() {
            let d = dist[n.0 as usize].unwrap_or(0);
            for &m in self.neighbors(n) {
                if dist[m.0 as usize].is_none() {
                    dist[m.0 as usize] = Some(d + 1);
                    q.push_back(m);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.hops_from_root().iter().all(Option::is_some)
    }

    fn from_links(n: u32, links: impl IntoIterator<Item = (NodeId, NodeId)>, attempt: u64) -> Self {
        let mut adjacency = vec![Vec::new(); n as usize];
        for (a, b) in links {
            adjacency[a.0 as usize].push(b);
            adjacency[b.0 as usize].push(a);
        }
        for l in &mut adjacency {
            l.sort();
            l.dedup();
        }
        Topology {
            positions: Vec::new(),
            adjacency,
            attempt,
        }
    }
}

/// Places the border router at the centre and the other nodes uniformly,
/// linking pairs within radio range (boundary inclusive). Disconnected
/// placements are redrawn with the next sub-seed.
pub fn generate_topology(cfg: &ScenarioConfig) -> Result<Topology, TopologyError> {
    if let TopologySpec::Explicit(links) = &cfg.topology {
        return Ok(Topology::from_links(
            cfg.num_nodes,
            links.iter().copied(),
            0,
        ));
    }
    let (w, h) = cfg.area;
    let r2 = cfg.radio_range * cfg.radio_range;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(0x7000 + attempt);
        let mut positions = Vec::with_capacity(cfg.num_nodes as usize);
        positions.push((w / 2.0, h / 2.0));
        for _ in 1..cfg.num_nodes {
            positions.push((rng.gen::<f64>() * w, rng.gen::<f64>() * h));
        }
        let t = from_positions(positions, r2, attempt);
        if t.is_connected() {
            return Ok(t);
        }
    }
    Err(TopologyError::Disconnected(MAX_ATTEMPTS))
}

fn from_positions(positions: Vec<(f64, f64)>, r2: f64, attempt: u64) -> Topology {
    let n = positions.len();
    let mut links = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let dx = positions[i].0 - positions[j].0;
            let dy = positions[i].1 - positions[j].1;
            if dx * dx + dy * dy <= r2 {
                links.push((NodeId(i as u32), NodeId(j as u32)));
            }
        }
    }
    let mut t = Topology::from_links(n as u32, links, attempt);
    t.positions = positions;
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node() {
        let c = ScenarioConfig {
            num_nodes: 1,
            ..ScenarioConfig::desk()
        };
        let t = generate_topology(&c).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.neighbors(NodeId(0)).is_empty());
    }

    #[test]
    fn boundary_distance_links() {
        let t = from_positions(
            alloc::vec![(0.0, 0.0), (30.0, 40.0), (30.0, 40.01)],
            50.0 * 50.0,
            0,
        );
        assert!(t.linked(NodeId(0), NodeId(1)));
        assert!(!t.linked(NodeId(0), NodeId(2)));
    }

    #[test]
    fn seeded_placement_repeats() {
        let c = ScenarioConfig::desk();
        let a = generate_topology(&c).unwrap();
        let b = generate_topology(&c).unwrap();
        assert_eq!(a, b);
        assert!(a.is_connected());
        assert_eq!(a.positions[0], (100.0, 100.0));
        let other = generate_topology(&ScenarioConfig { seed: 2, ..c }).unwrap();
        assert_ne!(a.positions, other.positions);
    }

    #[test]
    fn sparse_area_gives_up() {
        let c = ScenarioConfig {
            num_nodes: 30,
            area: (5000.0, 5000.0),
            ..ScenarioConfig::desk()
        };
        assert_eq!(
            generate_topology(&c),
            Err(TopologyError::Disconnected(MAX_ATTEMPTS))
        );
    }
}
