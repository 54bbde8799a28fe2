//! Six-node fixture: root 0, links 0-1 0-2 0-3 1-4 3-5 4-5, unit ranks,
//! node 3 turns sinkhole and drops everything.

use std::collections::BTreeSet;

use rplguard_core::detect::{classify_dio, dnr_p, dsn_ni, DioVerdict, RankObservation};
use rplguard_core::dodag::{build_dodag, NetworkView, RankParams};
use rplguard_core::quarantine::{quarantine_node, QuarantineOutcome};
use rplguard_core::sim::trace::{DetectionStage, DetectionVerdict};
use rplguard_core::sim::{run_scenario, ProbePurpose, ScenarioConfig, TopologySpec};
use rplguard_core::{NodeId, Rank};

const LINKS: [(u32, u32); 6] = [(0, 1), (0, 2), (0, 3), (1, 4), (3, 5), (4, 5)];

fn n(i: u32) -> NodeId {
    NodeId(i)
}

fn view() -> NetworkView {
    let mut v = NetworkView::default();
    for (a, b) in LINKS {
        v.add_link(n(a), n(b));
        v.reliability.insert((n(a), n(b)), 1.0);
        v.reliability.insert((n(b), n(a)), 1.0);
    }
    v
}

fn scenario() -> ScenarioConfig {
    ScenarioConfig {
        num_nodes: 6,
        topology: TopologySpec::Explicit(LINKS.iter().map(|&(a, b)| (n(a), n(b))).collect()),
        attackers: Some(vec![n(3)]),
        rank_params: RankParams::unit(),
        tx_cost: 0,
        rx_cost: 0,
        per_byte_cost: 0,
        duration: 120.0,
        he_prime_bits: 64,
        ..ScenarioConfig::default()
    }
}

#[test]
fn static_ranks_and_rank_rule() {
    let g = build_dodag(&view(), &RankParams::unit());
    let ranks: Vec<u16> = (0..6).map(|i| g.rank(n(i)).unwrap().0).collect();
    assert_eq!(ranks, [1, 2, 2, 2, 3, 3]);
    assert_eq!(g.parent(n(5)), Some(n(3)));

    // Node 5 sees its parent at rank 2, then node 3 claims rank 0.
    let parent_gap = dnr_p(Rank(3), Some(Rank(2))).unwrap();
    assert_eq!(parent_gap, 1);
    assert_eq!(dsn_ni(Rank(2), Rank(3)), 1);
    assert_eq!(dsn_ni(Rank(0), Rank(3)), 3);
    let obs = |sender_rank| RankObservation {
        node_rank: Rank(3),
        parent_rank: Some(Rank(2)),
        sender_rank,
        sender: n(3),
    };
    assert_eq!(classify_dio(&obs(Rank(2))), DioVerdict::Benign);
    assert_eq!(classify_dio(&obs(Rank(0))), DioVerdict::Suspicious);
}

#[test]
fn static_quarantine_moves_node_5_under_4() {
    let mut g = build_dodag(&view(), &RankParams::unit());
    let out = quarantine_node(&mut g, &view(), &RankParams::unit(), n(3)).unwrap();
    assert_eq!(
        out,
        QuarantineOutcome::Applied {
            reattached: vec![n(5)],
            unattached: vec![]
        }
    );
    assert_eq!(g.parent(n(5)), Some(n(4)));
    assert_eq!(g.rank(n(5)), Some(Rank(4)));
    assert!(!g.is_attached(n(3)));
}

#[test]
fn simulated_lifecycle() {
    let out = run_scenario(&scenario()).unwrap();
    let warm = scenario().warmup_end();

    // Rank stage: only node 5 hears the fake rank, and only node 3 is accused.
    let first = &out.detections[0];
    assert_eq!((first.observer, first.suspect), (n(5), n(3)));
    assert_eq!(
        (first.stage, first.verdict),
        (DetectionStage::Rank, DetectionVerdict::Suspicious)
    );
    assert!(first.time >= warm);
    assert!(out.detections.iter().all(|d| d.suspect == n(3)));

    // Threshold from clean routes: every probe answered.
    assert_eq!(out.threshold.pdr_t, 1.0);
    let clean: Vec<_> = out
        .probes
        .iter()
        .filter(|p| p.purpose == ProbePurpose::Threshold)
        .collect();
    assert!(!clean.is_empty());
    assert!(clean.iter().all(|p| p.record.pdr == 1.0 && p.time < warm));

    // PDR stage: one probe session through node 3 to node 5, nothing comes back.
    let suspect: Vec<_> = out
        .probes
        .iter()
        .filter(|p| p.purpose == ProbePurpose::Suspect)
        .collect();
    assert_eq!(suspect.len(), 1);
    let p = suspect[0];
    assert_eq!(p.record.route, [n(0), n(3), n(5)]);
    assert_eq!((p.record.mc_sent, p.record.acks_received), (10, 0));
    assert_eq!(p.record.pdr, 0.0);
    assert_eq!(p.verdict, Some(DetectionVerdict::Confirmed));

    let confirmed: Vec<_> = out
        .detections
        .iter()
        .filter(|d| d.verdict == DetectionVerdict::Confirmed)
        .collect();
    assert_eq!(confirmed.len(), 1);
    assert_eq!(
        (confirmed[0].observer, confirmed[0].stage),
        (n(0), DetectionStage::Pdr)
    );
    assert_eq!(confirmed[0].pdr, Some(0.0));
    assert!(confirmed[0].time > first.time);

    // Quarantine and repair.
    assert_eq!(out.quarantines.len(), 1);
    let q = &out.quarantines[0];
    assert_eq!((q.malicious, q.time), (n(3), confirmed[0].time));
    assert_eq!(q.detached, [n(5)]);
    assert_eq!((q.reattached, q.unattached), (1, 0));
    assert_eq!(out.quarantined, BTreeSet::from([n(3)]));

    let g = &out.graph;
    assert_eq!(g.parent(n(5)), Some(n(4)));
    assert_eq!(g.rank(n(5)), Some(Rank(4)));
    assert_eq!(g.parent(n(4)), Some(n(1)));
    assert!(!g.is_attached(n(3)));
    assert!(g.quarantined.contains(&n(3)));
    for i in 1..6 {
        if i != 3 {
            assert!(!g.path_to_root(n(i)).unwrap().contains(&n(3)));
        }
    }
    g.check_forest().unwrap();

    let c = out.confusion;
    assert_eq!((c.tp, c.fp, c.tn, c.fn_), (1, 0, 4, 0));
}
