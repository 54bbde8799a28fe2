//! Acceptance suite. Every test prints one `PASS` or `FAIL` line with the
//! measured value next to its bound, then asserts.
//!
//! Run with `cargo test -p rplguard --test acceptance -- --nocapture`.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rplguard::matrix::{parse_matrix, run_jobs, Job, JobResult, RunMetrics};
use rplguard::output::write_matrix_outputs;
use rplguard_core::detect::{
    classify_dio, dnr_p, dsn_ni, update_threshold, DioVerdict, PdrThresholdState, RankObservation,
};
use rplguard_core::dodag::{compute_rank, RankParams};
use rplguard_core::he::{
    decrypt, encrypt, encrypt_with_nonce, eval_add, keygen, keypair_from_primes,
};
use rplguard_core::sim::trace::{DetectionStage, DetectionVerdict};
use rplguard_core::sim::{run_scenario, DefenseMode, ProbePurpose, ScenarioConfig, TopologySpec};
use rplguard_core::trust::{
    component_reliability, final_reliability, self_reliability, weighted_reliability,
    ReliabilityWeights,
};
use rplguard_core::wire::{
    decode_packet, encode_packet, Ack, AckKind, Data, DataTag, DecodeError, Dio, Packet, ReqpR,
    RplMc, TableClaim, Warning, WarningKind,
};
use rplguard_core::{NodeId, Rank};

fn verdict(name: &str, ok: bool, detail: String) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn desk(seed: u64, rate: f64) -> ScenarioConfig {
    ScenarioConfig {
        seed,
        sinkhole_rate: rate,
        ..ScenarioConfig::desk()
    }
}

fn batch(configs: Vec<ScenarioConfig>) -> Vec<RunMetrics> {
    let jobs: Vec<Job> = configs
        .into_iter()
        .enumerate()
        .map(|(i, c)| Job {
            cell: i,
            seed: c.seed,
            config: c,
        })
        .collect();
    run_jobs(&jobs, threads())
        .unwrap()
        .into_iter()
        .map(|r: JobResult| r.outcome.unwrap_or_else(|e| panic!("run failed: {e}")))
        .collect()
}

fn n(i: u32) -> NodeId {
    NodeId(i)
}

const FIXTURE_LINKS: [(u32, u32); 6] = [(0, 1), (0, 2), (0, 3), (1, 4), (3, 5), (4, 5)];

fn fixture() -> ScenarioConfig {
    ScenarioConfig {
        num_nodes: 6,
        topology: TopologySpec::Explicit(
            FIXTURE_LINKS.iter().map(|&(a, b)| (n(a), n(b))).collect(),
        ),
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
fn fixture_rank_values() {
    // Honest state: node 5 at rank 3 under node 3 at rank 2. Node 3 later claims rank 0.
    let out = run_scenario(&ScenarioConfig {
        attackers: Some(vec![]),
        ..fixture()
    })
    .unwrap();
    let g = &out.graph;
    let ranks: Vec<u16> = (0..6)
        .map(|i| g.rank(n(i)).map_or(u16::MAX, |r| r.0))
        .collect();
    let (r5, r3) = (g.rank(n(5)).unwrap(), g.rank(n(3)).unwrap());
    let gap = dnr_p(r5, Some(r3)).unwrap();
    let honest = dsn_ni(r3, r5);
    let fake = dsn_ni(Rank(0), r5);
    let obs = |s| RankObservation {
        node_rank: r5,
        parent_rank: Some(r3),
        sender_rank: s,
        sender: n(3),
    };
    let ok = ranks == [1, 2, 2, 2, 3, 3]
        && g.parent(n(5)) == Some(n(3))
        && (gap, honest, fake) == (1, 1, 3)
        && classify_dio(&obs(r3)) == DioVerdict::Benign
        && classify_dio(&obs(Rank(0))) == DioVerdict::Suspicious;
    verdict(
        "fixture rank values",
        ok,
        format!("ranks {ranks:?}, dnr_p {gap}, dsn_ni honest {honest} sinkhole {fake}"),
    );
}

#[test]
fn fixture_lifecycle() {
    let out = run_scenario(&fixture()).unwrap();
    let warm = fixture().warmup_end();
    let mut bad = Vec::new();
    let mut check = |cond: bool, what: &str| {
        if !cond {
            bad.push(what.to_string());
        }
    };

    let flagged = out.detections.first();
    check(
        flagged.is_some_and(|d| {
            (d.observer, d.suspect, d.stage, d.verdict)
                == (
                    n(5),
                    n(3),
                    DetectionStage::Rank,
                    DetectionVerdict::Suspicious,
                )
                && d.time >= warm
        }),
        "node 5 flags node 3 after warm-up",
    );
    check(
        out.detections.iter().all(|d| d.suspect == n(3)),
        "no other suspect",
    );
    check(
        out.threshold.pdr_t == 1.0,
        "threshold 1.0 from clean routes",
    );
    let probes: Vec<_> = out
        .probes
        .iter()
        .filter(|p| p.purpose == ProbePurpose::Suspect)
        .collect();
    check(probes.len() == 1, "one probe session");
    if let Some(p) = probes.first() {
        check(p.record.route == [n(0), n(3), n(5)], "route 0-3-5");
        check(
            (p.record.mc_sent, p.record.acks_received) == (10, 0),
            "10 sent, 0 acked",
        );
        check(
            p.record.pdr == 0.0 && p.record.pdr < out.threshold.pdr_t,
            "pdr 0 below threshold",
        );
        check(p.verdict == Some(DetectionVerdict::Confirmed), "confirmed");
    }
    check(out.quarantines.len() == 1, "one quarantine");
    if let Some(q) = out.quarantines.first() {
        check(q.malicious == n(3), "node 3 quarantined");
        check(
            q.detached == [n(5)] && (q.reattached, q.unattached) == (1, 0),
            "node 5 detached and reattached",
        );
        check(
            flagged.is_some_and(|d| d.time < q.time),
            "flag precedes quarantine",
        );
    }
    check(
        out.quarantined == BTreeSet::from([n(3)]),
        "quarantine set {3}",
    );
    let g = &out.graph;
    check(
        g.parent(n(5)) == Some(n(4)) && g.rank(n(5)) == Some(Rank(4)),
        "node 5 under node 4 at rank 4",
    );
    check(!g.is_attached(n(3)), "node 3 outside the graph");
    check(
        (1..6)
            .filter(|&i| i != 3)
            .all(|i| g.path_to_root(n(i)).is_some_and(|p| !p.contains(&n(3)))),
        "no path through node 3",
    );
    check(g.check_forest().is_ok(), "graph is a forest");
    let detail = if bad.is_empty() {
        "flag, probe, quarantine and repair as expected".into()
    } else {
        bad.join("; ")
    };
    verdict("fixture lifecycle", bad.is_empty(), detail);
}

#[test]
fn attack_free_soundness() {
    let runs = batch((1..=100).map(|s| desk(s, 0.0)).collect());
    let fp: u32 = runs.iter().map(|m| m.counts.fp).sum();
    let perfect = runs.iter().filter(|m| m.pdr == Some(100.0)).count();
    verdict(
        "attack-free soundness",
        fp == 0 && perfect == 100,
        format!("100 topologies x 50 nodes: FP {fp} (need 0), runs with PDR 100%: {perfect}/100"),
    );
}

#[test]
fn detection_property() {
    let rates = [0.1, 0.2, 0.3];
    let runs = batch((1..=50).map(|s| desk(s, rates[(s % 3) as usize])).collect());
    let tp: u32 = runs.iter().map(|m| m.counts.tp).sum();
    let fnn: u32 = runs.iter().map(|m| m.counts.fn_).sum();
    let fp: u32 = runs.iter().map(|m| m.counts.fp).sum();
    let pooled = 100.0 * f64::from(tp) / f64::from(tp + fnn);
    let mean = runs.iter().filter_map(|m| m.dr).sum::<f64>() / runs.len() as f64;
    let unprobed: Vec<String> = runs
        .iter()
        .zip(1..)
        .filter(|(m, _)| m.unprobed > 0)
        .map(|(m, s)| format!("seed {s}: {}", m.unprobed))
        .collect();
    println!(
        "  runs with attackers never probed: {}",
        if unprobed.is_empty() {
            "none".into()
        } else {
            unprobed.join(", ")
        }
    );
    verdict(
        "detection property",
        pooled >= 90.0 && mean >= 90.0 && fp == 0,
        format!("50 runs, 10-30% attackers: DR pooled {pooled:.2}% mean {mean:.2}% (need >= 90), FP {fp} (need 0)"),
    );
}

/// Spearman correlation with average ranks for ties.
fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0 + 1.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let m = (rx.len() as f64 + 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - m) * (b - m)).sum();
    let sx: f64 = rx.iter().map(|a| (a - m).powi(2)).sum::<f64>().sqrt();
    let sy: f64 = ry.iter().map(|b| (b - m).powi(2)).sum::<f64>().sqrt();
    cov / (sx * sy)
}

#[test]
fn spearman_reference_values() {
    assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
    assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
    // Ties: x ranks 1..4, y ranks 1, 2.5, 2.5, 4.
    let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 5.0, 5.0, 9.0]);
    assert!((r - 4.5 / (5f64.sqrt() * 4.5f64.sqrt())).abs() < 1e-12);
}

#[test]
fn interval_trend() {
    let intervals = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5];
    let seeds = 20;
    let mut configs = Vec::new();
    for &iv in &intervals {
        configs.extend((1..=seeds).map(|s| ScenarioConfig {
            attack_interval: iv,
            ..desk(s, 0.3)
        }));
    }
    let runs = batch(configs);
    let means: Vec<f64> = runs
        .chunks(seeds as usize)
        .map(|c| c.iter().filter_map(|m| m.dr).sum::<f64>() / c.len() as f64)
        .collect();
    let rho = spearman(&intervals, &means);
    let shown: Vec<String> = intervals
        .iter()
        .zip(&means)
        .map(|(i, m)| format!("{i}:{m:.1}"))
        .collect();
    verdict(
        "interval trend",
        rho >= 0.7,
        format!(
            "mean DR by interval [{}], Spearman {rho:.3} (need >= 0.7)",
            shown.join(" ")
        ),
    );
}

#[test]
fn defense_benefit() {
    let seeds = 20;
    let base = |s| ScenarioConfig {
        attack_interval: 2.0,
        ..desk(s, 0.3)
    };
    let mut configs: Vec<ScenarioConfig> = (1..=seeds).map(base).collect();
    configs.extend((1..=seeds).map(|s| ScenarioConfig {
        defense: DefenseMode::Off,
        ..base(s)
    }));
    let runs = batch(configs);
    let (on, off) = runs.split_at(seeds as usize);
    let mean = |v: &[RunMetrics], f: fn(&RunMetrics) -> Option<f64>| {
        v.iter().filter_map(f).sum::<f64>() / v.len() as f64
    };
    let (pdr_on, pdr_off) = (mean(on, |m| m.pdr), mean(off, |m| m.pdr));
    let dr_on = mean(on, |m| m.dr);
    let off_quarantined: u32 = off.iter().map(|m| m.counts.tp + m.counts.fp).sum();
    verdict(
        "defense benefit",
        pdr_on - pdr_off >= 10.0 && dr_on > 0.0 && off_quarantined == 0,
        format!(
            "30% attackers, 20 seeds: PDR on {pdr_on:.2}% off {pdr_off:.2}% (gain {:.2}, need >= 10), \
             DR on {dr_on:.2}% (need > 0), quarantined with defense off {off_quarantined} (need 0)",
            pdr_on - pdr_off
        ),
    );
}

fn unit4(k: u32) -> f64 {
    f64::from(k) / 10_000.0
}

fn check_prop<S: Strategy>(
    name: &str,
    s: S,
    f: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&s, f).map_err(|e| format!("{name}: {e}"))
}

#[test]
fn reliability_numerics() {
    let weights = (0u32..=10)
        .prop_flat_map(|a| (Just(a), 0..=10 - a))
        .prop_map(|(a, b)| (a, b, 10 - a - b));
    let mut failures = Vec::new();

    // Weighted sum: equals the exact rational value and stays within the components.
    failures.extend(
        check_prop(
            "convex combination",
            (weights, 0u32..=10_000, 0u32..=10_000, 0u32..=10_000),
            |((a, b, c), e, t, v)| {
                let w = ReliabilityWeights {
                    w1: f64::from(a) / 10.0,
                    w2: f64::from(b) / 10.0,
                    w3: f64::from(c) / 10.0,
                    ..ReliabilityWeights::default()
                };
                let r = weighted_reliability(unit4(e), unit4(t), unit4(v), &w).unwrap();
                let exact = f64::from(a * e + b * t + c * v) / 100_000.0;
                prop_assert!((r - exact).abs() <= 1e-12);
                prop_assert!(
                    r >= unit4(e.min(t).min(v)) - 1e-12 && r <= unit4(e.max(t).max(v)) + 1e-12
                );
                Ok(())
            },
        )
        .err(),
    );

    // Smoothing lies between the new and the previous value.
    failures.extend(
        check_prop(
            "betweenness",
            (0u32..=10_000, 0u32..=10_000, 0u32..=100),
            |(d, p, a)| {
                let (d, p, alpha) = (unit4(d), unit4(p), f64::from(a) / 100.0);
                let r = component_reliability(d, p, alpha).unwrap();
                prop_assert!(r >= d.min(p) && r <= d.max(p));
                prop_assert!((r - (alpha * d + (1.0 - alpha) * p)).abs() <= 1e-12);
                Ok(())
            },
        )
        .err(),
    );

    // Final and self reliability against a mean computed in integers.
    failures.extend(
        check_prop(
            "mean equivalence",
            prop::collection::vec(0u32..=10_000, 1..40),
            |vals| {
                let xs: Vec<f64> = vals.iter().map(|&k| unit4(k)).collect();
                let exact = f64::from(vals.iter().sum::<u32>()) / 10_000.0 / vals.len() as f64;
                prop_assert!((final_reliability(&xs).unwrap() - exact).abs() <= 1e-12);
                prop_assert!((self_reliability(&xs).unwrap() - exact).abs() <= 1e-12);
                Ok(())
            },
        )
        .err(),
    );

    // Rank: integer formula, strictly above the parent.
    failures.extend(
        check_prop(
            "strict rank growth",
            (0u16..60_000, 0u32..=10_000, 1u16..=512, 0u16..=200),
            |(parent, rel, min_h, scale)| {
                let params = RankParams {
                    min_h,
                    max_h: 1024,
                    reliability_scale: scale,
                    ..RankParams::default()
                };
                let expect = u64::from(parent)
                    + (u64::from(rel) * u64::from(scale) + 5_000) / 10_000
                    + u64::from(min_h);
                match compute_rank(Rank(parent), unit4(rel), &params) {
                    Ok(r) => {
                        prop_assert_eq!(u64::from(r.0), expect);
                        prop_assert!(r > Rank(parent));
                    }
                    Err(_) => prop_assert!(expect >= u64::from(u16::MAX)),
                }
                Ok(())
            },
        )
        .err(),
    );

    verdict(
        "reliability numerics",
        failures.is_empty(),
        if failures.is_empty() {
            "convexity, betweenness, mean equivalence, strict rank growth: 10000 cases each".into()
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn threshold_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let len = rng.gen_range(1..=50);
        let xs: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
        let s = xs
            .iter()
            .fold(PdrThresholdState::default(), |s, &x| update_threshold(s, x));
        let nf = len as f64;
        let mean = xs.iter().rev().fold(0.0, |a, x| a + x) / nf;
        let sd = (xs
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .fold(0.0, |a, x| a + x)
            / nf)
            .sqrt();
        for err in [s.pdr_a - mean, s.sd - sd, s.pdr_t - (mean - sd)] {
            worst = worst.max(err.abs());
        }
    }
    verdict(
        "threshold oracle",
        worst <= 1e-12,
        format!("1000 histories, max deviation {worst:.2e} (need <= 1e-12)"),
    );
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

#[test]
fn paillier_correctness() {
    let (pk, sk) = keypair_from_primes(&big(11), &big(13)).unwrap();
    let units: Vec<u64> = (1..143).filter(|r| r % 11 != 0 && r % 13 != 0).collect();
    let mut small_ok = 0;
    for m in 0..143 {
        let all = units.iter().all(|&r| {
            decrypt(&sk, &encrypt_with_nonce(&pk, &big(m), &big(r)).unwrap()).unwrap() == big(m)
        });
        small_ok += usize::from(all);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let five = encrypt(&pk, &big(5), &mut rng).unwrap();
    let seven = encrypt(&pk, &big(7), &mut rng).unwrap();
    let twelve = decrypt(&sk, &eval_add(&pk, &five, &seven).unwrap()).unwrap();

    let (pk64, sk64) = keygen(64, 11).unwrap();
    let mut pairs_ok = 0;
    for _ in 0..1000 {
        let (a, b) = (rng.gen::<u64>(), rng.gen::<u64>());
        let c = eval_add(
            &pk64,
            &encrypt(&pk64, &big(a), &mut rng).unwrap(),
            &encrypt(&pk64, &big(b), &mut rng).unwrap(),
        )
        .unwrap();
        pairs_ok += usize::from(decrypt(&sk64, &c).unwrap() == (big(a) + big(b)) % &pk64.n);
    }
    verdict(
        "paillier correctness",
        small_ok == 143 && twelve == big(12) && pairs_ok == 1000,
        format!(
            "Z_143 residues round-tripped under every nonce: {small_ok}/143; 5 + 7 -> {twelve}; \
             64-bit prime sums: {pairs_ok}/1000"
        ),
    );
}

#[test]
fn determinism() {
    let cfg = ScenarioConfig {
        attack_interval: 1.5,
        ..desk(11, 0.2)
    };
    let a = run_scenario(&cfg).unwrap();
    let b = run_scenario(&cfg).unwrap();
    let digests_equal =
        a.trace.digest() == b.trace.digest() && a.trace.records() == b.trace.records();

    let text = "preset = desk\nreps = 2\nfirst_seed = 5\n[1]\nsinkhole_rate = 0.1\n[4]\nsinkhole_rate = 0.3\n\
                attack_interval = 0.5, 2\n";
    let m = parse_matrix(text).unwrap();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (d, jobs) in dirs.iter().zip([1, 3]) {
        let results = run_jobs(&m.jobs(), jobs).unwrap();
        write_matrix_outputs(d.path(), &m.cells, &results).unwrap();
    }
    let mut same = 0;
    let files = [
        "dr.csv",
        "fpr.csv",
        "fnr.csv",
        "pdr.csv",
        "runs.csv",
        "summary.csv",
    ];
    for f in files {
        let x = std::fs::read(dirs[0].path().join(f)).unwrap();
        let y = std::fs::read(dirs[1].path().join(f)).unwrap();
        same += usize::from(x == y && !x.is_empty());
    }
    verdict(
        "determinism",
        digests_equal && same == files.len(),
        format!(
            "digest {:016x} twice: {}; CSVs byte-identical across reruns with 1 and 3 workers: {same}/{}",
            a.trace.digest(),
            digests_equal,
            files.len()
        ),
    );
}

fn packet(rng: &mut ChaCha8Rng) -> Packet {
    let node = |r: &mut ChaCha8Rng| NodeId(r.gen());
    let nodes = |r: &mut ChaCha8Rng| {
        (0..r.gen_range(0..12))
            .map(|_| NodeId(r.gen()))
            .collect::<Vec<_>>()
    };
    let bytes = |r: &mut ChaCha8Rng| {
        (0..r.gen_range(0..40))
            .map(|_| r.gen())
            .collect::<Vec<u8>>()
    };
    match rng.gen_range(0..6) {
        0 => Packet::Dio(Dio {
            sender: node(rng),
            rank: Rank(rng.gen()),
            reliability: rng.gen_range(0..=10_000),
            version: rng.gen(),
            grounded: rng.gen(),
        }),
        1 => Packet::ReqpR(ReqpR {
            node: node(rng),
            energy: rng.gen(),
            source: rng.gen(),
            sequence: rng.gen(),
            route: nodes(rng),
        }),
        2 => Packet::Ack(Ack {
            kind: if rng.gen() {
                AckKind::Probe
            } else {
                AckKind::Reliability
            },
            node: node(rng),
            sequence: rng.gen(),
            return_route: nodes(rng),
            table: (0..rng.gen_range(0..8))
                .map(|_| TableClaim {
                    neighbor: node(rng),
                    trust: rng.gen(),
                    energy: rng.gen(),
                    veracity: rng.gen_range(0..=10_000),
                })
                .collect(),
        }),
        3 => Packet::RplMc(RplMc {
            base: rng.gen(),
            options: bytes(rng),
        }),
        4 => Packet::Warning(Warning {
            kind: if rng.gen() {
                WarningKind::Quarantine
            } else {
                WarningKind::Suspicion
            },
            malicious: node(rng),
            malicious_rank: Rank(rng.gen()),
            issue_time: rng.gen(),
            origin: node(rng),
            version: rng.gen(),
        }),
        _ => Packet::Data(Data {
            hops: rng.gen(),
            contributors: (0..rng.gen_range(0..6))
                .map(|_| DataTag {
                    source: node(rng),
                    sequence: rng.gen(),
                })
                .collect(),
            key_id: rng.gen(),
            ciphertext: bytes(rng),
        }),
    }
}

#[test]
fn wire_formats() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut roundtrips, mut flips, mut caught) = (0, 0u64, 0u64);
    for _ in 0..10_000 {
        let p = packet(&mut rng);
        let bytes = encode_packet(&p).unwrap();
        roundtrips += usize::from(decode_packet(&bytes).as_ref() == Ok(&p));
        let mut b = bytes.clone();
        for bit in 0..bytes.len() * 8 {
            b[bit / 8] ^= 1 << (bit % 8);
            flips += 1;
            caught += u64::from(decode_packet(&b) == Err(DecodeError::BadChecksum));
            b[bit / 8] ^= 1 << (bit % 8);
        }
    }
    verdict(
        "wire formats",
        roundtrips == 10_000 && caught == flips,
        format!(
            "roundtrips {roundtrips}/10000; single-bit flips caught {caught}/{flips} ({:.2}%)",
            100.0 * caught as f64 / flips as f64
        ),
    );
}
